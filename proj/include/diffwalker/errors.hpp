#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace diffwalker {

// Process exit codes used by the command-line front end. Library errors map
// onto these through exit_code().
enum class ExitCode : int {
  kOk = 0,
  kValidation = 2,
  kSingularSystem = 3,
  kNonConvergence = 4,
  kIo = 5,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept = 0;
};

/// Malformed input: bad shapes, invalid seeds, out-of-range parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kValidation; }
};

/// Some connected component of the weighted graph carries no seed, so the
/// unmarked Laplacian block is singular.
class SingularSystemError : public Error {
 public:
  SingularSystemError(const std::string& what, std::int64_t vertex)
      : Error(what), vertex_(vertex) {}
  ExitCode exit_code() const noexcept override {
    return ExitCode::kSingularSystem;
  }
  /// One vertex that no seed can reach.
  std::int64_t vertex() const noexcept { return vertex_; }

 private:
  std::int64_t vertex_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  ExitCode exit_code() const noexcept override {
    return ExitCode::kNonConvergence;
  }
  double achieved_residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class IoError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kIo; }
};

}  // namespace diffwalker
