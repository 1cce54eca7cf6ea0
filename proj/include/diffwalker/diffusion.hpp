#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "diffwalker/errors.hpp"
#include "diffwalker/lattice.hpp"
#include "diffwalker/parallel.hpp"
#include "diffwalker/types.hpp"

namespace diffwalker {

struct SolverOptions {
  enum class Method { kAuto, kDirect, kIterative };

  Method method = Method::kAuto;
  /// kAuto switches from sparse Cholesky to PCG above this many unknowns.
  Index iterative_threshold = 512 * 512;
  /// Relative residual target for PCG.
  double cg_tolerance = 1e-10;
  /// PCG gives up after this many iterations per unknown.
  Index max_iterations_per_unknown = 10;
  /// Largest accepted |row sum - 1| of a solved assignment matrix.
  double row_sum_tolerance = 1e-8;
};

struct SolveReport {
  std::string method;                  // "cholesky" or "pcg"
  std::vector<double> residual_norms;  // relative, one per label column
  std::vector<Index> iterations;       // per label column; 0 for cholesky
  Index factor_nonzeros = 0;
  double max_row_sum_error = 0.0;
  double wall_seconds = 0.0;
};

/// Factorizes (or preconditions) a symmetric positive definite matrix once
/// and solves against many right-hand sides. solve() is const and safe to call
/// concurrently.
template <typename Scalar>
class LaplacianSolver {
 public:
  using Sparse = SparseMatrix<Scalar>;

  explicit LaplacianSolver(const Sparse& matrix, const SolverOptions& options = {})
      : matrix_(matrix), options_(options) {
    if (matrix.rows() == 0) return;
    const bool iterative =
        options.method == SolverOptions::Method::kIterative ||
        (options.method == SolverOptions::Method::kAuto &&
         matrix.rows() > options.iterative_threshold);
    if (iterative) {
      preconditioner_ = std::make_unique<Preconditioner>();
      preconditioner_->compute(matrix_);
      if (preconditioner_->info() != Eigen::Success) {
        throw ConvergenceError("incomplete Cholesky preconditioner failed", 0.0);
      }
    } else {
      cholesky_ = std::make_unique<Cholesky>();
      cholesky_->compute(matrix_);
      if (cholesky_->info() != Eigen::Success) {
        throw SingularSystemError("sparse Cholesky factorization failed: matrix is not "
                                  "positive definite",
                                  -1);
      }
    }
  }

  bool iterative() const noexcept { return static_cast<bool>(preconditioner_); }
  const SolverOptions& options() const noexcept { return options_; }
  Index size() const noexcept { return matrix_.rows(); }

  Index factor_nonzeros() const {
    return cholesky_ ? static_cast<Index>(cholesky_->matrixL().nestedExpression().nonZeros())
                     : 0;
  }

  struct Result {
    Vector<Scalar> x;
    double relative_residual = 0.0;
    Index iterations = 0;
  };

  /// Solves one right-hand side. Throws ConvergenceError when PCG misses its
  /// tolerance within the iteration cap.
  Result solve(const Vector<Scalar>& rhs) const {
    Result out;
    if (size() == 0) return out;
    const double rhs_norm = static_cast<double>(rhs.norm());
    if (cholesky_) {
      out.x = cholesky_->solve(rhs);
    } else {
      out.x = conjugate_gradient(rhs, out.iterations);
    }
    const double r = static_cast<double>((matrix_ * out.x - rhs).norm());
    out.relative_residual = rhs_norm > 0.0 ? r / rhs_norm : r;
    if (preconditioner_ && out.relative_residual > options_.cg_tolerance) {
      throw ConvergenceError("conjugate gradients did not converge: relative residual " +
                                 std::to_string(out.relative_residual),
                             out.relative_residual);
    }
    return out;
  }

  /// Solves each column independently, in parallel.
  Matrix<Scalar> solve(const Matrix<Scalar>& rhs, std::vector<double>* residuals = nullptr,
                       std::vector<Index>* iterations = nullptr) const {
    Matrix<Scalar> x(rhs.rows(), rhs.cols());
    std::vector<double> res(static_cast<std::size_t>(rhs.cols()));
    std::vector<Index> its(static_cast<std::size_t>(rhs.cols()));
    parallel_for(rhs.cols(), [&](Index a) {
      Result col = solve(Vector<Scalar>(rhs.col(a)));
      x.col(a) = col.x;
      res[static_cast<std::size_t>(a)] = col.relative_residual;
      its[static_cast<std::size_t>(a)] = col.iterations;
    });
    if (residuals) *residuals = std::move(res);
    if (iterations) *iterations = std::move(its);
    return x;
  }

 private:
  using Cholesky = Eigen::SimplicialLLT<Sparse, Eigen::Lower, Eigen::AMDOrdering<int>>;
  using Preconditioner = Eigen::IncompleteCholesky<Scalar, Eigen::Lower, Eigen::AMDOrdering<int>>;

  Vector<Scalar> conjugate_gradient(const Vector<Scalar>& b, Index& iterations) const {
    const Index n = b.size();
    Vector<Scalar> x = Vector<Scalar>::Zero(n);
    const Scalar b_norm = b.norm();
    iterations = 0;
    if (b_norm == Scalar(0)) return x;

    const Index max_iterations = std::max<Index>(1, options_.max_iterations_per_unknown * n);
    const Scalar threshold = static_cast<Scalar>(options_.cg_tolerance) * b_norm;
    Vector<Scalar> r = b;
    Vector<Scalar> z = preconditioner_->solve(r);
    Vector<Scalar> p = z;
    Vector<Scalar> ap(n);
    Scalar rz = r.dot(z);
    while (iterations < max_iterations) {
      ++iterations;
      ap.noalias() = matrix_ * p;
      const Scalar step = rz / p.dot(ap);
      x += step * p;
      r -= step * ap;
      if (r.norm() <= threshold) break;
      z = preconditioner_->solve(r);
      const Scalar rz_next = r.dot(z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
    return x;
  }

  Sparse matrix_;
  SolverOptions options_;
  std::unique_ptr<Cholesky> cholesky_;
  std::unique_ptr<Preconditioner> preconditioner_;
};

template <typename Scalar>
struct Diffusion {
  AssignmentMatrix<Scalar> assignments;  // |V| x labels
  SolveReport report;
};

/// Right-hand side of L_U Z_U = -B^T Z_M.
template <typename Scalar>
Matrix<Scalar> diffusion_rhs(const LaplacianBlocks<Scalar>& blocks) {
  return -(blocks.coupling * blocks.marked_assignments);
}

/// Scatters the unmarked solution and the seed rows into a full |V| x labels
/// assignment matrix.
template <typename Scalar>
AssignmentMatrix<Scalar> scatter_assignments(const LaplacianBlocks<Scalar>& blocks,
                                             const Matrix<Scalar>& unmarked) {
  AssignmentMatrix<Scalar> z(blocks.graph.vertex_count(), blocks.label_count);
  for (Index i = 0; i < blocks.unmarked_count(); ++i)
    z.row(blocks.unmarked_vertices[static_cast<std::size_t>(i)]) = unmarked.row(i);
  for (Index m = 0; m < blocks.marked_count(); ++m)
    z.row(blocks.marked_vertices[static_cast<std::size_t>(m)]) = blocks.marked_assignments.row(m);
  return z;
}

/// Rows of z belonging to unmarked vertices, in block order.
template <typename Scalar>
Matrix<Scalar> gather_unmarked(const LaplacianBlocks<Scalar>& blocks,
                               const AssignmentMatrix<Scalar>& z) {
  Matrix<Scalar> out(blocks.unmarked_count(), z.cols());
  for (Index i = 0; i < blocks.unmarked_count(); ++i)
    out.row(i) = z.row(blocks.unmarked_vertices[static_cast<std::size_t>(i)]);
  return out;
}

/// Random Walker solve against an existing factorization of blocks.unmarked.
template <typename Scalar>
Diffusion<Scalar> solve_rw(const LaplacianBlocks<Scalar>& blocks,
                           const LaplacianSolver<Scalar>& solver) {
  const auto start = std::chrono::steady_clock::now();
  Diffusion<Scalar> out;
  out.report.method = solver.iterative() ? "pcg" : "cholesky";
  out.report.factor_nonzeros = solver.factor_nonzeros();

  Matrix<Scalar> unmarked(blocks.unmarked_count(), blocks.label_count);
  if (blocks.unmarked_count() > 0) {
    unmarked = solver.solve(diffusion_rhs(blocks), &out.report.residual_norms,
                            &out.report.iterations);
  } else {
    out.report.residual_norms.assign(static_cast<std::size_t>(blocks.label_count), 0.0);
    out.report.iterations.assign(static_cast<std::size_t>(blocks.label_count), 0);
  }
  out.assignments = scatter_assignments(blocks, unmarked);

  const auto row_sums = out.assignments.rowwise().sum();
  out.report.max_row_sum_error =
      out.assignments.rows() > 0
          ? static_cast<double>((row_sums.array() - Scalar(1)).abs().maxCoeff())
          : 0.0;
  if (!(out.report.max_row_sum_error <= solver.options().row_sum_tolerance)) {
    throw ConvergenceError("assignment rows do not sum to 1 (max deviation " +
                               std::to_string(out.report.max_row_sum_error) + ")",
                           out.report.max_row_sum_error);
  }
  out.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

template <typename Scalar>
Diffusion<Scalar> solve_rw(const LaplacianBlocks<Scalar>& blocks,
                           const SolverOptions& options = {}) {
  return solve_rw(blocks, LaplacianSolver<Scalar>(blocks.unmarked, options));
}

/// Winner-take-all labeling. Ties go to the lowest label id.
template <typename Derived>
LabelImage label(const Eigen::MatrixBase<Derived>& assignments, Index height, Index width) {
  if (assignments.rows() != height * width) {
    throw ValidationError("assignment rows do not match a " + std::to_string(height) + "x" +
                          std::to_string(width) + " grid");
  }
  LabelImage out(height, width);
  for (Index v = 0; v < assignments.rows(); ++v) {
    Index best = 0;
    for (Index a = 1; a < assignments.cols(); ++a)
      if (assignments(v, a) > assignments(v, best)) best = a;
    out(v / width, v % width) = static_cast<std::int32_t>(best);
  }
  return out;
}

/// Per-pixel Shannon entropy in nats, with 0 log 0 = 0.
template <typename Derived>
Image<typename Derived::Scalar> entropy_map(const Eigen::MatrixBase<Derived>& assignments,
                                            Index height, Index width) {
  using Scalar = typename Derived::Scalar;
  if (assignments.rows() != height * width) {
    throw ValidationError("assignment rows do not match the requested grid");
  }
  Image<Scalar> out(height, width);
  for (Index v = 0; v < assignments.rows(); ++v) {
    Scalar h(0);
    for (Index a = 0; a < assignments.cols(); ++a) {
      const Scalar p = assignments(v, a);
      if (p > Scalar(0)) h -= p * std::log(p);
    }
    out(v / width, v % width) = h;
  }
  return out;
}

/// Bilinear 2x upsampling of every label channel (pixel-center aligned, edge
/// samples clamped), followed by per-row renormalization.
template <typename Derived>
Matrix<typename Derived::Scalar> upsample_assignments(
    const Eigen::MatrixBase<Derived>& assignments, Index height, Index width,
    Index target_height, Index target_width) {
  using Scalar = typename Derived::Scalar;
  if (assignments.rows() != height * width) {
    throw ValidationError("assignment rows do not match the source grid");
  }
  if (target_height != 2 * height || target_width != 2 * width) {
    throw ValidationError("upsampling target must be exactly twice the source size");
  }

  struct Tap {
    Index lo, hi;
    Scalar frac;
  };
  const auto taps = [](Index n_out, Index n_in) {
    std::vector<Tap> out(static_cast<std::size_t>(n_out));
    for (Index i = 0; i < n_out; ++i) {
      const double src = std::clamp((static_cast<double>(i) + 0.5) / 2.0 - 0.5, 0.0,
                                    static_cast<double>(n_in - 1));
      const Index lo = static_cast<Index>(std::floor(src));
      const Index hi = std::min(lo + 1, n_in - 1);
      out[static_cast<std::size_t>(i)] = {lo, hi, static_cast<Scalar>(src - static_cast<double>(lo))};
    }
    return out;
  };
  const auto ty = taps(target_height, height);
  const auto tx = taps(target_width, width);

  Matrix<Scalar> out(target_height * target_width, assignments.cols());
  for (Index y = 0; y < target_height; ++y) {
    const Tap& vy = ty[static_cast<std::size_t>(y)];
    for (Index x = 0; x < target_width; ++x) {
      const Tap& vx = tx[static_cast<std::size_t>(x)];
      const Index o = y * target_width + x;
      out.row(o) = (Scalar(1) - vy.frac) * (Scalar(1) - vx.frac) * assignments.row(vy.lo * width + vx.lo) +
                   (Scalar(1) - vy.frac) * vx.frac * assignments.row(vy.lo * width + vx.hi) +
                   vy.frac * (Scalar(1) - vx.frac) * assignments.row(vy.hi * width + vx.lo) +
                   vy.frac * vx.frac * assignments.row(vy.hi * width + vx.hi);
      const Scalar s = out.row(o).sum();
      if (s > Scalar(0)) out.row(o) /= s;
    }
  }
  return out;
}

}  // namespace diffwalker
