#pragma once

#include <cstdint>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace diffwalker {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar>;

/// Row-major pixel grid, indexed (row, col).
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic,
                           Eigen::RowMajor>;

/// Per-pixel integer segment ids.
using LabelImage = Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic,
                                Eigen::RowMajor>;

/// One diffusivity per lattice edge, in canonical edge order.
template <typename Scalar>
using EdgeWeights = Vector<Scalar>;

/// |V| x |labels| assignment probabilities; row i belongs to grid vertex i.
template <typename Scalar>
using AssignmentMatrix = Matrix<Scalar>;

}  // namespace diffwalker
