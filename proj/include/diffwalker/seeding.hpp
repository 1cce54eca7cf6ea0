#pragma once

#include <cstdint>
#include <vector>

#include "diffwalker/lattice.hpp"
#include "diffwalker/types.hpp"

namespace diffwalker {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Exact squared Euclidean distance from every pixel to the nearest true pixel
/// of `features` (separable lower-envelope transform, rows then columns).
/// Pixels are +inf when there is no feature at all.
Image<double> squared_distance_transform(const Mask& features);

/// Euclidean distance from each pixel to the nearest pixel of another segment.
/// Pixels outside the image count as another segment, so the result is at
/// least 1 everywhere.
Image<double> boundary_distance(const LabelImage& segments);

enum class SeedMode { kSparse, kExtended };

/// Fraction of a segment's largest boundary distance a sparse seed must reach.
inline constexpr double kInteriorFraction = 0.6;

struct OracleSeeds {
  SeedSet seeds;
  /// segment_ids[label] is the ground-truth id seeded with that label.
  std::vector<std::int32_t> segment_ids;
};

/// Seeds from ground truth. Segment ids, sorted ascending, become labels
/// 0..K-1. Sparse mode draws one pixel per segment uniformly among those whose
/// boundary distance is at least kInteriorFraction of the segment maximum.
/// Extended mode adds the disk of radius half the seed's boundary distance
/// around each sparse seed, clipped to the segment.
OracleSeeds oracle_seeds(const LabelImage& ground_truth, SeedMode mode, std::uint64_t rng_seed);

}  // namespace diffwalker
