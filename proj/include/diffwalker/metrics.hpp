#pragma once

#include <cstdint>

#include "diffwalker/lattice.hpp"
#include "diffwalker/seeding.hpp"
#include "diffwalker/types.hpp"

namespace diffwalker {

/// Boundary tolerance (pixels) used for evaluation unless stated otherwise.
inline constexpr int kDefaultTolerance = 2;

struct EvalReport {
  double voi_split = 0.0;  // H(pred | gt), nats
  double voi_merge = 0.0;  // H(gt | pred), nats
  double voi_total = 0.0;
  double arand = 0.0;      // 1 - adjusted Rand index
  Index excluded_pixels = 0;
};

struct Voi {
  double split = 0.0;
  double merge = 0.0;
};

/// Pixels excluded from evaluation: those within Chebyshev distance
/// tolerance - 1 of a ground-truth boundary pixel (a pixel whose 4-neighbour
/// carries a different id). Tolerance 0 excludes nothing; tolerance 1 excludes
/// the pixels on either side of every boundary.
Mask tolerance_mask(const LabelImage& ground_truth, int tolerance);

Voi voi(const LabelImage& pred, const LabelImage& gt, int tolerance = kDefaultTolerance);
double arand(const LabelImage& pred, const LabelImage& gt, int tolerance = kDefaultTolerance);
EvalReport evaluate(const LabelImage& pred, const LabelImage& gt,
                    int tolerance = kDefaultTolerance);

/// True where pred disagrees with gt after mapping every predicted id to the
/// ground-truth id it overlaps most (ties: smallest gt id).
Mask error_map(const LabelImage& pred, const LabelImage& gt);

struct WatershedResult {
  LabelImage labels;  // seed label per pixel; -1 where no seed reached
  Index unlabeled = 0;
};

/// Seeded priority-flood on a boundary map. The frontier pixel with the lowest
/// boundary value is labeled first; equal values pop in insertion order. Each
/// pixel is labeled once, by the neighbour that pushed it first among equals.
WatershedResult seeded_watershed(const Image<double>& boundary, const SeedSet& seeds);

}  // namespace diffwalker
