#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "diffwalker/seeding.hpp"

using namespace diffwalker;

namespace {

// Brute-force squared distance to the nearest feature pixel.
Image<double> brute_force_edt(const Mask& features) {
  Image<double> out(features.rows(), features.cols());
  for (Index r = 0; r < features.rows(); ++r) {
    for (Index c = 0; c < features.cols(); ++c) {
      double best = std::numeric_limits<double>::infinity();
      for (Index y = 0; y < features.rows(); ++y)
        for (Index x = 0; x < features.cols(); ++x)
          if (features(y, x)) best = std::min(best, static_cast<double>((r - y) * (r - y) + (c - x) * (c - x)));
      out(r, c) = best;
    }
  }
  return out;
}

// Nearest-centre partition of a square into `count` segments.
LabelImage voronoi(std::mt19937_64& rng, Index size, int count) {
  std::uniform_int_distribution<Index> pos(0, size - 1);
  std::vector<std::pair<Index, Index>> centres;
  for (int k = 0; k < count; ++k) centres.emplace_back(pos(rng), pos(rng));
  LabelImage out(size, size);
  for (Index r = 0; r < size; ++r) {
    for (Index c = 0; c < size; ++c) {
      Index best = 0;
      Index best_d = std::numeric_limits<Index>::max();
      for (std::size_t k = 0; k < centres.size(); ++k) {
        const Index d = (r - centres[k].first) * (r - centres[k].first) +
                        (c - centres[k].second) * (c - centres[k].second);
        if (d < best_d) {
          best_d = d;
          best = static_cast<Index>(k);
        }
      }
      out(r, c) = static_cast<std::int32_t>(3 * best + 2);  // non-contiguous ids
    }
  }
  return out;
}

}  // namespace

TEST_CASE("distance transform matches brute force") {
  std::mt19937_64 rng(51);
  std::bernoulli_distribution coin(0.08);
  for (int trial = 0; trial < 20; ++trial) {
    Mask features(7 + trial % 5, 9 + trial % 3);
    for (Index i = 0; i < features.size(); ++i) features.data()[i] = coin(rng);
    const auto fast = squared_distance_transform(features);
    const auto slow = brute_force_edt(features);
    CHECK((fast == slow).all());
  }
  const auto none = squared_distance_transform(Mask::Constant(3, 3, false));
  CHECK(std::isinf(none(1, 1)));
}

TEST_CASE("boundary distance counts the image exterior") {
  const LabelImage one = LabelImage::Zero(5, 5);
  const auto d = boundary_distance(one);
  CHECK(d(0, 0) == 1.0);
  CHECK(d(2, 2) == 3.0);
  CHECK(d(1, 2) == 2.0);
}

TEST_CASE("single segment gets one interior seed") {
  const LabelImage one = LabelImage::Constant(5, 5, 7);
  const auto seeds = oracle_seeds(one, SeedMode::kSparse, 0);
  REQUIRE(seeds.seeds.size() == 1);
  CHECK(seeds.segment_ids == std::vector<std::int32_t>{7});
  const Index v = seeds.seeds.entries()[0].vertex;
  // Distances are 1 on the rim, 2 on the next ring, 3 in the centre; the
  // 60% rule keeps the inner 3x3 block.
  CHECK(v / 5 >= 1);
  CHECK(v / 5 <= 3);
  CHECK(v % 5 >= 1);
  CHECK(v % 5 <= 3);
}

TEST_CASE("two half-planes: seeds stay two pixels off the dividing line") {
  LabelImage gt(10, 10);
  for (Index r = 0; r < 10; ++r)
    for (Index c = 0; c < 10; ++c) gt(r, c) = c < 5 ? 0 : 1;
  for (std::uint64_t rng_seed = 0; rng_seed < 50; ++rng_seed) {
    const auto seeds = oracle_seeds(gt, SeedMode::kSparse, rng_seed);
    REQUIRE(seeds.seeds.size() == 2);
    for (const auto& s : seeds.seeds.entries()) {
      const Index col = s.vertex % 10;
      CHECK(gt.data()[s.vertex] == s.label);
      // Nearest pixel of the other half is column 5 (left) or 4 (right).
      const Index gap = s.label == 0 ? 5 - col : col - 4;
      CHECK(gap >= 2);
    }
  }
}

TEST_CASE("oracle seeds are deterministic under the rng seed") {
  std::mt19937_64 rng(52);
  const LabelImage gt = voronoi(rng, 32, 6);
  for (auto mode : {SeedMode::kSparse, SeedMode::kExtended}) {
    const auto a = oracle_seeds(gt, mode, 17);
    const auto b = oracle_seeds(gt, mode, 17);
    CHECK(a.seeds.entries() == b.seeds.entries());
    CHECK(a.segment_ids == b.segment_ids);
  }
  CHECK(oracle_seeds(gt, SeedMode::kSparse, 1).seeds.entries() !=
        oracle_seeds(gt, SeedMode::kSparse, 2).seeds.entries());
}

TEST_CASE("property: every segment seeded away from its boundary") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 15; ++trial) {
    const LabelImage gt = voronoi(rng, 40, 2 + trial % 7);
    const auto dist = boundary_distance(gt);
    for (auto mode : {SeedMode::kSparse, SeedMode::kExtended}) {
      const auto seeds = oracle_seeds(gt, mode, static_cast<std::uint64_t>(trial));
      std::map<std::int32_t, int> per_segment;
      std::set<int> labels_in_segment;
      for (const auto& s : seeds.seeds.entries()) {
        const std::int32_t id = gt.data()[s.vertex];
        CHECK(seeds.segment_ids[static_cast<std::size_t>(s.label)] == id);
        ++per_segment[id];
        const Index r = s.vertex / 40;
        const Index c = s.vertex % 40;
        // No seed touches another segment unless the segment is one pixel thick.
        bool touches = false;
        if (r > 0 && gt(r - 1, c) != id) touches = true;
        if (r < 39 && gt(r + 1, c) != id) touches = true;
        if (c > 0 && gt(r, c - 1) != id) touches = true;
        if (c < 39 && gt(r, c + 1) != id) touches = true;
        double segment_max = 0.0;
        for (Index i = 0; i < gt.size(); ++i)
          if (gt.data()[i] == id) segment_max = std::max(segment_max, dist.data()[i]);
        if (segment_max > 1.0) CHECK_FALSE(touches);
      }
      std::set<std::int32_t> ids(gt.data(), gt.data() + gt.size());
      CHECK(per_segment.size() == ids.size());
      if (mode == SeedMode::kSparse) CHECK(seeds.seeds.size() == ids.size());
    }
  }
}

TEST_CASE("extended seeds: a disk around the sparse seed, inside the segment") {
  std::mt19937_64 rng(54);
  const LabelImage gt = voronoi(rng, 48, 4);
  const auto sparse = oracle_seeds(gt, SeedMode::kSparse, 5);
  const auto extended = oracle_seeds(gt, SeedMode::kExtended, 5);
  const auto dist = boundary_distance(gt);
  CHECK(extended.seeds.size() > sparse.seeds.size());
  for (const auto& centre : sparse.seeds.entries()) {
    const double radius = 0.5 * dist.data()[centre.vertex];
    int count = 0;
    bool has_centre = false;
    for (const auto& s : extended.seeds.entries()) {
      if (s.label != centre.label) continue;
      ++count;
      has_centre |= s.vertex == centre.vertex;
      const double dr = static_cast<double>(s.vertex / 48 - centre.vertex / 48);
      const double dc = static_cast<double>(s.vertex % 48 - centre.vertex % 48);
      CHECK(std::sqrt(dr * dr + dc * dc) <= radius + 1e-12);
      CHECK(gt.data()[s.vertex] == gt.data()[centre.vertex]);
    }
    CHECK(has_centre);
    CHECK(count >= 1);
  }
}

TEST_CASE("one-pixel segment is its own seed") {
  LabelImage gt = LabelImage::Zero(5, 5);
  gt(2, 3) = 4;
  const auto seeds = oracle_seeds(gt, SeedMode::kExtended, 0);
  bool found = false;
  for (const auto& s : seeds.seeds.entries())
    if (s.label == 1) {
      CHECK(s.vertex == 2 * 5 + 3);
      found = true;
    }
  CHECK(found);
  CHECK_THROWS_AS(oracle_seeds(LabelImage::Constant(2, 2, -1), SeedMode::kSparse, 0), ValidationError);
}
