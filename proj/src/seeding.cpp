#include "diffwalker/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "diffwalker/errors.hpp"
#include "diffwalker/parallel.hpp"
#include "diffwalker/random.hpp"

namespace diffwalker {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared distance transform of a sampled function (lower envelope of
// parabolas). f and d have length n; v and z are scratch buffers.
void transform_line(const double* f, double* d, Index n, Index stride,
                    std::vector<Index>& v, std::vector<double>& z) {
  v.assign(static_cast<std::size_t>(n), 0);
  z.assign(static_cast<std::size_t>(n + 1), 0.0);
  Index k = -1;
  for (Index q = 0; q < n; ++q) {
    const double fq = f[q * stride];
    if (fq == kInf) continue;
    double s = -kInf;
    while (k >= 0) {
      const Index p = v[static_cast<std::size_t>(k)];
      s = ((fq + static_cast<double>(q * q)) - (f[p * stride] + static_cast<double>(p * p))) /
          (2.0 * static_cast<double>(q - p));
      if (s > z[static_cast<std::size_t>(k)]) break;
      --k;
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = k == 0 ? -kInf : s;
    z[static_cast<std::size_t>(k + 1)] = kInf;
  }
  if (k < 0) {
    for (Index q = 0; q < n; ++q) d[q * stride] = kInf;
    return;
  }
  Index j = 0;
  for (Index q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(j + 1)] < static_cast<double>(q)) ++j;
    const Index p = v[static_cast<std::size_t>(j)];
    const double dq = static_cast<double>(q - p);
    d[q * stride] = dq * dq + f[p * stride];
  }
}

std::uint64_t segment_seed(std::uint64_t seed, std::size_t segment) {
  std::uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(segment) + 1));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Box {
  Index r0 = std::numeric_limits<Index>::max();
  Index c0 = std::numeric_limits<Index>::max();
  Index r1 = -1;
  Index c1 = -1;
};

// Bounding box of every segment id, keyed in ascending id order.
std::map<std::int32_t, Box> bounding_boxes(const LabelImage& segments) {
  std::map<std::int32_t, Box> boxes;
  for (Index r = 0; r < segments.rows(); ++r) {
    for (Index c = 0; c < segments.cols(); ++c) {
      Box& b = boxes[segments(r, c)];
      b.r0 = std::min(b.r0, r);
      b.c0 = std::min(b.c0, c);
      b.r1 = std::max(b.r1, r);
      b.c1 = std::max(b.c1, c);
    }
  }
  return boxes;
}

// Squared distance to the nearest pixel outside `id`, on the segment's
// bounding box grown by one pixel. The ring is never part of the segment, so
// it stands in for everything farther away, including the image exterior.
Image<double> segment_distance(const LabelImage& segments, std::int32_t id, const Box& box) {
  const Index h = box.r1 - box.r0 + 3;
  const Index w = box.c1 - box.c0 + 3;
  Mask outside = Mask::Constant(h, w, true);
  for (Index r = box.r0; r <= box.r1; ++r)
    for (Index c = box.c0; c <= box.c1; ++c)
      if (segments(r, c) == id) outside(r - box.r0 + 1, c - box.c0 + 1) = false;
  return squared_distance_transform(outside);
}

}  // namespace

Image<double> squared_distance_transform(const Mask& features) {
  const Index h = features.rows();
  const Index w = features.cols();
  Image<double> f = features.select(Image<double>::Zero(h, w), Image<double>::Constant(h, w, kInf));
  Image<double> g(h, w);
  std::vector<Index> v;
  std::vector<double> z;
  for (Index r = 0; r < h; ++r) transform_line(f.data() + r * w, g.data() + r * w, w, 1, v, z);
  for (Index c = 0; c < w; ++c) transform_line(g.data() + c, f.data() + c, h, w, v, z);
  return f;
}

Image<double> boundary_distance(const LabelImage& segments) {
  const auto boxes = bounding_boxes(segments);
  Image<double> out(segments.rows(), segments.cols());
  for (const auto& [id, box] : boxes) {
    const Image<double> d = segment_distance(segments, id, box);
    for (Index r = box.r0; r <= box.r1; ++r)
      for (Index c = box.c0; c <= box.c1; ++c)
        if (segments(r, c) == id) out(r, c) = std::sqrt(d(r - box.r0 + 1, c - box.c0 + 1));
  }
  return out;
}

OracleSeeds oracle_seeds(const LabelImage& ground_truth, SeedMode mode, std::uint64_t rng_seed) {
  if (ground_truth.size() == 0) throw ValidationError("ground truth image is empty");
  if ((ground_truth < 0).any()) throw ValidationError("segment ids must be nonnegative");

  const auto boxes = bounding_boxes(ground_truth);
  std::vector<std::pair<std::int32_t, Box>> segments(boxes.begin(), boxes.end());

  const Index width = ground_truth.cols();
  std::vector<std::vector<Seed>> per_segment(segments.size());
  parallel_for(static_cast<Index>(segments.size()), [&](Index k) {
    const auto& [id, box] = segments[static_cast<std::size_t>(k)];
    const Image<double> d2 = segment_distance(ground_truth, id, box);
    const auto inside = [&](Index r, Index c) { return ground_truth(r, c) == id; };
    const auto dist2 = [&](Index r, Index c) { return d2(r - box.r0 + 1, c - box.c0 + 1); };

    double max2 = 0.0;
    for (Index r = box.r0; r <= box.r1; ++r)
      for (Index c = box.c0; c <= box.c1; ++c)
        if (inside(r, c)) max2 = std::max(max2, dist2(r, c));

    const double threshold2 = kInteriorFraction * kInteriorFraction * max2;
    std::vector<Index> candidates;
    for (Index r = box.r0; r <= box.r1; ++r)
      for (Index c = box.c0; c <= box.c1; ++c)
        if (inside(r, c) && dist2(r, c) >= threshold2) candidates.push_back(r * width + c);

    Rng rng(segment_seed(rng_seed, static_cast<std::size_t>(k)));
    const Index seed = candidates[uniform_below(rng, candidates.size())];
    const int label = static_cast<int>(k);
    auto& out = per_segment[static_cast<std::size_t>(k)];
    if (mode == SeedMode::kSparse) {
      out.push_back({seed, label});
      return;
    }
    const Index sr = seed / width;
    const Index sc = seed % width;
    const double radius2 = 0.25 * dist2(sr, sc);
    for (Index r = box.r0; r <= box.r1; ++r) {
      for (Index c = box.c0; c <= box.c1; ++c) {
        const double dr = static_cast<double>(r - sr);
        const double dc = static_cast<double>(c - sc);
        if (inside(r, c) && dr * dr + dc * dc <= radius2) out.push_back({r * width + c, label});
      }
    }
  });

  OracleSeeds result;
  std::vector<Seed> all;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    result.segment_ids.push_back(segments[k].first);
    all.insert(all.end(), per_segment[k].begin(), per_segment[k].end());
  }
  result.seeds = SeedSet(std::move(all));
  return result;
}

}  // namespace diffwalker
