#include "diffwalker/metrics.hpp"

#include <cmath>
#include <map>
#include <queue>
#include <tuple>

#include "diffwalker/errors.hpp"

namespace diffwalker {

namespace {

void check_shapes(const LabelImage& pred, const LabelImage& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) {
    throw ValidationError("prediction and ground truth differ in shape");
  }
}

struct Contingency {
  std::map<std::pair<std::int32_t, std::int32_t>, double> joint;  // (pred, gt)
  std::map<std::int32_t, double> pred;
  std::map<std::int32_t, double> gt;
  double total = 0.0;
  Index excluded = 0;
};

Contingency contingency(const LabelImage& pred, const LabelImage& gt, int tolerance) {
  check_shapes(pred, gt);
  if (tolerance < 0) throw ValidationError("tolerance must be nonnegative");
  const Mask excluded = tolerance_mask(gt, tolerance);
  Contingency t;
  for (Index r = 0; r < gt.rows(); ++r) {
    for (Index c = 0; c < gt.cols(); ++c) {
      if (excluded(r, c)) {
        ++t.excluded;
        continue;
      }
      t.joint[{pred(r, c), gt(r, c)}] += 1.0;
      t.pred[pred(r, c)] += 1.0;
      t.gt[gt(r, c)] += 1.0;
      t.total += 1.0;
    }
  }
  if (t.total == 0.0) throw ValidationError("every pixel lies in the boundary tolerance band");
  return t;
}

double plogp_sum(const std::map<std::int32_t, double>& counts, double n) {
  double h = 0.0;
  for (const auto& [id, count] : counts) {
    const double p = count / n;
    h -= p * std::log(p);
  }
  return h;
}

double pairs(double n) { return 0.5 * n * (n - 1.0); }

Voi voi_from(const Contingency& t) {
  double joint = 0.0;
  for (const auto& [key, count] : t.joint) {
    const double p = count / t.total;
    joint -= p * std::log(p);
  }
  // H(pred | gt) = H(pred, gt) - H(gt) and vice versa.
  Voi out;
  out.split = joint - plogp_sum(t.gt, t.total);
  out.merge = joint - plogp_sum(t.pred, t.total);
  return out;
}

double arand_from(const Contingency& t) {
  double index = 0.0;
  for (const auto& [key, count] : t.joint) index += pairs(count);
  double pred_pairs = 0.0;
  for (const auto& [id, count] : t.pred) pred_pairs += pairs(count);
  double gt_pairs = 0.0;
  for (const auto& [id, count] : t.gt) gt_pairs += pairs(count);
  const double all = pairs(t.total);
  const double expected = all > 0.0 ? pred_pairs * gt_pairs / all : 0.0;
  const double maximum = 0.5 * (pred_pairs + gt_pairs);
  // Both partitions trivial (one segment each, or all singletons): identical.
  if (maximum - expected == 0.0) return 0.0;
  return 1.0 - (index - expected) / (maximum - expected);
}

}  // namespace

Mask tolerance_mask(const LabelImage& gt, int tolerance) {
  const Index h = gt.rows();
  const Index w = gt.cols();
  Mask out = Mask::Constant(h, w, false);
  if (tolerance <= 0) return out;

  Mask boundary = Mask::Constant(h, w, false);
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      if (c + 1 < w && gt(r, c) != gt(r, c + 1)) boundary(r, c) = boundary(r, c + 1) = true;
      if (r + 1 < h && gt(r, c) != gt(r + 1, c)) boundary(r, c) = boundary(r + 1, c) = true;
    }
  }
  const Index reach = tolerance - 1;
  // Chebyshev dilation is separable: dilate rows, then columns.
  Mask rows = Mask::Constant(h, w, false);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c)
      if (boundary(r, c))
        for (Index k = std::max<Index>(0, c - reach); k <= std::min(w - 1, c + reach); ++k)
          rows(r, k) = true;
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c)
      if (rows(r, c))
        for (Index k = std::max<Index>(0, r - reach); k <= std::min(h - 1, r + reach); ++k)
          out(k, c) = true;
  return out;
}

Voi voi(const LabelImage& pred, const LabelImage& gt, int tolerance) {
  return voi_from(contingency(pred, gt, tolerance));
}

double arand(const LabelImage& pred, const LabelImage& gt, int tolerance) {
  return arand_from(contingency(pred, gt, tolerance));
}

EvalReport evaluate(const LabelImage& pred, const LabelImage& gt, int tolerance) {
  const Contingency t = contingency(pred, gt, tolerance);
  const Voi v = voi_from(t);
  EvalReport report;
  report.voi_split = v.split;
  report.voi_merge = v.merge;
  report.voi_total = v.split + v.merge;
  report.arand = arand_from(t);
  report.excluded_pixels = t.excluded;
  return report;
}

Mask error_map(const LabelImage& pred, const LabelImage& gt) {
  check_shapes(pred, gt);
  std::map<std::int32_t, std::map<std::int32_t, Index>> overlap;
  for (Index i = 0; i < pred.size(); ++i) ++overlap[pred.data()[i]][gt.data()[i]];
  std::map<std::int32_t, std::int32_t> match;
  for (const auto& [p, row] : overlap) {
    Index best = -1;
    for (const auto& [g, count] : row) {
      if (count > best) {
        best = count;
        match[p] = g;
      }
    }
  }
  Mask out(pred.rows(), pred.cols());
  for (Index i = 0; i < pred.size(); ++i) out.data()[i] = match[pred.data()[i]] != gt.data()[i];
  return out;
}

WatershedResult seeded_watershed(const Image<double>& boundary, const SeedSet& seeds) {
  const Index h = boundary.rows();
  const Index w = boundary.cols();
  if (!boundary.allFinite()) throw ValidationError("boundary map contains non-finite values");
  seeds.check_vertices(h * w);

  WatershedResult out;
  out.labels = LabelImage::Constant(h, w, -1);
  std::int32_t* labels = out.labels.data();
  const double* value = boundary.data();

  // (boundary value, insertion order, vertex, label); min-heap.
  using Item = std::tuple<double, std::uint64_t, Index, std::int32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> frontier;
  std::uint64_t inserted = 0;
  const auto push_neighbours = [&](Index v, std::int32_t lab) {
    const Index r = v / w;
    const Index c = v % w;
    const Index candidates[4] = {r > 0 ? v - w : -1, c > 0 ? v - 1 : -1, c + 1 < w ? v + 1 : -1,
                                 r + 1 < h ? v + w : -1};
    for (Index n : candidates)
      if (n >= 0 && labels[n] < 0) frontier.emplace(value[n], inserted++, n, lab);
  };

  for (const auto& s : seeds.entries()) labels[s.vertex] = s.label;
  for (const auto& s : seeds.entries()) push_neighbours(s.vertex, s.label);
  while (!frontier.empty()) {
    const auto [val, order, v, lab] = frontier.top();
    frontier.pop();
    if (labels[v] >= 0) continue;
    labels[v] = lab;
    push_neighbours(v, lab);
  }
  out.unlabeled = (out.labels < 0).count();
  return out;
}

}  // namespace diffwalker
