#pragma once

// Pixel-level (IoU, precision, recall, F1) and target-level (Pd, Fa) detection
// metrics, plus the threshold sweep behind ROC curves.
//
// Dataset aggregates always sum numerators and denominators over images;
// they never average per-image ratios.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "istd/error.hpp"
#include "istd/tensor.hpp"

namespace istd {

struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1, row-major

  Mask() = default;
  Mask(int h, int w) : height(h), width(w), bits(static_cast<std::size_t>(h) * w, 0) {}

  std::uint8_t at(int r, int c) const { return bits[static_cast<std::size_t>(r) * width + c]; }
  std::uint8_t& at(int r, int c) { return bits[static_cast<std::size_t>(r) * width + c]; }
  std::size_t pixels() const { return bits.size(); }
  std::size_t count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
  }
  friend bool operator==(const Mask&, const Mask&) = default;
};

// Pixels with score >= threshold.
inline Mask binarize(const Tensor& score, double threshold) {
  require(score.channels() == 1, "binarize expects a single-channel score map");
  Mask m(score.height(), score.width());
  const auto v = score.values();
  for (std::size_t i = 0; i < v.size(); ++i) m.bits[i] = static_cast<double>(v[i]) >= threshold;
  return m;
}

inline void require_same_dims(const Mask& a, const Mask& b) {
  if (a.height != b.height || a.width != b.width)
    fail(ErrorKind::input, "mask dims differ: " + std::to_string(a.height) + "x" +
                               std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                               std::to_string(b.width));
}

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  std::uint64_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline ConfusionCounts confusion(const Mask& pred, const Mask& gt) {
  require_same_dims(pred, gt);
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.bits.size(); ++i) {
    const bool p = pred.bits[i], g = gt.bits[i];
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

struct PixelMetrics {
  double iou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Nothing predicted and nothing to find counts as a perfect score (iou = f1 = 1).
// Any other 0/0 ratio is 0.
inline PixelMetrics pixel_metrics(const ConfusionCounts& c) {
  auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
  PixelMetrics m;
  if (c.tp + c.fp + c.fn == 0) return {1.0, 0.0, 0.0, 1.0};
  const double tp = static_cast<double>(c.tp);
  m.iou = ratio(tp, static_cast<double>(c.tp + c.fp + c.fn));
  m.precision = ratio(tp, static_cast<double>(c.tp + c.fp));
  m.recall = ratio(tp, static_cast<double>(c.tp + c.fn));
  m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
  return m;
}

struct Component {
  std::vector<std::size_t> pixels;  // flat indices, ascending
  double row = 0.0;                 // centroid
  double col = 0.0;
};

struct TargetSet {
  std::vector<Component> components;
};

// 8-connected components, ordered by their first pixel in raster order.
inline TargetSet detect_targets(const Mask& mask) {
  TargetSet out;
  std::vector<std::uint8_t> seen(mask.bits.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.bits.size(); ++start) {
    if (!mask.bits[start] || seen[start]) continue;
    Component comp;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      comp.pixels.push_back(idx);
      const int r = static_cast<int>(idx / mask.width);
      const int c = static_cast<int>(idx % mask.width);
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= mask.height || cc < 0 || cc >= mask.width) continue;
          const std::size_t n = static_cast<std::size_t>(rr) * mask.width + cc;
          if (mask.bits[n] && !seen[n]) {
            seen[n] = 1;
            stack.push_back(n);
          }
        }
    }
    std::sort(comp.pixels.begin(), comp.pixels.end());
    double sr = 0.0, sc = 0.0;
    for (const auto idx : comp.pixels) {
      sr += static_cast<double>(idx / mask.width);
      sc += static_cast<double>(idx % mask.width);
    }
    comp.row = sr / static_cast<double>(comp.pixels.size());
    comp.col = sc / static_cast<double>(comp.pixels.size());
    out.components.push_back(std::move(comp));
  }
  return out;
}

// Greedy one-to-one matching of ground-truth to predicted components by
// centroid distance. Candidate pairs within `radius` are taken nearest first;
// ties go to the smaller ground-truth centroid (row, then col), then the
// smaller predicted centroid. Returns, per ground-truth component, whether it
// was matched.
inline std::vector<bool> match_targets(const TargetSet& pred, const TargetSet& gt, double radius) {
  struct Pair {
    double dist2;
    std::size_t g, p;
  };
  std::vector<Pair> pairs;
  const double r2 = radius * radius;
  for (std::size_t g = 0; g < gt.components.size(); ++g)
    for (std::size_t p = 0; p < pred.components.size(); ++p) {
      const double dr = gt.components[g].row - pred.components[p].row;
      const double dc = gt.components[g].col - pred.components[p].col;
      const double d2 = dr * dr + dc * dc;
      if (d2 <= r2) pairs.push_back({d2, g, p});
    }
  auto key = [&](const Pair& a) {
    const auto& gc = gt.components[a.g];
    const auto& pc = pred.components[a.p];
    return std::tuple(a.dist2, gc.row, gc.col, pc.row, pc.col, a.g, a.p);
  };
  std::sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) { return key(a) < key(b); });
  std::vector<bool> gt_hit(gt.components.size(), false);
  std::vector<bool> pred_used(pred.components.size(), false);
  for (const auto& pr : pairs) {
    if (gt_hit[pr.g] || pred_used[pr.p]) continue;
    gt_hit[pr.g] = true;
    pred_used[pr.p] = true;
  }
  return gt_hit;
}

struct PdFaCounts {
  std::uint64_t correct = 0;
  std::uint64_t total = 0;
  std::uint64_t false_pixels = 0;
  std::uint64_t all_pixels = 0;

  PdFaCounts& operator+=(const PdFaCounts& o) {
    correct += o.correct;
    total += o.total;
    false_pixels += o.false_pixels;
    all_pixels += o.all_pixels;
    return *this;
  }
  // No ground-truth targets: Pd is reported as 1 and flagged vacuous.
  bool pd_vacuous() const { return total == 0; }
  double pd() const {
    return total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total);
  }
  double fa() const {
    return all_pixels == 0 ? 0.0
                           : static_cast<double>(false_pixels) / static_cast<double>(all_pixels);
  }
  friend bool operator==(const PdFaCounts&, const PdFaCounts&) = default;
};

inline constexpr double kDefaultMatchRadius = 3.0;

inline PdFaCounts pd_fa(const Mask& pred, const Mask& gt, double match_radius = kDefaultMatchRadius) {
  require_same_dims(pred, gt);
  const TargetSet gt_targets = detect_targets(gt);
  const auto hits = match_targets(detect_targets(pred), gt_targets, match_radius);
  PdFaCounts c;
  c.total = gt_targets.components.size();
  c.correct = static_cast<std::uint64_t>(std::count(hits.begin(), hits.end(), true));
  for (std::size_t i = 0; i < pred.bits.size(); ++i) c.false_pixels += pred.bits[i] && !gt.bits[i];
  c.all_pixels = pred.pixels();
  return c;
}

// --- ROC -------------------------------------------------------------------

struct RocSample {
  double threshold = 0.0;
  double pd = 0.0;
  double fa = 0.0;
  PdFaCounts counts;        // detections latched across the sweep, see roc_curve
  std::uint64_t raw_correct = 0;  // matches at this threshold alone
};

struct RocCurve {
  std::vector<RocSample> samples;
  bool pd_vacuous = false;
};

// `count` evenly spaced thresholds from 1 down to 0.
inline std::vector<double> threshold_grid(int count) {
  require(count >= 2, "threshold grid needs at least 2 values");
  std::vector<double> t(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j)
    t[j] = static_cast<double>(count - 1 - j) / static_cast<double>(count - 1);
  return t;
}

// Sweeps thresholds from high to low. A ground-truth target counts as detected
// at threshold t once it has been matched at some threshold >= t, so Pd never
// drops when the detector is relaxed. Centroid matching alone is not monotone:
// growing predictions merge and drift, and at t = 0 the whole frame is one
// component. Fa uses the false pixels at t itself and is monotone on its own.
inline RocCurve roc_curve(std::span<const Tensor> scores, std::span<const Mask> gts,
                          std::span<const double> thresholds,
                          double match_radius = kDefaultMatchRadius) {
  require(scores.size() == gts.size(), "ROC needs one ground-truth mask per score map");
  for (std::size_t j = 1; j < thresholds.size(); ++j)
    require(thresholds[j] < thresholds[j - 1], "ROC thresholds must be strictly decreasing");

  std::vector<TargetSet> gt_targets;
  std::vector<std::vector<bool>> latched;
  std::uint64_t total = 0;
  for (const auto& g : gts) {
    gt_targets.push_back(detect_targets(g));
    latched.emplace_back(gt_targets.back().components.size(), false);
    total += gt_targets.back().components.size();
  }

  RocCurve curve;
  curve.pd_vacuous = total == 0;
  for (const double t : thresholds) {
    RocSample s;
    s.threshold = t;
    s.counts.total = total;
    for (std::size_t n = 0; n < scores.size(); ++n) {
      const Mask pred = binarize(scores[n], t);
      require_same_dims(pred, gts[n]);
      const auto hits = match_targets(detect_targets(pred), gt_targets[n], match_radius);
      for (std::size_t g = 0; g < hits.size(); ++g) {
        s.raw_correct += hits[g];
        if (hits[g]) latched[n][g] = true;
      }
      s.counts.correct += static_cast<std::uint64_t>(std::count(latched[n].begin(), latched[n].end(), true));
      for (std::size_t i = 0; i < pred.bits.size(); ++i)
        s.counts.false_pixels += pred.bits[i] && !gts[n].bits[i];
      s.counts.all_pixels += pred.pixels();
    }
    s.pd = s.counts.pd();
    s.fa = s.counts.fa();
    curve.samples.push_back(s);
  }
  return curve;
}

inline RocCurve roc_curve(std::span<const Tensor> scores, std::span<const Mask> gts,
                          int threshold_count = 101, double match_radius = kDefaultMatchRadius) {
  const auto grid = threshold_grid(threshold_count);
  return roc_curve(scores, gts, grid, match_radius);
}

// Best Pd among operating points whose Fa stays within `fa_budget`.
inline double pd_at_fa(const RocCurve& curve, double fa_budget) {
  double best = 0.0;
  for (const auto& s : curve.samples)
    if (s.fa <= fa_budget) best = std::max(best, s.pd);
  return best;
}

}  // namespace istd
