#pragma once

// Seeded synthetic infrared scenes with exact ground truth.
//
// image = clamp(base + ramp + clutter + targets + noise, 0, 1)
//   ramp(r, c)   = ramp_row * r / H + ramp_col * c / W
//   target       = amplitude * max(g(p - center - offset), g(p - center + offset)),
//                  g(d) = exp(-|d|^2 / (2 sigma^2)); offset = 0 is the plain
//                  isotropic dome, a nonzero offset gives a two-lobe target
//   clutter      = amplitude * g(p - center) with its own sigma
//   noise        = N(0, noise_sigma^2) per pixel, drawn in raster order
// mask = union over targets of {p : target profile(p) >= amplitude / 2}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "istd/error.hpp"
#include "istd/metrics.hpp"
#include "istd/rng.hpp"
#include "istd/tensor.hpp"

namespace istd {

struct TargetSpec {
  double row = 0.0;
  double col = 0.0;
  double amplitude = 0.5;
  double sigma = 1.5;
  double lobe_row = 0.0;  // half the separation of the two lobes
  double lobe_col = 0.0;
};

struct ClutterSpec {
  double row = 0.0;
  double col = 0.0;
  double amplitude = 0.1;
  double sigma = 5.0;
};

struct SceneSpec {
  int height = 64;
  int width = 64;
  std::vector<TargetSpec> targets;
  double base = 0.2;
  double ramp_row = 0.0;
  double ramp_col = 0.0;
  std::vector<ClutterSpec> clutter;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    require(height > 0 && width > 0, "scene dims must be positive");
    require(base >= 0.0 && base < 1.0, "scene base level must be in [0, 1)");
    require(noise_sigma >= 0.0, "noise sigma must be non-negative");
    for (const auto& t : targets) {
      require(t.row >= 0.0 && t.row <= height - 1 && t.col >= 0.0 && t.col <= width - 1,
              "target center outside the image");
      require(t.amplitude > 0.0 && t.amplitude <= 1.0, "target amplitude must be in (0, 1]");
      require(t.sigma > 0.0, "target sigma must be positive");
    }
    for (const auto& c : clutter) require(c.sigma > 0.0, "clutter sigma must be positive");
  }
};

struct LabeledScene {
  Tensor image;
  Mask mask;
  SceneSpec spec;
  // amplitude / noise sigma of the faintest target; infinite without noise
  double snr = 0.0;
};

namespace detail {

inline double unit_gaussian(double dr, double dc, double sigma) {
  return std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
}

inline double target_profile(const TargetSpec& t, double r, double c) {
  const double dr = r - t.row, dc = c - t.col;
  return t.amplitude * std::max(unit_gaussian(dr - t.lobe_row, dc - t.lobe_col, t.sigma),
                                unit_gaussian(dr + t.lobe_row, dc + t.lobe_col, t.sigma));
}

}  // namespace detail

inline LabeledScene render_scene(const SceneSpec& spec) {
  spec.validate();
  LabeledScene scene{Tensor(spec.height, spec.width, 1), Mask(spec.height, spec.width), spec, 0.0};
  SplitMix64 noise(spec.seed);
  for (int r = 0; r < spec.height; ++r)
    for (int c = 0; c < spec.width; ++c) {
      double v = spec.base + spec.ramp_row * r / spec.height + spec.ramp_col * c / spec.width;
      for (const auto& k : spec.clutter)
        v += k.amplitude * detail::unit_gaussian(r - k.row, c - k.col, k.sigma);
      bool on_target = false;
      for (const auto& t : spec.targets) {
        const double p = detail::target_profile(t, r, c);
        v += p;
        on_target = on_target || p >= 0.5 * t.amplitude;
      }
      if (spec.noise_sigma > 0.0) v += noise.normal(0.0, spec.noise_sigma);
      scene.image.at(r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      scene.mask.at(r, c) = on_target;
    }
  double faintest = std::numeric_limits<double>::infinity();
  for (const auto& t : spec.targets) faintest = std::min(faintest, t.amplitude);
  scene.snr = spec.noise_sigma > 0.0 ? faintest / spec.noise_sigma
                                     : std::numeric_limits<double>::infinity();
  return scene;
}

enum class SuiteKind { localization, roc, multi_target };

inline SuiteKind parse_suite_kind(const std::string& s) {
  if (s == "localization") return SuiteKind::localization;
  if (s == "roc") return SuiteKind::roc;
  if (s == "multiTarget" || s == "multi-target" || s == "multi_target") return SuiteKind::multi_target;
  fail(ErrorKind::config, "unknown suite kind '" + s + "'");
}

// Scene families, all 64x64 with a margin of 8 px around target centers:
//   localization: 1 isotropic target, amplitude U(0.3, 0.7), sigma U(1, 2.5),
//                 SNR U(4, 12), 1-3 clutter blobs (amplitude U(0.05, 0.25),
//                 sigma U(4, 8)), base U(0.1, 0.3), ramp components U(-0.1, 0.1)
//   roc:          1-3 isotropic targets, otherwise as localization but with SNR
//                 U(3, 10) and 2-4 clutter blobs
//   multiTarget:  2-5 targets, every other one a two-lobe target (lobe offset
//                 U(0.5, 1) * sigma along a random direction), SNR U(4, 12),
//                 no clutter
// Targets in one scene are at least 4 * max sigma + 4 px apart (rejection
// sampling), so every target yields exactly one mask component.
inline std::vector<LabeledScene> make_suite(SuiteKind kind, int n, std::uint64_t seed) {
  require(n >= 1, "suite size must be at least 1");
  constexpr int kSize = 64;
  constexpr double kMargin = 8.0;
  SplitMix64 rng(seed);
  std::vector<LabeledScene> suite;
  suite.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    SceneSpec spec;
    spec.height = spec.width = kSize;
    spec.seed = rng.fork();
    spec.base = rng.uniform(0.1, 0.3);
    spec.ramp_row = rng.uniform(-0.1, 0.1);
    spec.ramp_col = rng.uniform(-0.1, 0.1);

    int targets = 1;
    int clutter = 0;
    double snr_lo = 4.0, snr_hi = 12.0;
    switch (kind) {
      case SuiteKind::localization: clutter = rng.uniform_int(1, 3); break;
      case SuiteKind::roc:
        targets = rng.uniform_int(1, 3);
        clutter = rng.uniform_int(2, 4);
        snr_lo = 3.0;
        snr_hi = 10.0;
        break;
      case SuiteKind::multi_target: targets = rng.uniform_int(2, 5); break;
    }

    const double max_sigma = 2.5;
    int attempts = 0;
    while (static_cast<int>(spec.targets.size()) < targets) {
      if (++attempts % 1000 == 0) spec.targets.clear();  // start over from a crowded layout
      TargetSpec t;
      t.row = rng.uniform(kMargin, kSize - 1 - kMargin);
      t.col = rng.uniform(kMargin, kSize - 1 - kMargin);
      t.amplitude = rng.uniform(0.3, 0.7);
      t.sigma = rng.uniform(1.0, max_sigma);
      if (kind == SuiteKind::multi_target && spec.targets.size() % 2 == 1) {
        const double angle = rng.uniform(0.0, std::numbers::pi);
        const double offset = rng.uniform(0.5, 1.0) * t.sigma;
        t.lobe_row = offset * std::sin(angle);
        t.lobe_col = offset * std::cos(angle);
      }
      const bool clear = std::all_of(spec.targets.begin(), spec.targets.end(), [&](const TargetSpec& o) {
        return std::hypot(o.row - t.row, o.col - t.col) > 4.0 * max_sigma + 4.0;
      });
      if (clear) spec.targets.push_back(t);
    }
    for (int k = 0; k < clutter; ++k)
      spec.clutter.push_back({rng.uniform(0.0, kSize - 1.0), rng.uniform(0.0, kSize - 1.0),
                              rng.uniform(0.05, 0.25), rng.uniform(4.0, 8.0)});
    double faintest = 1.0;
    for (const auto& t : spec.targets) faintest = std::min(faintest, t.amplitude);
    spec.noise_sigma = faintest / rng.uniform(snr_lo, snr_hi);
    suite.push_back(render_scene(spec));
  }
  return suite;
}

}  // namespace istd
