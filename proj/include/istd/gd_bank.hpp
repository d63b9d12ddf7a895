#pragma once

// Frozen multi-orientation Gaussian-derivative kernels.
//
//   GD(x, y, s, t) = -G(x, y, s) / s^2 * (x cos t + y sin t)
//   G(x, y, s)     = exp(-(x^2 + y^2) / (2 s^2)) / sqrt(2 pi s^2)
//
// x runs along columns (left to right), y along rows (top to bottom), both
// sampled at integer offsets from the kernel center. No renormalization.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "istd/error.hpp"
#include "istd/weight_store.hpp"

namespace istd {

struct GdKernel {
  int k = 0;
  double sigma = 0.0;
  double theta = 0.0;
  std::vector<float> grid;  // k*k, row-major, row = y offset + half

  int half() const noexcept { return (k - 1) / 2; }
  // Value at offset (dy, dx) from the center.
  float at(int dy, int dx) const noexcept {
    return grid[static_cast<std::size_t>(dy + half()) * k + (dx + half())];
  }
};

inline GdKernel build_gd_kernel(int k, double sigma, double theta) {
  require(k >= 3 && k % 2 == 1, "Gaussian-derivative kernel side must be odd and >= 3, got " +
                                    std::to_string(k));
  require(sigma > 0.0, "Gaussian-derivative sigma must be positive");
  GdKernel g{k, sigma, theta, std::vector<float>(static_cast<std::size_t>(k) * k)};
  const int h = g.half();
  const double s2 = sigma * sigma;
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * s2);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  for (int y = -h; y <= h; ++y)
    for (int x = -h; x <= h; ++x) {
      const double gauss = norm * std::exp(-(x * x + y * y) / (2.0 * s2));
      g.grid[static_cast<std::size_t>(y + h) * k + (x + h)] =
          static_cast<float>(-gauss / s2 * (x * c + y * s));
    }
  return g;
}

// Per-scale Gaussian width. The default puts +-2 sigma at the kernel edge.
struct SigmaRule {
  std::array<double, 3> sigmas{0.5, 1.0, 1.5};

  static SigmaRule quarter_support() { return {}; }
};

class GdKernelBank {
 public:
  static constexpr std::array<int, 3> kSizes{3, 5, 7};
  static constexpr int kOrientations = 24;
  static constexpr int kScales = 3;
  // 90 degrees expressed in orientation steps of 15 degrees.
  static constexpr int kQuarterTurn = 6;

  explicit GdKernelBank(SigmaRule rule = SigmaRule::quarter_support()) : rule_(rule) {
    for (int s = 0; s < kScales; ++s)
      for (int o = 0; o < kOrientations; ++o) {
        const double theta = orientation_angle(o);
        primary_[s][o] = build_gd_kernel(kSizes[s], rule.sigmas[s], theta);
        partner_[s][o] = build_gd_kernel(kSizes[s], rule.sigmas[s], theta + std::numbers::pi / 2);
      }
  }

  static double orientation_angle(int o) { return o * (std::numbers::pi / 12.0); }

  const GdKernel& primary(int scale, int orientation) const {
    check(scale, orientation);
    return primary_[scale][orientation];
  }
  const GdKernel& partner(int scale, int orientation) const {
    check(scale, orientation);
    return partner_[scale][orientation];
  }
  const SigmaRule& sigma_rule() const noexcept { return rule_; }

  static std::string entry_name(int scale, int orientation, bool partner) {
    return "gdbank/s" + std::to_string(scale) + "/o" + std::to_string(orientation) +
           (partner ? "/partner" : "");
  }

  // Named-tensor export: one [k][k] entry per kernel, primary before partner.
  WeightStore to_store() const {
    WeightStore store;
    for (int s = 0; s < kScales; ++s)
      for (int o = 0; o < kOrientations; ++o)
        for (bool p : {false, true}) {
          const auto& g = p ? partner_[s][o] : primary_[s][o];
          const auto k = static_cast<std::uint32_t>(g.k);
          store.set(entry_name(s, o, p), Param{{k, k}, g.grid});
        }
    return store;
  }

 private:
  static void check(int scale, int orientation) {
    require(scale >= 0 && scale < kScales, "kernel bank scale index out of range");
    require(orientation >= 0 && orientation < kOrientations,
            "kernel bank orientation index out of range");
  }

  SigmaRule rule_;
  std::array<std::array<GdKernel, kOrientations>, kScales> primary_;
  std::array<std::array<GdKernel, kOrientations>, kScales> partner_;
};

}  // namespace istd
