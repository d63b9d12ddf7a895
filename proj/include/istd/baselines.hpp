#pragma once

// Classical single-frame saliency maps: white top-hat and multiscale patch
// contrast (MPCM). Both emit [0, 1] maps so they slot into the same metric
// harness as the learned detector.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "istd/error.hpp"
#include "istd/ops.hpp"
#include "istd/tensor.hpp"

namespace istd {

enum class ElementShape { square, disk };

struct StructuringElement {
  int radius = 4;
  ElementShape shape = ElementShape::disk;

  int side() const { return 2 * radius + 1; }

  // Row-major side x side footprint.
  std::vector<std::uint8_t> footprint() const {
    std::vector<std::uint8_t> f(static_cast<std::size_t>(side()) * side(), 0);
    for (int dy = -radius; dy <= radius; ++dy)
      for (int dx = -radius; dx <= radius; ++dx)
        f[static_cast<std::size_t>(dy + radius) * side() + (dx + radius)] =
            shape == ElementShape::square || dx * dx + dy * dy <= radius * radius;
    return f;
  }
};

namespace detail {

// min (erode) or max (dilate) over the footprint, edge-replicated borders.
inline Tensor morph(const Tensor& img, const StructuringElement& se, bool dilate) {
  const auto fp = se.footprint();
  const int r = se.radius;
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if (fp[static_cast<std::size_t>(dy + r) * se.side() + (dx + r)]) offsets.emplace_back(dy, dx);
  Tensor out(img.height(), img.width(), 1);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      float best = dilate ? -std::numeric_limits<float>::infinity()
                          : std::numeric_limits<float>::infinity();
      for (const auto& [dy, dx] : offsets) {
        const float v = img.at(std::clamp(y + dy, 0, img.height() - 1),
                               std::clamp(x + dx, 0, img.width() - 1));
        best = dilate ? std::max(best, v) : std::min(best, v);
      }
      out.at(y, x) = best;
    }
  return out;
}

}  // namespace detail

inline Tensor erode(const Tensor& img, const StructuringElement& se) {
  return detail::morph(img, se, false);
}
inline Tensor dilate(const Tensor& img, const StructuringElement& se) {
  return detail::morph(img, se, true);
}
inline Tensor opening(const Tensor& img, const StructuringElement& se) {
  return dilate(erode(img, se), se);
}

// image - opening(image), clamped at zero, before normalization.
inline Tensor top_hat_response(const Tensor& image, const StructuringElement& se) {
  require(image.channels() == 1, "top-hat expects a single-channel image");
  require(se.radius >= 0, "structuring element radius must be non-negative");
  require(2 * se.radius < std::min(image.height(), image.width()),
          "structuring element radius " + std::to_string(se.radius) + " too large for " +
              image.shape_string());
  const Tensor open = opening(image, se);
  Tensor out(image.height(), image.width(), 1);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      out.at(y, x) = std::max(image.at(y, x) - open.at(y, x), 0.0f);
  return out;
}

inline Tensor top_hat(const Tensor& image, const StructuringElement& se = {}) {
  return minmax_normalize(top_hat_response(image, se));
}

// Summed-area table over the image padded by `pad` pixels of edge replication,
// so box means near the border see repeated edge values.
class BoxSums {
 public:
  BoxSums(const Tensor& img, int pad)
      : pad_(pad), w_(img.width() + 2 * pad),
        sums_(static_cast<std::size_t>(img.height() + 2 * pad + 1) * (w_ + 1), 0.0) {
    const int h = img.height() + 2 * pad;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w_; ++x) {
        const float v = img.at(std::clamp(y - pad, 0, img.height() - 1),
                               std::clamp(x - pad, 0, img.width() - 1));
        sums_[idx(y + 1, x + 1)] = v + sums_[idx(y, x + 1)] + sums_[idx(y + 1, x)] - sums_[idx(y, x)];
      }
  }

  // Mean over rows [r0, r1], cols [c0, c1] in image coordinates, inclusive.
  double mean(int r0, int r1, int c0, int c1) const {
    r0 += pad_, r1 += pad_, c0 += pad_, c1 += pad_;
    const double s = sums_[idx(r1 + 1, c1 + 1)] - sums_[idx(r0, c1 + 1)] -
                     sums_[idx(r1 + 1, c0)] + sums_[idx(r0, c0)];
    return s / (static_cast<double>(r1 - r0 + 1) * (c1 - c0 + 1));
  }

 private:
  std::size_t idx(int y, int x) const { return static_cast<std::size_t>(y) * (w_ + 1) + x; }

  int pad_;
  int w_;
  std::vector<double> sums_;
};

// Raw MPCM response before clamping and normalization. For each scale s the
// 3x3 grid of s x s cells centered on the pixel gives m0 (center) and m1..m8
// (clockwise from top-left); d_i = (m0 - m_i)(m0 - m_{i+4}); the scale's
// contrast is min_i d_i and the result is the max over scales.
inline Tensor mpcm_response(const Tensor& image, std::span<const int> patch_sizes) {
  require(image.channels() == 1, "MPCM expects a single-channel image");
  require(!patch_sizes.empty(), "MPCM needs at least one patch size");
  for (int s : patch_sizes)
    require(s >= 1 && s % 2 == 1, "MPCM patch sizes must be odd and positive");
  static constexpr std::array<std::pair<int, int>, 8> kCells{
      {{-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}}};
  const int widest = *std::max_element(patch_sizes.begin(), patch_sizes.end());
  const BoxSums sums(image, widest + widest / 2);
  Tensor out(image.height(), image.width(), 1, -std::numeric_limits<float>::infinity());
  for (const int s : patch_sizes) {
    const int h = s / 2;
    for (int y = 0; y < image.height(); ++y)
      for (int x = 0; x < image.width(); ++x) {
        const double m0 = sums.mean(y - h, y + h, x - h, x + h);
        std::array<double, 8> m{};
        for (int i = 0; i < 8; ++i) {
          const int cy = y + kCells[i].first * s;
          const int cx = x + kCells[i].second * s;
          m[i] = sums.mean(cy - h, cy + h, cx - h, cx + h);
        }
        double contrast = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 4; ++i) contrast = std::min(contrast, (m0 - m[i]) * (m0 - m[i + 4]));
        out.at(y, x) = std::max(out.at(y, x), static_cast<float>(contrast));
      }
  }
  return out;
}

inline Tensor mpcm(const Tensor& image, std::span<const int> patch_sizes) {
  Tensor r = mpcm_response(image, patch_sizes);
  for (float& v : r.values()) v = std::max(v, 0.0f);
  return minmax_normalize(r);
}

inline Tensor mpcm(const Tensor& image) {
  static constexpr std::array<int, 3> kDefault{3, 5, 7};
  return mpcm(image, kDefault);
}

}  // namespace istd
