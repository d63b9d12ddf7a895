#pragma once

// Surround-convergent priors built on the Gaussian-derivative bank.
//
// gradient_magnitude: per orientation o, (GD_o * I)^2 + (GD_{o+90} * I)^2,
//   computed as two depth-wise convolutions over a 24-channel copy of I.
// CP1: uniform mean over the 72 magnitude channels of all three scales,
//   min-max normalized per image.
// CP2: four-level pyramid from the same 72 channels; level i has
//   (i+1)*C channels at 1/2^i resolution.

#include <array>
#include <string>
#include <vector>

#include "istd/error.hpp"
#include "istd/gd_bank.hpp"
#include "istd/layers.hpp"
#include "istd/ops.hpp"
#include "istd/tensor.hpp"
#include "istd/weight_store.hpp"

namespace istd {

inline constexpr int kMagnitudeChannels = GdKernelBank::kScales * GdKernelBank::kOrientations;

inline ConvKernel bank_depthwise_kernel(const GdKernelBank& bank, int scale, bool partner) {
  const int k = GdKernelBank::kSizes[scale];
  const int n = GdKernelBank::kOrientations;
  ConvKernel kernel{k, n, n, std::vector<float>(static_cast<std::size_t>(k) * k * n), {},
                    ConvMode::depthwise};
  for (int o = 0; o < n; ++o) {
    const auto& g = partner ? bank.partner(scale, o) : bank.primary(scale, o);
    for (std::size_t tap = 0; tap < g.grid.size(); ++tap) kernel.weights[tap * n + o] = g.grid[tap];
  }
  return kernel;
}

inline Tensor gradient_magnitude(const Tensor& image, const GdKernelBank& bank, int scale) {
  require(image.channels() == 1,
          "gradient magnitude expects a single-channel image, got " + image.shape_string());
  const Tensor stacked = replicate_channels(image, GdKernelBank::kOrientations);
  Tensor a = conv2d_same(stacked, bank_depthwise_kernel(bank, scale, false));
  const Tensor b = conv2d_same(stacked, bank_depthwise_kernel(bank, scale, true));
  auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) av[i] = av[i] * av[i] + bv[i] * bv[i];
  return a;
}

// 72-channel concatenation of the three scales' magnitudes (3x3, 5x5, 7x7).
inline Tensor multiscale_magnitude(const Tensor& image, const GdKernelBank& bank) {
  std::array<Tensor, GdKernelBank::kScales> parts;
  for (int s = 0; s < GdKernelBank::kScales; ++s) parts[s] = gradient_magnitude(image, bank, s);
  return concat_channels(parts);
}

inline Tensor cp1_from_magnitude(const Tensor& magnitude) {
  require(magnitude.channels() == kMagnitudeChannels, "CP1 expects the 72-channel magnitude stack");
  return minmax_normalize(channel_mean(magnitude));
}

inline Tensor extract_cp1(const Tensor& image, const GdKernelBank& bank) {
  return cp1_from_magnitude(multiscale_magnitude(image, bank));
}

inline constexpr int kPyramidLevels = 4;

inline int level_channels(int base_channels, int level) { return (level + 1) * base_channels; }

inline std::string pke2_prefix(int level) { return "pke2/l" + std::to_string(level); }

// Level 0: DW3x3 (72) + PW 72->C; level i: max2, DW3x3 (iC) + PW iC->(i+1)C.
// Each followed by BN and ReLU.
inline void append_pke2_schema(Schema& s, int base_channels) {
  for (int i = 0; i < kPyramidLevels; ++i) {
    const int in = i == 0 ? kMagnitudeChannels : level_channels(base_channels, i - 1);
    const int out = level_channels(base_channels, i);
    schema::conv(s, pke2_prefix(i) + "/dw", 3, in, in, ConvMode::depthwise);
    schema::conv(s, pke2_prefix(i) + "/pw", 1, in, out, ConvMode::pointwise);
    schema::bn(s, pke2_prefix(i) + "/bn", out);
  }
}

inline std::vector<Tensor> cp2_from_magnitude(const Tensor& magnitude, const WeightStore& weights,
                                              int base_channels) {
  require(magnitude.channels() == kMagnitudeChannels, "CP2 expects the 72-channel magnitude stack");
  require(base_channels > 0, "base channel count must be positive");
  std::vector<Tensor> levels;
  levels.reserve(kPyramidLevels);
  Tensor x = magnitude;
  for (int i = 0; i < kPyramidLevels; ++i) {
    const int in = x.channels();
    const int out = level_channels(base_channels, i);
    if (i > 0) x = pool(x, PoolKind::max2);
    x = conv2d_same(x, load_conv(weights, pke2_prefix(i) + "/dw", 3, in, in, ConvMode::depthwise));
    x = conv2d_same(x, load_conv(weights, pke2_prefix(i) + "/pw", 1, in, out, ConvMode::pointwise));
    x = activate(batch_norm(x, load_bn(weights, pke2_prefix(i) + "/bn", out)), Activation::relu);
    levels.push_back(x);
  }
  return levels;
}

inline std::vector<Tensor> extract_cp2(const Tensor& image, const GdKernelBank& bank,
                                       const WeightStore& weights, int base_channels) {
  return cp2_from_magnitude(multiscale_magnitude(image, bank), weights, base_channels);
}

struct PriorPack {
  Tensor cp1;
  std::vector<Tensor> cp2;
};

inline PriorPack extract_priors(const Tensor& image, const GdKernelBank& bank,
                                const WeightStore& weights, int base_channels) {
  const Tensor magnitude = multiscale_magnitude(image, bank);
  return {cp1_from_magnitude(magnitude), cp2_from_magnitude(magnitude, weights, base_channels)};
}

}  // namespace istd
