#pragma once

// Forward-only tensor primitives. Every function is pure: it reads its
// arguments and returns a fresh tensor.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "istd/error.hpp"
#include "istd/tensor.hpp"

namespace istd {

enum class ConvMode { general, depthwise, pointwise };

// Weight layouts:
//   general / pointwise: [k][k][in][out]  (pointwise has k = 1)
//   depthwise:           [k][k][channels]
struct ConvKernel {
  int k = 1;
  int in_channels = 0;
  int out_channels = 0;
  std::vector<float> weights;
  std::vector<float> bias;  // empty or out_channels long
  ConvMode mode = ConvMode::general;

  std::size_t expected_weights() const {
    const auto taps = static_cast<std::size_t>(k) * k;
    return mode == ConvMode::depthwise ? taps * in_channels : taps * in_channels * out_channels;
  }

  void validate() const {
    require(k >= 1 && k % 2 == 1, "conv kernel side must be odd, got " + std::to_string(k));
    require(in_channels > 0 && out_channels > 0, "conv kernel channel counts must be positive");
    if (mode == ConvMode::depthwise)
      require(in_channels == out_channels, "depthwise kernel needs out_channels == in_channels");
    if (mode == ConvMode::pointwise) require(k == 1, "pointwise kernel needs k == 1");
    require(weights.size() == expected_weights(),
            "conv weight count " + std::to_string(weights.size()) + " != expected " +
                std::to_string(expected_weights()));
    require(bias.empty() || bias.size() == static_cast<std::size_t>(out_channels),
            "conv bias length must equal out_channels");
  }
};

struct BatchNormParams {
  std::vector<float> gamma;
  std::vector<float> beta;
  std::vector<float> running_mean;
  std::vector<float> running_var;
  float epsilon = 1e-5f;

  static BatchNormParams identity(int channels, float eps = 1e-5f) {
    const auto n = static_cast<std::size_t>(channels);
    return {std::vector<float>(n, 1.0f), std::vector<float>(n, 0.0f), std::vector<float>(n, 0.0f),
            std::vector<float>(n, 1.0f), eps};
  }
};

// Zero-padded, stride-1 cross-correlation. `padding` is applied on every side;
// padding = (k - 1) / 2 keeps the spatial size.
inline Tensor conv2d(const Tensor& input, const ConvKernel& kernel, int padding) {
  kernel.validate();
  require(padding >= 0, "conv padding must be non-negative");
  require(kernel.in_channels == input.channels(),
          "conv expects " + std::to_string(kernel.in_channels) + " input channels, got " +
              std::to_string(input.channels()));
  const int k = kernel.k;
  const int out_h = input.height() + 2 * padding - k + 1;
  const int out_w = input.width() + 2 * padding - k + 1;
  require(out_h > 0 && out_w > 0, "conv output would be empty for input " + input.shape_string());

  const int cin = kernel.in_channels;
  const int cout = kernel.out_channels;
  Tensor out(out_h, out_w, cout);
  std::vector<double> acc(static_cast<std::size_t>(cout));
  const float* w = kernel.weights.data();

  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      if (kernel.bias.empty())
        std::fill(acc.begin(), acc.end(), 0.0);
      else
        std::copy(kernel.bias.begin(), kernel.bias.end(), acc.begin());

      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy + ky - padding;
        if (iy < 0 || iy >= input.height()) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ox + kx - padding;
          if (ix < 0 || ix >= input.width()) continue;
          const float* px = input.pixel(iy, ix).data();
          const std::size_t tap = static_cast<std::size_t>(ky) * k + kx;
          if (kernel.mode == ConvMode::depthwise) {
            const float* wt = w + tap * cin;
            for (int c = 0; c < cin; ++c) acc[c] += static_cast<double>(px[c]) * wt[c];
          } else {
            const float* wt = w + tap * cin * cout;
            for (int ic = 0; ic < cin; ++ic) {
              const double x = px[ic];
              const float* row = wt + static_cast<std::size_t>(ic) * cout;
              for (int oc = 0; oc < cout; ++oc) acc[oc] += x * row[oc];
            }
          }
        }
      }
      float* dst = out.pixel(oy, ox).data();
      for (int oc = 0; oc < cout; ++oc) dst[oc] = static_cast<float>(acc[oc]);
    }
  }
  return out;
}

inline Tensor conv2d_same(const Tensor& input, const ConvKernel& kernel) {
  return conv2d(input, kernel, (kernel.k - 1) / 2);
}

enum class PoolKind { max2, avg2, global_avg, global_max };

inline Tensor pool(const Tensor& input, PoolKind kind) {
  const int c = input.channels();
  if (kind == PoolKind::global_avg || kind == PoolKind::global_max) {
    require(input.pixels() > 0, "global pooling of an empty tensor");
    Tensor out(1, 1, c);
    for (int ch = 0; ch < c; ++ch) {
      double sum = 0.0;
      float best = -std::numeric_limits<float>::infinity();
      for (int y = 0; y < input.height(); ++y)
        for (int x = 0; x < input.width(); ++x) {
          const float v = input.at(y, x, ch);
          sum += v;
          best = std::max(best, v);
        }
      out.at(0, 0, ch) = kind == PoolKind::global_avg
                             ? static_cast<float>(sum / static_cast<double>(input.pixels()))
                             : best;
    }
    return out;
  }

  require(input.height() % 2 == 0 && input.width() % 2 == 0,
          "2x2 pooling needs even spatial dims, got " + input.shape_string());
  Tensor out(input.height() / 2, input.width() / 2, c);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      for (int ch = 0; ch < c; ++ch) {
        const float a = input.at(2 * y, 2 * x, ch);
        const float b = input.at(2 * y, 2 * x + 1, ch);
        const float d = input.at(2 * y + 1, 2 * x, ch);
        const float e = input.at(2 * y + 1, 2 * x + 1, ch);
        out.at(y, x, ch) = kind == PoolKind::max2 ? std::max({a, b, d, e})
                                                  : static_cast<float>((double(a) + b + d + e) / 4.0);
      }
  return out;
}

// Bilinear resize by an integer factor, half-pixel centers (align_corners = false),
// source coordinates clamped to the valid range.
inline Tensor upsample_bilinear(const Tensor& input, int factor) {
  require(factor == 2 || factor == 4 || factor == 8,
          "upsample factor must be 2, 4 or 8, got " + std::to_string(factor));
  const int h = input.height();
  const int w = input.width();
  const int c = input.channels();
  Tensor out(h * factor, w * factor, c);

  struct Tap {
    int lo, hi;
    double frac;
  };
  auto taps = [factor](int n_out, int n_in) {
    std::vector<Tap> t(static_cast<std::size_t>(n_out));
    for (int i = 0; i < n_out; ++i) {
      double src = (i + 0.5) / factor - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(n_in - 1));
      const int lo = static_cast<int>(std::floor(src));
      t[i] = {lo, std::min(lo + 1, n_in - 1), src - lo};
    }
    return t;
  };
  const auto ty = taps(out.height(), h);
  const auto tx = taps(out.width(), w);

  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) {
      const auto [y0, y1, fy] = ty[y];
      const auto [x0, x1, fx] = tx[x];
      for (int ch = 0; ch < c; ++ch) {
        const double top = input.at(y0, x0, ch) * (1.0 - fx) + input.at(y0, x1, ch) * fx;
        const double bot = input.at(y1, x0, ch) * (1.0 - fx) + input.at(y1, x1, ch) * fx;
        out.at(y, x, ch) = static_cast<float>(top * (1.0 - fy) + bot * fy);
      }
    }
  return out;
}

inline Tensor batch_norm(const Tensor& input, const BatchNormParams& p) {
  const auto c = static_cast<std::size_t>(input.channels());
  require(p.gamma.size() == c && p.beta.size() == c && p.running_mean.size() == c &&
              p.running_var.size() == c,
          "batch norm parameter length must equal channel count " + std::to_string(c));
  require(p.epsilon >= 0.0f, "batch norm epsilon must be non-negative");
  std::vector<float> scale(c), shift(c);
  for (std::size_t i = 0; i < c; ++i) {
    require(p.running_var[i] >= 0.0f, "batch norm running variance must be non-negative");
    scale[i] = p.gamma[i] / std::sqrt(p.running_var[i] + p.epsilon);
    shift[i] = p.running_mean[i];
  }
  Tensor out = input;
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t ch = i % c;
    v[i] = (v[i] - shift[ch]) * scale[ch] + p.beta[ch];
  }
  return out;
}

enum class Activation { relu, sigmoid };

// Logistic function kept strictly inside (0, 1) in float.
inline float sigmoid(float x) {
  constexpr float lo = std::numeric_limits<float>::min();
  constexpr float hi = 1.0f - std::numeric_limits<float>::epsilon() / 2.0f;
  const auto s = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(x))));
  return std::clamp(s, lo, hi);
}

inline Tensor activate(const Tensor& input, Activation kind) {
  Tensor out = input;
  for (float& v : out.values()) v = kind == Activation::relu ? std::max(v, 0.0f) : sigmoid(v);
  return out;
}

inline Tensor concat_channels(std::span<const Tensor> parts) {
  require(!parts.empty(), "concat of zero tensors");
  int total = 0;
  for (const auto& p : parts) {
    require(p.same_spatial(parts.front()), "concat parts must share spatial dims, got " +
                                               parts.front().shape_string() + " and " +
                                               p.shape_string());
    total += p.channels();
  }
  Tensor out(parts.front().height(), parts.front().width(), total);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) {
      float* dst = out.pixel(y, x).data();
      for (const auto& p : parts) {
        const auto src = p.pixel(y, x);
        dst = std::copy(src.begin(), src.end(), dst);
      }
    }
  return out;
}

inline Tensor concat_channels(std::initializer_list<Tensor> parts) {
  return concat_channels(std::span<const Tensor>(parts.begin(), parts.size()));
}

inline Tensor slice_channels(const Tensor& input, int first, int count) {
  require(first >= 0 && count >= 0 && first + count <= input.channels(),
          "channel slice out of range for " + input.shape_string());
  Tensor out(input.height(), input.width(), count);
  for (int y = 0; y < input.height(); ++y)
    for (int x = 0; x < input.width(); ++x) {
      const auto src = input.pixel(y, x).subspan(static_cast<std::size_t>(first), count);
      std::copy(src.begin(), src.end(), out.pixel(y, x).begin());
    }
  return out;
}

// Elementwise a * b where b may be 1x1xC (channel broadcast), HxWx1 (spatial
// broadcast) or the same shape as a.
inline Tensor multiply(const Tensor& a, const Tensor& b) {
  const bool full = a.same_shape(b);
  const bool per_channel = b.height() == 1 && b.width() == 1 && b.channels() == a.channels();
  const bool per_pixel = b.same_spatial(a) && b.channels() == 1;
  require(full || per_channel || per_pixel,
          "cannot broadcast " + b.shape_string() + " onto " + a.shape_string());
  Tensor out = a;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x)
      for (int ch = 0; ch < a.channels(); ++ch) {
        const float g = full ? b.at(y, x, ch) : per_channel ? b.at(0, 0, ch) : b.at(y, x, 0);
        out.at(y, x, ch) *= g;
      }
  return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  require(a.same_shape(b), "cannot add " + b.shape_string() + " to " + a.shape_string());
  Tensor out = a;
  auto dst = out.values();
  const auto src = b.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  return out;
}

inline Tensor channel_max(const Tensor& input) {
  Tensor out(input.height(), input.width(), 1);
  for (int y = 0; y < input.height(); ++y)
    for (int x = 0; x < input.width(); ++x) {
      const auto px = input.pixel(y, x);
      out.at(y, x) = *std::max_element(px.begin(), px.end());
    }
  return out;
}

inline Tensor channel_mean(const Tensor& input) {
  Tensor out(input.height(), input.width(), 1);
  for (int y = 0; y < input.height(); ++y)
    for (int x = 0; x < input.width(); ++x) {
      double sum = 0.0;
      for (const float v : input.pixel(y, x)) sum += v;
      out.at(y, x) = static_cast<float>(sum / input.channels());
    }
  return out;
}

// Replicates a single-channel tensor into `channels` identical channels.
inline Tensor replicate_channels(const Tensor& input, int channels) {
  require(input.channels() == 1, "replicate_channels expects a single-channel tensor");
  Tensor out(input.height(), input.width(), channels);
  for (int y = 0; y < input.height(); ++y)
    for (int x = 0; x < input.width(); ++x) {
      auto px = out.pixel(y, x);
      std::fill(px.begin(), px.end(), input.at(y, x));
    }
  return out;
}

// Per-tensor min-max rescale to [0, 1]; a constant field maps to all zeros.
inline Tensor minmax_normalize(const Tensor& input) {
  Tensor out(input.height(), input.width(), input.channels());
  if (input.size() == 0) return out;
  const auto [lo_it, hi_it] = std::minmax_element(input.values().begin(), input.values().end());
  const double lo = *lo_it;
  const double range = static_cast<double>(*hi_it) - lo;
  if (!(range > 0.0)) return out;
  const auto src = input.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i)
    dst[i] = std::clamp(static_cast<float>((src[i] - lo) / range), 0.0f, 1.0f);
  return out;
}

inline bool all_finite(const Tensor& t) {
  return std::all_of(t.values().begin(), t.values().end(), [](float v) { return std::isfinite(v); });
}

}  // namespace istd
