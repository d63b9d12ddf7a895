#pragma once

// Forward pass of the prior-embedded detector.
//
//   CP1, CP2 = priors(image)
//   f_0..f_3 = nested U-Net(concat(image, CP1))
//   k_i      = TD(f_i) * E(CP2_i) + BU(E(CP2_i)) * f_i
//   F        = attention head(k_0..k_3)
//
// Weight names:
//   pke2/l{i}/{dw,pw}/{w,b}, pke2/l{i}/bn/*
//   dnim/n{i}_{j}/conv{0,1}/{w,b}, dnim/n{i}_{j}/bn{0,1}/{gamma,beta,mean,var}
//   chkim/l{i}/e/{dw,pw}/{w,b}
//   chkim/l{i}/td/{fc1,fc2}/{w,b}, chkim/l{i}/td/{bn1,bn2}/*
//   chkim/l{i}/bu/{pw1,pw2}/{w,b}, chkim/l{i}/bu/{bn1,bn2}/*
//   agfem/mix/l{1,2,3}/{w,b}, agfem/pre/{w,b}, agfem/ca/{fc1,fc2}/{w,b},
//   agfem/sa/{w,b}, agfem/res/pw/{w,b}, agfem/res/bn/*, agfem/head/{w,b}
//   meta/base_channels, meta/r_top_down, meta/r_dafwm   (scalars)

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "istd/error.hpp"
#include "istd/gd_bank.hpp"
#include "istd/layers.hpp"
#include "istd/ops.hpp"
#include "istd/priors.hpp"
#include "istd/tensor.hpp"
#include "istd/weight_store.hpp"

namespace istd::net {

struct ModulationConfig {
  int base_channels = 16;
  int r_top_down = 4;
  int r_dafwm = 4;

  void validate() const {
    require(base_channels > 0, "base channel count must be positive");
    require(r_top_down > 0 && r_dafwm > 0, "reduction ratios must be positive");
    for (int i = 0; i < kPyramidLevels; ++i) {
      const int c = level_channels(base_channels, i);
      require(c % r_top_down == 0, "top-down ratio " + std::to_string(r_top_down) +
                                       " does not divide " + std::to_string(c) + " channels");
      require(c % 4 == 0, "bottom-up C/4 bottleneck needs channels divisible by 4, got " +
                              std::to_string(c));
    }
    require(base_channels % r_dafwm == 0, "attention ratio " + std::to_string(r_dafwm) +
                                              " does not divide " + std::to_string(base_channels));
  }
};

inline std::string node_prefix(int i, int j) {
  return "dnim/n" + std::to_string(i) + "_" + std::to_string(j);
}

// Input channels of nested node N(i, j). Row 0 column 0 eats the 2-channel input.
inline int dnim_node_inputs(int i, int j, int c) {
  if (j == 0) return i == 0 ? 2 : i * c;
  return j * level_channels(c, i) + level_channels(c, i + 1);
}

// --- schema -----------------------------------------------------------------

inline void append_dnim_schema(Schema& s, int c) {
  for (int i = 0; i < kPyramidLevels; ++i)
    for (int j = 0; j + i < kPyramidLevels; ++j) {
      const int out = level_channels(c, i);
      schema::conv(s, node_prefix(i, j) + "/conv0", 3, dnim_node_inputs(i, j, c), out,
                   ConvMode::general);
      schema::bn(s, node_prefix(i, j) + "/bn0", out);
      schema::conv(s, node_prefix(i, j) + "/conv1", 3, out, out, ConvMode::general);
      schema::bn(s, node_prefix(i, j) + "/bn1", out);
    }
}

inline void append_top_down_schema(Schema& s, const std::string& p, int c, int r) {
  schema::dense(s, p + "/fc1", c, c / r);
  schema::bn(s, p + "/bn1", c / r);
  schema::dense(s, p + "/fc2", c / r, c);
  schema::bn(s, p + "/bn2", c);
}

inline void append_bottom_up_schema(Schema& s, const std::string& p, int c) {
  schema::conv(s, p + "/pw1", 1, c, c / 4, ConvMode::pointwise);
  schema::bn(s, p + "/bn1", c / 4);
  schema::conv(s, p + "/pw2", 1, c / 4, c, ConvMode::pointwise);
  schema::bn(s, p + "/bn2", c);
}

inline std::string chkim_prefix(int level) { return "chkim/l" + std::to_string(level); }

inline void append_chkim_schema(Schema& s, const ModulationConfig& cfg) {
  for (int i = 0; i < kPyramidLevels; ++i) {
    const int c = level_channels(cfg.base_channels, i);
    const std::string p = chkim_prefix(i);
    schema::conv(s, p + "/e/dw", 3, c, c, ConvMode::depthwise);
    schema::conv(s, p + "/e/pw", 1, c, c, ConvMode::pointwise);
    append_top_down_schema(s, p + "/td", c, cfg.r_top_down);
    append_bottom_up_schema(s, p + "/bu", c);
  }
}

inline void append_agfem_schema(Schema& s, const ModulationConfig& cfg) {
  const int c = cfg.base_channels;
  for (int i = 1; i < kPyramidLevels; ++i)
    schema::conv(s, "agfem/mix/l" + std::to_string(i), 3, level_channels(c, i), c,
                 ConvMode::general);
  schema::conv(s, "agfem/pre", 3, 4 * c, c, ConvMode::general);
  schema::dense(s, "agfem/ca/fc1", c, c / cfg.r_dafwm);
  schema::dense(s, "agfem/ca/fc2", c / cfg.r_dafwm, c);
  schema::conv(s, "agfem/sa", 7, 2, 1, ConvMode::general);
  schema::conv(s, "agfem/res/pw", 1, 4 * c, c, ConvMode::pointwise);
  schema::bn(s, "agfem/res/bn", c);
  schema::conv(s, "agfem/head", 1, c, 1, ConvMode::pointwise);
}

inline Schema network_schema(const ModulationConfig& cfg) {
  cfg.validate();
  Schema s;
  s.push_back({"meta/base_channels", {}, ParamRole::meta});
  s.push_back({"meta/r_top_down", {}, ParamRole::meta});
  s.push_back({"meta/r_dafwm", {}, ParamRole::meta});
  append_pke2_schema(s, cfg.base_channels);
  append_dnim_schema(s, cfg.base_channels);
  append_chkim_schema(s, cfg);
  append_agfem_schema(s, cfg);
  return s;
}

inline void write_meta(WeightStore& store, const ModulationConfig& cfg) {
  store.set("meta/base_channels", Param{{}, {static_cast<float>(cfg.base_channels)}});
  store.set("meta/r_top_down", Param{{}, {static_cast<float>(cfg.r_top_down)}});
  store.set("meta/r_dafwm", Param{{}, {static_cast<float>(cfg.r_dafwm)}});
}

inline ModulationConfig read_meta(const WeightStore& store) {
  auto as_int = [&store](const std::string& name) {
    const float v = store.scalar(name);
    if (!(v >= 1.0f && v <= 4096.0f) || v != std::floor(v))
      fail(ErrorKind::weight_shape, "metadata '" + name + "' is not a positive integer");
    return static_cast<int>(v);
  };
  return {as_int("meta/base_channels"), as_int("meta/r_top_down"), as_int("meta/r_dafwm")};
}

inline WeightStore zero_network_weights(const ModulationConfig& cfg) {
  WeightStore w = make_zero_weights(network_schema(cfg));
  write_meta(w, cfg);
  return w;
}

inline WeightStore random_network_weights(const ModulationConfig& cfg, std::uint64_t seed) {
  WeightStore w = make_random_weights(network_schema(cfg), seed);
  write_meta(w, cfg);
  return w;
}

// Checks names and shapes, then returns the configuration recorded in the file.
inline ModulationConfig validate_network_weights(const WeightStore& store) {
  const ModulationConfig cfg = read_meta(store);
  try {
    cfg.validate();
  } catch (const Error& e) {
    fail(ErrorKind::weight_shape, std::string("weight metadata invalid: ") + e.what());
  }
  validate_store(store, network_schema(cfg));
  return cfg;
}

// --- backbone ----------------------------------------------------------------

inline Tensor conv_bn_relu(const Tensor& x, const WeightStore& w, const std::string& conv,
                           const std::string& bn, int out) {
  const Tensor y = conv2d_same(x, load_conv(w, conv, 3, x.channels(), out, ConvMode::general));
  return activate(batch_norm(y, load_bn(w, bn, out)), Activation::relu);
}

inline Tensor dnim_node(const Tensor& x, const WeightStore& w, int i, int j, int c) {
  const int out = level_channels(c, i);
  const std::string p = node_prefix(i, j);
  const Tensor y = conv_bn_relu(x, w, p + "/conv0", p + "/bn0", out);
  return conv_bn_relu(y, w, p + "/conv1", p + "/bn1", out);
}

struct DnimOutput {
  std::array<Tensor, kPyramidLevels> f;
};

// Densely nested U-Net. Encoder nodes N(i,0); decoder nodes N(i,j) consume
// N(i,0..j-1) and the upsampled N(i+1,j-1). f_i = N(i, 3-i).
inline DnimOutput dnim_forward(const Tensor& input, const WeightStore& w, int c) {
  require(input.channels() == 2, "backbone input must have 2 channels (image, CP1), got " +
                                     input.shape_string());
  require(input.height() % 8 == 0 && input.width() % 8 == 0,
          "backbone input height and width must be divisible by 8, got " + input.shape_string());
  std::array<std::vector<Tensor>, kPyramidLevels> nodes;
  for (int i = 0; i < kPyramidLevels; ++i) {
    const Tensor in = i == 0 ? input : pool(nodes[i - 1][0], PoolKind::max2);
    nodes[i].push_back(dnim_node(in, w, i, 0, c));
  }
  for (int j = 1; j < kPyramidLevels; ++j)
    for (int i = 0; i + j < kPyramidLevels; ++i) {
      std::vector<Tensor> parts(nodes[i].begin(), nodes[i].begin() + j);
      parts.push_back(upsample_bilinear(nodes[i + 1][j - 1], 2));
      nodes[i].push_back(dnim_node(concat_channels(parts), w, i, j, c));
    }
  DnimOutput out;
  for (int i = 0; i < kPyramidLevels; ++i) out.f[i] = nodes[i][kPyramidLevels - 1 - i];
  return out;
}

// --- modulation ----------------------------------------------------------------

// Channel gate from global context: sigmoid(BN(W2 ReLU(BN(W1 GAP(Y))))), 1x1xC.
inline Tensor top_down_gate(const Tensor& y, const WeightStore& w, const std::string& prefix,
                            int r) {
  const int c = y.channels();
  require(r > 0 && c % r == 0, "top-down ratio " + std::to_string(r) + " does not divide " +
                                   std::to_string(c) + " channels");
  Tensor v = pool(y, PoolKind::global_avg);
  v = apply_dense(load_dense(w, prefix + "/fc1", c, c / r), v);
  v = activate(batch_norm(v, load_bn(w, prefix + "/bn1", c / r)), Activation::relu);
  v = apply_dense(load_dense(w, prefix + "/fc2", c / r, c), v);
  return activate(batch_norm(v, load_bn(w, prefix + "/bn2", c)), Activation::sigmoid);
}

// Pixel gate through a C -> C/4 -> C point-wise bottleneck, same shape as X.
inline Tensor bottom_up_gate(const Tensor& x, const WeightStore& w, const std::string& prefix) {
  const int c = x.channels();
  require(c >= 4 && c % 4 == 0,
          "bottom-up gate needs channels divisible by 4, got " + std::to_string(c));
  Tensor v = conv2d_same(x, load_conv(w, prefix + "/pw1", 1, c, c / 4, ConvMode::pointwise));
  v = activate(batch_norm(v, load_bn(w, prefix + "/bn1", c / 4)), Activation::relu);
  v = conv2d_same(v, load_conv(w, prefix + "/pw2", 1, c / 4, c, ConvMode::pointwise));
  return activate(batch_norm(v, load_bn(w, prefix + "/bn2", c)), Activation::sigmoid);
}

// Shape-preserving prior adapter E = PW(DW3x3(.)).
inline Tensor prior_adapter(const Tensor& cp2, const WeightStore& w, const std::string& prefix) {
  const int c = cp2.channels();
  const Tensor d = conv2d_same(cp2, load_conv(w, prefix + "/dw", 3, c, c, ConvMode::depthwise));
  return conv2d_same(d, load_conv(w, prefix + "/pw", 1, c, c, ConvMode::pointwise));
}

inline Tensor chkim_fuse(const Tensor& f, const Tensor& cp2, const WeightStore& w, int level,
                         const ModulationConfig& cfg) {
  require(f.same_shape(cp2), "fusion needs matching shapes, got f " + f.shape_string() +
                                 " and prior " + cp2.shape_string());
  const std::string p = chkim_prefix(level);
  const Tensor e = prior_adapter(cp2, w, p + "/e");
  const Tensor td = top_down_gate(f, w, p + "/td", cfg.r_top_down);
  const Tensor bu = bottom_up_gate(e, w, p + "/bu");
  return add(multiply(e, td), multiply(f, bu));
}

// --- attention head -------------------------------------------------------------

struct DualAttention {
  Tensor channel;  // 1x1xC
  Tensor spatial;  // HxWx1
};

inline DualAttention dual_attention(const Tensor& g, const WeightStore& w,
                                    const ModulationConfig& cfg) {
  const int c = g.channels();
  const int hidden = c / cfg.r_dafwm;
  const DenseLayer fc1 = load_dense(w, "agfem/ca/fc1", c, hidden);
  const DenseLayer fc2 = load_dense(w, "agfem/ca/fc2", hidden, c);
  auto mlp = [&](const Tensor& v) {
    return apply_dense(fc2, activate(apply_dense(fc1, v), Activation::relu));
  };
  DualAttention out;
  out.channel = activate(add(mlp(pool(g, PoolKind::global_max)), mlp(pool(g, PoolKind::global_avg))),
                         Activation::sigmoid);
  const Tensor stats = concat_channels({channel_max(g), channel_mean(g)});
  out.spatial = activate(conv2d_same(stats, load_conv(w, "agfem/sa", 7, 2, 1, ConvMode::general)),
                         Activation::sigmoid);
  return out;
}

// Joint attention map M_c (x) M_s applied to G'. Product order: per pixel and
// channel, (mc * ms) * g.
inline Tensor dafwm(const Tensor& g, const WeightStore& w, const ModulationConfig& cfg) {
  const DualAttention a = dual_attention(g, w, cfg);
  Tensor out(g.height(), g.width(), g.channels());
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x)
      for (int ch = 0; ch < g.channels(); ++ch)
        out.at(y, x, ch) = (a.channel.at(0, 0, ch) * a.spatial.at(y, x)) * g.at(y, x, ch);
  return out;
}

inline Tensor agfem(std::span<const Tensor> k, const WeightStore& w, const ModulationConfig& cfg) {
  require(k.size() == kPyramidLevels, "attention head expects 4 fused levels");
  const int c = cfg.base_channels;
  const Tensor& k0 = k[0];
  require(k0.channels() == c, "level 0 must have C channels, got " + k0.shape_string());
  std::vector<Tensor> parts{k0};
  for (int i = 1; i < kPyramidLevels; ++i) {
    const int ci = level_channels(c, i);
    require(k[i].channels() == ci && k[i].height() << i == k0.height() &&
                k[i].width() << i == k0.width(),
            "level " + std::to_string(i) + " has shape " + k[i].shape_string());
    const Tensor mixed = conv2d_same(
        k[i], load_conv(w, "agfem/mix/l" + std::to_string(i), 3, ci, c, ConvMode::general));
    parts.push_back(upsample_bilinear(mixed, 1 << i));
  }
  const Tensor g = concat_channels(parts);
  const Tensor g_prime = activate(
      conv2d_same(g, load_conv(w, "agfem/pre", 3, 4 * c, c, ConvMode::general)), Activation::relu);
  const Tensor g_f = dafwm(g_prime, w, cfg);
  Tensor residual =
      conv2d_same(g, load_conv(w, "agfem/res/pw", 1, 4 * c, c, ConvMode::pointwise));
  residual = batch_norm(residual, load_bn(w, "agfem/res/bn", c));
  const Tensor merged = activate(add(residual, g_f), Activation::relu);
  const Tensor logits =
      conv2d_same(merged, load_conv(w, "agfem/head", 1, c, 1, ConvMode::pointwise));
  return activate(logits, Activation::sigmoid);
}

// --- full pass -------------------------------------------------------------------

struct ForwardTrace {
  PriorPack priors;
  DnimOutput backbone;
  std::array<Tensor, kPyramidLevels> fused;
  Tensor saliency;
};

inline ForwardTrace forward_trace(const Tensor& image, const GdKernelBank& bank,
                                  const WeightStore& w, const ModulationConfig& cfg) {
  cfg.validate();
  require(image.channels() == 1, "detector expects a single-channel image");
  require(image.height() % 8 == 0 && image.width() % 8 == 0 && image.height() > 0 &&
              image.width() > 0,
          "image height and width must be positive multiples of 8, got " + image.shape_string());
  ForwardTrace t;
  t.priors = extract_priors(image, bank, w, cfg.base_channels);
  t.backbone = dnim_forward(concat_channels({image, t.priors.cp1}), w, cfg.base_channels);
  for (int i = 0; i < kPyramidLevels; ++i)
    t.fused[i] = chkim_fuse(t.backbone.f[i], t.priors.cp2[i], w, i, cfg);
  t.saliency = agfem(t.fused, w, cfg);
  return t;
}

inline Tensor cspenet_forward(const Tensor& image, const GdKernelBank& bank, const WeightStore& w,
                              const ModulationConfig& cfg) {
  return forward_trace(image, bank, w, cfg).saliency;
}

}  // namespace istd::net
