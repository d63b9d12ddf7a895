#pragma once

// Binding between named WeightStore entries and the ops in ops.hpp, plus the
// schema machinery every module uses to declare which tensors it needs.

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "istd/error.hpp"
#include "istd/ops.hpp"
#include "istd/rng.hpp"
#include "istd/weight_store.hpp"

namespace istd {

enum class ParamRole { weight, bias, bn_gamma, bn_beta, bn_mean, bn_var, meta };

struct TensorSpec {
  std::string name;
  std::vector<std::uint32_t> dims;
  ParamRole role = ParamRole::weight;
};

using Schema = std::vector<TensorSpec>;

namespace schema {

inline void conv(Schema& s, const std::string& prefix, int k, int in, int out, ConvMode mode) {
  const auto uk = static_cast<std::uint32_t>(k);
  if (mode == ConvMode::depthwise)
    s.push_back({prefix + "/w", {uk, uk, static_cast<std::uint32_t>(in)}, ParamRole::weight});
  else
    s.push_back({prefix + "/w",
                 {uk, uk, static_cast<std::uint32_t>(in), static_cast<std::uint32_t>(out)},
                 ParamRole::weight});
  s.push_back({prefix + "/b", {static_cast<std::uint32_t>(out)}, ParamRole::bias});
}

inline void bn(Schema& s, const std::string& prefix, int c) {
  const std::vector<std::uint32_t> d{static_cast<std::uint32_t>(c)};
  s.push_back({prefix + "/gamma", d, ParamRole::bn_gamma});
  s.push_back({prefix + "/beta", d, ParamRole::bn_beta});
  s.push_back({prefix + "/mean", d, ParamRole::bn_mean});
  s.push_back({prefix + "/var", d, ParamRole::bn_var});
}

// Dense layer stored as a row-major [out][in] matrix.
inline void dense(Schema& s, const std::string& prefix, int in, int out) {
  s.push_back({prefix + "/w", {static_cast<std::uint32_t>(out), static_cast<std::uint32_t>(in)},
               ParamRole::weight});
  s.push_back({prefix + "/b", {static_cast<std::uint32_t>(out)}, ParamRole::bias});
}

}  // namespace schema

// Every schema entry must be present with matching dims, and nothing else may be.
inline void validate_store(const WeightStore& store, const Schema& spec) {
  std::set<std::string> wanted;
  for (const auto& t : spec) {
    store.get(t.name, t.dims);
    wanted.insert(t.name);
  }
  for (const auto& [name, p] : store.entries())
    if (!wanted.contains(name)) fail(ErrorKind::weight_unknown, "unexpected tensor '" + name + "'");
}

// All learnable tensors zero, batch norm at identity statistics.
inline WeightStore make_zero_weights(const Schema& spec) {
  WeightStore store;
  for (const auto& t : spec) {
    Param p{t.dims, {}};
    const float fill = (t.role == ParamRole::bn_gamma || t.role == ParamRole::bn_var) ? 1.0f : 0.0f;
    p.values.assign(p.element_count(), fill);
    store.set(t.name, std::move(p));
  }
  return store;
}

// Seeded test weights: uniform(-0.05, 0.05) for weights and biases; batch norm
// statistics perturbed around identity. Never trained.
inline WeightStore make_random_weights(const Schema& spec, std::uint64_t seed) {
  SplitMix64 rng(seed);
  WeightStore store;
  for (const auto& t : spec) {
    Param p{t.dims, {}};
    p.values.resize(p.element_count());
    for (float& v : p.values) {
      const double u = rng.uniform(-0.05, 0.05);
      switch (t.role) {
        case ParamRole::weight:
        case ParamRole::bias:
        case ParamRole::bn_beta:
        case ParamRole::bn_mean: v = static_cast<float>(u); break;
        case ParamRole::bn_gamma: v = static_cast<float>(1.0 + u); break;
        case ParamRole::bn_var: v = static_cast<float>(1.0 + std::abs(u)); break;
        case ParamRole::meta: v = 0.0f; break;
      }
    }
    store.set(t.name, std::move(p));
  }
  return store;
}

inline ConvKernel load_conv(const WeightStore& store, const std::string& prefix, int k, int in,
                            int out, ConvMode mode) {
  Schema s;
  schema::conv(s, prefix, k, in, out, mode);
  ConvKernel kernel;
  kernel.k = k;
  kernel.in_channels = in;
  kernel.out_channels = out;
  kernel.mode = mode;
  kernel.weights = store.get(s[0].name, s[0].dims).values;
  kernel.bias = store.get(s[1].name, s[1].dims).values;
  return kernel;
}

inline BatchNormParams load_bn(const WeightStore& store, const std::string& prefix, int c) {
  const std::initializer_list<std::uint32_t> d{static_cast<std::uint32_t>(c)};
  BatchNormParams p;
  p.gamma = store.get(prefix + "/gamma", d).values;
  p.beta = store.get(prefix + "/beta", d).values;
  p.running_mean = store.get(prefix + "/mean", d).values;
  p.running_var = store.get(prefix + "/var", d).values;
  return p;
}

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<float> weights;  // [out][in]
  std::vector<float> bias;

  std::vector<float> apply(std::span<const float> x) const {
    require(x.size() == static_cast<std::size_t>(in), "dense layer input length mismatch");
    std::vector<float> y(static_cast<std::size_t>(out));
    for (int o = 0; o < out; ++o) {
      double acc = bias[o];
      for (int i = 0; i < in; ++i) acc += static_cast<double>(weights[o * in + i]) * x[i];
      y[o] = static_cast<float>(acc);
    }
    return y;
  }
};

inline DenseLayer load_dense(const WeightStore& store, const std::string& prefix, int in, int out) {
  DenseLayer d{in, out, {}, {}};
  d.weights = store.get(prefix + "/w",
                        {static_cast<std::uint32_t>(out), static_cast<std::uint32_t>(in)})
                  .values;
  d.bias = store.get(prefix + "/b", {static_cast<std::uint32_t>(out)}).values;
  return d;
}

// Dense layer over a 1x1xC tensor.
inline Tensor apply_dense(const DenseLayer& layer, const Tensor& v) {
  require(v.height() == 1 && v.width() == 1, "dense layer expects a 1x1xC tensor");
  return Tensor(1, 1, layer.out, layer.apply(v.values()));
}

}  // namespace istd
