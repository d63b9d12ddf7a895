#pragma once

// Scalar references for the modulation blocks. Parameters are read out of the
// store as raw arrays; all arithmetic is plain loops in double.

#include <cmath>
#include <string>
#include <vector>

#include "istd/layers.hpp"
#include "istd/rng.hpp"
#include "istd/weight_store.hpp"
#include "oracles.hpp"

namespace oracle {

// Random parameters with a wider spread than the library's test weights so
// the gates are pushed away from 0.5.
inline istd::WeightStore wide_random_store(const istd::Schema& spec, std::uint64_t seed) {
  istd::SplitMix64 rng(seed);
  istd::WeightStore store;
  for (const auto& t : spec) {
    istd::Param p{t.dims, {}};
    p.values.resize(p.element_count());
    for (float& v : p.values) {
      switch (t.role) {
        case istd::ParamRole::bn_var: v = static_cast<float>(rng.uniform(0.5, 2.0)); break;
        case istd::ParamRole::bn_gamma: v = static_cast<float>(rng.uniform(0.5, 1.5)); break;
        default: v = static_cast<float>(rng.uniform(-1.0, 1.0)); break;
      }
    }
    store.set(t.name, std::move(p));
  }
  return store;
}

struct Params {
  const istd::WeightStore& store;
  double operator()(const std::string& name, std::size_t i) const {
    return store.get(name).values.at(i);
  }
};

inline std::vector<double> dense(const Params& w, const std::string& p, int in, int out,
                                 const std::vector<double>& x) {
  std::vector<double> y(out);
  for (int o = 0; o < out; ++o) {
    double s = w(p + "/b", o);
    for (int i = 0; i < in; ++i) s += w(p + "/w", o * in + i) * x[i];
    y[o] = s;
  }
  return y;
}

inline double bn_at(const Params& w, const std::string& p, int ch, double x) {
  return bn(x, w(p + "/gamma", ch), w(p + "/beta", ch), w(p + "/mean", ch), w(p + "/var", ch));
}

// 1x1 conv, weights [1][1][in][out].
inline Field pointwise(const Params& w, const std::string& p, const Field& x, int out) {
  return direct_conv(
      x, 1, out, [&](int oc, int ic, int, int) { return w(p + "/w", ic * out + oc); },
      [&](int oc) { return w(p + "/b", oc); });
}

// Depth-wise conv, weights [k][k][C].
inline Field depthwise(const Params& w, const std::string& p, const Field& x, int k) {
  return direct_depthwise(
      x, k, [&](int ch, int ky, int kx) { return w(p + "/w", (ky * k + kx) * x.c + ch); },
      [&](int ch) { return w(p + "/b", ch); });
}

// General conv, weights [k][k][in][out].
inline Field conv(const Params& w, const std::string& p, const Field& x, int k, int out) {
  return direct_conv(
      x, k, out,
      [&](int oc, int ic, int ky, int kx) { return w(p + "/w", ((ky * k + kx) * x.c + ic) * out + oc); },
      [&](int oc) { return w(p + "/b", oc); });
}

inline std::vector<double> top_down(const Params& w, const std::string& p, const Field& y, int r) {
  const int c = y.c;
  std::vector<double> gap(c, 0.0);
  for (int i = 0; i < y.h; ++i)
    for (int j = 0; j < y.w; ++j)
      for (int ch = 0; ch < c; ++ch) gap[ch] += y.at(i, j, ch);
  for (double& v : gap) v /= double(y.h) * y.w;
  auto h = dense(w, p + "/fc1", c, c / r, gap);
  for (int i = 0; i < c / r; ++i) h[i] = relu(bn_at(w, p + "/bn1", i, h[i]));
  auto g = dense(w, p + "/fc2", c / r, c, h);
  for (int i = 0; i < c; ++i) g[i] = sigmoid(bn_at(w, p + "/bn2", i, g[i]));
  return g;
}

inline Field bottom_up(const Params& w, const std::string& p, const Field& x) {
  const int c = x.c, q = c / 4;
  Field out(x.h, x.w, c);
  for (int i = 0; i < x.h; ++i)
    for (int j = 0; j < x.w; ++j) {
      std::vector<double> mid(q);
      for (int m = 0; m < q; ++m) {
        double s = w(p + "/pw1/b", m);
        for (int ch = 0; ch < c; ++ch) s += w(p + "/pw1/w", ch * q + m) * x.at(i, j, ch);
        mid[m] = relu(bn_at(w, p + "/bn1", m, s));
      }
      for (int ch = 0; ch < c; ++ch) {
        double s = w(p + "/pw2/b", ch);
        for (int m = 0; m < q; ++m) s += w(p + "/pw2/w", m * c + ch) * mid[m];
        out.at(i, j, ch) = sigmoid(bn_at(w, p + "/bn2", ch, s));
      }
    }
  return out;
}

inline Field chkim(const Params& w, int level, const Field& f, const Field& cp2, int r) {
  const std::string p = "chkim/l" + std::to_string(level);
  const Field e = pointwise(w, p + "/e/pw", depthwise(w, p + "/e/dw", cp2, 3), cp2.c);
  const auto td = top_down(w, p + "/td", f, r);
  const Field bu = bottom_up(w, p + "/bu", e);
  Field k(f.h, f.w, f.c);
  for (int i = 0; i < f.h; ++i)
    for (int j = 0; j < f.w; ++j)
      for (int ch = 0; ch < f.c; ++ch)
        k.at(i, j, ch) = e.at(i, j, ch) * td[ch] + f.at(i, j, ch) * bu.at(i, j, ch);
  return k;
}

inline Field dafwm(const Params& w, const Field& g, int r) {
  const int c = g.c, hidden = c / r;
  std::vector<double> gmax(c, -1e300), gavg(c, 0.0);
  for (int i = 0; i < g.h; ++i)
    for (int j = 0; j < g.w; ++j)
      for (int ch = 0; ch < c; ++ch) {
        gmax[ch] = std::max(gmax[ch], g.at(i, j, ch));
        gavg[ch] += g.at(i, j, ch) / (double(g.h) * g.w);
      }
  auto mlp = [&](const std::vector<double>& v) {
    auto h = dense(w, "agfem/ca/fc1", c, hidden, v);
    for (double& x : h) x = relu(x);
    return dense(w, "agfem/ca/fc2", hidden, c, h);
  };
  const auto a = mlp(gmax), b = mlp(gavg);
  std::vector<double> mc(c);
  for (int ch = 0; ch < c; ++ch) mc[ch] = sigmoid(a[ch] + b[ch]);

  Field stats(g.h, g.w, 2);
  for (int i = 0; i < g.h; ++i)
    for (int j = 0; j < g.w; ++j) {
      double mx = -1e300, mean = 0.0;
      for (int ch = 0; ch < c; ++ch) {
        mx = std::max(mx, g.at(i, j, ch));
        mean += g.at(i, j, ch) / c;
      }
      stats.at(i, j, 0) = mx;
      stats.at(i, j, 1) = mean;
    }
  Field ms = conv(w, "agfem/sa", stats, 7, 1);
  Field out(g.h, g.w, c);
  for (int i = 0; i < g.h; ++i)
    for (int j = 0; j < g.w; ++j)
      for (int ch = 0; ch < c; ++ch)
        out.at(i, j, ch) = mc[ch] * sigmoid(ms.at(i, j, 0)) * g.at(i, j, ch);
  return out;
}

}  // namespace oracle
