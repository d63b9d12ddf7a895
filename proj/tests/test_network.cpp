#include <gtest/gtest.h>

#include <cmath>

#include "istd/network.hpp"
#include "net_oracles.hpp"
#include "test_util.hpp"

using namespace istd;
using namespace istd::net;

namespace {

const GdKernelBank& bank() {
  static const GdKernelBank b;
  return b;
}

ModulationConfig small_config(int c = 8) { return {c, 4, 4}; }

WeightStore wide_network_weights(const ModulationConfig& cfg, std::uint64_t seed) {
  Schema s = network_schema(cfg);
  s.erase(s.begin(), s.begin() + 3);  // meta scalars
  WeightStore w = oracle::wide_random_store(s, seed);
  write_meta(w, cfg);
  return w;
}

Tensor flip_columns(const Tensor& t) {
  Tensor out(t.height(), t.width(), t.channels());
  for (int r = 0; r < t.height(); ++r)
    for (int c = 0; c < t.width(); ++c)
      for (int ch = 0; ch < t.channels(); ++ch)
        out.at(r, c, ch) = t.at(r, t.width() - 1 - c, ch);
  return out;
}

// Mirror every 3x3 general kernel left-right so the backbone commutes with a
// horizontal flip.
void symmetrize_backbone(WeightStore& w) {
  for (int i = 0; i < kPyramidLevels; ++i)
    for (int j = 0; i + j < kPyramidLevels; ++j)
      for (const char* conv : {"/conv0/w", "/conv1/w"}) {
        const std::string name = node_prefix(i, j) + conv;
        Param p = w.get(name);
        const std::size_t in = p.dims[2], out = p.dims[3];
        for (std::size_t ky = 0; ky < 3; ++ky)
          for (std::size_t ic = 0; ic < in; ++ic)
            for (std::size_t oc = 0; oc < out; ++oc) {
              const std::size_t left = ((ky * 3 + 0) * in + ic) * out + oc;
              const std::size_t right = ((ky * 3 + 2) * in + ic) * out + oc;
              p.values[right] = p.values[left];
            }
        w.set(name, std::move(p));
      }
}

}  // namespace

// --- gates -----------------------------------------------------------------

TEST(TopDownGate, ZeroWeightsGiveHalf) {
  Schema s;
  append_top_down_schema(s, "td", 8, 4);
  const Tensor g = top_down_gate(testutil::random_tensor(4, 4, 8, 1), make_zero_weights(s), "td", 4);
  ASSERT_EQ(g.shape_string(), "1x1x8");
  for (float v : g.values()) EXPECT_EQ(v, 0.5f);
}

TEST(TopDownGate, ConstantChannelsPoolExactly) {
  Tensor y(3, 5, 4);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 5; ++c)
      for (int ch = 0; ch < 4; ++ch) y.at(r, c, ch) = 0.1f * (ch + 1);
  const Tensor gap = pool(y, PoolKind::global_avg);
  for (int ch = 0; ch < 4; ++ch) EXPECT_EQ(gap.at(0, 0, ch), 0.1f * (ch + 1));
}

TEST(TopDownGate, MatchesScalarOracle) {
  Schema s;
  append_top_down_schema(s, "td", 8, 4);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const WeightStore w = oracle::wide_random_store(s, seed);
    const Tensor y = testutil::random_tensor(4, 4, 8, seed + 100);
    const Tensor g = top_down_gate(y, w, "td", 4);
    const auto ref = oracle::top_down({w}, "td", testutil::to_field(y), 4);
    for (int ch = 0; ch < 8; ++ch) {
      EXPECT_NEAR(g.at(0, 0, ch), ref[ch], 1e-5);
      EXPECT_GT(g.at(0, 0, ch), 0.0f);
      EXPECT_LT(g.at(0, 0, ch), 1.0f);
    }
  }
}

TEST(TopDownGate, RejectsIndivisibleRatio) {
  Schema s;
  append_top_down_schema(s, "td", 8, 4);
  EXPECT_THROW(top_down_gate(Tensor(2, 2, 6), make_zero_weights(s), "td", 4), Error);
}

TEST(BottomUpGate, ZeroWeightsGiveHalfWithInputShape) {
  Schema s;
  append_bottom_up_schema(s, "bu", 8);
  const Tensor x = testutil::random_tensor(3, 4, 8, 2);
  const Tensor g = bottom_up_gate(x, make_zero_weights(s), "bu");
  EXPECT_TRUE(g.same_shape(x));
  for (float v : g.values()) EXPECT_EQ(v, 0.5f);
}

TEST(BottomUpGate, MatchesScalarOracle) {
  Schema s;
  append_bottom_up_schema(s, "bu", 4);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const WeightStore w = oracle::wide_random_store(s, seed);
    const Tensor x = testutil::random_tensor(2, 2, 4, seed + 7);
    const Tensor g = bottom_up_gate(x, w, "bu");
    EXPECT_LE(testutil::max_abs_diff(g, oracle::bottom_up({w}, "bu", testutil::to_field(x))), 1e-5);
    for (float v : g.values()) EXPECT_TRUE(v > 0.0f && v < 1.0f);
  }
}

TEST(BottomUpGate, RejectsTooFewChannels) {
  Schema s;
  append_bottom_up_schema(s, "bu", 4);
  EXPECT_THROW(bottom_up_gate(Tensor(2, 2, 2), make_zero_weights(s), "bu"), Error);
  EXPECT_THROW(bottom_up_gate(Tensor(2, 2, 6), make_zero_weights(s), "bu"), Error);
}

// --- fusion ----------------------------------------------------------------

TEST(ChkimFuse, ZeroAdapterHalvesBackboneFeature) {
  const ModulationConfig cfg = small_config(4);
  const WeightStore w = zero_network_weights(cfg);
  const Tensor f = testutil::random_tensor(4, 4, 4, 3);
  const Tensor cp2 = testutil::random_tensor(4, 4, 4, 4);
  const Tensor k = chkim_fuse(f, cp2, w, 0, cfg);
  for (std::size_t i = 0; i < k.size(); ++i) EXPECT_EQ(k.values()[i], 0.5f * f.values()[i]);
}

TEST(ChkimFuse, MatchesScalarOracle) {
  const ModulationConfig cfg = small_config(4);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const WeightStore w = wide_network_weights(cfg, seed);
    for (int level : {0, 1}) {
      const int c = level_channels(4, level);
      const int side = level == 0 ? 2 : 4;
      const Tensor f = testutil::random_tensor(side, side, c, seed * 3);
      const Tensor cp2 = testutil::random_tensor(side, side, c, seed * 5);
      const Tensor k = chkim_fuse(f, cp2, w, level, cfg);
      const auto ref = oracle::chkim({w}, level, testutil::to_field(f), testutil::to_field(cp2), 4);
      EXPECT_LE(testutil::max_abs_diff(k, ref), 1e-5) << "level " << level;
    }
  }
}

TEST(ChkimFuse, BoundedByItsInputs) {
  const ModulationConfig cfg = small_config(8);
  const WeightStore w = wide_network_weights(cfg, 17);
  const Tensor f = testutil::random_tensor(4, 4, 8, 1);
  const Tensor cp2 = testutil::random_tensor(4, 4, 8, 2);
  const Tensor e = prior_adapter(cp2, w, "chkim/l0/e");
  const Tensor k = chkim_fuse(f, cp2, w, 0, cfg);
  for (std::size_t i = 0; i < k.size(); ++i)
    EXPECT_LE(std::abs(k.values()[i]), std::abs(e.values()[i]) + std::abs(f.values()[i]) + 1e-6);
}

TEST(ChkimFuse, RejectsShapeMismatch) {
  const ModulationConfig cfg = small_config(4);
  const WeightStore w = zero_network_weights(cfg);
  EXPECT_THROW(chkim_fuse(Tensor(4, 4, 4), Tensor(2, 2, 4), w, 0, cfg), Error);
}

// --- attention head ----------------------------------------------------------

TEST(Dafwm, MatchesScalarOracle) {
  const ModulationConfig cfg = small_config(8);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const WeightStore w = wide_network_weights(cfg, seed);
    const Tensor g = testutil::random_tensor(4, 4, 8, seed + 50, 0.0, 1.0);
    EXPECT_LE(testutil::max_abs_diff(dafwm(g, w, cfg), oracle::dafwm({w}, testutil::to_field(g), 4)),
              1e-5);
  }
}

TEST(Dafwm, IdenticalChannelsMatchOracle) {
  const ModulationConfig cfg = small_config(8);
  const WeightStore w = wide_network_weights(cfg, 23);
  Tensor g(4, 4, 8);
  const Tensor plane = testutil::random_tensor(4, 4, 1, 5, 0.0, 1.0);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      for (int ch = 0; ch < 8; ++ch) g.at(r, c, ch) = plane.at(r, c);
  EXPECT_TRUE(testutil::bitwise_equal(channel_max(g), channel_mean(g)));
  EXPECT_LE(testutil::max_abs_diff(dafwm(g, w, cfg), oracle::dafwm({w}, testutil::to_field(g), 4)),
            1e-5);
}

TEST(Agfem, ZeroWeightsGiveHalf) {
  const ModulationConfig cfg = small_config(8);
  const WeightStore w = zero_network_weights(cfg);
  std::vector<Tensor> k;
  for (int i = 0; i < 4; ++i)
    k.push_back(testutil::random_tensor(16 >> i, 16 >> i, level_channels(8, i), i + 1));
  const Tensor f = agfem(k, w, cfg);
  ASSERT_EQ(f.shape_string(), "16x16x1");
  for (float v : f.values()) EXPECT_EQ(v, 0.5f);
}

TEST(Agfem, OutputInUnitRange) {
  const ModulationConfig cfg = small_config(8);
  const WeightStore w = wide_network_weights(cfg, 4);
  std::vector<Tensor> k;
  for (int i = 0; i < 4; ++i)
    k.push_back(testutil::random_tensor(16 >> i, 16 >> i, level_channels(8, i), i + 9, -3, 3));
  const Tensor f = agfem(k, w, cfg);
  for (float v : f.values()) EXPECT_TRUE(v >= 0.0f && v <= 1.0f) << v;
}

TEST(Agfem, RejectsWrongLevelShape) {
  const ModulationConfig cfg = small_config(8);
  const WeightStore w = zero_network_weights(cfg);
  std::vector<Tensor> k;
  for (int i = 0; i < 4; ++i) k.push_back(Tensor(16 >> i, 16 >> i, level_channels(8, i)));
  k[2] = Tensor(4, 4, 16);
  EXPECT_THROW(agfem(k, w, cfg), Error);
}

// --- backbone and full pass ----------------------------------------------------

TEST(Dnim, ShapeLaw) {
  const WeightStore w = random_network_weights(small_config(8), 1);
  const auto out = dnim_forward(testutil::random_tensor(32, 24, 2, 1, 0, 1), w, 8);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(out.f[i].height(), 32 >> i);
    EXPECT_EQ(out.f[i].width(), 24 >> i);
    EXPECT_EQ(out.f[i].channels(), (i + 1) * 8);
  }
}

TEST(Dnim, ZeroWeightsGiveZeroFeatures) {
  const auto out = dnim_forward(testutil::random_tensor(16, 16, 2, 1, 0, 1),
                                zero_network_weights(small_config(8)), 8);
  for (const auto& f : out.f)
    for (float v : f.values()) EXPECT_EQ(v, 0.0f);
}

TEST(Dnim, HorizontalFlipEquivariantWithSymmetricKernels) {
  WeightStore w = wide_network_weights(small_config(8), 12);
  symmetrize_backbone(w);
  const Tensor x = testutil::random_tensor(16, 16, 2, 3, 0, 1);
  const auto a = dnim_forward(x, w, 8);
  const auto b = dnim_forward(flip_columns(x), w, 8);
  for (int i = 0; i < 4; ++i) EXPECT_LE(testutil::max_abs_diff(flip_columns(a.f[i]), b.f[i]), 1e-4);
}

TEST(Dnim, RejectsIndivisibleInput) {
  const WeightStore w = zero_network_weights(small_config(8));
  EXPECT_THROW(dnim_forward(Tensor(12, 16, 2), w, 8), Error);
  EXPECT_THROW(dnim_forward(Tensor(16, 16, 1), w, 8), Error);
}

TEST(Forward, ShapesAndRangeWithSeededWeights) {
  const ModulationConfig cfg = small_config(8);
  const WeightStore w = random_network_weights(cfg, 99);
  const Tensor img = testutil::random_tensor(32, 32, 1, 4, 0, 1);
  const ForwardTrace t = forward_trace(img, bank(), w, cfg);
  for (int i = 0; i < 4; ++i) {
    const std::string want = std::to_string(32 >> i) + "x" + std::to_string(32 >> i) + "x" +
                             std::to_string((i + 1) * 8);
    EXPECT_EQ(t.backbone.f[i].shape_string(), want);
    EXPECT_EQ(t.priors.cp2[i].shape_string(), want);
    EXPECT_EQ(t.fused[i].shape_string(), want);
  }
  ASSERT_EQ(t.saliency.shape_string(), "32x32x1");
  for (float v : t.saliency.values()) EXPECT_TRUE(v >= 0.0f && v <= 1.0f);
}

TEST(Forward, Deterministic) {
  const ModulationConfig cfg = small_config(8);
  const WeightStore w = random_network_weights(cfg, 5);
  const Tensor img = testutil::random_tensor(16, 16, 1, 6, 0, 1);
  EXPECT_TRUE(testutil::bitwise_equal(cspenet_forward(img, bank(), w, cfg),
                                      cspenet_forward(img, bank(), w, cfg)));
}

TEST(Forward, ZeroWeightsGiveExactlyHalf) {
  const ModulationConfig cfg = small_config(8);
  const WeightStore w = zero_network_weights(cfg);
  for (const Tensor& img : {Tensor(16, 16, 1), testutil::random_tensor(16, 24, 1, 2, 0, 1)}) {
    const Tensor f = cspenet_forward(img, bank(), w, cfg);
    for (float v : f.values()) EXPECT_EQ(v, 0.5f);
  }
}

TEST(Forward, ZeroImageHasZeroPrior) {
  const ModulationConfig cfg = small_config(8);
  const WeightStore w = random_network_weights(cfg, 8);
  const ForwardTrace t = forward_trace(Tensor(16, 16, 1), bank(), w, cfg);
  for (float v : t.priors.cp1.values()) EXPECT_EQ(v, 0.0f);
  const auto direct = dnim_forward(Tensor(16, 16, 2), w, 8);
  for (int i = 0; i < 4; ++i) EXPECT_TRUE(testutil::bitwise_equal(direct.f[i], t.backbone.f[i]));
}

// --- weight validation -----------------------------------------------------------

TEST(NetworkWeights, GeneratedStoresValidate) {
  const ModulationConfig cfg = small_config(8);
  const ModulationConfig back = validate_network_weights(random_network_weights(cfg, 1));
  EXPECT_EQ(back.base_channels, 8);
  EXPECT_EQ(back.r_top_down, 4);
  EXPECT_EQ(back.r_dafwm, 4);
}

TEST(NetworkWeights, MissingTensorIsNamed) {
  const WeightStore full = zero_network_weights(small_config(8));
  WeightStore partial;
  for (const auto& [name, p] : full.entries())
    if (name != "chkim/l2/td/fc1/w") partial.set(name, p);
  try {
    validate_network_weights(partial);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::weight_missing);
    EXPECT_NE(std::string(e.what()).find("chkim/l2/td/fc1/w"), std::string::npos);
  }
}

TEST(NetworkWeights, UnknownTensorRejected) {
  WeightStore w = zero_network_weights(small_config(8));
  w.set("agfem/extra/w", Param{{1}, {0.0f}});
  try {
    validate_network_weights(w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::weight_unknown);
    EXPECT_NE(std::string(e.what()).find("agfem/extra/w"), std::string::npos);
  }
}

TEST(NetworkWeights, WrongShapeRejected) {
  WeightStore w = zero_network_weights(small_config(8));
  w.set("agfem/head/w", Param{{1, 1, 8, 2}, std::vector<float>(16)});
  try {
    validate_network_weights(w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::weight_shape);
  }
}

TEST(NetworkWeights, ConfigRatiosMustDivide) {
  EXPECT_THROW((ModulationConfig{8, 3, 4}.validate()), Error);
  EXPECT_THROW((ModulationConfig{6, 2, 2}.validate()), Error);
  EXPECT_NO_THROW((ModulationConfig{16, 4, 4}.validate()));
}
