#include <gtest/gtest.h>

#include <cmath>

#include "istd/synthgen.hpp"
#include "test_util.hpp"

using namespace istd;

TEST(RenderScene, DegenerateSpecIsFlat) {
  SceneSpec spec;
  spec.base = 0.2;
  const LabeledScene s = render_scene(spec);
  for (float v : s.image.values()) EXPECT_EQ(v, 0.2f);
  EXPECT_EQ(s.mask.count(), 0u);
  EXPECT_TRUE(std::isinf(s.snr));
}

TEST(RenderScene, MaskIsHalfMaximumDisk) {
  SceneSpec spec;
  spec.targets.push_back({32, 32, 0.8, 2.0});
  const LabeledScene s = render_scene(spec);
  const double radius = 2.0 * std::sqrt(2.0 * std::log(2.0));
  EXPECT_NEAR(radius, 2.35, 0.01);
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 64; ++c) {
      const double d = std::hypot(r - 32.0, c - 32.0);
      if (std::abs(d - radius) < 1e-9) continue;
      EXPECT_EQ(s.mask.at(r, c), d < radius ? 1 : 0) << r << "," << c;
    }
  // Integer offsets inside radius 2.35: the 21-pixel disk.
  EXPECT_EQ(s.mask.count(), 21u);
}

TEST(RenderScene, NoiseFreePeakIsBasePlusAmplitude) {
  SceneSpec spec;
  spec.base = 0.25;
  spec.targets.push_back({20, 40, 0.5, 1.5});
  const LabeledScene s = render_scene(spec);
  EXPECT_EQ(s.image.at(20, 40), 0.75f);
}

TEST(RenderScene, SameSeedIsBitIdentical) {
  SceneSpec spec;
  spec.targets.push_back({10, 12, 0.4, 1.2});
  spec.clutter.push_back({30, 30, 0.2, 6});
  spec.noise_sigma = 0.05;
  spec.seed = 1234;
  EXPECT_TRUE(testutil::bitwise_equal(render_scene(spec).image, render_scene(spec).image));
  SceneSpec other = spec;
  other.seed = 1235;
  EXPECT_FALSE(testutil::bitwise_equal(render_scene(spec).image, render_scene(other).image));
}

TEST(RenderScene, ReportsSnrAndClampsToUnitRange) {
  SceneSpec spec;
  spec.base = 0.9;
  spec.targets.push_back({5, 5, 0.6, 1.0});
  spec.targets.push_back({40, 40, 0.3, 1.0});
  spec.noise_sigma = 0.1;
  spec.seed = 3;
  const LabeledScene s = render_scene(spec);
  EXPECT_NEAR(s.snr, 3.0, 1e-12);
  for (float v : s.image.values()) EXPECT_TRUE(v >= 0.0f && v <= 1.0f);
}

TEST(RenderScene, RejectsInvalidSpecs) {
  SceneSpec out_of_bounds;
  out_of_bounds.targets.push_back({64.5, 10, 0.5, 1});
  EXPECT_THROW(render_scene(out_of_bounds), Error);
  SceneSpec bad_amp;
  bad_amp.targets.push_back({10, 10, 1.5, 1});
  EXPECT_THROW(render_scene(bad_amp), Error);
  SceneSpec bad_base;
  bad_base.base = 1.0;
  EXPECT_THROW(render_scene(bad_base), Error);
}

TEST(MakeSuite, LocalizationHasOneComponentPerScene) {
  const auto suite = make_suite(SuiteKind::localization, 100, 7);
  ASSERT_EQ(suite.size(), 100u);
  for (const auto& s : suite) {
    EXPECT_EQ(s.spec.targets.size(), 1u);
    EXPECT_EQ(detect_targets(s.mask).components.size(), 1u);
    EXPECT_GE(s.snr, 4.0);
    EXPECT_LE(s.snr, 12.0);
    EXPECT_GE(s.spec.clutter.size(), 1u);
  }
}

TEST(MakeSuite, MultiTargetComponentsMatchTargets) {
  const auto suite = make_suite(SuiteKind::multi_target, 10, 7);
  ASSERT_EQ(suite.size(), 10u);
  for (const auto& s : suite) {
    EXPECT_GE(s.spec.targets.size(), 2u);
    EXPECT_LE(s.spec.targets.size(), 5u);
    EXPECT_EQ(detect_targets(s.mask).components.size(), s.spec.targets.size());
  }
}

TEST(MakeSuite, RocSuiteTargetsAreSeparated) {
  for (const auto& s : make_suite(SuiteKind::roc, 20, 11)) {
    EXPECT_EQ(detect_targets(s.mask).components.size(), s.spec.targets.size());
    EXPECT_GE(s.snr, 3.0);
  }
}

TEST(MakeSuite, DeterministicPerSeed) {
  const auto a = make_suite(SuiteKind::roc, 5, 99);
  const auto b = make_suite(SuiteKind::roc, 5, 99);
  const auto c = make_suite(SuiteKind::roc, 5, 100);
  for (int i = 0; i < 5; ++i) {
    EXPECT_TRUE(testutil::bitwise_equal(a[i].image, b[i].image));
    EXPECT_EQ(a[i].mask, b[i].mask);
  }
  EXPECT_FALSE(testutil::bitwise_equal(a[0].image, c[0].image));
}

TEST(MakeSuite, ParsesKinds) {
  EXPECT_EQ(parse_suite_kind("localization"), SuiteKind::localization);
  EXPECT_EQ(parse_suite_kind("roc"), SuiteKind::roc);
  EXPECT_EQ(parse_suite_kind("multiTarget"), SuiteKind::multi_target);
  EXPECT_THROW(parse_suite_kind("clutter"), Error);
  EXPECT_THROW(make_suite(SuiteKind::roc, 0, 1), Error);
}

TEST(Rng, KnownSplitMixSequence) {
  // Reference values of the published SplitMix64 generator for seed 0.
  SplitMix64 rng(0);
  EXPECT_EQ(rng.next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(rng.next(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(rng.next(), 0x06c45d188009454fULL);
}
