#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "patflow/errors.hpp"
#include "patflow/matcher.hpp"
#include "patflow/simulator.hpp"
#include "support.hpp"

using namespace patflow;

namespace {

KalmanState run_filter(const std::vector<double>& zs, KalmanNoise noise = {}) {
  KalmanState s;
  for (double z : zs) s = kf_update(s, z, noise).state;
  return s;
}

Pattern row_pattern(std::vector<double> us, double v = 10.0) {
  Pattern p;
  p.image = GrayImage(128, 32);
  for (double u : us) p.dots.push_back({u, v});
  return p;
}

}  // namespace

TEST(Measure, SubtractsDisparity) {
  DisparityMap d(64, 64, 30.0);
  EXPECT_DOUBLE_EQ(*measure({50.0, 10.0}, d), 20.0);
  d.values(20, 10) = 32.0;
  // Halfway between pixels with 30 and 32.
  EXPECT_NEAR(*measure({20.5, 10.0}, d), 20.5 - 31.0, 1e-12);
}

TEST(Measure, InvalidSupportGivesNothing) {
  DisparityMap d(64, 64, 30.0);
  d.valid(21, 10) = 0;
  EXPECT_FALSE(measure({20.5, 10.0}, d).has_value());
  EXPECT_FALSE(measure({70.0, 10.0}, d).has_value());
}

TEST(Kalman, ThreeMeasurementExample) {
  const auto s = run_filter({10.0, 12.0, 11.0});
  EXPECT_NEAR(s.mean, 11.0, 1e-12);
  EXPECT_NEAR(s.variance, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(s.count, 3);
}

TEST(Kalman, FirstMeasurementInitializes) {
  const auto u = kf_update({}, 42.0, {0.0, 2.5});
  EXPECT_TRUE(u.accepted);
  EXPECT_EQ(u.state.mean, 42.0);
  EXPECT_EQ(u.state.variance, 2.5);
}

TEST(Kalman, NonFiniteMeasurementIsSkipped) {
  const auto s = run_filter({10.0, 12.0});
  const auto u = kf_update(s, std::nan(""), {});
  EXPECT_FALSE(u.accepted);
  EXPECT_EQ(u.state.mean, s.mean);
  EXPECT_EQ(u.state.variance, s.variance);
  EXPECT_EQ(u.state.count, s.count);
}

TEST(Kalman, RejectsBadNoise) {
  EXPECT_THROW(kf_update({}, 1.0, {0.0, 0.0}), ConfigError);
  EXPECT_THROW(kf_update({}, 1.0, {-1.0, 1.0}), ConfigError);
}

TEST(Kalman, ConstantStateMatchesSampleMeanAndClosedFormVariance) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(1, 40);
  std::normal_distribution<double> z(0.0, 5.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = len(rng);
    std::vector<double> zs(static_cast<std::size_t>(k));
    for (auto& v : zs) v = 100.0 + z(rng);
    const auto s = run_filter(zs);
    long double sum = 0;
    for (double v : zs) sum += v;
    const double mean = static_cast<double>(sum / k);
    ASSERT_NEAR(s.mean, mean, 1e-9);
    ASSERT_NEAR(s.variance, 1.0 / k, 1e-12);
  }
}

TEST(Kalman, VarianceNeverIncreasesWithoutProcessNoise) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 3.0);
  for (double r : {0.25, 1.0, 4.0}) {
    KalmanState s;
    double prev = INFINITY;
    for (int i = 0; i < 100; ++i) {
      s = kf_update(s, z(rng), {0.0, r}).state;
      ASSERT_LE(s.variance, prev);
      ASSERT_GT(s.variance, 0.0);
      prev = s.variance;
    }
  }
}

TEST(MatchPattern, NearestRowCompatibleDot) {
  const auto p = row_pattern({20.0, 30.0, 60.0});
  const auto c = match_pattern(run_filter({28.0}), 10.3, p, 1.5);
  ASSERT_TRUE(c.has_value());
  EXPECT_EQ(c->dot, 1);
  EXPECT_DOUBLE_EQ(c->mu, 28.0);
  EXPECT_DOUBLE_EQ(c->sigma, 1.0);
  EXPECT_EQ(c->count, 1);
}

TEST(MatchPattern, MidwayIsRejected) {
  const auto p = row_pattern({20.0, 30.0});
  EXPECT_FALSE(match_pattern(run_filter({25.0}), 10.0, p, 1.5).has_value());
  EXPECT_TRUE(match_pattern(run_filter({24.9}), 10.0, p, 1.5).has_value());
}

TEST(MatchPattern, OtherRowsAreIgnored) {
  auto p = row_pattern({20.0});
  p.dots.push_back({24.0, 20.0});
  // The dot on row 20 would halve the gap if it counted.
  const auto c = match_pattern(run_filter({23.0}), 10.0, p, 1.5);
  ASSERT_TRUE(c.has_value());
  EXPECT_EQ(c->dot, 0);
  EXPECT_FALSE(match_pattern(run_filter({23.0}), 15.0, p, 1.5).has_value());
}

TEST(MatchPattern, NoMeasurementNoMatch) {
  const auto p = row_pattern({20.0});
  EXPECT_FALSE(match_pattern(KalmanState{}, 10.0, p, 1.5).has_value());
}

TEST(MatchPattern, InvariantToDotOrder) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 120.0), v(0.0, 30.0), q(-5.0, 125.0);
  for (int trial = 0; trial < 200; ++trial) {
    Pattern p;
    p.image = GrayImage(128, 32);
    for (int i = 0; i < 40; ++i) p.dots.push_back({u(rng), v(rng)});
    std::vector<int> perm(p.dots.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    std::shuffle(perm.begin(), perm.end(), rng);
    Pattern shuffled = p;
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled.dots[i] = p.dots[static_cast<std::size_t>(perm[i])];

    for (int k = 0; k < 10; ++k) {
      const auto s = run_filter({q(rng)});
      const double row = v(rng);
      const auto a = match_pattern(s, row, p, 1.5);
      const auto b = match_pattern(s, row, shuffled, 1.5);
      ASSERT_EQ(a.has_value(), b.has_value());
      if (a) EXPECT_EQ(a->dot, perm[static_cast<std::size_t>(b->dot)]);
    }
  }
}

TEST(MatchPattern, GroundTruthDisparityRecoversTrueDot) {
  const auto pattern = test::make_test_pattern(128, 128, 200, 8.0, 3);
  const Scene scene = make_scene(ScenePreset::NonRigid, 128, 128, 3);
  RenderOptions ro;
  ro.frames = 4;
  const auto b = render_sequence(pattern, scene, ro);
  std::size_t checked = 0, matched = 0;
  for (std::size_t f = 0; f < b.visible.size(); ++f) {
    for (const auto& vd : b.visible[f]) {
      const auto z = measure(vd.position, b.disparity[f]);
      if (!z) continue;
      ++checked;
      // Ground truth is rendered per pixel, so bilinear lookup is close but
      // not exact near depth edges.
      const double err = std::abs(*z - pattern.dots[static_cast<std::size_t>(vd.dot)].x);
      if (err < 0.5) {
        const auto c = match_pattern(run_filter({*z}), vd.position.y, pattern, 1.5);
        if (c && c->dot == vd.dot) ++matched;
      }
    }
  }
  ASSERT_GT(checked, 400u);
  EXPECT_GE(static_cast<double>(matched) / static_cast<double>(checked), 0.95);
}

TEST(MatchPattern, InvariantToMeasurementOrder) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> z(0.0, 1.5);
  const auto p = row_pattern({10.0, 18.0, 27.0, 35.0, 44.0, 52.0, 61.0});
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> zs(6);
    const double centre = p.dots[static_cast<std::size_t>(trial % 7)].x;
    for (auto& v : zs) v = centre + z(rng);
    auto shuffled = zs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto a = match_pattern(run_filter(zs), 10.0, p, 1.5);
    const auto b = match_pattern(run_filter(shuffled), 10.0, p, 1.5);
    ASSERT_EQ(a.has_value(), b.has_value());
    if (a) EXPECT_EQ(a->dot, b->dot);
  }
}

TEST(Kalman, ZeroInnovationKeepsMeanShrinksVariance) {
  const auto s = run_filter({7.0, 9.0});
  const auto u = kf_update(s, s.mean, {}).state;
  EXPECT_DOUBLE_EQ(u.mean, s.mean);
  EXPECT_LT(u.variance, s.variance);
}
