#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "patflow/adaptation.hpp"
#include "patflow/errors.hpp"
#include "patflow/losses.hpp"
#include "patflow/online.hpp"
#include "support.hpp"

using namespace patflow;

namespace {

WindowBuffer buffer_of(const Sequence& seq, int first, int count, SparseSupervision sup) {
  WindowBuffer b(count);
  for (int f = first; f < first + count; ++f) {
    b.push(f, seq.frames[static_cast<std::size_t>(f)], DotSet{f, {}},
           seq.gt[static_cast<std::size_t>(f)]);
  }
  b.supervision = std::move(sup);
  return b;
}

// Supervision of the first window from a frozen run started at `params`.
SparseSupervision first_window_supervision(const Sequence& seq, const EstimatorParams& params) {
  SparseSupervision out;
  OnlineOptions opts;
  opts.variant = LossVariant::None;
  opts.end_frame = 8;
  opts.on_supervision = [&](int, const SparseSupervision& s) { out = s; };
  run_online(seq, params, opts);
  return out;
}

}  // namespace

TEST(WindowBuffer, PushClearAndErrors) {
  EXPECT_THROW(WindowBuffer(0), ConfigError);
  WindowBuffer b(3);
  EXPECT_TRUE(b.empty());
  b.push(4, GrayImage(2, 2), {}, DisparityMap(2, 2));
  EXPECT_THROW(b.push(6, GrayImage(2, 2), {}, DisparityMap(2, 2)), DataError);
  b.push(5, GrayImage(2, 2), {}, DisparityMap(2, 2));
  b.push(6, GrayImage(2, 2), {}, DisparityMap(2, 2));
  EXPECT_TRUE(b.full());
  EXPECT_EQ(b.first_frame(), 4);
  EXPECT_EQ(b.last_frame(), 6);
  EXPECT_THROW(b.push(7, GrayImage(2, 2), {}, DisparityMap(2, 2)), ConfigError);
  b.supervision.points.push_back({});
  b.clear();
  EXPECT_TRUE(b.empty());
  EXPECT_TRUE(b.supervision.empty());
  b.push(20, GrayImage(2, 2), {}, DisparityMap(2, 2));
  EXPECT_EQ(b.first_frame(), 20);
}

TEST(GaussianSmooth, IdentityAndMassInInterior) {
  Image<double> f(41, 41, 0.0);
  f(20, 20) = 1.0;
  EXPECT_EQ(gaussian_smooth(f, 0.0), f);
  const auto g = gaussian_smooth(f, 2.0);
  double sum = 0.0;
  for (double v : g.pixels()) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_NEAR(g(22, 20), g(18, 20), 1e-15);
  EXPECT_NEAR(g(20, 22), g(22, 20), 1e-15);
  EXPECT_GT(g(20, 20), g(21, 20));
}

TEST(AdaptStep, NothingToLearnLeavesParamsUnchanged) {
  const auto seq = test::simulated_sequence(ScenePreset::NonRigid, 8, 2);
  auto params = initial_params(seq, 0, 5.0, 0.5, 2, 20.0, 80.0);
  params.smoothness = 0.0;
  const auto b = buffer_of(seq, 0, 8, {});
  StepOptions so;
  so.alpha = 0.0;
  const auto r = adapt_step(params, b, seq.pattern.image, so);
  EXPECT_TRUE(r.report.finite);
  EXPECT_EQ(r.params.grid, params.grid);
  EXPECT_EQ(r.report.max_step, 0.0);
  EXPECT_EQ(r.report.total, 0.0);
}

TEST(AdaptStep, ZeroLearningRateIsIdentity) {
  const auto seq = test::simulated_sequence(ScenePreset::NonRigid, 8, 3);
  const auto params = initial_params(seq, 0, 5.0, 0.5, 3, 20.0, 80.0);
  const auto b = buffer_of(seq, 0, 8, first_window_supervision(seq, params));
  StepOptions so;
  so.lr = 0.0;
  const auto r = adapt_step(params, b, seq.pattern.image, so);
  EXPECT_EQ(r.params.grid, params.grid);
  EXPECT_GT(r.report.total, 0.0);
}

TEST(AdaptStep, AtPseudoLabelsOnlyPriorsMove) {
  // Supervision placed on lattice pixels, equal to the grid there.
  const auto seq = test::simulated_sequence(ScenePreset::Static, 8, 4);
  const auto params = initial_params(seq, 0, 0.0, 0.0, 4, 20.0, 80.0);
  SparseSupervision sup;
  sup.first_frame = 0;
  sup.last_frame = 7;
  for (int f = 0; f < 8; ++f) {
    for (int y = 5; y < 128; y += 9) {
      for (int x = 5; x < 128; x += 9) sup.points.push_back({f, {double(x), double(y)}, params.grid(x, y), 0.9, 0});
    }
  }
  const auto b = buffer_of(seq, 0, 8, sup);
  StepOptions so;
  so.lr = 0.05;
  const auto ev = evaluate_loss(params, b, seq.pattern.image, so);
  EXPECT_EQ(ev.report.disparity, 0.0);

  // Bound from the photometric and smoothness gradients alone.
  const std::vector<DisparityMap> disps(8, estimator_predict(params));
  const auto lp = loss_photometric(b.frames(), disps, seq.pattern.image);
  const auto tv = smoothness_tv(params.grid);
  // Each term is smoothed separately, and smoothing never raises the peak.
  double tv_peak = 0.0, photometric_peak = 0.0;
  for (std::size_t i = 0; i < params.grid.size(); ++i) {
    tv_peak = std::max(tv_peak, std::abs(params.smoothness * tv.gradient[i]));
    double g = 0.0;
    for (const auto& gp : lp.gradients) g += so.alpha * gp[i];
    photometric_peak = std::max(photometric_peak, std::abs(g));
  }
  const double bound = tv_peak + photometric_peak;
  const auto r = adapt_step(params, b, seq.pattern.image, so);
  EXPECT_TRUE(r.applied);
  EXPECT_LE(r.report.max_step, so.lr * static_cast<double>(params.grid.size()) * bound + 1e-12);
}

TEST(AdaptStep, PhotometricTermUsesItsOwnSpread) {
  const auto seq = test::simulated_sequence(ScenePreset::NonRigid, 8, 6);
  auto params = initial_params(seq, 0, 2.0, 0.5, 6, 20.0, 80.0);
  params.spread = 12.0;
  params.photometric_spread = 3.0;
  const auto b = buffer_of(seq, 0, 8, first_window_supervision(seq, params));
  StepOptions so;
  so.lr = 1e-3;
  const auto ev = evaluate_loss(params, b, seq.pattern.image, so);
  ASSERT_FALSE(ev.photometric_gradient.empty());

  auto rest = ev.gradient;
  for (std::size_t i = 0; i < rest.size(); ++i) rest[i] -= ev.photometric_gradient[i];
  const auto wide = gaussian_smooth(rest, 12.0);
  const auto narrow = gaussian_smooth(ev.photometric_gradient, 3.0);
  const double scale = so.lr * static_cast<double>(params.grid.size());
  const auto r = adapt_step(params, b, seq.pattern.image, so);
  for (std::size_t i = 0; i < rest.size(); ++i) {
    EXPECT_NEAR(r.params.grid[i], params.grid[i] - scale * (wide[i] + narrow[i]), 1e-9);
  }

  // Equal spreads collapse to a single smoothing of the total gradient.
  params.photometric_spread = params.spread;
  const auto whole = gaussian_smooth(ev.gradient, 12.0);
  const auto same = adapt_step(params, b, seq.pattern.image, so);
  for (std::size_t i = 0; i < whole.size(); ++i) {
    EXPECT_NEAR(same.params.grid[i], params.grid[i] - scale * whole[i], 1e-9);
  }
}

TEST(AdaptStep, GridStaysInRange) {
  const auto seq = test::simulated_sequence(ScenePreset::NonRigid, 8, 5);
  auto params = initial_params(seq, 0, 0.0, 0.0, 5, 20.0, 80.0);
  params.grid = Image<double>(128, 128, 79.5);
  const auto b = buffer_of(seq, 0, 8, first_window_supervision(seq, params));
  StepOptions so;
  so.lr = 50.0;
  const auto r = adapt_step(params, b, seq.pattern.image, so);
  for (double v : r.params.grid.pixels()) {
    EXPECT_GE(v, 20.0);
    EXPECT_LE(v, 80.0);
  }
}

TEST(AdaptStep, EmptyBufferDoesNothing) {
  EstimatorParams p;
  p.grid = Image<double>(4, 4, 30.0);
  const auto r = adapt_step(p, WindowBuffer(2), GrayImage(4, 4), {});
  EXPECT_FALSE(r.applied);
  EXPECT_EQ(r.params.grid, p.grid);
}

TEST(AdaptStep, LossMostlyNonIncreasingOnFrozenWindow) {
  for (std::uint64_t seed : {1u, 2u}) {
    const auto seq = test::simulated_sequence(ScenePreset::NonRigid, 8, seed);
    auto params = initial_params(seq, 0, 5.0, 0.5, seed, 20.0, 80.0);
    const auto b = buffer_of(seq, 0, 8, first_window_supervision(seq, params));
    ASSERT_FALSE(b.supervision.empty());
    StepOptions so;
    so.lr = 0.02;
    double prev = evaluate_loss(params, b, seq.pattern.image, so).report.total;
    int ok = 0;
    const int steps = 60;
    for (int s = 0; s < steps; ++s) {
      params = adapt_step(params, b, seq.pattern.image, so).params;
      const double now = evaluate_loss(params, b, seq.pattern.image, so).report.total;
      if (now <= prev) ++ok;
      prev = now;
    }
    EXPECT_GE(ok, static_cast<int>(std::ceil(0.95 * steps))) << "seed " << seed;
  }
}

TEST(Online, ErrorDecreasesOverFirstWindowsFromOffsetStart) {
  for (std::uint64_t seed : {1u, 2u}) {
    const auto seq = test::simulated_sequence(ScenePreset::NonRigid, 160, seed);
    const auto params = initial_params(seq, 0, 5.0, 0.0, seed, 20.0, 80.0);
    const auto res = run_online(seq, params, OnlineOptions{});
    ASSERT_EQ(res.metrics.size(), 160u);
    // Error at the first frame of each window reflects the previous update.
    std::vector<double> per_window;
    for (int w = 0; w < 10; ++w) per_window.push_back(res.metrics[static_cast<std::size_t>(8 * w)].avg_l1);
    for (int w = 1; w < 10; ++w) {
      EXPECT_LT(per_window[static_cast<std::size_t>(w)], per_window[static_cast<std::size_t>(w - 1)])
          << "seed " << seed << " window " << w;
    }
  }
}
