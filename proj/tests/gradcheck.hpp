#pragma once

// Central finite-difference oracles for the loss gradients. Each check
// perturbs single disparity pixels and compares against the analytic
// gradient, skipping coordinates where the loss is not differentiable.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "patflow/losses.hpp"

namespace patflow::test {

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t sampled = 0;
};

inline void record(GradCheck& gc, double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  gc.max_rel_error = std::max(gc.max_rel_error, std::abs(analytic - numeric) / scale);
  ++gc.sampled;
}

inline double frac_part(double v) { return v - std::floor(v); }

/// Random pattern, frames and disparity on a w x h instance; the frame count
/// is the window length.
inline GradCheck check_photometric(std::uint64_t seed, int w = 16, int h = 16, int window = 2,
                                   double step = 1e-3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0), disp(1.0, 5.0);
  std::vector<GrayImage> frames;
  std::vector<DisparityMap> disps;
  GrayImage pattern(w, h);
  for (auto& v : pattern.pixels()) v = u01(rng);
  for (int k = 0; k < window; ++k) {
    GrayImage f(w, h);
    for (auto& v : f.pixels()) v = u01(rng);
    frames.push_back(f);
    DisparityMap d(w, h);
    for (auto& v : d.values.pixels()) v = disp(rng);
    disps.push_back(d);
  }
  const auto analytic = loss_photometric(frames, disps, pattern);
  const double margin = 10.0 * step;

  GradCheck gc;
  for (int k = 0; k < window; ++k) {
    const auto warped = warp(pattern, disps[static_cast<std::size_t>(k)]);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!warped.valid(x, y)) continue;
        const double src = x - disps[static_cast<std::size_t>(k)].values(x, y);
        // Away from bilinear cell edges, the image border and the |r| kink.
        const double fr = frac_part(src);
        if (fr < margin || fr > 1.0 - margin || src < margin || src > w - 1 - margin) continue;
        const double r = frames[static_cast<std::size_t>(k)](x, y) - warped.image(x, y);
        if (std::abs(r) < 1e-2) continue;
        const double a = analytic.gradients[static_cast<std::size_t>(k)](x, y);
        if (std::abs(a) < 1e-9) continue;

        auto plus = disps;
        auto minus = disps;
        plus[static_cast<std::size_t>(k)].values(x, y) += step;
        minus[static_cast<std::size_t>(k)].values(x, y) -= step;
        const double n = (loss_photometric(frames, plus, pattern).value -
                          loss_photometric(frames, minus, pattern).value) /
                         (2.0 * step);
        record(gc, a, n);
      }
    }
  }
  return gc;
}

/// Random sparse supervision over a w x h window.
inline GradCheck check_disparity(std::uint64_t seed, int w = 16, int h = 16, int window = 2,
                                 int points = 60, double step = 1e-3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, w - 1.0), uy(0.0, h - 1.0), disp(20.0, 40.0),
      off(0.05, 3.0), weight(0.05, 1.0);
  std::bernoulli_distribution flip(0.5);
  std::vector<DisparityMap> disps;
  for (int k = 0; k < window; ++k) {
    DisparityMap d(w, h);
    for (auto& v : d.values.pixels()) v = disp(rng);
    disps.push_back(d);
  }
  SparseSupervision sup;
  sup.first_frame = 10;
  sup.last_frame = 10 + window - 1;
  for (int i = 0; i < points; ++i) {
    const int k = static_cast<int>(rng() % static_cast<std::uint64_t>(window));
    const Point2 c{ux(rng), uy(rng)};
    const double d = *sample_disparity(disps[static_cast<std::size_t>(k)], c);
    // Residual kept at least 0.05 px away from the kink.
    const double pgt = d + (flip(rng) ? off(rng) : -off(rng));
    sup.points.push_back({10 + k, c, pgt, weight(rng), i});
  }
  const auto analytic = loss_disparity(disps, sup, true);

  GradCheck gc;
  for (int k = 0; k < window; ++k) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double a = analytic.gradients[static_cast<std::size_t>(k)](x, y);
        if (std::abs(a) < 1e-9) continue;
        auto plus = disps;
        auto minus = disps;
        plus[static_cast<std::size_t>(k)].values(x, y) += step;
        minus[static_cast<std::size_t>(k)].values(x, y) -= step;
        const double n =
            (loss_disparity(plus, sup, true).value - loss_disparity(minus, sup, true).value) /
            (2.0 * step);
        record(gc, a, n);
      }
    }
  }
  return gc;
}

}  // namespace patflow::test
