#include "patflow/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "patflow/errors.hpp"

namespace patflow {

KalmanUpdate kf_update(const KalmanState& state, double z, const KalmanNoise& noise) {
  if (!(noise.measurement > 0.0) || noise.process < 0.0) {
    throw ConfigError("Kalman noise requires R > 0 and Q >= 0");
  }
  if (!std::isfinite(z)) return {state, false};
  if (state.count == 0) return {{z, noise.measurement, 1}, true};

  const double prior = state.variance + noise.process;
  const double gain = prior / (prior + noise.measurement);
  KalmanState next;
  next.mean = state.mean + gain * (z - state.mean);
  next.variance = (1.0 - gain) * prior;
  next.count = state.count + 1;
  return {next, true};
}

std::optional<double> measure(Point2 c, const DisparityMap& disp) {
  const auto d = sample_disparity(disp, c);
  if (!d) return std::nullopt;
  return rho_x(c) - *d;
}

PatternIndex::PatternIndex(const std::vector<Point2>& dots) : dots_(dots), by_row_(dots.size()) {
  for (std::size_t i = 0; i < dots.size(); ++i) by_row_[i] = static_cast<int>(i);
  std::stable_sort(by_row_.begin(), by_row_.end(),
                   [&](int a, int b) { return dots_[a].y < dots_[b].y; });
}

std::optional<int> PatternIndex::match(double mu, double row, double row_tol) const {
  auto lo = std::lower_bound(by_row_.begin(), by_row_.end(), row - row_tol,
                             [&](int id, double v) { return dots_[id].y < v; });
  int best = -1;
  double best_dx = std::numeric_limits<double>::infinity();
  for (auto it = lo; it != by_row_.end() && dots_[*it].y <= row + row_tol; ++it) {
    const double dx = std::abs(mu - dots_[*it].x);
    if (dx < best_dx || (dx == best_dx && *it < best)) {
      best = *it;
      best_dx = dx;
    }
  }
  if (best < 0) return std::nullopt;

  // Gap from the winner to its nearest same-row neighbour (either side).
  double gap = std::numeric_limits<double>::infinity();
  const double bu = dots_[best].x;
  for (auto it = lo; it != by_row_.end() && dots_[*it].y <= row + row_tol; ++it) {
    if (*it != best) gap = std::min(gap, std::abs(dots_[*it].x - bu));
  }
  if (best_dx >= 0.5 * gap) return std::nullopt;
  return best;
}

std::optional<Correspondence> match_pattern(const KalmanState& state, double row,
                                            const Pattern& pattern, double row_tol) {
  if (state.count < 1) return std::nullopt;
  const PatternIndex index(pattern.dots);
  const auto dot = index.match(state.mean, row, row_tol);
  if (!dot) return std::nullopt;
  return Correspondence{-1, *dot, state.mean, state.sigma(), state.count};
}

}  // namespace patflow
