#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "patflow/image.hpp"

namespace patflow {

/// Scalar constant-state Kalman filter over the projector x-coordinate of a
/// trajectory's light ray.
struct KalmanState {
  double mean = 0.0;      ///< mu, px
  double variance = 0.0;  ///< P, px^2
  int count = 0;          ///< accepted measurements

  double sigma() const { return std::sqrt(variance); }
};

struct KalmanNoise {
  double process = 0.0;      ///< Q, px^2 per update
  double measurement = 1.0;  ///< R, px^2
};

struct KalmanUpdate {
  KalmanState state;
  bool accepted = true;  ///< false when z was not finite (state unchanged)
};

/// Predict (P += Q) then correct with measurement z. The first accepted
/// measurement initializes mu = z, P = R.
KalmanUpdate kf_update(const KalmanState& state, double z, const KalmanNoise& noise);

/// Projector x of the ray through camera point `c` under disparity `disp`:
/// rho_x(c) - D(c). nullopt when the bilinear support has an invalid pixel.
std::optional<double> measure(Point2 c, const DisparityMap& disp);

struct Correspondence {
  int trajectory = -1;
  int dot = -1;  ///< pattern dot index n'
  double mu = 0.0;
  double sigma = 0.0;
  int count = 0;
};

/// Row-bucketed lookup of pattern dots for repeated matching.
class PatternIndex {
 public:
  explicit PatternIndex(const std::vector<Point2>& dots);

  /// Nearest row-compatible dot to mu; nullopt when no dot is
  /// row-compatible or mu is at least half the dot's same-row gap away.
  std::optional<int> match(double mu, double row, double row_tol) const;

 private:
  std::vector<Point2> dots_;
  std::vector<int> by_row_;  // dot ids sorted by v
};

/// b_{n'} = argmin over row-compatible pattern dots of |mu - u|, with
/// half-gap rejection. Requires at least one measurement in `state`.
std::optional<Correspondence> match_pattern(const KalmanState& state, double row,
                                            const Pattern& pattern, double row_tol);

}  // namespace patflow
