#pragma once

#include "patflow/image.hpp"

namespace patflow {

/// Surrogate disparity estimator: a dense per-pixel disparity field plus the
/// hyperparameters of its update rule.
struct EstimatorParams {
  Image<double> grid;
  /// Weight of the total-variation prior.
  double smoothness = 0.1;
  /// Standard deviation (px) of the Gaussian that preconditions each update.
  /// Zero applies the raw gradient.
  double spread = 12.0;
  /// Narrower spread for the photometric part of the gradient; its sign flips
  /// across every dot, so a wide kernel would average it away.
  double photometric_spread = 3.0;
};

/// Current dense prediction. Every pixel is valid.
DisparityMap estimator_predict(const EstimatorParams& params);

}  // namespace patflow
