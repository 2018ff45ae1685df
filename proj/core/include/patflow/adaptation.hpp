#pragma once

#include <vector>

#include "patflow/detection.hpp"
#include "patflow/estimator.hpp"
#include "patflow/image.hpp"
#include "patflow/supervision.hpp"

namespace patflow {

/// The last T frames of the stream together with what was computed on them.
class WindowBuffer {
 public:
  explicit WindowBuffer(int capacity = 8);

  /// Appends the next consecutive frame. Throws DataError on a gap and
  /// ConfigError when already full.
  void push(int frame, GrayImage image, DotSet detections, DisparityMap prediction);
  void clear();

  int capacity() const { return capacity_; }
  std::size_t size() const { return frames_.size(); }
  bool full() const { return static_cast<int>(frames_.size()) == capacity_; }
  bool empty() const { return frames_.empty(); }
  int first_frame() const { return first_frame_; }
  int last_frame() const { return first_frame_ + static_cast<int>(frames_.size()) - 1; }

  const std::vector<GrayImage>& frames() const { return frames_; }
  const std::vector<DotSet>& detections() const { return detections_; }
  const std::vector<DisparityMap>& predictions() const { return predictions_; }

  SparseSupervision supervision;

 private:
  int capacity_;
  int first_frame_ = 0;
  std::vector<GrayImage> frames_;
  std::vector<DotSet> detections_;
  std::vector<DisparityMap> predictions_;
};

struct StepOptions {
  double lr = 1.0;             ///< px per step at unit per-pixel gradient
  double alpha = 0.1;          ///< weight of the photometric term
  bool use_disparity = true;   ///< include the pseudo-ground-truth term
  bool use_weights = true;     ///< confidence-weight the pseudo-ground-truth term
  double d_min = 20.0;         ///< grid is clamped to [d_min, d_max] after a step
  double d_max = 80.0;
};

struct LossReport {
  double total = 0.0;        ///< L = [L_D] + alpha * L_P + lambda * TV
  double disparity = 0.0;    ///< weighted-mean L_D
  double photometric = 0.0;  ///< L_P summed over the window
  double smoothness = 0.0;   ///< TV of the grid
  std::size_t points = 0;
  double mean_weight = 0.0;
  std::size_t valid_pixels = 0;
  double max_step = 0.0;     ///< largest per-pixel displacement applied
  bool finite = true;
};

struct StepResult {
  EstimatorParams params;
  LossReport report;
  bool applied = false;
};

/// Loss terms and the raw gradient of L with respect to the grid, evaluated
/// at the current parameters for every frame of the window.
struct LossEvaluation {
  LossReport report;
  Image<double> gradient;              ///< total dL/dgrid
  Image<double> photometric_gradient;  ///< alpha * dL_P/dgrid; empty when alpha = 0
};
LossEvaluation evaluate_loss(const EstimatorParams& params, const WindowBuffer& buffer,
                             const GrayImage& pattern, const StepOptions& opts);

/// Separable Gaussian smoothing with zero padding; sigma <= 0 is the identity.
Image<double> gaussian_smooth(const Image<double>& field, double sigma);

/// One preconditioned gradient step on the grid:
///   grid -= lr * N * (G_spread * (dL/dgrid - g_P) + G_photometric_spread * g_P),
/// N the pixel count, g_P the photometric part of the gradient and G_s a
/// Gaussian of standard deviation s. A non-finite
/// loss leaves the parameters unchanged and reports finite = false.
StepResult adapt_step(const EstimatorParams& params, const WindowBuffer& buffer,
                      const GrayImage& pattern, const StepOptions& opts);

}  // namespace patflow
