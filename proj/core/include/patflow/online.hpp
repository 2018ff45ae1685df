#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "patflow/adaptation.hpp"
#include "patflow/config.hpp"
#include "patflow/dataset.hpp"
#include "patflow/detection.hpp"
#include "patflow/matcher.hpp"
#include "patflow/metrics.hpp"
#include "patflow/supervision.hpp"
#include "patflow/tracker.hpp"

namespace patflow {

/// Which loss terms drive adaptation.
enum class LossVariant {
  None,         ///< frozen estimator
  Photometric,  ///< alpha * L_P
  Disparity,    ///< L_D with every weight set to 1
  Masked,       ///< confidence-weighted L_D
  Full,         ///< confidence-weighted L_D + alpha * L_P
};

LossVariant parse_loss_variant(const std::string& name);
std::string loss_variant_name(LossVariant v);

/// Called once per window with the supervision it produced.
using SupervisionHook = std::function<void(int window, const SparseSupervision&)>;
using DetectionHook = std::function<void(const DotSet&)>;

struct OnlineOptions {
  DetectionConfig detection;
  TrackerConfig tracker;
  KalmanNoise kalman;
  SupervisionConfig supervision;
  int window = 8;
  int steps_per_window = 1;
  StepOptions step;
  LossVariant variant = LossVariant::Full;
  double corrupt = 0.0;            ///< fraction of trajectories given a wrong dot
  std::uint64_t corrupt_seed = 0;
  int start_frame = 0;             ///< first frame of the sequence to process
  int end_frame = -1;              ///< one past the last frame; -1 for all
  SupervisionHook on_supervision;
  DetectionHook on_detections;
};

/// Builds the online options for one run from a resolved config.
OnlineOptions online_options(const Config& cfg);

struct LossRow {
  int window = 0;
  int last_frame = 0;
  LossReport report;
  bool applied = false;
};

struct OnlineResult {
  std::vector<MetricsRow> metrics;  ///< empty without ground truth
  std::vector<LossRow> losses;
  EstimatorParams final_params;
  std::vector<Correspondence> matches;  ///< of the last window
  std::vector<Trajectory> tracks;       ///< every trajectory seen
  int skipped_steps = 0;                ///< steps aborted on a non-finite loss
};

/// Frame loop: predict, score against ground truth, detect, track, update
/// each live trajectory's Kalman state, and at the end of every window match
/// to the pattern, build supervision and adapt the estimator.
OnlineResult run_online(const Sequence& seq, EstimatorParams params, const OnlineOptions& opts);

/// Initial estimator grid. With ground truth at `frame`: GT + offset + per-pixel
/// Gaussian noise, invalid pixels filled with the mean of the valid ones.
/// Without ground truth: the midpoint of [d_min, d_max]. Clamped to the range.
EstimatorParams initial_params(const Sequence& seq, int frame, double offset, double noise,
                               std::uint64_t seed, double d_min, double d_max);

/// Averages of the metrics rows over the last quarter of the run and at the
/// final frame.
struct MetricsSummary {
  double o1 = 0.0;
  double o2 = 0.0;
  double o5 = 0.0;
  double avg_l1 = 0.0;
  double final_avg_l1 = 0.0;
  double final_o1 = 0.0;
  std::size_t frames = 0;
};
MetricsSummary summarize(const std::vector<MetricsRow>& rows);

/// Element-wise mean of per-seed summaries.
MetricsSummary average(const std::vector<MetricsSummary>& runs);

/// Replaces the dot of a deterministic `fraction` of correspondences with one of
/// its neighbours in `graph`. The choice depends only on (seed, trajectory id).
void corrupt_matches(std::vector<Correspondence>& matches, const NeighborGraph& graph,
                     double fraction, std::uint64_t seed);

}  // namespace patflow
