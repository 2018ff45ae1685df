#pragma once

#include <optional>
#include <span>
#include <vector>

#include "patflow/detection.hpp"
#include "patflow/image.hpp"

namespace patflow {

struct TrackerConfig {
  double row_tol = 1.5;  ///< epipolar tolerance, px
  double gate_x = 6.0;   ///< maximum horizontal displacement per frame, px
};

struct TrackPoint {
  int frame = 0;
  Point2 position;
  bool at_border = false;  ///< detection touched the image edge
};

/// One multi-frame pattern flow: consecutive detections of the same light ray.
struct Trajectory {
  int id = -1;
  std::vector<TrackPoint> points;
  bool alive = true;
  double row = 0.0;  ///< mean y of the points

  int first_frame() const { return points.front().frame; }
  int last_frame() const { return points.back().frame; }
  std::size_t length() const { return points.size(); }
  const TrackPoint& tail() const { return points.back(); }
  /// Point at `frame`, if the trajectory covers it.
  std::optional<Point2> at(int frame) const;
};

/// Horizontal nearest neighbour among row-compatible candidates. Ties go to
/// the smaller index; nullopt when nothing is within `gate_x`.
std::optional<std::size_t> nearest_match(Point2 query, std::span<const Dot> candidates,
                                         double row_tol, double gate_x);

struct StepEvents {
  std::vector<int> extended;
  std::vector<int> terminated;
  std::vector<int> spawned;
  int conflicts = 0;  ///< detections claimed by more than one trajectory
};

/// Frame-sequential tracker with forward-backward consistency.
class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg = {});

  /// Consumes the detections of the next frame. Throws DataError when
  /// `dots.frame` does not follow the previous frame.
  StepEvents step(const DotSet& dots);

  const std::vector<Trajectory>& live() const { return live_; }
  const std::vector<Trajectory>& finished() const { return finished_; }
  /// All trajectories, finished first, each group in id order.
  std::vector<Trajectory> all() const;
  const Trajectory* find_live(int id) const;

  std::optional<int> last_frame() const { return last_frame_; }
  const TrackerConfig& config() const { return cfg_; }
  /// Drops finished trajectories that ended before `frame`.
  void prune_finished_before(int frame);

 private:
  TrackerConfig cfg_;
  std::vector<Trajectory> live_;
  std::vector<Trajectory> finished_;
  std::vector<std::size_t> tail_index_;  // detection index of each live tail in prev_
  DotSet prev_;
  std::optional<int> last_frame_;
  int next_id_ = 0;
};

/// Link-level comparison against simulator truth.
struct LinkScore {
  std::size_t true_links = 0;
  std::size_t recovered_links = 0;  ///< tracked links whose endpoints map to true dots
  std::size_t correct_links = 0;
  double recall() const { return true_links ? double(correct_links) / double(true_links) : 1.0; }
  double precision() const {
    return recovered_links ? double(correct_links) / double(recovered_links) : 1.0;
  }
};

struct VisibleDot;

/// Scores tracked links against per-frame visible dots. A true dot is
/// resolvable when no other visible dot lies within `merge_radius` and its
/// center is at least `border_margin` from the image edge; only links between
/// resolvable dots are scored. Tracked points map to the unique true dot
/// within `match_radius`, and each true link is credited at most once.
/// Dots cut by an occlusion edge shift their centroid by up to about 1 px,
/// so the match radius sits above that and well below half the merge radius.
///
/// Two splats of width s fuse into one component at threshold tau once they
/// are closer than s*sqrt(8*ln(2/tau)), about 4.9 px for the default
/// detector; the 6 px default leaves room for pixel discretization.
LinkScore score_links(std::span<const Trajectory> tracks,
                      std::span<const std::vector<VisibleDot>> visible, int width, int height,
                      double match_radius = 1.5, double merge_radius = 6.0,
                      double border_margin = 2.5);

}  // namespace patflow
