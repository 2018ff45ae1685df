#pragma once

#include <span>
#include <vector>

#include "patflow/image.hpp"
#include "patflow/matcher.hpp"
#include "patflow/tracker.hpp"

namespace patflow {

/// Symmetric neighbour lists over pattern dots.
struct NeighborGraph {
  std::vector<std::vector<int>> neighbors;

  std::size_t size() const { return neighbors.size(); }
  /// Z(b): number of neighbours of dot `id`.
  std::size_t degree(int id) const { return neighbors[static_cast<std::size_t>(id)].size(); }
};

/// k-nearest neighbours in projector space (ties by index), symmetrized by
/// union. Lists are sorted by dot id.
NeighborGraph build_neighbor_graph(const Pattern& pattern, int k);

/// 1 when the camera-space and projector-space distances of two
/// correspondences agree to within eps.
int delta_check(Point2 cn, Point2 cm, Point2 bn, Point2 bm, double eps);

struct SupervisionConfig {
  double epsilon = 2.0;  ///< px
  int neighbors = 8;     ///< k of the neighbour graph
  double beta = 1.0;     ///< px^2
  int min_length = 3;    ///< frames a trajectory needs before it supervises
};

struct SupervisionPoint {
  int frame = 0;
  Point2 position;        ///< camera point c
  double disparity = 0.0; ///< d_pgt
  double weight = 0.0;    ///< w in [0,1]
  int trajectory = -1;
};

struct TrajectoryConfidence {
  int trajectory = -1;
  int dot = -1;
  double consistency = 0.0;  ///< S_n
  double weight = 0.0;       ///< S_n * exp(-sigma^2 / beta)
};

struct SparseSupervision {
  int first_frame = 0;
  int last_frame = -1;
  std::vector<SupervisionPoint> points;
  std::vector<TrajectoryConfidence> trajectories;

  bool empty() const { return points.empty(); }
  double mean_weight() const;
};

/// Pseudo ground truth for every point of every matched trajectory inside
/// [first_frame, last_frame], except points whose detection touched the image
/// edge. Spatial consistency is evaluated at `last_frame`; neighbours without a live trajectory there contribute 0 but
/// still count in Z. A dot claimed by several correspondences counts as absent.
SparseSupervision compute_supervision(std::span<const Trajectory> trajectories,
                                      std::span<const Correspondence> correspondences,
                                      const Pattern& pattern, const NeighborGraph& graph,
                                      int first_frame, int last_frame,
                                      const SupervisionConfig& cfg);

}  // namespace patflow
