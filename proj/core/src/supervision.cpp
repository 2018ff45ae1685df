#include "patflow/supervision.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "patflow/errors.hpp"

namespace patflow {

NeighborGraph build_neighbor_graph(const Pattern& pattern, int k) {
  const auto& dots = pattern.dots;
  const std::size_t m = dots.size();
  if (k < 1) throw ConfigError("neighbour count k must be >= 1");
  if (m <= static_cast<std::size_t>(k)) throw ConfigError("pattern needs more than k dots");

  // Candidates come from a bucket grid, widening the ring until k
  // neighbours are certain to be inside the searched square.
  double minx = dots[0].x, maxx = dots[0].x, miny = dots[0].y, maxy = dots[0].y;
  for (const auto& d : dots) {
    minx = std::min(minx, d.x);
    maxx = std::max(maxx, d.x);
    miny = std::min(miny, d.y);
    maxy = std::max(maxy, d.y);
  }
  const double area = std::max(1.0, (maxx - minx + 1.0) * (maxy - miny + 1.0));
  const double cell = std::max(1.0, std::sqrt(area * (k + 1) / static_cast<double>(m)));
  const int gw = static_cast<int>((maxx - minx) / cell) + 1;
  const int gh = static_cast<int>((maxy - miny) / cell) + 1;
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(gw) * gh);
  auto cx = [&](const Point2& p) { return std::min(gw - 1, static_cast<int>((p.x - minx) / cell)); };
  auto cy = [&](const Point2& p) { return std::min(gh - 1, static_cast<int>((p.y - miny) / cell)); };
  for (std::size_t i = 0; i < m; ++i) {
    buckets[static_cast<std::size_t>(cy(dots[i])) * gw + cx(dots[i])].push_back(static_cast<int>(i));
  }

  std::vector<std::vector<int>> knn(m);
  std::vector<std::pair<double, int>> cand;
  for (std::size_t i = 0; i < m; ++i) {
    const int bx = cx(dots[i]);
    const int by = cy(dots[i]);
    for (int ring = 1;; ++ring) {
      cand.clear();
      for (int y = std::max(0, by - ring); y <= std::min(gh - 1, by + ring); ++y) {
        for (int x = std::max(0, bx - ring); x <= std::min(gw - 1, bx + ring); ++x) {
          for (int j : buckets[static_cast<std::size_t>(y) * gw + x]) {
            if (j != static_cast<int>(i)) cand.emplace_back(distance(dots[i], dots[static_cast<std::size_t>(j)]), j);
          }
        }
      }
      const bool covers_all = bx - ring <= 0 && by - ring <= 0 && bx + ring >= gw - 1 && by + ring >= gh - 1;
      if (cand.size() >= static_cast<std::size_t>(k)) {
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
        // Any point outside the square is farther than `ring` cells from the
        // query's cell edge, so the k-th distance must not exceed that.
        if (covers_all || cand[static_cast<std::size_t>(k) - 1].first <= ring * cell) break;
      } else if (covers_all) {
        break;
      }
    }
    const std::size_t take = std::min(cand.size(), static_cast<std::size_t>(k));
    for (std::size_t r = 0; r < take; ++r) knn[i].push_back(cand[r].second);
  }

  NeighborGraph g;
  g.neighbors.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (int j : knn[i]) {
      g.neighbors[i].push_back(j);
      g.neighbors[static_cast<std::size_t>(j)].push_back(static_cast<int>(i));
    }
  }
  for (auto& list : g.neighbors) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return g;
}

int delta_check(Point2 cn, Point2 cm, Point2 bn, Point2 bm, double eps) {
  if (!(eps > 0.0)) throw ConfigError("epsilon must be > 0");
  return std::abs(distance(cn, cm) - distance(bn, bm)) < eps ? 1 : 0;
}

double SparseSupervision::mean_weight() const {
  if (points.empty()) return 0.0;
  double s = 0.0;
  for (const auto& p : points) s += p.weight;
  return s / static_cast<double>(points.size());
}

SparseSupervision compute_supervision(std::span<const Trajectory> trajectories,
                                      std::span<const Correspondence> correspondences,
                                      const Pattern& pattern, const NeighborGraph& graph,
                                      int first_frame, int last_frame,
                                      const SupervisionConfig& cfg) {
  if (!(cfg.beta > 0.0)) throw ConfigError("beta must be > 0");
  SparseSupervision out;
  out.first_frame = first_frame;
  out.last_frame = last_frame;

  std::unordered_map<int, const Trajectory*> by_id;
  for (const auto& t : trajectories) by_id.emplace(t.id, &t);

  // dot -> trajectory claiming it; -2 marks a dot claimed more than once.
  std::unordered_map<int, int> owner;
  for (const auto& c : correspondences) {
    auto [it, fresh] = owner.emplace(c.dot, c.trajectory);
    if (!fresh) it->second = -2;
  }

  for (const auto& c : correspondences) {
    const auto found = by_id.find(c.trajectory);
    if (found == by_id.end()) continue;
    const Trajectory& tr = *found->second;
    if (tr.length() < static_cast<std::size_t>(std::max(cfg.min_length, 1))) continue;
    const auto cn = tr.at(last_frame);
    if (!cn) continue;
    const Point2 bn = pattern.dots[static_cast<std::size_t>(c.dot)];

    const auto& nbrs = graph.neighbors[static_cast<std::size_t>(c.dot)];
    int valid = 0;
    for (int m : nbrs) {
      const auto o = owner.find(m);
      if (o == owner.end() || o->second < 0) continue;
      const auto mt = by_id.find(o->second);
      if (mt == by_id.end()) continue;
      const auto cm = mt->second->at(last_frame);
      if (!cm) continue;
      valid += delta_check(*cn, *cm, bn, pattern.dots[static_cast<std::size_t>(m)], cfg.epsilon);
    }
    const double s = nbrs.empty() ? 0.0 : static_cast<double>(valid) / static_cast<double>(nbrs.size());
    const double w = s * std::exp(-(c.sigma * c.sigma) / cfg.beta);
    out.trajectories.push_back({tr.id, c.dot, s, w});

    for (const auto& p : tr.points) {
      if (p.frame < first_frame || p.frame > last_frame) continue;
      // A component cut by the image edge has a biased centroid.
      if (p.at_border) continue;
      out.points.push_back({p.frame, p.position, disparity_from_correspondence(p.position, bn), w, tr.id});
    }
  }
  return out;
}

}  // namespace patflow
