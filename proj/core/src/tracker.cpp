#include "patflow/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>

#include "patflow/errors.hpp"
#include "patflow/simulator.hpp"

namespace patflow {

std::optional<Point2> Trajectory::at(int frame) const {
  if (points.empty() || frame < first_frame() || frame > last_frame()) return std::nullopt;
  return points[static_cast<std::size_t>(frame - first_frame())].position;
}

std::optional<std::size_t> nearest_match(Point2 query, std::span<const Dot> candidates,
                                         double row_tol, double gate_x) {
  std::optional<std::size_t> best;
  double best_dx = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Point2 c = candidates[i].center;
    if (std::abs(rho_y(c) - rho_y(query)) > row_tol) continue;
    const double dx = std::abs(rho_x(query) - rho_x(c));
    if (!best || dx < best_dx) {
      best = i;
      best_dx = dx;
    }
  }
  if (best && best_dx > gate_x) return std::nullopt;
  return best;
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(cfg) {
  if (cfg_.row_tol < 0.0) throw ConfigError("row_tol must be >= 0");
  if (!(cfg_.gate_x > 0.0)) throw ConfigError("gate_x must be > 0");
}

namespace {

// True when every point of `tr`, plus a new point at row y, stays within
// `tol` of the updated mean row.
bool keeps_row(const Trajectory& tr, double y, double tol) {
  double lo = y, hi = y;
  for (const auto& p : tr.points) {
    lo = std::min(lo, p.position.y);
    hi = std::max(hi, p.position.y);
  }
  const double n = static_cast<double>(tr.points.size());
  const double row = (tr.row * n + y) / (n + 1.0);
  return hi - row <= tol && row - lo <= tol;
}

}  // namespace

StepEvents Tracker::step(const DotSet& dots) {
  if (last_frame_ && dots.frame != *last_frame_ + 1) {
    throw DataError("tracker expected frame " + std::to_string(*last_frame_ + 1) + ", got " +
                    std::to_string(dots.frame));
  }

  StepEvents ev;
  const std::size_t n = dots.size();
  // claim[d] = index into live_ of the trajectory extending onto detection d.
  std::vector<int> claims(n, -1);
  std::vector<bool> conflicted(n, false);
  std::vector<std::optional<std::size_t>> proposal(live_.size());

  for (std::size_t k = 0; k < live_.size(); ++k) {
    const Point2 tail = live_[k].tail().position;
    const auto fwd = nearest_match(tail, dots.dots, cfg_.row_tol, cfg_.gate_x);
    if (!fwd) continue;
    const auto back = nearest_match(dots.center(*fwd), prev_.dots, cfg_.row_tol, cfg_.gate_x);
    if (!back || *back != tail_index_[k]) continue;
    if (!keeps_row(live_[k], dots.center(*fwd).y, cfg_.row_tol)) continue;
    proposal[k] = fwd;
    if (claims[*fwd] == -1) {
      claims[*fwd] = static_cast<int>(k);
    } else {
      conflicted[*fwd] = true;
    }
  }

  std::vector<Trajectory> next_live;
  std::vector<std::size_t> next_tail;
  std::vector<bool> taken(n, false);
  for (std::size_t k = 0; k < live_.size(); ++k) {
    auto& tr = live_[k];
    const auto& p = proposal[k];
    if (p && !conflicted[*p]) {
      const Point2 c = dots.center(*p);
      tr.row = (tr.row * static_cast<double>(tr.points.size()) + c.y) /
               static_cast<double>(tr.points.size() + 1);
      tr.points.push_back({dots.frame, c, dots.dots[*p].touches_border});
      taken[*p] = true;
      ev.extended.push_back(tr.id);
      next_live.push_back(std::move(tr));
      next_tail.push_back(*p);
    } else {
      tr.alive = false;
      ev.terminated.push_back(tr.id);
      finished_.push_back(std::move(tr));
    }
  }
  for (std::size_t d = 0; d < n; ++d) {
    if (conflicted[d]) ++ev.conflicts;
    if (taken[d]) continue;
    Trajectory tr;
    tr.id = next_id_++;
    tr.points.push_back({dots.frame, dots.center(d), dots.dots[d].touches_border});
    tr.row = dots.center(d).y;
    ev.spawned.push_back(tr.id);
    next_live.push_back(std::move(tr));
    next_tail.push_back(d);
  }

  live_ = std::move(next_live);
  tail_index_ = std::move(next_tail);
  prev_ = dots;
  last_frame_ = dots.frame;
  return ev;
}

std::vector<Trajectory> Tracker::all() const {
  std::vector<Trajectory> out = finished_;
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  auto live = live_;
  std::sort(live.begin(), live.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  out.insert(out.end(), live.begin(), live.end());
  return out;
}

const Trajectory* Tracker::find_live(int id) const {
  for (const auto& t : live_) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

void Tracker::prune_finished_before(int frame) {
  std::erase_if(finished_, [frame](const Trajectory& t) { return t.last_frame() < frame; });
}

LinkScore score_links(std::span<const Trajectory> tracks,
                      std::span<const std::vector<VisibleDot>> visible, int width, int height,
                      double match_radius, double merge_radius, double border_margin) {
  // Per frame: resolvable flag for each visible dot id.
  std::vector<std::map<int, Point2>> resolvable(visible.size());
  for (std::size_t f = 0; f < visible.size(); ++f) {
    const auto& vis = visible[f];
    for (std::size_t i = 0; i < vis.size(); ++i) {
      const Point2 p = vis[i].position;
      if (p.x < border_margin || p.y < border_margin || p.x > width - 1 - border_margin ||
          p.y > height - 1 - border_margin) {
        continue;
      }
      bool crowded = false;
      for (std::size_t j = 0; j < vis.size() && !crowded; ++j) {
        crowded = j != i && distance(p, vis[j].position) < merge_radius;
      }
      if (!crowded) resolvable[f].emplace(vis[i].dot, p);
    }
  }

  // Maps a tracked point to the unique visible dot within match_radius.
  auto label = [&](int frame, Point2 p) -> std::optional<int> {
    if (frame < 0 || static_cast<std::size_t>(frame) >= visible.size()) return std::nullopt;
    std::optional<int> hit;
    for (const auto& v : visible[static_cast<std::size_t>(frame)]) {
      if (distance(v.position, p) <= match_radius) {
        if (hit) return std::nullopt;
        hit = v.dot;
      }
    }
    return hit;
  };

  LinkScore score;
  std::set<std::pair<int, int>> true_links;  // (frame of head, dot)
  for (std::size_t f = 1; f < resolvable.size(); ++f) {
    for (const auto& [dot, p] : resolvable[f]) {
      if (resolvable[f - 1].count(dot)) true_links.emplace(static_cast<int>(f), dot);
    }
  }
  score.true_links = true_links.size();
  std::set<std::pair<int, int>> credited;

  for (const auto& tr : tracks) {
    for (std::size_t k = 1; k < tr.points.size(); ++k) {
      const auto& a = tr.points[k - 1];
      const auto& b = tr.points[k];
      const auto la = label(a.frame, a.position);
      const auto lb = label(b.frame, b.position);
      if (!la || !lb) continue;
      const bool ra = resolvable[static_cast<std::size_t>(a.frame)].count(*la) > 0;
      const bool rb = resolvable[static_cast<std::size_t>(b.frame)].count(*lb) > 0;
      if (!ra || !rb) continue;
      ++score.recovered_links;
      if (*la == *lb && true_links.count({b.frame, *lb}) && credited.emplace(b.frame, *lb).second) {
        ++score.correct_links;
      }
    }
  }
  return score;
}

}  // namespace patflow
