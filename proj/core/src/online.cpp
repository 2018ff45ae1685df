#include "patflow/online.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "patflow/errors.hpp"

namespace patflow {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

StepOptions step_for(LossVariant v, StepOptions s) {
  switch (v) {
    case LossVariant::None:
      s.lr = 0.0;
      break;
    case LossVariant::Photometric:
      s.use_disparity = false;
      break;
    case LossVariant::Disparity:
      s.use_weights = false;
      s.alpha = 0.0;
      break;
    case LossVariant::Masked:
      s.alpha = 0.0;
      break;
    case LossVariant::Full:
      break;
  }
  return s;
}

}  // namespace

LossVariant parse_loss_variant(const std::string& name) {
  if (name == "none") return LossVariant::None;
  if (name == "photometric") return LossVariant::Photometric;
  if (name == "disparity") return LossVariant::Disparity;
  if (name == "masked") return LossVariant::Masked;
  if (name == "full") return LossVariant::Full;
  throw ConfigError("unknown loss variant '" + name + "'");
}

std::string loss_variant_name(LossVariant v) {
  switch (v) {
    case LossVariant::None: return "none";
    case LossVariant::Photometric: return "photometric";
    case LossVariant::Disparity: return "disparity";
    case LossVariant::Masked: return "masked";
    case LossVariant::Full: return "full";
  }
  return "full";
}

OnlineOptions online_options(const Config& cfg) {
  OnlineOptions o;
  o.detection = cfg.detection;
  o.tracker = cfg.tracker;
  o.kalman = cfg.matcher;
  o.supervision = cfg.supervision;
  o.window = cfg.adaptation.window;
  o.steps_per_window = cfg.adaptation.steps_per_window;
  o.step.lr = cfg.adaptation.lr;
  o.step.alpha = cfg.adaptation.alpha;
  o.step.d_min = cfg.adaptation.d_min;
  o.step.d_max = cfg.adaptation.d_max;
  o.variant = parse_loss_variant(cfg.adaptation.loss);
  o.corrupt = cfg.adaptation.corrupt;
  o.corrupt_seed = cfg.seed;
  return o;
}

void corrupt_matches(std::vector<Correspondence>& matches, const NeighborGraph& graph,
                     double fraction, std::uint64_t seed) {
  if (fraction <= 0.0) return;
  for (auto& c : matches) {
    const std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(c.trajectory)));
    const double r = static_cast<double>(h >> 11) * 0x1.0p-53;
    if (r >= fraction) continue;
    const auto& nb = graph.neighbors[static_cast<std::size_t>(c.dot)];
    if (nb.empty()) continue;
    c.dot = nb[splitmix64(h) % nb.size()];
  }
}

EstimatorParams initial_params(const Sequence& seq, int frame, double offset, double noise,
                               std::uint64_t seed, double d_min, double d_max) {
  EstimatorParams p;
  const int w = seq.meta.width;
  const int h = seq.meta.height;
  p.grid = Image<double>(w, h, 0.5 * (d_min + d_max));
  if (!seq.has_gt()) return p;
  if (frame < 0 || frame >= static_cast<int>(seq.gt.size())) throw ConfigError("initial frame out of range");

  const auto& gt = seq.gt[static_cast<std::size_t>(frame)];
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.values.size(); ++i) {
    if (gt.valid[i]) {
      sum += gt.values[i];
      ++n;
    }
  }
  const double fill = n ? sum / static_cast<double>(n) : 0.5 * (d_min + d_max);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < gt.values.size(); ++i) {
    const double base = gt.valid[i] ? gt.values[i] : fill;
    const double e = noise > 0.0 ? noise * gauss(rng) : 0.0;
    p.grid[i] = std::clamp(base + offset + e, d_min, d_max);
  }
  return p;
}

OnlineResult run_online(const Sequence& seq, EstimatorParams params, const OnlineOptions& opts) {
  const int total = static_cast<int>(seq.frames.size());
  const int begin = opts.start_frame;
  const int end = opts.end_frame < 0 ? total : std::min(opts.end_frame, total);
  if (begin < 0 || begin > end) throw ConfigError("invalid frame range");
  if (params.grid.width() != seq.meta.width || params.grid.height() != seq.meta.height) {
    throw ConfigError("estimator grid does not match the sequence size");
  }

  const StepOptions step = step_for(opts.variant, opts.step);
  const bool adapting = opts.variant != LossVariant::None && step.lr > 0.0;
  const auto graph = build_neighbor_graph(seq.pattern, std::min<int>(opts.supervision.neighbors,
                                                                     static_cast<int>(seq.pattern.dots.size()) - 1));
  const PatternIndex index(seq.pattern.dots);

  OnlineResult res;
  Tracker tracker(opts.tracker);
  WindowBuffer buffer(opts.window);
  std::map<int, KalmanState> filters;
  int window_id = 0;

  for (int t = begin; t < end; ++t) {
    const auto& frame = seq.frames[static_cast<std::size_t>(t)];
    DisparityMap pred = estimator_predict(params);
    if (seq.has_gt()) res.metrics.push_back(compute_metrics(pred, seq.gt[static_cast<std::size_t>(t)], t));

    DotSet dots = detect_dots(frame, opts.detection, t);
    if (opts.on_detections) opts.on_detections(dots);
    const auto events = tracker.step(dots);
    for (int id : events.terminated) filters.erase(id);

    for (const auto& traj : tracker.live()) {
      const auto z = measure(traj.tail().position, pred);
      if (!z) continue;
      auto& st = filters[traj.id];
      st = kf_update(st, *z, opts.kalman).state;
    }

    buffer.push(t, frame, std::move(dots), std::move(pred));
    if (!buffer.full()) continue;

    std::vector<Correspondence> matches;
    for (const auto& traj : tracker.live()) {
      const auto it = filters.find(traj.id);
      if (it == filters.end() || it->second.count == 0) continue;
      const auto dot = index.match(it->second.mean, traj.row, opts.tracker.row_tol);
      if (!dot) continue;
      matches.push_back({traj.id, *dot, it->second.mean, it->second.sigma(), it->second.count});
    }
    corrupt_matches(matches, graph, opts.corrupt, opts.corrupt_seed);

    buffer.supervision = compute_supervision(tracker.live(), matches, seq.pattern, graph,
                                             buffer.first_frame(), buffer.last_frame(),
                                             opts.supervision);
    if (opts.on_supervision) opts.on_supervision(window_id, buffer.supervision);

    for (int s = 0; s < opts.steps_per_window; ++s) {
      LossRow row{window_id, buffer.last_frame(), {}, false};
      if (adapting) {
        auto r = adapt_step(params, buffer, seq.pattern.image, step);
        row.report = r.report;
        row.applied = r.applied;
        if (!r.report.finite) ++res.skipped_steps;
        params = std::move(r.params);
      } else {
        row.report = evaluate_loss(params, buffer, seq.pattern.image, step).report;
      }
      res.losses.push_back(row);
    }
    res.matches = std::move(matches);
    buffer.clear();
    ++window_id;
  }

  res.final_params = std::move(params);
  res.tracks = tracker.all();
  return res;
}

MetricsSummary summarize(const std::vector<MetricsRow>& rows) {
  MetricsSummary s;
  if (rows.empty()) return s;
  const std::size_t n = rows.size();
  const std::size_t from = n - std::max<std::size_t>(1, n / 4);
  for (std::size_t i = from; i < n; ++i) {
    s.o1 += rows[i].o1;
    s.o2 += rows[i].o2;
    s.o5 += rows[i].o5;
    s.avg_l1 += rows[i].avg_l1;
  }
  const double k = static_cast<double>(n - from);
  s.o1 /= k;
  s.o2 /= k;
  s.o5 /= k;
  s.avg_l1 /= k;
  s.final_avg_l1 = rows.back().avg_l1;
  s.final_o1 = rows.back().o1;
  s.frames = n;
  return s;
}

MetricsSummary average(const std::vector<MetricsSummary>& runs) {
  MetricsSummary m;
  if (runs.empty()) return m;
  for (const auto& r : runs) {
    m.o1 += r.o1;
    m.o2 += r.o2;
    m.o5 += r.o5;
    m.avg_l1 += r.avg_l1;
    m.final_avg_l1 += r.final_avg_l1;
    m.final_o1 += r.final_o1;
    m.frames += r.frames;
  }
  const double k = static_cast<double>(runs.size());
  m.o1 /= k;
  m.o2 /= k;
  m.o5 /= k;
  m.avg_l1 /= k;
  m.final_avg_l1 /= k;
  m.final_o1 /= k;
  m.frames /= runs.size();
  return m;
}

}  // namespace patflow
