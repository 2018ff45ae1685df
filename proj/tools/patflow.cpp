// patflow command-line tool: simulate, detect, track, adapt, evaluate, report.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "patflow/config.hpp"
#include "patflow/dataset.hpp"
#include "patflow/errors.hpp"
#include "patflow/format.hpp"
#include "patflow/image_io.hpp"
#include "patflow/metrics.hpp"
#include "patflow/online.hpp"
#include "patflow/simulator.hpp"
#include "patflow/tracker.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace patflow;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// Flag values that override the config file when given.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> width, height, dots, frames;
  std::optional<double> min_spacing, sigma_psf, noise, dropout, v_max;
  std::optional<std::string> scene;
  std::optional<double> threshold;
  std::optional<int> min_area, max_area;
  std::optional<double> row_tol, gate_x;
  std::optional<double> q, r;
  std::optional<double> epsilon, beta;
  std::optional<int> neighbors, min_length;
  std::optional<int> window, seeds, steps_per_window;
  std::optional<double> lr, alpha, smoothness, spread, photometric_spread, d_min, d_max, init_offset, init_noise, corrupt;
  std::optional<std::string> loss;

  template <typename T>
  static void set(const std::optional<T>& from, T& to) {
    if (from) to = *from;
  }

  void apply(Config& c) const {
    set(seed, c.seed);
    set(width, c.simulator.width);
    set(height, c.simulator.height);
    set(dots, c.simulator.dot_count);
    set(frames, c.simulator.frames);
    set(min_spacing, c.simulator.min_spacing);
    set(sigma_psf, c.simulator.sigma_psf);
    set(noise, c.simulator.noise);
    set(dropout, c.simulator.dropout);
    set(v_max, c.simulator.v_max);
    set(scene, c.simulator.scene);
    set(threshold, c.detection.threshold);
    set(min_area, c.detection.min_area);
    set(max_area, c.detection.max_area);
    set(row_tol, c.tracker.row_tol);
    set(gate_x, c.tracker.gate_x);
    set(q, c.matcher.process);
    set(r, c.matcher.measurement);
    set(epsilon, c.supervision.epsilon);
    set(beta, c.supervision.beta);
    set(neighbors, c.supervision.neighbors);
    set(min_length, c.supervision.min_length);
    set(window, c.adaptation.window);
    set(seeds, c.adaptation.seeds);
    set(steps_per_window, c.adaptation.steps_per_window);
    set(lr, c.adaptation.lr);
    set(alpha, c.adaptation.alpha);
    set(smoothness, c.adaptation.smoothness);
    set(spread, c.adaptation.spread);
    set(photometric_spread, c.adaptation.photometric_spread);
    set(d_min, c.adaptation.d_min);
    set(d_max, c.adaptation.d_max);
    set(init_offset, c.adaptation.init_offset);
    set(init_noise, c.adaptation.init_noise);
    set(corrupt, c.adaptation.corrupt);
    set(loss, c.adaptation.loss);
  }
};

void add_simulator_flags(CLI::App* app, Overrides& o) {
  app->add_option("--width", o.width, "Image width, px");
  app->add_option("--height", o.height, "Image height, px");
  app->add_option("--dots", o.dots, "Number of pattern dots");
  app->add_option("--frames", o.frames, "Number of frames");
  app->add_option("--min-spacing", o.min_spacing, "Minimum dot spacing, px");
  app->add_option("--sigma-psf", o.sigma_psf, "Dot blur, px");
  app->add_option("--noise", o.noise, "Pixel noise std-dev");
  app->add_option("--dropout", o.dropout, "Per-dot drop probability");
  app->add_option("--v-max", o.v_max, "Maximum dot speed, px/frame");
  app->add_option("--scene", o.scene, "nonrigid | static | sliding");
}

void add_detection_flags(CLI::App* app, Overrides& o) {
  app->add_option("--threshold", o.threshold, "Detection threshold");
  app->add_option("--min-area", o.min_area, "Minimum blob area, px");
  app->add_option("--max-area", o.max_area, "Maximum blob area, px");
}

void add_tracker_flags(CLI::App* app, Overrides& o) {
  app->add_option("--row-tol", o.row_tol, "Epipolar row tolerance, px");
  app->add_option("--gate-x", o.gate_x, "Horizontal gate, px");
}

void add_adaptation_flags(CLI::App* app, Overrides& o) {
  app->add_option("--q", o.q, "Kalman process noise, px^2");
  app->add_option("--r", o.r, "Kalman measurement noise, px^2");
  app->add_option("--epsilon", o.epsilon, "Spatial consistency threshold, px");
  app->add_option("--beta", o.beta, "Confidence temperature, px^2");
  app->add_option("--neighbors", o.neighbors, "Neighbour count k");
  app->add_option("--min-length", o.min_length, "Minimum trajectory length");
  app->add_option("--window", o.window, "Window length T");
  app->add_option("--seeds", o.seeds, "Number of replicate runs");
  app->add_option("--steps-per-window", o.steps_per_window, "Gradient steps per window");
  app->add_option("--lr", o.lr, "Learning rate");
  app->add_option("--alpha", o.alpha, "Photometric weight");
  app->add_option("--smoothness", o.smoothness, "Total-variation weight");
  app->add_option("--spread", o.spread, "Update smoothing radius, px");
  app->add_option("--photometric-spread", o.photometric_spread,
                  "Update smoothing radius for the photometric term, px");
  app->add_option("--d-min", o.d_min, "Minimum disparity, px");
  app->add_option("--d-max", o.d_max, "Maximum disparity, px");
  app->add_option("--init-offset", o.init_offset, "Initial grid offset from ground truth, px");
  app->add_option("--init-noise", o.init_noise, "Initial grid noise std-dev, px");
  app->add_option("--loss", o.loss, "none | photometric | disparity | masked | full");
  app->add_option("--corrupt", o.corrupt, "Fraction of correspondences replaced by a neighbour");
}

Config resolve(const std::optional<std::string>& config_path, const Overrides& o) {
  Config cfg;
  if (config_path) apply_config_file(cfg, *config_path);
  o.apply(cfg);
  validate_config(cfg);
  return cfg;
}

ScenePreset preset_of(const std::string& name) {
  if (name == "static") return ScenePreset::Static;
  if (name == "sliding") return ScenePreset::Sliding;
  return ScenePreset::NonRigid;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string());
}

json track_json(const Trajectory& t) {
  json j;
  j["id"] = t.id;
  j["alive"] = t.alive;
  json pts = json::array();
  for (const auto& p : t.points) pts.push_back({p.frame, round6(p.position.x), round6(p.position.y)});
  j["points"] = std::move(pts);
  return j;
}

json summary_json(const MetricsSummary& s) {
  return {{"final_quarter_o1", round6(s.o1)},         {"final_quarter_o2", round6(s.o2)},
          {"final_quarter_o5", round6(s.o5)},         {"final_quarter_avg_l1", round6(s.avg_l1)},
          {"final_frame_o1", round6(s.final_o1)},     {"final_frame_avg_l1", round6(s.final_avg_l1)}};
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Config& cfg, const fs::path& out) {
  const auto& s = cfg.simulator;
  PatternOptions po;
  po.width = s.width;
  po.height = s.height;
  po.dot_count = s.dot_count;
  po.min_spacing = s.min_spacing;
  po.sigma_psf = s.sigma_psf;
  po.seed = cfg.seed;
  Pattern pattern = generate_pattern(po);
  const Scene scene = make_scene(preset_of(s.scene), s.width, s.height, cfg.seed);

  RenderOptions ro;
  ro.frames = s.frames;
  ro.sigma_psf = s.sigma_psf;
  ro.noise = s.noise;
  ro.dropout = s.dropout;
  ro.d_min = cfg.adaptation.d_min;
  ro.d_max = cfg.adaptation.d_max;
  ro.v_max = s.v_max;
  ro.seed = cfg.seed;
  auto bundle = render_sequence(pattern, scene, ro);

  DatasetMeta meta;
  meta.seed = cfg.seed;
  meta.scene = s.scene;
  meta.sigma_psf = s.sigma_psf;
  meta.noise = s.noise;
  meta.dropout = s.dropout;
  meta.v_max = s.v_max;
  meta.d_min = cfg.adaptation.d_min;
  meta.d_max = cfg.adaptation.d_max;
  write_dataset(out, make_sequence(meta, std::move(pattern), std::move(bundle)));
  std::cout << "wrote " << s.frames << " frames to " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- detect

int cmd_detect(const Config& cfg, const fs::path& data, const fs::path& out) {
  const Sequence seq = read_dataset(data);
  ensure_dir(out / "dots");
  std::size_t total = 0;
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    const auto dots = detect_dots(seq.frames[f], cfg.detection, static_cast<int>(f));
    std::ostringstream csv;
    csv << "x,y,response\n";
    for (const auto& d : dots.dots) {
      csv << fmt6(d.center.x) << ',' << fmt6(d.center.y) << ',' << fmt6(d.response) << '\n';
    }
    write_text(out / "dots" / frame_name("", static_cast<int>(f), ".csv"), csv.str());
    total += dots.size();
  }
  std::cout << "detected " << total << " dots in " << seq.frames.size() << " frames\n";
  return 0;
}

// ---------------------------------------------------------------- track

int cmd_track(const Config& cfg, const fs::path& data, const fs::path& out) {
  const Sequence seq = read_dataset(data);
  ensure_dir(out);
  Tracker tracker(cfg.tracker);
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    tracker.step(detect_dots(seq.frames[f], cfg.detection, static_cast<int>(f)));
  }
  std::ostringstream lines;
  const auto tracks = tracker.all();
  for (const auto& t : tracks) lines << track_json(t).dump() << '\n';
  write_text(out / "tracks.jsonl", lines.str());
  std::cout << "tracks=" << tracks.size() << "\n";

  if (!seq.true_flow.empty()) {
    std::vector<std::vector<VisibleDot>> visible(seq.frames.size());
    for (std::size_t m = 0; m < seq.true_flow.size(); ++m) {
      for (const auto& p : seq.true_flow[m]) {
        if (p.frame >= 0 && p.frame < static_cast<int>(visible.size())) {
          visible[static_cast<std::size_t>(p.frame)].push_back({static_cast<int>(m), p.position});
        }
      }
    }
    const auto score = score_links(tracks, visible, seq.meta.width, seq.meta.height);
    std::cout << "link_recall=" << fmt6(score.recall()) << ",link_precision=" << fmt6(score.precision())
              << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- adapt

struct Replicate {
  OnlineResult result;
  MetricsSummary summary;
};

Replicate run_replicate(const Sequence& seq, const Config& cfg, int k, OnlineOptions opts) {
  const auto& a = cfg.adaptation;
  const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(k);
  EstimatorParams p = initial_params(seq, 0, a.init_offset, a.init_noise, seed, a.d_min, a.d_max);
  p.smoothness = a.smoothness;
  p.spread = a.spread;
  p.photometric_spread = a.photometric_spread;
  opts.corrupt_seed = seed;
  Replicate r;
  r.result = run_online(seq, std::move(p), opts);
  r.summary = summarize(r.result.metrics);
  return r;
}

int cmd_adapt(const Config& cfg, const fs::path& data, const fs::path& out, bool dump) {
  const Sequence seq = read_dataset(data);
  ensure_dir(out);
  const int seeds = cfg.adaptation.seeds;

  std::vector<Replicate> runs;
  for (int k = 0; k < seeds; ++k) {
    OnlineOptions opts = online_options(cfg);
    if (dump && k == 0) {
      ensure_dir(out / "dots");
      opts.on_detections = [&out](const DotSet& d) {
        std::ostringstream csv;
        csv << "x,y,response\n";
        for (const auto& dot : d.dots) {
          csv << fmt6(dot.center.x) << ',' << fmt6(dot.center.y) << ',' << fmt6(dot.response) << '\n';
        }
        write_text(out / "dots" / frame_name("", d.frame, ".csv"), csv.str());
      };
      opts.on_supervision = [&out](int window, const SparseSupervision& s) {
        std::ostringstream csv;
        csv << "x,y,d_pgt,w\n";
        for (const auto& p : s.points) {
          csv << fmt6(p.position.x) << ',' << fmt6(p.position.y) << ',' << fmt6(p.disparity) << ','
              << fmt6(p.weight) << '\n';
        }
        write_text(out / frame_name("pgt_", window, ".csv"), csv.str());
      };
    }
    runs.push_back(run_replicate(seq, cfg, k, std::move(opts)));
    std::cout << "seed " << cfg.seed + static_cast<std::uint64_t>(k) << ": windows="
              << runs.back().result.losses.size();
    if (seq.has_gt()) std::cout << " final_quarter_o1=" << fmt6(runs.back().summary.o1);
    std::cout << "\n";
  }
  const auto& first = runs.front().result;

  if (seq.has_gt()) {
    std::ostringstream csv;
    csv << "frame,o1,o2,o5,avg_l1\n";
    for (std::size_t i = 0; i < first.metrics.size(); ++i) {
      double o1 = 0, o2 = 0, o5 = 0, l1 = 0;
      for (const auto& r : runs) {
        o1 += r.result.metrics[i].o1;
        o2 += r.result.metrics[i].o2;
        o5 += r.result.metrics[i].o5;
        l1 += r.result.metrics[i].avg_l1;
      }
      const double k = static_cast<double>(runs.size());
      csv << first.metrics[i].frame << ',' << fmt6(o1 / k) << ',' << fmt6(o2 / k) << ',' << fmt6(o5 / k)
          << ',' << fmt6(l1 / k) << '\n';
    }
    write_text(out / "metrics.csv", csv.str());
  }

  {
    std::ostringstream csv;
    csv << "window,L,L_D,L_P,n_points,mean_w\n";
    for (const auto& l : first.losses) {
      csv << l.window << ',' << fmt6(l.report.total) << ',' << fmt6(l.report.disparity) << ','
          << fmt6(l.report.photometric) << ',' << l.report.points << ',' << fmt6(l.report.mean_weight)
          << '\n';
    }
    write_text(out / "loss.csv", csv.str());
  }
  write_pfm(out / "disp_final.pfm", estimator_predict(first.final_params));

  if (dump) {
    std::ostringstream m;
    m << "traj_id,dot_id,mu,sigma,n_meas\n";
    for (const auto& c : first.matches) {
      m << c.trajectory << ',' << c.dot << ',' << fmt6(c.mu) << ',' << fmt6(c.sigma) << ',' << c.count << '\n';
    }
    write_text(out / "matches.csv", m.str());
    std::ostringstream t;
    for (const auto& tr : first.tracks) t << track_json(tr).dump() << '\n';
    write_text(out / "tracks.jsonl", t.str());
  }

  json report;
  report["config"] = json::parse(config_to_json(cfg));
  report["dataset"] = fs::path(data).lexically_normal().string();
  report["frames"] = seq.frames.size();
  report["windows"] = first.losses.size();
  int skipped = 0;
  for (const auto& r : runs) skipped += r.result.skipped_steps;
  report["skipped_steps"] = skipped;
  if (seq.has_gt()) {
    std::vector<MetricsSummary> sums;
    json per_seed = json::array();
    for (const auto& r : runs) {
      sums.push_back(r.summary);
      per_seed.push_back(summary_json(r.summary));
    }
    report["summary"] = summary_json(average(sums));
    report["per_seed"] = std::move(per_seed);
  }
  write_text(out / "report.json", report.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const fs::path& pred, const fs::path& gt) {
  const auto row = compute_metrics(read_pfm(pred), read_pfm(gt));
  std::cout << "o1=" << fmt6(row.o1) << ",o2=" << fmt6(row.o2) << ",o5=" << fmt6(row.o5)
            << ",avg_l1=" << fmt6(row.avg_l1) << "\n";
  return 0;
}

// ---------------------------------------------------------------- report

int cmd_report(const Config& cfg, const fs::path& data, const fs::path& out, double corrupt) {
  const Sequence seq = read_dataset(data);
  if (!seq.has_gt()) throw DataError("report needs ground truth in " + (data / "gt").string());
  ensure_dir(out);

  struct Row {
    std::string loss;
    double corrupt;
  };
  const std::vector<Row> rows = {{"none", 0.0},      {"photometric", 0.0}, {"disparity", 0.0},
                                 {"disparity", corrupt}, {"masked", 0.0},  {"masked", corrupt},
                                 {"full", 0.0}};
  std::ostringstream csv;
  csv << "loss,corrupt,o1,o2,o5,avg_l1\n";
  json table = json::array();
  for (const auto& row : rows) {
    Config c = cfg;
    c.adaptation.loss = row.loss;
    c.adaptation.corrupt = row.corrupt;
    std::vector<MetricsSummary> sums;
    for (int k = 0; k < c.adaptation.seeds; ++k) {
      sums.push_back(run_replicate(seq, c, k, online_options(c)).summary);
    }
    const auto s = average(sums);
    csv << row.loss << ',' << fmt6(row.corrupt) << ',' << fmt6(s.o1) << ',' << fmt6(s.o2) << ','
        << fmt6(s.o5) << ',' << fmt6(s.avg_l1) << '\n';
    json j = summary_json(s);
    j["loss"] = row.loss;
    j["corrupt"] = round6(row.corrupt);
    table.push_back(std::move(j));
    std::cout << row.loss << " corrupt=" << fmt6(row.corrupt) << " avg_l1=" << fmt6(s.avg_l1) << "\n";
  }
  write_text(out / "ablation.csv", csv.str());
  json report;
  report["config"] = json::parse(config_to_json(cfg));
  report["dataset"] = fs::path(data).lexically_normal().string();
  report["ablation"] = std::move(table);
  write_text(out / "report.json", report.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-frame pattern flow toolkit for structured-light online adaptation"};
  app.require_subcommand(1);

  Overrides o;
  std::optional<std::string> config_path;
  std::string out, data, pred, gt;
  bool dump = false;
  double report_corrupt = 0.1;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", o.seed, "Seed for all randomness");
  };

  auto* sim = app.add_subcommand("simulate", "Render a synthetic dataset");
  common(sim);
  sim->add_option("--out", out, "Output dataset directory")->required();
  add_simulator_flags(sim, o);
  sim->add_option("--d-min", o.d_min, "Minimum disparity, px");
  sim->add_option("--d-max", o.d_max, "Maximum disparity, px");

  auto* det = app.add_subcommand("detect", "Detect dots in every frame");
  common(det);
  det->add_option("--data", data, "Dataset directory")->required();
  det->add_option("--out", out, "Output directory")->required();
  add_detection_flags(det, o);

  auto* trk = app.add_subcommand("track", "Track multi-frame pattern flow");
  common(trk);
  trk->add_option("--data", data, "Dataset directory")->required();
  trk->add_option("--out", out, "Output directory")->required();
  add_detection_flags(trk, o);
  add_tracker_flags(trk, o);

  auto* ada = app.add_subcommand("adapt", "Run online adaptation");
  common(ada);
  ada->add_option("--data", data, "Dataset directory")->required();
  ada->add_option("--out", out, "Output directory")->required();
  ada->add_flag("--dump", dump, "Also write dots, pseudo ground truth, matches and tracks");
  add_detection_flags(ada, o);
  add_tracker_flags(ada, o);
  add_adaptation_flags(ada, o);

  auto* ev = app.add_subcommand("evaluate", "Compare two disparity maps");
  ev->add_option("--pred", pred, "Predicted disparity (PFM)")->required();
  ev->add_option("--gt", gt, "Ground-truth disparity (PFM)")->required();

  auto* rep = app.add_subcommand("report", "Loss ablation over replicate runs");
  common(rep);
  rep->add_option("--data", data, "Dataset directory")->required();
  rep->add_option("--out", out, "Output directory")->required();
  rep->add_option("--ablation-corrupt", report_corrupt, "Corruption fraction for the corrupted rows");
  add_detection_flags(rep, o);
  add_tracker_flags(rep, o);
  add_adaptation_flags(rep, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*ev) return cmd_evaluate(pred, gt);
    const Config cfg = resolve(config_path, o);
    if (*sim) return cmd_simulate(cfg, out);
    if (*det) return cmd_detect(cfg, data, out);
    if (*trk) return cmd_track(cfg, data, out);
    if (*ada) return cmd_adapt(cfg, data, out, dump);
    if (*rep) return cmd_report(cfg, data, out, report_corrupt);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
