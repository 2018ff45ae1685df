#include "patflow/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "patflow/errors.hpp"
#include "patflow/format.hpp"

namespace patflow {

using nlohmann::json;

namespace {

// Binds a JSON object key to a field so that reading and writing share one table.
class Section {
 public:
  Section(const char* name, json* in, json* out) : name_(name), in_(in), out_(out) {}

  template <typename T>
  Section& field(const char* key, T& value) {
    seen_.emplace_back(key);
    if (in_ && in_->contains(key)) {
      try {
        const auto& v = in_->at(key);
        if constexpr (std::is_same_v<T, double>) {
          if (!v.is_number()) throw ConfigError("expected a number");
        } else if constexpr (std::is_integral_v<T>) {
          if (!v.is_number_integer()) throw ConfigError("expected an integer");
        } else {
          if (!v.is_string()) throw ConfigError("expected a string");
        }
        value = v.get<T>();
      } catch (const std::exception& e) {
        throw ConfigError(std::string(name_) + "." + key + ": " + e.what());
      }
    }
    if (out_) {
      if constexpr (std::is_same_v<T, double>) {
        (*out_)[key] = round6(value);
      } else {
        (*out_)[key] = value;
      }
    }
    return *this;
  }

  void finish() const {
    if (!in_) return;
    for (const auto& [k, _] : in_->items()) {
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) {
        throw ConfigError("unknown config key " + std::string(name_) + "." + k);
      }
    }
  }

 private:
  const char* name_;
  json* in_;
  json* out_;
  std::vector<std::string> seen_;
};

// Visits every section; `in` may be null (write only) and `out` may be null (read only).
void visit(Config& cfg, json* in, json* out) {
  auto sub = [&](const char* name, json*& sin, json*& sout) {
    sin = nullptr;
    sout = nullptr;
    if (in && in->contains(name)) {
      if (!in->at(name).is_object()) throw ConfigError(std::string(name) + " must be an object");
      sin = &in->at(name);
    }
    if (out) sout = &(*out)[name];
  };
  json *i = nullptr, *o = nullptr;

  if (in && in->contains("seed")) {
    if (!in->at("seed").is_number_unsigned()) {
      throw ConfigError("seed must be a non-negative integer");
    }
    cfg.seed = in->at("seed").get<std::uint64_t>();
  }
  if (out) (*out)["seed"] = cfg.seed;

  auto& s = cfg.simulator;
  sub("simulator", i, o);
  Section("simulator", i, o)
      .field("width", s.width)
      .field("height", s.height)
      .field("dot_count", s.dot_count)
      .field("min_spacing", s.min_spacing)
      .field("sigma_psf", s.sigma_psf)
      .field("noise", s.noise)
      .field("dropout", s.dropout)
      .field("v_max", s.v_max)
      .field("frames", s.frames)
      .field("scene", s.scene)
      .finish();

  auto& d = cfg.detection;
  sub("detection", i, o);
  Section("detection", i, o)
      .field("threshold", d.threshold)
      .field("min_area", d.min_area)
      .field("max_area", d.max_area)
      .finish();

  auto& t = cfg.tracker;
  sub("tracker", i, o);
  Section("tracker", i, o).field("row_tol", t.row_tol).field("gate_x", t.gate_x).finish();

  auto& m = cfg.matcher;
  sub("matcher", i, o);
  Section("matcher", i, o).field("q", m.process).field("r", m.measurement).finish();

  auto& sv = cfg.supervision;
  sub("supervision", i, o);
  Section("supervision", i, o)
      .field("epsilon", sv.epsilon)
      .field("neighbors", sv.neighbors)
      .field("beta", sv.beta)
      .field("min_length", sv.min_length)
      .finish();

  auto& a = cfg.adaptation;
  sub("adaptation", i, o);
  Section("adaptation", i, o)
      .field("window", a.window)
      .field("lr", a.lr)
      .field("alpha", a.alpha)
      .field("smoothness", a.smoothness)
      .field("spread", a.spread)
      .field("photometric_spread", a.photometric_spread)
      .field("seeds", a.seeds)
      .field("d_min", a.d_min)
      .field("d_max", a.d_max)
      .field("steps_per_window", a.steps_per_window)
      .field("init_offset", a.init_offset)
      .field("init_noise", a.init_noise)
      .field("loss", a.loss)
      .field("corrupt", a.corrupt)
      .finish();

  if (in) {
    static const char* sections[] = {"seed", "simulator", "detection", "tracker",
                                     "matcher", "supervision", "adaptation"};
    for (const auto& [k, _] : in->items()) {
      if (std::find(std::begin(sections), std::end(sections), k) == std::end(sections)) {
        throw ConfigError("unknown config key " + k);
      }
    }
  }
}

}  // namespace

void apply_config_json(Config& cfg, std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  Config next = cfg;
  visit(next, &doc, nullptr);
  cfg = next;
}

void apply_config_file(Config& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_json(cfg, ss.str());
}

void validate_config(const Config& cfg) {
  const auto& s = cfg.simulator;
  const auto& a = cfg.adaptation;
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(s.width > 1 && s.height > 1, "simulator.width and height must be > 1");
  require(s.dot_count >= 1, "simulator.dot_count must be >= 1");
  require(s.min_spacing > 0.0, "simulator.min_spacing must be > 0");
  require(s.sigma_psf > 0.0, "simulator.sigma_psf must be > 0");
  require(s.noise >= 0.0, "simulator.noise must be >= 0");
  require(s.dropout >= 0.0 && s.dropout <= 1.0, "simulator.dropout must be in [0,1]");
  require(s.v_max > 0.0, "simulator.v_max must be > 0");
  require(s.frames >= 1, "simulator.frames must be >= 1");
  require(s.scene == "nonrigid" || s.scene == "static" || s.scene == "sliding",
          "simulator.scene must be nonrigid, static or sliding");
  require(cfg.detection.threshold > 0.0 && cfg.detection.threshold < 1.0,
          "detection.threshold must be in (0,1)");
  require(cfg.detection.min_area >= 1 && cfg.detection.min_area <= cfg.detection.max_area,
          "detection area bounds must satisfy 1 <= min_area <= max_area");
  require(cfg.tracker.row_tol >= 0.0, "tracker.row_tol must be >= 0");
  require(cfg.tracker.gate_x > 0.0, "tracker.gate_x must be > 0");
  require(cfg.matcher.process >= 0.0, "matcher.q must be >= 0");
  require(cfg.matcher.measurement > 0.0, "matcher.r must be > 0");
  require(cfg.supervision.epsilon > 0.0, "supervision.epsilon must be > 0");
  require(cfg.supervision.neighbors >= 1, "supervision.neighbors must be >= 1");
  require(cfg.supervision.beta > 0.0, "supervision.beta must be > 0");
  require(cfg.supervision.min_length >= 1, "supervision.min_length must be >= 1");
  require(a.window >= 1, "adaptation.window must be >= 1");
  require(a.lr >= 0.0, "adaptation.lr must be >= 0");
  require(a.alpha >= 0.0, "adaptation.alpha must be >= 0");
  require(a.smoothness >= 0.0, "adaptation.smoothness must be >= 0");
  require(a.spread >= 0.0, "adaptation.spread must be >= 0");
  require(a.photometric_spread >= 0.0, "adaptation.photometric_spread must be >= 0");
  require(a.seeds >= 1, "adaptation.seeds must be >= 1");
  require(a.d_min > 0.0 && a.d_min < a.d_max, "adaptation requires 0 < d_min < d_max");
  require(a.steps_per_window >= 1, "adaptation.steps_per_window must be >= 1");
  require(a.init_noise >= 0.0, "adaptation.init_noise must be >= 0");
  require(a.corrupt >= 0.0 && a.corrupt <= 1.0, "adaptation.corrupt must be in [0,1]");
  require(a.loss == "none" || a.loss == "photometric" || a.loss == "disparity" ||
              a.loss == "masked" || a.loss == "full",
          "adaptation.loss must be one of none, photometric, disparity, masked, full");
}

std::string config_to_json(const Config& cfg) {
  json out = json::object();
  Config copy = cfg;
  visit(copy, nullptr, &out);
  return out.dump(2);
}

}  // namespace patflow
