#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "patflow/detection.hpp"
#include "patflow/matcher.hpp"
#include "patflow/supervision.hpp"
#include "patflow/tracker.hpp"

namespace patflow {

struct SimulatorSettings {
  int width = 128;
  int height = 128;
  int dot_count = 200;
  double min_spacing = 8.0;
  double sigma_psf = 1.2;
  double noise = 0.0;
  double dropout = 0.0;
  double v_max = 3.0;
  int frames = 64;
  std::string scene = "nonrigid";  ///< "nonrigid", "static" or "sliding"
};

struct AdaptationSettings {
  int window = 8;               ///< T
  double lr = 1.0;
  double alpha = 0.1;
  double smoothness = 0.1;      ///< lambda
  double spread = 12.0;         ///< Gaussian preconditioner, px
  double photometric_spread = 3.0;  ///< preconditioner for the photometric term, px
  int seeds = 8;
  double d_min = 20.0;
  double d_max = 80.0;
  int steps_per_window = 1;
  double init_offset = 5.0;     ///< px added to ground truth for the initial grid
  double init_noise = 0.5;      ///< per-pixel std-dev of the initial grid noise
  std::string loss = "full";    ///< none | photometric | disparity | masked | full
  double corrupt = 0.0;         ///< fraction of correspondences replaced by a neighbour dot
};

/// Every tunable of the toolkit. Resolution order: defaults, then a JSON
/// file, then command-line flags.
struct Config {
  std::uint64_t seed = 0;
  SimulatorSettings simulator;
  DetectionConfig detection;
  TrackerConfig tracker;
  KalmanNoise matcher;
  SupervisionConfig supervision;
  AdaptationSettings adaptation;
};

/// Overlays the keys present in a JSON document onto `cfg`. Unknown keys and
/// wrongly typed values throw ConfigError.
void apply_config_json(Config& cfg, std::string_view text);
void apply_config_file(Config& cfg, const std::filesystem::path& path);

/// Throws ConfigError when a bound is violated.
void validate_config(const Config& cfg);

/// Fully resolved configuration as pretty-printed JSON.
std::string config_to_json(const Config& cfg);

}  // namespace patflow
