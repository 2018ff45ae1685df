#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "patflow/image.hpp"
#include "patflow/simulator.hpp"

namespace patflow {

/// Description stored in meta.json.
struct DatasetMeta {
  int width = 0;
  int height = 0;
  int frames = 0;
  std::uint64_t seed = 0;
  std::string scene = "nonrigid";
  int dot_count = 0;
  double min_spacing = 0.0;
  double sigma_psf = 0.0;
  double noise = 0.0;
  double dropout = 0.0;
  double v_max = 0.0;
  double d_min = 20.0;
  double d_max = 80.0;
};

/// An in-memory sequence: the pattern, the captured frames and, when
/// available, ground-truth disparity and flow.
struct Sequence {
  DatasetMeta meta;
  Pattern pattern;
  std::vector<GrayImage> frames;
  std::vector<DisparityMap> gt;                    ///< empty without ground truth
  std::vector<std::vector<FlowPoint>> true_flow;   ///< indexed by dot id; may be empty

  bool has_gt() const { return !gt.empty(); }
};

/// Builds a sequence from a simulator bundle.
Sequence make_sequence(DatasetMeta meta, Pattern pattern, GroundTruthBundle bundle);

/// Writes pattern.pgm, pattern_dots.csv, frames/%05d.pgm, gt/disp_%05d.pfm,
/// gt/flow.jsonl and meta.json under `dir` (created if needed).
void write_dataset(const std::filesystem::path& dir, const Sequence& seq);

/// Reads a dataset directory. The gt/ subdirectory is optional. Throws
/// DataError naming the offending path on missing or corrupt files.
Sequence read_dataset(const std::filesystem::path& dir);

/// Frame file name, e.g. `00042.pgm` for stem "" and extension ".pgm".
std::string frame_name(const std::string& stem, int frame, const std::string& ext);

}  // namespace patflow
