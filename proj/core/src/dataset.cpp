#include "patflow/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "patflow/errors.hpp"
#include "patflow/format.hpp"
#include "patflow/image_io.hpp"

namespace patflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json meta_to_json(const DatasetMeta& m) {
  json j;
  j["width"] = m.width;
  j["height"] = m.height;
  j["frames"] = m.frames;
  j["seed"] = m.seed;
  j["scene"] = m.scene;
  j["dot_count"] = m.dot_count;
  j["min_spacing"] = round6(m.min_spacing);
  j["sigma_psf"] = round6(m.sigma_psf);
  j["noise"] = round6(m.noise);
  j["dropout"] = round6(m.dropout);
  j["v_max"] = round6(m.v_max);
  j["d_min"] = round6(m.d_min);
  j["d_max"] = round6(m.d_max);
  return j;
}

DatasetMeta meta_from_json(const json& j) {
  DatasetMeta m;
  m.width = j.at("width").get<int>();
  m.height = j.at("height").get<int>();
  m.frames = j.at("frames").get<int>();
  m.seed = j.value("seed", std::uint64_t{0});
  m.scene = j.value("scene", std::string("unknown"));
  m.dot_count = j.value("dot_count", 0);
  m.min_spacing = j.value("min_spacing", 0.0);
  m.sigma_psf = j.value("sigma_psf", 0.0);
  m.noise = j.value("noise", 0.0);
  m.dropout = j.value("dropout", 0.0);
  m.v_max = j.value("v_max", 0.0);
  m.d_min = j.value("d_min", 20.0);
  m.d_max = j.value("d_max", 80.0);
  return m;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace

std::string frame_name(const std::string& stem, int frame, const std::string& ext) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05d", frame);
  return stem + buf + ext;
}

Sequence make_sequence(DatasetMeta meta, Pattern pattern, GroundTruthBundle bundle) {
  Sequence seq;
  seq.meta = std::move(meta);
  seq.meta.width = pattern.width();
  seq.meta.height = pattern.height();
  seq.meta.frames = static_cast<int>(bundle.frames.size());
  seq.meta.dot_count = static_cast<int>(pattern.dots.size());
  seq.meta.min_spacing = pattern.min_spacing;
  seq.pattern = std::move(pattern);
  seq.frames = std::move(bundle.frames);
  seq.gt = std::move(bundle.disparity);
  seq.true_flow = std::move(bundle.true_flow);
  return seq;
}

void write_dataset(const fs::path& dir, const Sequence& seq) {
  std::error_code ec;
  fs::create_directories(dir / "frames", ec);
  if (ec) throw DataError("cannot create " + (dir / "frames").string());
  write_pgm(dir / "pattern.pgm", seq.pattern.image);
  write_dots_csv(dir / "pattern_dots.csv", seq.pattern.dots);
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    write_pgm(dir / "frames" / frame_name("", static_cast<int>(f), ".pgm"), seq.frames[f]);
  }
  if (seq.has_gt()) {
    fs::create_directories(dir / "gt", ec);
    if (ec) throw DataError("cannot create " + (dir / "gt").string());
    for (std::size_t f = 0; f < seq.gt.size(); ++f) {
      write_pfm(dir / "gt" / frame_name("disp_", static_cast<int>(f), ".pfm"), seq.gt[f]);
    }
    std::ostringstream flow;
    for (std::size_t m = 0; m < seq.true_flow.size(); ++m) {
      if (seq.true_flow[m].empty()) continue;
      json j;
      j["dot_id"] = m;
      json pts = json::array();
      for (const auto& p : seq.true_flow[m]) {
        pts.push_back({p.frame, round6(p.position.x), round6(p.position.y)});
      }
      j["points"] = std::move(pts);
      flow << j.dump() << '\n';
    }
    write_text(dir / "gt" / "flow.jsonl", flow.str());
  }
  write_text(dir / "meta.json", meta_to_json(seq.meta).dump(2) + "\n");
}

Sequence read_dataset(const fs::path& dir) {
  Sequence seq;
  const fs::path meta_path = dir / "meta.json";
  {
    std::ifstream in(meta_path);
    if (!in) throw DataError("missing " + meta_path.string());
    try {
      seq.meta = meta_from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw DataError("corrupt " + meta_path.string() + ": " + e.what());
    }
  }
  seq.pattern.image = read_pgm(dir / "pattern.pgm");
  seq.pattern.dots = read_dots_csv(dir / "pattern_dots.csv");
  seq.pattern.min_spacing = seq.meta.min_spacing;

  for (int f = 0; f < seq.meta.frames; ++f) {
    auto img = read_pgm(dir / "frames" / frame_name("", f, ".pgm"));
    if (img.width() != seq.meta.width || img.height() != seq.meta.height) {
      throw DataError("unexpected frame size in " + (dir / "frames" / frame_name("", f, ".pgm")).string());
    }
    seq.frames.push_back(std::move(img));
  }

  if (fs::is_directory(dir / "gt")) {
    for (int f = 0; f < seq.meta.frames; ++f) {
      seq.gt.push_back(read_pfm(dir / "gt" / frame_name("disp_", f, ".pfm")));
    }
    const fs::path flow_path = dir / "gt" / "flow.jsonl";
    std::ifstream in(flow_path);
    if (in) {
      seq.true_flow.resize(seq.pattern.dots.size());
      std::string line;
      int lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
          const auto j = json::parse(line);
          const auto id = j.at("dot_id").get<std::size_t>();
          if (id >= seq.true_flow.size()) throw DataError("dot_id out of range");
          for (const auto& p : j.at("points")) {
            seq.true_flow[id].push_back({p.at(0).get<int>(), {p.at(1).get<double>(), p.at(2).get<double>()}});
          }
        } catch (const std::exception& e) {
          throw DataError("corrupt " + flow_path.string() + " line " + std::to_string(lineno) + ": " + e.what());
        }
      }
    }
  }
  return seq;
}

}  // namespace patflow
