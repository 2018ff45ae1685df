#include "patflow/detection.hpp"

#include <algorithm>

#include "patflow/errors.hpp"

namespace patflow {
namespace {

struct Accum {
  double wx = 0.0;
  double wy = 0.0;
  double w = 0.0;
  int area = 0;
  bool border = false;
};

}  // namespace

DotSet detect_dots(const GrayImage& img, const DetectionConfig& cfg, int frame) {
  if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0)) {
    throw ConfigError("detection threshold must lie in (0,1)");
  }
  if (cfg.min_area < 1 || cfg.max_area < cfg.min_area) {
    throw ConfigError("detection area bounds must satisfy 1 <= min_area <= max_area");
  }

  const int w = img.width();
  const int h = img.height();
  DotSet out;
  out.frame = frame;

  Image<std::uint8_t> seen(w, h, 0);
  std::vector<int> stack;
  std::vector<Accum> comps;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (seen(x, y) || img(x, y) < cfg.threshold) continue;
      Accum acc;
      seen(x, y) = 1;
      stack.assign(1, static_cast<int>(img.index(x, y)));
      while (!stack.empty()) {
        const int idx = stack.back();
        stack.pop_back();
        const int px = idx % w;
        const int py = idx / w;
        const double v = img(px, py);
        acc.wx += v * px;
        acc.wy += v * py;
        acc.w += v;
        ++acc.area;
        if (px == 0 || py == 0 || px == w - 1 || py == h - 1) acc.border = true;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = px + dx;
            const int ny = py + dy;
            if (!img.contains(nx, ny) || seen(nx, ny) || img(nx, ny) < cfg.threshold) continue;
            seen(nx, ny) = 1;
            stack.push_back(static_cast<int>(img.index(nx, ny)));
          }
        }
      }
      if (acc.area >= cfg.min_area && acc.area <= cfg.max_area && acc.w > 0.0) comps.push_back(acc);
    }
  }

  // Merge centroids that fall within 1 px of each other until none remain.
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < comps.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < comps.size(); ++j) {
        const Point2 a{comps[i].wx / comps[i].w, comps[i].wy / comps[i].w};
        const Point2 b{comps[j].wx / comps[j].w, comps[j].wy / comps[j].w};
        if (distance(a, b) < 1.0) {
          comps[i].wx += comps[j].wx;
          comps[i].wy += comps[j].wy;
          comps[i].w += comps[j].w;
          comps[i].area += comps[j].area;
          comps[i].border = comps[i].border || comps[j].border;
          comps.erase(comps.begin() + static_cast<std::ptrdiff_t>(j));
          merged = true;
          break;
        }
      }
    }
  }

  out.dots.reserve(comps.size());
  for (const auto& c : comps) {
    out.dots.push_back({{c.wx / c.w, c.wy / c.w}, c.w, c.border});
  }
  return out;
}

}  // namespace patflow
