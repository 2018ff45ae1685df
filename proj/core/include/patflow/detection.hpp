#pragma once

#include <vector>

#include "patflow/image.hpp"

namespace patflow {

struct DetectionConfig {
  double threshold = 0.25;  ///< tau, in normalized intensity
  int min_area = 3;         ///< px^2
  int max_area = 100;       ///< px^2
};

struct Dot {
  Point2 center;
  double response = 0.0;        ///< summed intensity of the component
  bool touches_border = false;  ///< component reaches the image edge
};

/// Detected dot centers C^t of one frame.
struct DotSet {
  int frame = 0;
  std::vector<Dot> dots;

  std::size_t size() const { return dots.size(); }
  bool empty() const { return dots.empty(); }
  const Point2& center(std::size_t i) const { return dots[i].center; }
};

/// Thresholds at tau, groups pixels by 8-connectivity and emits the
/// intensity-weighted centroid of each component whose area lies in
/// [min_area, max_area]. Centroids closer than 1 px are merged.
DotSet detect_dots(const GrayImage& img, const DetectionConfig& cfg, int frame = 0);

}  // namespace patflow
