#include "patflow/image.hpp"

#include <algorithm>
#include <string>

#include "patflow/errors.hpp"
#include "patflow/estimator.hpp"

namespace patflow {

void check_intensities(const GrayImage& img) {
  const auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (!std::isfinite(px[i]) || px[i] < 0.0 || px[i] > 1.0) {
      throw ConfigError("intensity out of [0,1] at pixel " + std::to_string(i));
    }
  }
}

std::size_t DisparityMap::valid_count() const {
  return static_cast<std::size_t>(std::count_if(valid.pixels().begin(), valid.pixels().end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

std::optional<BilinearSupport> bilinear_support(int width, int height, Point2 p) {
  if (width <= 0 || height <= 0 || !is_finite(p)) return std::nullopt;
  if (p.x < 0.0 || p.y < 0.0 || p.x > width - 1 || p.y > height - 1) return std::nullopt;

  BilinearSupport s;
  s.x0 = std::min(static_cast<int>(std::floor(p.x)), std::max(width - 2, 0));
  s.y0 = std::min(static_cast<int>(std::floor(p.y)), std::max(height - 2, 0));
  s.x1 = std::min(s.x0 + 1, width - 1);
  s.y1 = std::min(s.y0 + 1, height - 1);
  s.fx = width > 1 ? p.x - s.x0 : 0.0;
  s.fy = height > 1 ? p.y - s.y0 : 0.0;
  return s;
}

Sample sample_bilinear(const GrayImage& img, Point2 p) {
  const auto s = bilinear_support(img.width(), img.height(), p);
  if (!s) return {};
  const double v = s->w00() * img(s->x0, s->y0) + s->w10() * img(s->x1, s->y0) +
                   s->w01() * img(s->x0, s->y1) + s->w11() * img(s->x1, s->y1);
  return {v, true};
}

Sample sample_bilinear_dx(const GrayImage& img, Point2 p) {
  const auto s = bilinear_support(img.width(), img.height(), p);
  if (!s) return {};
  if (s->x1 == s->x0) return {0.0, true};
  const double top = img(s->x1, s->y0) - img(s->x0, s->y0);
  const double bottom = img(s->x1, s->y1) - img(s->x0, s->y1);
  return {(1.0 - s->fy) * top + s->fy * bottom, true};
}

std::optional<double> sample_disparity(const DisparityMap& disp, Point2 p) {
  const auto s = bilinear_support(disp.width(), disp.height(), p);
  if (!s) return std::nullopt;
  if (!disp.is_valid(s->x0, s->y0) || !disp.is_valid(s->x1, s->y0) ||
      !disp.is_valid(s->x0, s->y1) || !disp.is_valid(s->x1, s->y1)) {
    return std::nullopt;
  }
  const auto& v = disp.values;
  return s->w00() * v(s->x0, s->y0) + s->w10() * v(s->x1, s->y0) + s->w01() * v(s->x0, s->y1) +
         s->w11() * v(s->x1, s->y1);
}

DisparityMap estimator_predict(const EstimatorParams& params) {
  DisparityMap out;
  out.values = params.grid;
  out.valid = Mask(params.grid.width(), params.grid.height(), 1);
  return out;
}

}  // namespace patflow
