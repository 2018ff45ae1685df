#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace patflow {

/// Subpixel coordinate in camera or projector space. Pixel centers sit on
/// integer coordinates.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double rho_x(Point2 p) { return p.x; }
inline double rho_y(Point2 p) { return p.y; }

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

/// Disparity of a rectified correspondence x <-> u: camera x minus projector x.
inline double disparity_from_correspondence(Point2 camera, Point2 projector) {
  return rho_x(camera) - rho_x(projector);
}

/// Row-major single-channel image.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> pixels() { return data_; }
  std::span<const T> pixels() const { return data_; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  bool same_shape(int w, int h) const { return width_ == w && height_ == h; }
  template <typename U>
  bool same_shape(const Image<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Intensities normalized to [0,1].
using GrayImage = Image<double>;
using Mask = Image<std::uint8_t>;

/// Throws ConfigError unless every intensity is finite and inside [0,1].
void check_intensities(const GrayImage& img);

/// Dense disparity with a per-pixel validity mask.
struct DisparityMap {
  Image<double> values;
  Mask valid;

  DisparityMap() = default;
  DisparityMap(int width, int height, double fill = 0.0, bool is_valid = true)
      : values(width, height, fill), valid(width, height, is_valid ? 1 : 0) {}

  int width() const { return values.width(); }
  int height() const { return values.height(); }
  bool is_valid(int x, int y) const { return valid(x, y) != 0; }
  std::size_t valid_count() const;

  friend bool operator==(const DisparityMap&, const DisparityMap&) = default;
};

/// Projected dot pattern: projector-space dot centers and the rendered image.
struct Pattern {
  GrayImage image;
  std::vector<Point2> dots;
  double min_spacing = 0.0;

  int width() const { return image.width(); }
  int height() const { return image.height(); }
};

/// The four lattice pixels around a subpixel location and the fractional
/// offsets inside that cell.
struct BilinearSupport {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  double fx = 0.0;
  double fy = 0.0;

  double w00() const { return (1.0 - fx) * (1.0 - fy); }
  double w10() const { return fx * (1.0 - fy); }
  double w01() const { return (1.0 - fx) * fy; }
  double w11() const { return fx * fy; }
};

/// Support cell for `p`, or nullopt when `p` lies outside [0,w-1]x[0,h-1].
std::optional<BilinearSupport> bilinear_support(int width, int height, Point2 p);

struct Sample {
  double value = 0.0;
  bool valid = false;
};

/// Bilinear interpolation. Out-of-bounds locations return {0, false}.
Sample sample_bilinear(const GrayImage& img, Point2 p);

/// Horizontal derivative of the bilinear interpolant at `p`.
Sample sample_bilinear_dx(const GrayImage& img, Point2 p);

/// Bilinear disparity lookup; nullopt unless all four support pixels are valid.
std::optional<double> sample_disparity(const DisparityMap& disp, Point2 p);

}  // namespace patflow
