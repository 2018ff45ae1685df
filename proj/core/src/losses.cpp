#include "patflow/losses.hpp"

#include <cmath>

#include "patflow/errors.hpp"

namespace patflow {
namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

WarpResult warp(const GrayImage& pattern, const DisparityMap& disp) {
  const int w = disp.width();
  const int h = disp.height();
  WarpResult out{GrayImage(w, h), Mask(w, h, 0), 0};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!disp.is_valid(x, y)) continue;
      const auto s = sample_bilinear(pattern, {x - disp.values(x, y), static_cast<double>(y)});
      if (!s.valid) continue;
      out.image(x, y) = s.value;
      out.valid(x, y) = 1;
      ++out.valid_count;
    }
  }
  return out;
}

WindowLoss loss_photometric(std::span<const GrayImage> frames, std::span<const DisparityMap> disps,
                            const GrayImage& pattern) {
  if (frames.size() != disps.size()) throw ConfigError("photometric loss: window length mismatch");
  WindowLoss out;
  out.gradients.reserve(disps.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto& img = frames[k];
    const auto& d = disps[k];
    if (!img.same_shape(d.values)) throw ConfigError("photometric loss: frame/disparity shape mismatch");
    Image<double> grad(d.width(), d.height(), 0.0);
    const auto warped = warp(pattern, d);
    if (warped.valid_count == 0) {
      out.gradients.push_back(std::move(grad));
      continue;
    }
    const double inv = 1.0 / static_cast<double>(warped.valid_count);
    double sum = 0.0;
    for (int y = 0; y < d.height(); ++y) {
      for (int x = 0; x < d.width(); ++x) {
        if (!warped.valid(x, y)) continue;
        const double r = img(x, y) - warped.image(x, y);
        sum += std::abs(r);
        // d|I - P(x - D)|/dD = sign(I - P~) * dP~/du
        const auto du = sample_bilinear_dx(pattern, {x - d.values(x, y), static_cast<double>(y)});
        grad(x, y) = inv * sign(r) * du.value;
      }
    }
    out.value += sum * inv;
    out.count += warped.valid_count;
    out.gradients.push_back(std::move(grad));
  }
  return out;
}

WindowLoss loss_disparity(std::span<const DisparityMap> disps, const SparseSupervision& supervision,
                          bool use_weights) {
  WindowLoss out;
  out.gradients.reserve(disps.size());
  for (const auto& d : disps) out.gradients.emplace_back(d.width(), d.height(), 0.0);

  struct Term {
    std::size_t slot;
    BilinearSupport s;
    double residual;
    double weight;
  };
  std::vector<Term> terms;
  terms.reserve(supervision.points.size());
  double total_w = 0.0;
  for (const auto& p : supervision.points) {
    const int k = p.frame - supervision.first_frame;
    if (k < 0 || static_cast<std::size_t>(k) >= disps.size()) continue;
    const auto& d = disps[static_cast<std::size_t>(k)];
    const auto s = bilinear_support(d.width(), d.height(), p.position);
    if (!s) continue;
    const auto value = sample_disparity(d, p.position);
    if (!value) continue;
    const double w = use_weights ? p.weight : 1.0;
    terms.push_back({static_cast<std::size_t>(k), *s, *value - p.disparity, w});
    total_w += w;
  }
  out.count = terms.size();
  if (!(total_w > 0.0)) return out;

  for (const auto& t : terms) {
    out.value += t.weight * std::abs(t.residual);
    const double g = t.weight * sign(t.residual) / total_w;
    auto& grad = out.gradients[t.slot];
    grad(t.s.x0, t.s.y0) += g * t.s.w00();
    grad(t.s.x1, t.s.y0) += g * t.s.w10();
    grad(t.s.x0, t.s.y1) += g * t.s.w01();
    grad(t.s.x1, t.s.y1) += g * t.s.w11();
  }
  out.value /= total_w;
  return out;
}

FieldLoss smoothness_tv(const Image<double>& field) {
  const int w = field.width();
  const int h = field.height();
  FieldLoss out{0.0, Image<double>(w, h, 0.0)};
  if (field.empty()) return out;
  const double inv = 1.0 / static_cast<double>(field.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) {
        const double diff = field(x + 1, y) - field(x, y);
        out.value += std::abs(diff);
        out.gradient(x + 1, y) += inv * sign(diff);
        out.gradient(x, y) -= inv * sign(diff);
      }
      if (y + 1 < h) {
        const double diff = field(x, y + 1) - field(x, y);
        out.value += std::abs(diff);
        out.gradient(x, y + 1) += inv * sign(diff);
        out.gradient(x, y) -= inv * sign(diff);
      }
    }
  }
  out.value *= inv;
  return out;
}

}  // namespace patflow
