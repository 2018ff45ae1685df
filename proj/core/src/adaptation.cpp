#include "patflow/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "patflow/errors.hpp"
#include "patflow/losses.hpp"

namespace patflow {

WindowBuffer::WindowBuffer(int capacity) : capacity_(capacity) {
  if (capacity_ < 1) throw ConfigError("window length T must be >= 1");
}

void WindowBuffer::push(int frame, GrayImage image, DotSet detections, DisparityMap prediction) {
  if (full()) throw ConfigError("window buffer is full");
  if (frames_.empty()) {
    first_frame_ = frame;
  } else if (frame != last_frame() + 1) {
    throw DataError("window expected frame " + std::to_string(last_frame() + 1) + ", got " +
                    std::to_string(frame));
  }
  frames_.push_back(std::move(image));
  detections_.push_back(std::move(detections));
  predictions_.push_back(std::move(prediction));
}

void WindowBuffer::clear() {
  frames_.clear();
  detections_.clear();
  predictions_.clear();
  supervision = {};
}

LossEvaluation evaluate_loss(const EstimatorParams& params, const WindowBuffer& buffer,
                             const GrayImage& pattern, const StepOptions& opts) {
  const auto pred = estimator_predict(params);
  const std::vector<DisparityMap> disps(buffer.size(), pred);

  LossEvaluation ev;
  ev.gradient = Image<double>(params.grid.width(), params.grid.height(), 0.0);
  auto& rep = ev.report;

  auto accumulate = [&](const std::vector<Image<double>>& grads, double scale) {
    for (const auto& g : grads) {
      for (std::size_t i = 0; i < g.size(); ++i) ev.gradient[i] += scale * g[i];
    }
  };

  if (opts.use_disparity) {
    const auto ld = loss_disparity(disps, buffer.supervision, opts.use_weights);
    rep.disparity = ld.value;
    rep.points = ld.count;
    accumulate(ld.gradients, 1.0);
  }
  rep.mean_weight = buffer.supervision.mean_weight();
  if (opts.alpha != 0.0) {
    const auto lp = loss_photometric(buffer.frames(), disps, pattern);
    rep.photometric = lp.value;
    rep.valid_pixels = lp.count;
    accumulate(lp.gradients, opts.alpha);
    ev.photometric_gradient = Image<double>(params.grid.width(), params.grid.height(), 0.0);
    for (const auto& g : lp.gradients) {
      for (std::size_t i = 0; i < g.size(); ++i) ev.photometric_gradient[i] += opts.alpha * g[i];
    }
  }
  if (params.smoothness != 0.0) {
    const auto tv = smoothness_tv(params.grid);
    rep.smoothness = tv.value;
    for (std::size_t i = 0; i < tv.gradient.size(); ++i) ev.gradient[i] += params.smoothness * tv.gradient[i];
  }
  rep.total = rep.disparity + opts.alpha * rep.photometric + params.smoothness * rep.smoothness;
  rep.finite = std::isfinite(rep.total);
  return ev;
}

Image<double> gaussian_smooth(const Image<double>& field, double sigma) {
  if (!(sigma > 0.0) || field.empty()) return field;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = v;
    norm += v;
  }
  for (auto& v : kernel) v /= norm;

  const int w = field.width();
  const int h = field.height();
  Image<double> tmp(w, h, 0.0);
  Image<double> out(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = std::max(-radius, -x); i <= std::min(radius, w - 1 - x); ++i) {
        s += kernel[static_cast<std::size_t>(i + radius)] * field(x + i, y);
      }
      tmp(x, y) = s;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = std::max(-radius, -y); i <= std::min(radius, h - 1 - y); ++i) {
        s += kernel[static_cast<std::size_t>(i + radius)] * tmp(x, y + i);
      }
      out(x, y) = s;
    }
  }
  return out;
}

StepResult adapt_step(const EstimatorParams& params, const WindowBuffer& buffer,
                      const GrayImage& pattern, const StepOptions& opts) {
  StepResult res{params, {}, false};
  if (buffer.empty()) return res;
  auto ev = evaluate_loss(params, buffer, pattern, opts);
  res.report = ev.report;
  if (!ev.report.finite) return res;

  auto direction = gaussian_smooth(ev.gradient, params.spread);
  if (!ev.photometric_gradient.empty() && params.photometric_spread != params.spread) {
    auto rest = ev.gradient;
    for (std::size_t i = 0; i < rest.size(); ++i) rest[i] -= ev.photometric_gradient[i];
    direction = gaussian_smooth(rest, params.spread);
    const auto photometric = gaussian_smooth(ev.photometric_gradient, params.photometric_spread);
    for (std::size_t i = 0; i < direction.size(); ++i) direction[i] += photometric[i];
  }
  const double scale = opts.lr * static_cast<double>(params.grid.size());
  double max_step = 0.0;
  auto& grid = res.params.grid;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double before = grid[i];
    const double after = std::clamp(before - scale * direction[i], opts.d_min, opts.d_max);
    if (!std::isfinite(after)) {
      res.params = params;
      res.report.finite = false;
      return res;
    }
    grid[i] = after;
    max_step = std::max(max_step, std::abs(after - before));
  }
  res.report.max_step = max_step;
  res.applied = true;
  return res;
}

}  // namespace patflow
