#include "patflow/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "patflow/errors.hpp"

namespace patflow {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct BumpArgs {
  double su = 0.0;  // sin argument along u
  double cv = 0.0;  // cos argument along v
  double cu = 0.0;  // region center
  double cvc = 0.0;
};

BumpArgs bump_args(const ScenePatch& p, double u, double v, double t) {
  const Rect r = p.region_at(t);
  BumpArgs a;
  a.cu = r.center_u();
  a.cvc = r.center_v();
  a.su = kTwoPi * (u - a.cu - p.motion.bump_u_rate * t) / p.bump_wavelength + p.bump_phase;
  a.cv = kTwoPi * (v - a.cvc - p.motion.bump_v_rate * t) / p.bump_wavelength;
  return a;
}

}  // namespace

Rect ScenePatch::region_at(double t) const {
  return {region.u0 + motion.slide_u * t, region.v0 + motion.slide_v * t,
          region.u1 + motion.slide_u * t, region.v1 + motion.slide_v * t};
}

double ScenePatch::disparity(double u, double v, double t) const {
  const auto a = bump_args(*this, u, v, t);
  double d = base + motion.base_rate * t + slope_u * (u - a.cu) + slope_v * (v - a.cvc);
  if (bump_amplitude != 0.0) d += bump_amplitude * std::sin(a.su) * std::cos(a.cv);
  return d;
}

double ScenePatch::disparity_du(double u, double v, double t) const {
  double g = slope_u;
  if (bump_amplitude != 0.0) {
    const auto a = bump_args(*this, u, v, t);
    g += bump_amplitude * kTwoPi / bump_wavelength * std::cos(a.su) * std::cos(a.cv);
  }
  return g;
}

double ScenePatch::max_slope_u() const {
  return std::abs(slope_u) + std::abs(bump_amplitude) * kTwoPi / bump_wavelength;
}

std::optional<int> projector_owner(const Scene& scene, double u, double v, double t) {
  std::optional<int> best;
  double best_d = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scene.patches.size(); ++i) {
    const auto& p = scene.patches[i];
    if (!p.region_at(t).contains(u, v)) continue;
    const double d = p.disparity(u, v, t);
    if (d > best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

double invert_disparity(const ScenePatch& patch, double x, double y, double t) {
  // f(u) = u + d(u) - x is strictly increasing with slope in [1-g, 1+g].
  const double g = std::min(patch.max_slope_u(), 0.999);
  double u = x - patch.disparity(x, y, t);
  double f = u + patch.disparity(u, y, t) - x;
  if (f == 0.0) return u;
  const double reach = std::abs(f) / (1.0 - g);
  double lo = f > 0.0 ? u - reach : u;
  double hi = f > 0.0 ? u : u + reach;
  for (int it = 0; it < 60; ++it) {
    const double fp = 1.0 + patch.disparity_du(u, y, t);
    double next = u - f / fp;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    u = next;
    f = u + patch.disparity(u, y, t) - x;
    if (f > 0.0) {
      hi = u;
    } else if (f < 0.0) {
      lo = u;
    }
    if (std::abs(f) < 1e-12 || hi - lo < 1e-13) break;
  }
  return u;
}

std::optional<SurfaceHit> camera_surface(const Scene& scene, double x, double y, double t) {
  std::optional<SurfaceHit> best;
  for (std::size_t i = 0; i < scene.patches.size(); ++i) {
    const auto& p = scene.patches[i];
    const Rect r = p.region_at(t);
    if (y < r.v0 || y >= r.v1) continue;
    const double u = invert_disparity(p, x, y, t);
    if (!r.contains(u, y)) continue;
    const double d = x - u;
    if (!best || d > best->disparity) best = SurfaceHit{static_cast<int>(i), d, u, false};
  }
  if (best) {
    const double u = best->u;
    const bool in_frustum = u >= 0.0 && u <= scene.width - 1;
    best->lit = in_frustum && projector_owner(scene, u, y, t) == best->patch;
  }
  return best;
}

Scene make_scene(ScenePreset preset, int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 0x5EED);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto signed_uni = [&](double a, double b) {
    const double m = uni(a, b);
    return uni(0.0, 1.0) < 0.5 ? -m : m;
  };
  const bool moving = preset != ScenePreset::Static;
  const bool sliding = preset == ScenePreset::Sliding;
  const double W = width;
  const double H = height;

  Scene scene;
  scene.width = width;
  scene.height = height;

  ScenePatch bg;
  bg.region = {0.0, 0.0, W, H};
  bg.base = uni(32.0, 36.0);
  bg.slope_u = signed_uni(0.0, 0.03);
  bg.slope_v = signed_uni(0.0, 0.03);
  bg.bump_amplitude = uni(1.5, 2.5);
  bg.bump_wavelength = uni(48.0, 72.0);
  bg.bump_phase = uni(0.0, kTwoPi);
  PatchMotion bg_motion{signed_uni(0.004, 0.012), 0.0, 0.0, signed_uni(0.10, 0.25),
                        signed_uni(0.05, 0.15)};
  if (moving) bg.motion = bg_motion;
  scene.patches.push_back(bg);

  for (int k = 0; k < 2; ++k) {
    ScenePatch fg;
    const double su = uni(0.30, 0.45) * W;
    const double sv = uni(0.30, 0.45) * H;
    const double u0 = uni(0.05 * W, 0.95 * W - su);
    const double v0 = uni(0.05 * H, 0.95 * H - sv);
    fg.region = {u0, v0, u0 + su, v0 + sv};
    fg.base = uni(46.0, 56.0);
    fg.slope_u = signed_uni(0.0, 0.06);
    fg.slope_v = signed_uni(0.0, 0.06);
    fg.bump_amplitude = uni(1.5, 2.5);
    fg.bump_wavelength = uni(40.0, 60.0);
    fg.bump_phase = uni(0.0, kTwoPi);
    PatchMotion m{signed_uni(0.005, 0.02), signed_uni(0.03, 0.10), signed_uni(0.03, 0.10),
                  signed_uni(0.10, 0.30), signed_uni(0.10, 0.30)};
    if (!sliding) m.slide_u = m.slide_v = 0.0;
    if (moving) fg.motion = m;
    scene.patches.push_back(fg);
  }
  return scene;
}

void splat(GrayImage& img, Point2 c, double sigma, double amplitude) {
  const double reach = 4.0 * sigma;
  const int x0 = std::max(0, static_cast<int>(std::ceil(c.x - reach)));
  const int x1 = std::min(img.width() - 1, static_cast<int>(std::floor(c.x + reach)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(c.y - reach)));
  const int y1 = std::min(img.height() - 1, static_cast<int>(std::floor(c.y + reach)));
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - c.x;
      const double dy = y - c.y;
      const double r2 = dx * dx + dy * dy;
      if (r2 > reach * reach) continue;
      img(x, y) += amplitude * std::exp(-r2 * inv);
    }
  }
}

namespace {

// Uniform bucket grid over the pattern plane for short-range neighbor queries.
class BucketGrid {
 public:
  BucketGrid(int width, int height, double cell)
      : cell_(cell),
        gw_(static_cast<int>(std::ceil(width / cell)) + 1),
        gh_(static_cast<int>(std::ceil(height / cell)) + 1),
        buckets_(static_cast<std::size_t>(gw_) * gh_) {}

  void clear() {
    for (auto& b : buckets_) b.clear();
  }
  void insert(int id, Point2 p) { buckets_[slot(p)].push_back(id); }

  template <typename Fn>
  void for_near(Point2 p, int reach, Fn&& fn) const {
    const int cx = cell_x(p);
    const int cy = cell_y(p);
    for (int y = std::max(0, cy - reach); y <= std::min(gh_ - 1, cy + reach); ++y) {
      for (int x = std::max(0, cx - reach); x <= std::min(gw_ - 1, cx + reach); ++x) {
        for (int id : buckets_[static_cast<std::size_t>(y) * gw_ + x]) fn(id);
      }
    }
  }

 private:
  int cell_x(Point2 p) const { return std::clamp(static_cast<int>(p.x / cell_), 0, gw_ - 1); }
  int cell_y(Point2 p) const { return std::clamp(static_cast<int>(p.y / cell_), 0, gh_ - 1); }
  std::size_t slot(Point2 p) const {
    return static_cast<std::size_t>(cell_y(p)) * gw_ + cell_x(p);
  }

  double cell_;
  int gw_;
  int gh_;
  std::vector<std::vector<int>> buckets_;
};

}  // namespace

Pattern generate_pattern(const PatternOptions& opts) {
  if (opts.dot_count < 1) throw ConfigError("dot_count must be >= 1");
  if (!(opts.min_spacing > 0.0)) throw ConfigError("min_spacing must be > 0");
  if (opts.width < 1 || opts.height < 1) throw ConfigError("pattern dimensions must be positive");

  // Centers stay 3 sigma inside the image so no splat is cut by the border.
  const double inset_x = std::min(3.0 * opts.sigma_psf, 0.5 * (opts.width - 1.0));
  const double inset_y = std::min(3.0 * opts.sigma_psf, 0.5 * (opts.height - 1.0));
  const double xmin = inset_x, xmax = opts.width - 1.0 - inset_x;
  const double ymin = inset_y, ymax = opts.height - 1.0 - inset_y;
  const double spacing = opts.min_spacing;
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> ux(xmin, xmax);
  std::uniform_real_distribution<double> uy(ymin, ymax);

  // Seeding: Mitchell's best-candidate sampling (farthest of k random
  // candidates), without the hard spacing constraint.
  BucketGrid grid(opts.width, opts.height, spacing);
  std::vector<Point2> dots;
  dots.reserve(static_cast<std::size_t>(opts.dot_count));
  const double score_cap = 2.0 * spacing;
  constexpr int kCandidates = 24;
  for (int i = 0; i < opts.dot_count; ++i) {
    Point2 chosen{ux(rng), uy(rng)};
    double chosen_score = -1.0;
    for (int c = 0; c < kCandidates; ++c) {
      const Point2 p = c == 0 ? chosen : Point2{ux(rng), uy(rng)};
      double s = score_cap;
      grid.for_near(p, 2, [&](int id) { s = std::min(s, distance(p, dots[static_cast<std::size_t>(id)])); });
      if (s > chosen_score) {
        chosen = p;
        chosen_score = s;
      }
    }
    grid.insert(static_cast<int>(dots.size()), chosen);
    dots.push_back(chosen);
  }

  // Relaxation: push every too-close pair apart symmetrically until the
  // spacing holds. A small overshoot avoids creeping convergence.
  const double target = spacing * 1.02;
  constexpr int kMaxSweeps = 5000;
  std::vector<Point2> shift(dots.size());
  int violations = 0;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    grid.clear();
    for (std::size_t i = 0; i < dots.size(); ++i) grid.insert(static_cast<int>(i), dots[i]);
    std::fill(shift.begin(), shift.end(), Point2{});
    violations = 0;
    for (std::size_t i = 0; i < dots.size(); ++i) {
      grid.for_near(dots[i], 1, [&](int jid) {
        const auto j = static_cast<std::size_t>(jid);
        if (j <= i) return;
        double dx = dots[j].x - dots[i].x;
        double dy = dots[j].y - dots[i].y;
        double r = std::hypot(dx, dy);
        if (r >= spacing) return;
        ++violations;
        if (r < 1e-9) {
          const double a = std::uniform_real_distribution<double>(0.0, kTwoPi)(rng);
          dx = std::cos(a);
          dy = std::sin(a);
          r = 1.0;
        }
        const double push = 0.5 * (target - r) / r;
        shift[i].x -= push * dx;
        shift[i].y -= push * dy;
        shift[j].x += push * dx;
        shift[j].y += push * dy;
      });
    }
    if (violations == 0) break;
    for (std::size_t i = 0; i < dots.size(); ++i) {
      dots[i].x = std::clamp(dots[i].x + shift[i].x, xmin, xmax);
      dots[i].y = std::clamp(dots[i].y + shift[i].y, ymin, ymax);
    }
  }

  if (violations > 0) {
    // Report how many dots a greedy pass can keep at the requested spacing.
    std::vector<Point2> kept;
    for (const auto& d : dots) {
      const bool ok = std::all_of(kept.begin(), kept.end(),
                                  [&](Point2 k) { return distance(k, d) >= spacing; });
      if (ok) kept.push_back(d);
    }
    throw ConfigError("dot packing infeasible: achieved " + std::to_string(kept.size()) + " of " +
                      std::to_string(opts.dot_count) + " dots with min spacing " +
                      std::to_string(spacing));
  }

  Pattern pattern;
  pattern.image = GrayImage(opts.width, opts.height);
  pattern.dots = std::move(dots);
  pattern.min_spacing = spacing;
  for (const auto& d : pattern.dots) splat(pattern.image, d, opts.sigma_psf);
  for (auto& v : pattern.image.pixels()) v = std::min(v, 1.0);
  return pattern;
}

void validate_scene(const Scene& scene, const Pattern& pattern, const RenderOptions& opts) {
  if (opts.frames < 1) throw ConfigError("frames must be >= 1");
  if (!(opts.d_min < opts.d_max)) throw ConfigError("d_min must be < d_max");
  for (std::size_t i = 0; i < scene.patches.size(); ++i) {
    const auto& p = scene.patches[i];
    const std::string tag = "patch " + std::to_string(i) + ": ";
    if (p.max_slope_u() >= 0.9) throw ConfigError(tag + "|dd/du| must stay below 0.9");
    if (!(p.bump_wavelength > 0.0)) throw ConfigError(tag + "bump wavelength must be > 0");
    for (const auto& dot : pattern.dots) {
      double prev = std::numeric_limits<double>::quiet_NaN();
      for (int f = 0; f < opts.frames; ++f) {
        const double t = opts.first_frame + f;
        if (!p.region_at(t).contains(dot.x, dot.y)) {
          prev = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        const double d = p.disparity(dot.x, dot.y, t);
        if (d < opts.d_min || d > opts.d_max) {
          throw ConfigError(tag + "disparity " + std::to_string(d) + " outside [d_min,d_max] at frame " +
                            std::to_string(f));
        }
        if (std::abs(d - prev) > opts.v_max) {
          throw ConfigError(tag + "dot speed exceeds v_max at frame " + std::to_string(f));
        }
        prev = d;
      }
    }
  }
}

DisparityMap render_disparity(const Scene& scene, double t) {
  DisparityMap gt(scene.width, scene.height, 0.0, false);
  for (int y = 0; y < scene.height; ++y) {
    for (int x = 0; x < scene.width; ++x) {
      const auto hit = camera_surface(scene, x, y, t);
      if (hit && hit->lit) {
        gt.values(x, y) = hit->disparity;
        gt.valid(x, y) = 1;
      }
    }
  }
  return gt;
}

GroundTruthBundle render_sequence(const Pattern& pattern, const Scene& scene,
                                  const RenderOptions& opts) {
  validate_scene(scene, pattern, opts);
  if (opts.noise < 0.0 || opts.dropout < 0.0 || opts.dropout > 1.0) {
    throw ConfigError("noise must be >= 0 and dropout in [0,1]");
  }

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  GroundTruthBundle out;
  out.true_flow.resize(pattern.dots.size());
  const double xmax = scene.width - 1;

  const double reach = 4.0 * opts.sigma_psf;
  const double inv = 1.0 / (2.0 * opts.sigma_psf * opts.sigma_psf);
  BucketGrid lit_dots(scene.width, scene.height, reach);
  std::vector<int> owners(pattern.dots.size(), -1);  // surface of each lit dot

  for (int f = 0; f < opts.frames; ++f) {
    const double t = opts.first_frame + f;
    std::vector<VisibleDot> visible;
    lit_dots.clear();

    for (std::size_t m = 0; m < pattern.dots.size(); ++m) {
      const Point2 u = pattern.dots[m];
      // One draw per dot and frame keeps the stream aligned across scenes.
      const bool dropped = coin(rng) < opts.dropout;
      if (dropped) continue;
      const auto owner = projector_owner(scene, u.x, u.y, t);
      if (!owner) continue;
      const double d = scene.patches[static_cast<std::size_t>(*owner)].disparity(u.x, u.y, t);
      const Point2 x{u.x + d, u.y};
      if (x.x < 0.0 || x.x > xmax) continue;
      const auto seen = camera_surface(scene, x.x, x.y, t);
      if (!seen || seen->patch != *owner) continue;
      visible.push_back({static_cast<int>(m), x});
      out.true_flow[m].push_back({f, x});
      lit_dots.insert(static_cast<int>(m), u);
      owners[m] = *owner;
    }

    // Each lit camera pixel shows the splats of the visible dots on its own
    // surface, evaluated at its projector location x - D(x). On a locally
    // flat surface this is the splat centred at u + d; at occlusion and
    // shadow edges the splat is cut where the surface changes. A dot whose
    // center is hidden casts no light, so every blob in the frame belongs to
    // exactly one recorded visible dot. Shadowed and empty pixels stay dark.
    DisparityMap gt(scene.width, scene.height, 0.0, false);
    GrayImage frame(scene.width, scene.height);
    for (int y = 0; y < scene.height; ++y) {
      for (int x = 0; x < scene.width; ++x) {
        const auto hit = camera_surface(scene, x, y, t);
        if (!hit || !hit->lit) continue;
        gt.values(x, y) = hit->disparity;
        gt.valid(x, y) = 1;
        const Point2 u{x - hit->disparity, static_cast<double>(y)};
        double v = 0.0;
        lit_dots.for_near(u, 1, [&](int id) {
          if (owners[static_cast<std::size_t>(id)] != hit->patch) return;
          const Point2 c = pattern.dots[static_cast<std::size_t>(id)];
          const double r2 = (u.x - c.x) * (u.x - c.x) + (u.y - c.y) * (u.y - c.y);
          if (r2 <= reach * reach) v += std::exp(-r2 * inv);
        });
        frame(x, y) = std::min(v, 1.0);
      }
    }

    for (auto& v : frame.pixels()) {
      double s = v;
      if (opts.noise > 0.0) s += opts.noise * gauss(rng);
      v = std::clamp(s, 0.0, 1.0);
    }
    out.frames.push_back(std::move(frame));
    out.disparity.push_back(std::move(gt));
    out.visible.push_back(std::move(visible));
  }
  return out;
}

}  // namespace patflow
