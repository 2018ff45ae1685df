#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "patflow/image.hpp"

namespace patflow {

/// Axis-aligned half-open rectangle [u0,u1) x [v0,v1) in projector space.
struct Rect {
  double u0 = 0.0;
  double v0 = 0.0;
  double u1 = 0.0;
  double v1 = 0.0;

  bool contains(double u, double v) const { return u >= u0 && u < u1 && v >= v0 && v < v1; }
  double center_u() const { return 0.5 * (u0 + u1); }
  double center_v() const { return 0.5 * (v0 + v1); }
};

/// Per-frame drift of a patch. All rates are in px/frame.
struct PatchMotion {
  double base_rate = 0.0;    ///< added to the base disparity
  double slide_u = 0.0;      ///< region translation
  double slide_v = 0.0;
  double bump_u_rate = 0.0;  ///< bump translation relative to the region
  double bump_v_rate = 0.0;
};

/// A surface defined over a projector-space rectangle with disparity
///   d(u,v,t) = base + base_rate*t + slope_u*(u-cu) + slope_v*(v-cv)
///            + A*sin(2pi*(u-cu-bu*t)/L + phase)*cos(2pi*(v-cv-bv*t)/L)
/// where (cu,cv) is the (moving) region center.
struct ScenePatch {
  Rect region;
  double base = 30.0;
  double slope_u = 0.0;
  double slope_v = 0.0;
  double bump_amplitude = 0.0;
  double bump_wavelength = 32.0;
  double bump_phase = 0.0;
  PatchMotion motion;

  Rect region_at(double t) const;
  double disparity(double u, double v, double t) const;
  double disparity_du(double u, double v, double t) const;
  /// Upper bound of |dd/du| over the whole patch.
  double max_slope_u() const;
};

struct Scene {
  int width = 128;
  int height = 128;
  std::vector<ScenePatch> patches;
};

/// Surface seen along a camera pixel.
struct SurfaceHit {
  int patch = -1;
  double disparity = 0.0;
  double u = 0.0;     ///< projector x of the ray hitting this surface point
  bool lit = false;   ///< false in projector shadow or outside the projector frustum
};

/// Nearest (largest-disparity) patch covering projector location (u,v).
std::optional<int> projector_owner(const Scene& scene, double u, double v, double t);

/// Nearest surface seen by camera location (x,y), or nullopt when no patch
/// maps onto it.
std::optional<SurfaceHit> camera_surface(const Scene& scene, double x, double y, double t);

/// Projector x such that u + d(u,y,t) = x, solved to ~1e-12 px.
double invert_disparity(const ScenePatch& patch, double x, double y, double t);

enum class ScenePreset { NonRigid, Static, Sliding };

/// Randomized desk-scale scene: a background plane plus two foreground
/// patches. NonRigid deforms every surface in place (drifting depth and
/// travelling bumps); Sliding additionally translates the foreground patches
/// across the background; Static freezes all motion.
Scene make_scene(ScenePreset preset, int width, int height, std::uint64_t seed);

struct PatternOptions {
  int width = 128;
  int height = 128;
  int dot_count = 200;
  double min_spacing = 8.0;
  double sigma_psf = 1.2;
  std::uint64_t seed = 0;
};

/// Poisson-disk dot pattern by best-candidate sampling, with centers kept
/// 3*sigma_psf inside the image. Throws ConfigError
/// (naming the achieved count) when the packing cannot be completed.
Pattern generate_pattern(const PatternOptions& opts);

/// Adds a Gaussian splat truncated at 4 sigma; values are not clamped.
void splat(GrayImage& img, Point2 center, double sigma, double amplitude = 1.0);

struct RenderOptions {
  int frames = 64;
  int first_frame = 0;  ///< scene time of the first rendered frame
  double sigma_psf = 1.2;
  double noise = 0.0;    ///< additive Gaussian pixel noise (std-dev, intensity units)
  double dropout = 0.0;  ///< per-dot, per-frame drop probability
  double d_min = 20.0;
  double d_max = 80.0;
  double v_max = 3.0;
  std::uint64_t seed = 0;
};

struct FlowPoint {
  int frame = 0;
  Point2 position;
};

struct VisibleDot {
  int dot = -1;
  Point2 position;
};

struct GroundTruthBundle {
  std::vector<GrayImage> frames;
  std::vector<DisparityMap> disparity;
  /// True multi-frame pattern flow, indexed by pattern dot id.
  std::vector<std::vector<FlowPoint>> true_flow;
  /// Per frame, the dots recorded in true_flow for that frame.
  std::vector<std::vector<VisibleDot>> visible;
};

/// Throws ConfigError when a patch violates the disparity range, the
/// per-frame speed limit at any dot, or the invertibility bound |dd/du| < 1.
void validate_scene(const Scene& scene, const Pattern& pattern, const RenderOptions& opts);

/// Renders frames, dense ground truth and true flow. Validates the scene first.
GroundTruthBundle render_sequence(const Pattern& pattern, const Scene& scene,
                                  const RenderOptions& opts);

/// Dense ground-truth disparity at one instant; unlit and empty pixels are invalid.
DisparityMap render_disparity(const Scene& scene, double t);

}  // namespace patflow
