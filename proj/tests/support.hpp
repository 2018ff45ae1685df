#pragma once

// Small helpers shared by the unit tests.

#include <cstdint>
#include <random>
#include <vector>

#include "patflow/dataset.hpp"
#include "patflow/image.hpp"
#include "patflow/simulator.hpp"

namespace patflow::test {

inline Scene single_patch_scene(int w, int h, double base, double rate = 0.0) {
  Scene s;
  s.width = w;
  s.height = h;
  ScenePatch p;
  p.region = {0.0, 0.0, static_cast<double>(w), static_cast<double>(h)};
  p.base = base;
  p.motion.base_rate = rate;
  s.patches.push_back(p);
  return s;
}

inline Pattern make_test_pattern(int w, int h, int count, double spacing, std::uint64_t seed) {
  PatternOptions o;
  o.width = w;
  o.height = h;
  o.dot_count = count;
  o.min_spacing = spacing;
  o.seed = seed;
  return generate_pattern(o);
}

inline GrayImage random_image(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GrayImage img(w, h);
  for (auto& v : img.pixels()) v = u(rng);
  return img;
}

/// Default-sized simulated sequence with ground truth.
inline Sequence simulated_sequence(ScenePreset preset, int frames, std::uint64_t seed,
                                   double noise = 0.0, double dropout = 0.0) {
  const Pattern pattern = make_test_pattern(128, 128, 200, 8.0, seed);
  const Scene scene = make_scene(preset, 128, 128, seed);
  RenderOptions ro;
  ro.frames = frames;
  ro.noise = noise;
  ro.dropout = dropout;
  ro.seed = seed;
  DatasetMeta meta;
  meta.width = 128;
  meta.height = 128;
  meta.frames = frames;
  meta.seed = seed;
  meta.dot_count = 200;
  meta.min_spacing = 8.0;
  meta.sigma_psf = ro.sigma_psf;
  meta.noise = noise;
  meta.dropout = dropout;
  meta.v_max = ro.v_max;
  return make_sequence(meta, pattern, render_sequence(pattern, scene, ro));
}

/// Distance from `v` to the nearest integer.
inline double lattice_distance(double v) { return std::abs(v - std::round(v)); }

}  // namespace patflow::test
