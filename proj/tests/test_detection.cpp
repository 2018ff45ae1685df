#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "patflow/detection.hpp"
#include "patflow/simulator.hpp"
#include "support.hpp"

using namespace patflow;

namespace {

// Union-find labelling used as an independent component counter.
int count_components(const GrayImage& img, double tau, int min_area, int max_area) {
  const int w = img.width(), h = img.height();
  std::vector<int> parent(img.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  auto on = [&](int x, int y) { return x >= 0 && y >= 0 && x < w && y < h && img(x, y) >= tau; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!on(x, y)) continue;
      for (auto [dx, dy] : {std::pair{-1, 0}, {-1, -1}, {0, -1}, {1, -1}}) {
        if (on(x + dx, y + dy)) parent[find(y * w + x)] = find((y + dy) * w + x + dx);
      }
    }
  }
  std::vector<int> area(img.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (on(x, y)) ++area[find(y * w + x)];
    }
  }
  return static_cast<int>(std::count_if(area.begin(), area.end(),
                                        [&](int a) { return a >= min_area && a <= max_area; }));
}

}  // namespace

TEST(DetectDots, EmptyImage) {
  EXPECT_TRUE(detect_dots(GrayImage(32, 32, 0.0), {}).empty());
  EXPECT_TRUE(detect_dots(GrayImage(), {}).empty());
}

TEST(DetectDots, SubpixelCentroidOfOneSplat) {
  GrayImage img(32, 40);
  splat(img, {10.5, 20.25}, 1.2);
  const auto dots = detect_dots(img, {}, 3);
  ASSERT_EQ(dots.size(), 1u);
  EXPECT_EQ(dots.frame, 3);
  EXPECT_LT(distance(dots.center(0), {10.5, 20.25}), 0.15);
  EXPECT_FALSE(dots.dots[0].touches_border);
  EXPECT_GT(dots.dots[0].response, 0.0);
}

TEST(DetectDots, TwoSplatsTenPixelsApart) {
  GrayImage img(40, 20);
  splat(img, {12.3, 9.6}, 1.2);
  splat(img, {22.3, 9.6}, 1.2);
  const auto dots = detect_dots(img, {});
  EXPECT_EQ(dots.size(), 2u);
  EXPECT_EQ(static_cast<int>(dots.size()), count_components(img, 0.25, 3, 100));
}

TEST(DetectDots, CountMatchesComponentOracleOnRenderedFrames) {
  const auto pattern = test::make_test_pattern(128, 128, 200, 8.0, 12);
  const Scene scene = make_scene(ScenePreset::NonRigid, 128, 128, 12);
  RenderOptions ro;
  ro.frames = 4;
  const auto b = render_sequence(pattern, scene, ro);
  for (const auto& f : b.frames) {
    EXPECT_EQ(static_cast<int>(detect_dots(f, {}).size()), count_components(f, 0.25, 3, 100));
  }
}

TEST(DetectDots, InteriorDetectionsMatchVisibleDotsOnWellSeparatedFrames) {
  const auto pattern = test::make_test_pattern(128, 128, 150, 8.0, 4);
  const Scene scene = test::single_patch_scene(128, 128, 30.0, 0.5);
  RenderOptions ro;
  ro.frames = 6;
  const auto b = render_sequence(pattern, scene, ro);
  const auto interior = [](Point2 p) { return p.x > 3.0 && p.x < 124.0 && p.y > 3.0 && p.y < 124.0; };
  for (std::size_t f = 0; f < b.frames.size(); ++f) {
    const auto dots = detect_dots(b.frames[f], {});
    std::size_t inner = 0;
    for (const auto& v : b.visible[f]) {
      if (!interior(v.position)) continue;
      ++inner;
      int hits = 0;
      for (const auto& d : dots.dots) hits += distance(d.center, v.position) < 0.15;
      EXPECT_EQ(hits, 1) << "frame " << f << " dot " << v.dot;
    }
    EXPECT_GT(inner, 60u);
    // Dots centered just outside the image still leave a partial, border-touching blob.
    for (const auto& d : dots.dots) {
      if (d.touches_border) continue;
      double best = INFINITY;
      for (const auto& v : b.visible[f]) best = std::min(best, distance(d.center, v.position));
      EXPECT_LT(best, 0.5) << "frame " << f;
    }
  }
}

TEST(DetectDots, AreaBoundsFilterComponents) {
  GrayImage img(40, 40, 0.0);
  img(5, 5) = 1.0;  // single pixel: below the minimum area
  for (int y = 10; y < 30; ++y) {
    for (int x = 10; x < 30; ++x) img(x, y) = 1.0;  // 400 px: above the maximum
  }
  EXPECT_TRUE(detect_dots(img, {}).empty());
  DetectionConfig loose;
  loose.min_area = 1;
  loose.max_area = 1000;
  EXPECT_EQ(detect_dots(img, loose).size(), 2u);
}

TEST(DetectDots, BorderComponentsAreKeptAndFlagged) {
  GrayImage img(20, 20);
  splat(img, {0.4, 10.0}, 1.2);
  const auto dots = detect_dots(img, {});
  ASSERT_EQ(dots.size(), 1u);
  EXPECT_TRUE(dots.dots[0].touches_border);
}

TEST(DetectDots, CentroidsWithinOnePixelAreMerged) {
  // A square ring and a bar at its center are separate components with the
  // same centroid.
  GrayImage img(20, 20, 0.0);
  for (int k = 3; k <= 9; ++k) {
    img(k, 3) = img(k, 9) = img(3, k) = img(9, k) = 1.0;
  }
  for (int x = 5; x <= 7; ++x) img(x, 6) = 1.0;
  const auto dots = detect_dots(img, {});
  ASSERT_EQ(dots.size(), 1u);
  EXPECT_NEAR(dots.center(0).x, 6.0, 1e-12);
  EXPECT_NEAR(dots.center(0).y, 6.0, 1e-12);
  EXPECT_EQ(count_components(img, 0.25, 3, 100), 2);
  for (std::size_t i = 0; i < dots.size(); ++i) {
    for (std::size_t j = i + 1; j < dots.size(); ++j) EXPECT_GE(distance(dots.center(i), dots.center(j)), 1.0);
  }
}

TEST(DetectDots, CentroidBiasUnderNoiseIsSmall) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> pos(8.0, 24.0);
  std::normal_distribution<double> gauss(0.0, 0.02);
  double total = 0.0;
  int n = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const Point2 c{pos(rng), pos(rng)};
    GrayImage img(32, 32);
    splat(img, c, 1.2);
    for (auto& v : img.pixels()) v = std::clamp(v + gauss(rng), 0.0, 1.0);
    const auto dots = detect_dots(img, {});
    ASSERT_EQ(dots.size(), 1u);
    total += distance(dots.center(0), c);
    ++n;
  }
  EXPECT_LT(total / n, 0.3);
}

TEST(DetectDots, Deterministic) {
  std::mt19937_64 rng(5);
  const auto img = test::random_image(48, 48, rng);
  const auto a = detect_dots(img, {});
  const auto b = detect_dots(img, {});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.center(i), b.center(i));
}
