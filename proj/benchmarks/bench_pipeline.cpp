#include <benchmark/benchmark.h>

#include <vector>

#include "patflow/adaptation.hpp"
#include "patflow/dataset.hpp"
#include "patflow/detection.hpp"
#include "patflow/losses.hpp"
#include "patflow/online.hpp"
#include "patflow/simulator.hpp"
#include "patflow/supervision.hpp"
#include "patflow/tracker.hpp"

using namespace patflow;

namespace {

// One default 128x128 sequence shared by every benchmark.
const Sequence& shared_sequence() {
  static const Sequence seq = [] {
    PatternOptions po;
    po.seed = 11;
    Pattern pattern = generate_pattern(po);
    RenderOptions ro;
    ro.frames = 32;
    ro.seed = 11;
    DatasetMeta meta;
    meta.frames = ro.frames;
    const Scene scene = make_scene(ScenePreset::NonRigid, po.width, po.height, 11);
    return make_sequence(meta, pattern, render_sequence(pattern, scene, ro));
  }();
  return seq;
}

WindowBuffer first_window(const Sequence& seq, const EstimatorParams& params) {
  SparseSupervision sup;
  OnlineOptions opts;
  opts.variant = LossVariant::None;
  opts.end_frame = 8;
  opts.on_supervision = [&](int, const SparseSupervision& s) { sup = s; };
  run_online(seq, params, opts);

  WindowBuffer b(8);
  for (int f = 0; f < 8; ++f) {
    b.push(f, seq.frames[static_cast<std::size_t>(f)], DotSet{f, {}}, estimator_predict(params));
  }
  b.supervision = std::move(sup);
  return b;
}

void BM_GeneratePattern(benchmark::State& state) {
  PatternOptions po;
  for (auto _ : state) {
    ++po.seed;
    benchmark::DoNotOptimize(generate_pattern(po));
  }
}
BENCHMARK(BM_GeneratePattern)->Unit(benchmark::kMillisecond);

void BM_RenderFrame(benchmark::State& state) {
  const auto& seq = shared_sequence();
  const Scene scene = make_scene(ScenePreset::NonRigid, 128, 128, 11);
  RenderOptions ro;
  ro.frames = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_sequence(seq.pattern, scene, ro));
  }
}
BENCHMARK(BM_RenderFrame)->Unit(benchmark::kMicrosecond);

void BM_DetectDots(benchmark::State& state) {
  const auto& frame = shared_sequence().frames.front();
  for (auto _ : state) benchmark::DoNotOptimize(detect_dots(frame, {}));
}
BENCHMARK(BM_DetectDots)->Unit(benchmark::kMicrosecond);

void BM_TrackSequence(benchmark::State& state) {
  const auto& seq = shared_sequence();
  std::vector<DotSet> dets;
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    dets.push_back(detect_dots(seq.frames[f], {}, static_cast<int>(f)));
  }
  for (auto _ : state) {
    Tracker tracker;
    for (const auto& d : dets) tracker.step(d);
    benchmark::DoNotOptimize(tracker.live().size());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(dets.size()));
}
BENCHMARK(BM_TrackSequence)->Unit(benchmark::kMicrosecond);

void BM_NeighborGraph(benchmark::State& state) {
  const auto& pattern = shared_sequence().pattern;
  for (auto _ : state) benchmark::DoNotOptimize(build_neighbor_graph(pattern, 8));
}
BENCHMARK(BM_NeighborGraph)->Unit(benchmark::kMicrosecond);

void BM_LossPhotometric(benchmark::State& state) {
  const auto& seq = shared_sequence();
  const std::vector<GrayImage> frames(seq.frames.begin(), seq.frames.begin() + 8);
  const std::vector<DisparityMap> disps(seq.gt.begin(), seq.gt.begin() + 8);
  for (auto _ : state) benchmark::DoNotOptimize(loss_photometric(frames, disps, seq.pattern.image));
}
BENCHMARK(BM_LossPhotometric)->Unit(benchmark::kMicrosecond);

void BM_AdaptStep(benchmark::State& state) {
  const auto& seq = shared_sequence();
  const auto params = initial_params(seq, 0, 5.0, 0.5, 11, 20.0, 80.0);
  const auto buffer = first_window(seq, params);
  for (auto _ : state) {
    benchmark::DoNotOptimize(adapt_step(params, buffer, seq.pattern.image, {}));
  }
}
BENCHMARK(BM_AdaptStep)->Unit(benchmark::kMillisecond);

void BM_OnlineRun(benchmark::State& state) {
  const auto& seq = shared_sequence();
  const auto params = initial_params(seq, 0, 5.0, 0.5, 11, 20.0, 80.0);
  for (auto _ : state) benchmark::DoNotOptimize(run_online(seq, params, {}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seq.frames.size()));
}
BENCHMARK(BM_OnlineRun)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
