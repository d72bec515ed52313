#include <benchmark/benchmark.h>

#include "lhdr/burst_sim.hpp"
#include "lhdr/models.hpp"
#include "lhdr/parallel.hpp"
#include "lhdr/pipeline.hpp"

namespace {

using namespace lhdr;

std::vector<LinearImage> two_frames(int n) {
  SimConfig cfg;
  cfg.n_frames = 2;
  const BurstSample s = simulate_burst(make_procedural_scene(n, n, 5), cfg, 17);
  return s.frames;
}

// One align + merge iteration: a two-frame burst.
void BM_AlignMergeIteration(benchmark::State& state) {
  set_max_threads(static_cast<int>(state.range(1)));
  const std::vector<LinearImage> frames = two_frames(static_cast<int>(state.range(0)));
  const ModelSet models = random_model_set(3, 0.1f);
  PipelineConfig cfg;
  cfg.keep_fields = false;
  for (auto _ : state) benchmark::DoNotOptimize(iterative_merge(frames, models, cfg));
  set_max_threads(1);
}
BENCHMARK(BM_AlignMergeIteration)
    ->Args({256, 1})
    ->Args({512, 1})
    ->Args({512, 4})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

}  // namespace
