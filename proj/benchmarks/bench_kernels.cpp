#include <benchmark/benchmark.h>

#include <random>

#include "lhdr/imaging.hpp"
#include "lhdr/parallel.hpp"
#include "lhdr/tinycnn.hpp"

namespace {

using namespace lhdr;

nn::Tensor noise_tensor(int w, int h, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  nn::Tensor t(w, h, c);
  for (float& v : t.values()) v = u(rng);
  return t;
}

// Args: size, in channels, out channels. 3x3 kernel, one thread.
void BM_Conv3x3(benchmark::State& state) {
  set_max_threads(1);
  const int n = static_cast<int>(state.range(0));
  const int cin = static_cast<int>(state.range(1));
  const int cout = static_cast<int>(state.range(2));
  const nn::Tensor input = noise_tensor(n, n, cin, 1);
  const nn::Tensor k = noise_tensor(9 * cin * cout, 1, 1, 2);
  const std::vector<float> kernel(k.values().begin(), k.values().end());
  const std::vector<float> bias(cout, 0.0f);
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d(input, kernel, bias, 3, cout));
  const double macs = 9.0 * cin * cout * n * n;
  state.counters["MAC/s"] = benchmark::Counter(macs * state.iterations(),
                                               benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Conv3x3)
    ->Args({512, 12, 16})
    ->Args({512, 16, 16})
    ->Args({512, 16, 2})
    ->Args({512, 8, 16})
    ->Args({128, 12, 24})
    ->Args({128, 24, 24})
    ->Unit(benchmark::kMillisecond);

void BM_BilinearWarp(benchmark::State& state) {
  set_max_threads(1);
  const int n = static_cast<int>(state.range(0));
  const LinearImage img(noise_tensor(n, n, 3, 3), 1.0);
  ShiftField field(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) field.at(x, y) = {0.3f + 0.01f * (x % 9), -1.7f + 0.02f * (y % 5)};
  for (auto _ : state) benchmark::DoNotOptimize(bilinear_warp(img, field));
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_BilinearWarp)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace
