#include <benchmark/benchmark.h>

#include <vector>

#include "muonkit/kernels.hpp"
#include "muonkit/matrix.hpp"
#include "muonkit/polar.hpp"
#include "muonkit/rng.hpp"
#include "muonkit/sketch.hpp"

namespace {

using muonkit::Index;
using muonkit::Matrix;

Matrix random_matrix(Index rows, Index cols, std::uint64_t stream) {
  muonkit::RngStream rng(7, stream);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

template <auto Gemm>
void bm_gemm(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix a = random_matrix(n, n, 1);
  const Matrix b = random_matrix(n, n, 2);
  std::vector<double> c(static_cast<std::size_t>(n * n));
  for (auto _ : state) {
    Gemm(n, n, n, a.values(), b.values(), c);
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["GFLOP/s"] = benchmark::Counter(2.0 * static_cast<double>(n * n * n),
                                                 benchmark::Counter::kIsIterationInvariantRate,
                                                 benchmark::Counter::kIs1000);
}

void bm_gemm_serial(benchmark::State& state) { bm_gemm<muonkit::kernels::serial::gemm_nn>(state); }
void bm_gemm_parallel(benchmark::State& state) { bm_gemm<muonkit::kernels::parallel::gemm_nn>(state); }

BENCHMARK(bm_gemm_serial)->Arg(64)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_gemm_parallel)->Arg(64)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void bm_full_polar(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix m = random_matrix(n, n, 3);
  muonkit::PolarConfig cfg;
  cfg.schedule = muonkit::quintic_theoretical_schedule(5);
  for (auto _ : state) benchmark::DoNotOptimize(muonkit::inexact_polar(m, cfg).value.data());
}

void bm_randomized_polar(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix m = random_matrix(n, n, 3);
  muonkit::PolarConfig cfg;
  cfg.schedule = muonkit::quintic_theoretical_schedule(5);
  const muonkit::SketchConfig sketch{static_cast<int>(n / 16) - 2, 2, 1, muonkit::SketchKind::gaussian};
  muonkit::RngStream rng(7, 4);
  for (auto _ : state) benchmark::DoNotOptimize(muonkit::randomized_polar(m, sketch, cfg, rng).data());
}

BENCHMARK(bm_full_polar)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_randomized_polar)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
