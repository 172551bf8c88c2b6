// Compares the serial reference kernels against the OpenMP variants on
// learner-shaped workloads (batch x width dense layers).

#include <benchmark/benchmark.h>

#include "kcac/kernels.hpp"
#include "kcac/rng.hpp"

namespace {

using kcac::Matrix;
using kcac::RandomStream;

struct Workload {
  Matrix x, wt, dy;
  std::vector<double> bias;
  Matrix y, dx, dwt;
  std::vector<double> dbias;

  Workload(int batch, int in, int out) {
    RandomStream rng(7);
    x.resize(batch, in);
    wt.resize(in, out);
    dy.resize(batch, out);
    bias.assign(std::size_t(out), 0.0);
    for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
    for (double& v : wt.data) v = rng.uniform(-1.0, 1.0);
    for (double& v : dy.data) v = rng.uniform(-1.0, 1.0);
    for (double& v : bias) v = rng.uniform(-1.0, 1.0);
    y.resize(batch, out);
    dx.resize(batch, in);
    dwt.resize(in, out);
    dbias.assign(std::size_t(out), 0.0);
  }
};

template <typename Fn>
void run_forward(benchmark::State& state, Fn fn) {
  int batch = int(state.range(0)), in = int(state.range(1)),
      out = int(state.range(2));
  Workload w(batch, in, out);
  for (auto _ : state) {
    fn(w.x.data.data(), w.wt.data.data(), w.bias.data(), w.y.data.data(), batch,
       in, out);
    benchmark::DoNotOptimize(w.y.data.data());
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * 2 * batch * in * out);
}

template <typename Fn>
void run_backward_params(benchmark::State& state, Fn fn) {
  int batch = int(state.range(0)), in = int(state.range(1)),
      out = int(state.range(2));
  Workload w(batch, in, out);
  for (auto _ : state) {
    fn(w.x.data.data(), w.dy.data.data(), w.dwt.data.data(), w.dbias.data(),
       batch, in, out);
    benchmark::DoNotOptimize(w.dwt.data.data());
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * 2 * batch * in * out);
}

template <typename Fn>
void run_backward_input(benchmark::State& state, Fn fn) {
  int batch = int(state.range(0)), in = int(state.range(1)),
      out = int(state.range(2));
  Workload w(batch, in, out);
  for (auto _ : state) {
    fn(w.dy.data.data(), w.wt.data.data(), w.dx.data.data(), batch, in, out);
    benchmark::DoNotOptimize(w.dx.data.data());
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * 2 * batch * in * out);
}

void args(benchmark::internal::Benchmark* b) {
  b->Args({256, 64, 64})->Args({1024, 64, 64})->Args({1024, 21, 64});
}

void BM_forward_serial(benchmark::State& s) {
  run_forward(s, kcac::kernels::serial::linear_forward);
}
void BM_forward_omp(benchmark::State& s) {
  run_forward(s, kcac::kernels::omp::linear_forward);
}
void BM_backward_params_serial(benchmark::State& s) {
  run_backward_params(s, kcac::kernels::serial::linear_backward_params);
}
void BM_backward_params_omp(benchmark::State& s) {
  run_backward_params(s, kcac::kernels::omp::linear_backward_params);
}
void BM_backward_input_serial(benchmark::State& s) {
  run_backward_input(s, kcac::kernels::serial::linear_backward_input);
}
void BM_backward_input_omp(benchmark::State& s) {
  run_backward_input(s, kcac::kernels::omp::linear_backward_input);
}

BENCHMARK(BM_forward_serial)->Apply(args);
BENCHMARK(BM_forward_omp)->Apply(args);
BENCHMARK(BM_backward_params_serial)->Apply(args);
BENCHMARK(BM_backward_params_omp)->Apply(args);
BENCHMARK(BM_backward_input_serial)->Apply(args);
BENCHMARK(BM_backward_input_omp)->Apply(args);

}  // namespace

BENCHMARK_MAIN();
