#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "brox/local_time.hpp"
#include "brox/moments.hpp"
#include "brox/path.hpp"
#include "brox/rng.hpp"

namespace {

brox::SampledPath brownian(double dt, std::int64_t steps) {
  const brox::GaussianStream g(42, brox::stream_id(0, brox::Role::brownian));
  brox::SampledPath p;
  p.t.resize(static_cast<std::size_t>(steps + 1));
  p.value.resize(static_cast<std::size_t>(steps + 1));
  std::vector<double> z(static_cast<std::size_t>(steps));
  g.fill(0, z);
  for (std::int64_t k = 0; k < steps; ++k) {
    const auto i = static_cast<std::size_t>(k);
    p.t[i + 1] = static_cast<double>(k + 1) * dt;
    p.value[i + 1] = p.value[i] + std::sqrt(dt) * z[i];
  }
  return p;
}

std::vector<double> grid(double lo, double hi, double h) {
  std::vector<double> v;
  const auto n = static_cast<int>(std::lround((hi - lo) / h));
  for (int i = 0; i <= n; ++i) v.push_back(lo + i * h);
  return v;
}

template <bool Parallel>
void occupation(benchmark::State& state) {
  const double dt = 1e-5;
  const auto b = brownian(dt, 100000);
  const auto space = grid(-3.0, 3.0, 0.01);
  const auto stamps = grid(0.01, 1.0, 0.01);
  const double eps = brox::default_epsilon(dt);
  for (auto _ : state) {
    auto f = Parallel ? brox::occupation_local_time_parallel(b, eps, space, stamps)
                      : brox::occupation_local_time(b, eps, space, stamps);
    benchmark::DoNotOptimize(f);
  }
}

template <bool Parallel>
void mc_moment(benchmark::State& state) {
  brox::MomentQuery q;
  q.points = {0.0, 0.0};
  q.window = {0.0, 1.0};
  for (auto _ : state) {
    auto m = brox::mc_local_time_moment(q, 200, 1e-4, 0.05, 7, Parallel);
    benchmark::DoNotOptimize(m);
  }
}

}  // namespace

BENCHMARK(occupation<false>)->Name("occupation_local_time/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(occupation<true>)->Name("occupation_local_time/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(mc_moment<false>)->Name("mc_local_time_moment/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(mc_moment<true>)->Name("mc_local_time_moment/parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
