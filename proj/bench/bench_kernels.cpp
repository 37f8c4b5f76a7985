#include <benchmark/benchmark.h>

#include <random>

#include "kfql/config.hpp"
#include "kfql/harness.hpp"
#include "kfql/kernels.hpp"

using namespace kfql;

namespace {

FullCovariance dense_covariance(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(-0.01, 0.01);
  FullCovariance s(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) s(i, j) = s(j, i) = i == j ? 1.0 : unit(rng);
  }
  return s;
}

BasisVector dense_basis(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 3.0);
  BasisVector phi(n);
  for (std::size_t i = 0; i < n; ++i) phi.push(i, unit(rng));
  return phi;
}

template <auto Kernel>
void row_combination(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto sigma = dense_covariance(n);
  const auto phi = dense_basis(n, 2);
  std::vector<double> out(n);
  for (auto _ : state) {
    Kernel(sigma, phi, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Kernel>
void downdate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto sigma = dense_covariance(n);
  std::vector<double> gain(n, 1e-9), row(n, 1e-9);
  for (auto _ : state) {
    Kernel(sigma, gain, row);
    benchmark::ClobberMemory();
  }
}

template <auto Kernel>
void batch_forms(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto sigma = dense_covariance(n);
  std::vector<BasisVector> phis;
  for (std::uint64_t a = 0; a < 16; ++a) phis.push_back(dense_basis(n, a));
  std::vector<double> out(phis.size());
  for (auto _ : state) {
    Kernel(sigma, phis, out);
    benchmark::DoNotOptimize(out.data());
  }
}

// Whole-experiment throughput at a given number of run-level threads.
void cashier_runs(benchmark::State& state) {
  auto config = parse_config(std::string_view(preset_text("cashier-paper")));
  const auto task = make_task(config.environment);
  auto specs = learner_specs(config);
  specs.resize(2);  // KFQL and AKFQL
  for (auto& s : specs) {
    s.config.budget = 2000;
    s.config.snapshots = {2000};
  }
  ExperimentOptions options{4, {1, 200, 1.0, Metric::MeanReward}, 1,
                            static_cast<int>(state.range(0))};
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_experiment(*task, specs, options));
  }
}

}  // namespace

BENCHMARK(row_combination<kernels::sparse_row_combination_serial>)->Arg(128)->Arg(512)->Arg(1024);
BENCHMARK(row_combination<kernels::sparse_row_combination_omp>)->Arg(128)->Arg(512)->Arg(1024);
BENCHMARK(downdate<kernels::rank_one_downdate_symmetrize_serial>)->Arg(128)->Arg(512)->Arg(1024);
BENCHMARK(downdate<kernels::rank_one_downdate_symmetrize_omp>)->Arg(128)->Arg(512)->Arg(1024);
BENCHMARK(batch_forms<kernels::batch_quadratic_forms_serial>)->Arg(128)->Arg(512);
BENCHMARK(batch_forms<kernels::batch_quadratic_forms_omp>)->Arg(128)->Arg(512);
BENCHMARK(cashier_runs)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
