// Serial vs OpenMP-parallel timings of the batch kernels.
#include <benchmark/benchmark.h>

#include "polydyn/examples.hpp"

using namespace polydyn;

namespace {

Exec mode(const benchmark::State& state) { return state.range(0) ? Exec::Parallel : Exec::Serial; }

void label(benchmark::State& state) { state.SetLabel(state.range(0) ? "parallel" : "serial"); }

void BM_check_flow(benchmark::State& state) {
  const System sys = examples::random_finite(7);
  const auto sections = all_sections(sys.interface);
  const auto pairs = time_pairs_upto(8);
  const auto states = sys.states.enumerate();
  for (auto _ : state) benchmark::DoNotOptimize(check_flow(sys, sections, pairs, states, 0.0, mode(state)));
  label(state);
}

void BM_trace_mc(benchmark::State& state) {
  const System m = examples::markov_cell(examples::cell_matrix());
  const Section s = all_sections(m.interface).front();
  for (auto _ : state)
    benchmark::DoNotOptimize(trace_mc(m, s, Dist::dirac(Point::label("0")), 32, 20000, 1, mode(state)));
  label(state);
}

void BM_free_energy_mc(benchmark::State& state) {
  const GaussianState rho{Eigen::VectorXd::Constant(1, 0.4), Eigen::MatrixXd::Constant(1, 1, 0.2)};
  for (auto _ : state)
    benchmark::DoNotOptimize(free_energy_mc(examples::scalar_prior(), examples::scalar_model(), rho,
                                            Eigen::VectorXd::Ones(1), 100000, 5, mode(state)));
  label(state);
}

void BM_mean_trajectory(benchmark::State& state) {
  const System noisy = with_prior(build_laplace(examples::scalar_model(), LaplaceConfig{}), examples::scalar_prior());
  const Section datum = Section::constant(noisy.interface, Point::vec({1.0}));
  for (auto _ : state)
    benchmark::DoNotOptimize(mean_trajectory(noisy, datum, Point::vec({0.0, 0.0}), 100, 512, 3, mode(state)));
  label(state);
}

}  // namespace

BENCHMARK(BM_check_flow)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_trace_mc)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_free_energy_mc)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mean_trajectory)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
