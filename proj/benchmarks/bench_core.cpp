#include <benchmark/benchmark.h>

#include "pcelqr/finite_horizon.hpp"
#include "pcelqr/infinite_horizon.hpp"
#include "pcelqr/mc_oracle.hpp"
#include "pcelqr/scenario_io.hpp"
#include "pcelqr/stationary.hpp"

using namespace pcelqr;

namespace {

StochasticScenario cstr(int N) {
  static const StochasticScenario base =
      load_scenario(std::string(PCELQR_REPO_DIR) + "/scenarios/cstr.json");
  return StochasticScenario::create(base.sys, base.cost, base.ini, base.dist, N, base.name);
}

void BM_RiccatiLadder(benchmark::State& state) {
  const auto s = cstr(4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(riccati_ladder(s.sys, s.cost, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_RiccatiLadder)->Arg(30)->Arg(200);

void BM_StationaryGains(benchmark::State& state) {
  const auto s = cstr(4);
  const auto cost = CostSpec::create(s.cost.Q, Matrix::Zero(2, 2), s.cost.R);
  for (auto _ : state) {
    benchmark::DoNotOptimize(stationary_gains(s.sys, cost));
  }
}
BENCHMARK(BM_StationaryGains);

void BM_SolveFinite(benchmark::State& state) {
  const auto s = cstr(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_finite(s));
  }
}
BENCHMARK(BM_SolveFinite)->Arg(30)->Arg(120);

void BM_DiscreteLyapunov(benchmark::State& state) {
  const auto s = cstr(4);
  const auto g = stationary_gains(s.sys, s.cost);
  const Matrix Qc = s.sys.E * s.dist.covariance() * s.sys.E.transpose();
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_discrete_lyapunov(g.A_cl, Qc));
  }
}
BENCHMARK(BM_DiscreteLyapunov);

void BM_ClosedLoopPaths(benchmark::State& state) {
  const auto s = cstr(30);
  const auto ladder = riccati_ladder(s.sys, s.cost, 30);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        simulate_closed_loop(s, ladder, static_cast<int>(state.range(0)), 1));
  }
}
BENCHMARK(BM_ClosedLoopPaths)->Arg(1000)->Arg(10000);

void BM_TruncatedStationarySampling(benchmark::State& state) {
  const auto s = cstr(4);
  const auto g = stationary_gains(s.sys, s.cost);
  const auto approx = build_truncated_stationary(g, s.dist, 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_truncated_stationary(approx, s.dist, 10000, 3));
  }
}
BENCHMARK(BM_TruncatedStationarySampling);

}  // namespace

BENCHMARK_MAIN();
