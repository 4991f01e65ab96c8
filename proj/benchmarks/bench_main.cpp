#include <benchmark/benchmark.h>

#include <lbp/fixation.hpp>
#include <lbp/ibm.hpp>
#include <lbp/invasibility.hpp>

namespace {

void BM_LatticeSolve(benchmark::State& state) {
  const int n_max = static_cast<int>(state.range(0));
  lbp::LatticeSolver solver(n_max);
  const lbp::TwoTypeRates r{1.0, 1.05, 1.0, 0.98, 1.0, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve(r).u(1, 1));
  state.SetComplexityN(n_max);
}
BENCHMARK(BM_LatticeSolve)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMillisecond)->Complexity();

void BM_LatticeSolveGaussSeidel(benchmark::State& state) {
  lbp::LatticeSolver solver(static_cast<int>(state.range(0)), lbp::FixationMethod::kGaussSeidel);
  const lbp::TwoTypeRates r{1.0, 1.05, 1.0, 0.98, 1.0, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve(r).u(1, 1));
}
BENCHMARK(BM_LatticeSolveGaussSeidel)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_SolveFixationAdaptive(benchmark::State& state) {
  const double theta = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(lbp::solve_fixation(lbp::TwoTypeRates::neutral(theta, 1.0)).n_max());
}
BENCHMARK(BM_SolveFixationAdaptive)->Arg(1)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_ACoefficients(benchmark::State& state) {
  const double theta = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(lbp::a_coefficients(theta, 1.0).lambda);
}
BENCHMARK(BM_ACoefficients)->Arg(1)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_Ibm(benchmark::State& state) {
  const lbp::ModelSpec m = lbp::parse_model("k=1; b=1+0.2*x1; c=exp(-(x1-y1)^2)/20; [mutation] sigma=0.1");
  lbp::SimConfig cfg;
  cfg.t_end = 50.0;
  cfg.gamma = 0.1;
  cfg.record = lbp::RecordMode::kFinal;
  std::int64_t events = 0;
  for (auto _ : state) {
    const auto path = lbp::run_ibm(m, cfg, lbp::PopulationState::monomorphic(lbp::TraitPoint{0.0}, 20));
    events += path.back().total_size();
    ++cfg.seed;
  }
  benchmark::DoNotOptimize(events);
}
BENCHMARK(BM_Ibm)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
