#include <benchmark/benchmark.h>

#include <map>

#include "satrf/satrf.hpp"

using namespace satrf;

namespace {

const Dataset& friedman(std::size_t n) {
  static std::map<std::size_t, Dataset> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gen_friedman(1, n, 1)).first;
  return it->second;
}

void BM_FitForest(benchmark::State& state) {
  const auto& ds = friedman(static_cast<std::size_t>(state.range(0)));
  ForestParams p;
  p.kind = state.range(1) ? ForestKind::ExtraTrees : ForestKind::RandomForest;
  for (auto _ : state) benchmark::DoNotOptimize(fit_forest(ds, p));
}
BENCHMARK(BM_FitForest)->ArgsProduct({{100, 1000}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_Kernel(benchmark::State& state) {
  const auto& ds = friedman(200);
  ForestParams p;
  p.num_trees = static_cast<std::size_t>(state.range(0));
  const auto forest = fit_forest(ds, p);
  const auto x = ds.row(0);
  const auto la = assign(forest, x);
  AttentionConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(compute_kernel(x, la, cfg).coefficients(0.5, 0.5));
}
BENCHMARK(BM_Kernel)->Arg(10)->Arg(100)->Arg(400);

void BM_SolveQp(benchmark::State& state) {
  const auto& ds = friedman(200);
  ForestParams p;
  p.num_trees = static_cast<std::size_t>(state.range(0));
  const auto forest = fit_forest(ds, p);
  AttentionConfig cfg;
  cfg.epsilon = 0.5;
  cfg.gamma = 0.5;
  const auto problem = build_problem(forest, ds, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(solve_qp(problem));
}
BENCHMARK(BM_SolveQp)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_SolveLp(benchmark::State& state) {
  const auto& ds = friedman(200);
  ForestParams p;
  p.num_trees = static_cast<std::size_t>(state.range(0));
  const auto forest = fit_forest(ds, p);
  AttentionConfig cfg;
  cfg.epsilon = 0.5;
  cfg.gamma = 0.5;
  const auto problem = build_problem(forest, ds, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(solve_lp(problem));
}
BENCHMARK(BM_SolveLp)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_ProjectSimplex(benchmark::State& state) {
  Rng rng(3);
  std::vector<double> z(static_cast<std::size_t>(state.range(0)));
  for (auto& v : z) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(project_simplex(z));
}
BENCHMARK(BM_ProjectSimplex)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
