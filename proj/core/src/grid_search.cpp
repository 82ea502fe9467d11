#include <algorithm>
#include <cmath>
#include <limits>

#include "satrf/error.hpp"
#include "satrf/eval.hpp"
#include "satrf/parallel.hpp"
#include "satrf/random.hpp"

namespace satrf {

namespace {

bool constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

std::vector<KernelCache> kernels(const Forest& forest, const Dataset& ds, const AttentionConfig& cfg) {
  std::vector<KernelCache> out;
  out.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto x = ds.row(i);
    out.push_back(compute_kernel(x, assign(forest, x), cfg));
  }
  return out;
}

}  // namespace

GridResult grid_search(const Dataset& train, const ForestParams& forest_params, const AttentionConfig& base,
                       const GridSpec& grid, const FoldPlan& plan, const SolverOptions& solver,
                       unsigned jobs) {
  base.validate();
  if (grid.epsilons.empty() || grid.gammas.empty()) throw DataError("grid search needs nonempty grids");
  for (double e : grid.epsilons) {
    if (!(e >= 0.0 && e <= 1.0)) throw DataError("epsilon grid values must lie in [0, 1]");
  }
  for (double g : grid.gammas) {
    if (!(g >= 0.0 && g <= 1.0)) throw DataError("gamma grid values must lie in [0, 1]");
  }
  if (plan.num_rows() != train.size()) throw DataError("fold plan does not match the training set size");

  const std::size_t cells = grid.epsilons.size() * grid.gammas.size();
  const std::size_t folds = plan.repeats * plan.k;
  constexpr double kSkipped = std::numeric_limits<double>::quiet_NaN();
  // scores[fold * cells + cell]; NaN marks a skipped fold.
  std::vector<double> scores(folds * cells, kSkipped);

  parallel_for(folds, jobs, [&](std::size_t job) {
    const std::size_t r = job / plan.k;
    const std::size_t f = job % plan.k;
    const auto [fit_idx, val_idx] = plan.partition(r, f);
    const Dataset fit = train.subset(fit_idx);
    const Dataset val = train.subset(val_idx);
    if (val.size() < 2 || constant(val.targets())) return;

    ForestParams fp = forest_params;
    fp.seed = derive_seed(forest_params.seed, job);
    const Forest forest = fit_forest(fit, fp, 1);
    const auto fit_kernels = kernels(forest, fit, base);
    const auto val_kernels = kernels(forest, val, base);

    std::vector<Coefficients> coef(fit.size());
    std::vector<double> pred(val.size());
    std::size_t cell = 0;
    for (double eps : grid.epsilons) {
      for (double gam : grid.gammas) {
        for (std::size_t s = 0; s < fit.size(); ++s) coef[s] = fit_kernels[s].coefficients(eps, gam);
        const auto problem = TrainingProblem::from_coefficients(coef, fit.targets());
        const auto sol = solve(problem, base.loss, solver);
        for (std::size_t i = 0; i < val.size(); ++i) {
          pred[i] = val_kernels[i].coefficients(eps, gam).evaluate(sol.w, sol.v);
        }
        scores[job * cells + cell] = r2(val.targets(), pred);
        ++cell;
      }
    }
  });

  GridResult result;
  result.best = base;
  for (std::size_t job = 0; job < folds; ++job) {
    if (std::isnan(scores[job * cells])) {
      ++result.skipped_folds;
      result.warnings.push_back("fold " + std::to_string(job % plan.k) + " of repeat " +
                                std::to_string(job / plan.k) + " skipped: degenerate validation target");
    }
  }
  if (result.skipped_folds == folds) throw DataError("grid search: every fold was degenerate");

  double best = -std::numeric_limits<double>::infinity();
  std::size_t cell = 0;
  for (double eps : grid.epsilons) {
    for (double gam : grid.gammas) {
      CvCell c;
      c.epsilon = eps;
      c.gamma = gam;
      double sum = 0.0;
      for (std::size_t job = 0; job < folds; ++job) {
        const double s = scores[job * cells + cell];
        if (std::isnan(s)) continue;
        sum += s;
        ++c.folds;
      }
      c.mean_r2 = sum / static_cast<double>(c.folds);
      result.cells.push_back(c);
      ++cell;
    }
  }
  // Ties resolve toward smaller epsilon, then smaller gamma, in value order.
  std::vector<std::size_t> order(result.cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ca = result.cells[a];
    const auto& cb = result.cells[b];
    return ca.epsilon != cb.epsilon ? ca.epsilon < cb.epsilon : ca.gamma < cb.gamma;
  });
  for (std::size_t i : order) {
    if (result.cells[i].mean_r2 > best) {
      best = result.cells[i].mean_r2;
      result.best.epsilon = result.cells[i].epsilon;
      result.best.gamma = result.cells[i].gamma;
    }
  }
  return result;
}

}  // namespace satrf
