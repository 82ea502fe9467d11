#include "satrf/error.hpp"
#include "satrf/optim.hpp"
#include "satrf/parallel.hpp"

namespace satrf {

TrainingProblem build_problem(const Forest& forest, const Dataset& ds, const AttentionConfig& cfg,
                              unsigned jobs) {
  cfg.validate();
  if (ds.num_features() != forest.num_features) throw DataError("dataset and forest feature counts differ");
  std::vector<Coefficients> coef(ds.size());
  parallel_for(ds.size(), jobs, [&](std::size_t s) {
    const auto x = ds.row(s);
    coef[s] = compute_kernel(x, assign(forest, x), cfg).coefficients(cfg.epsilon, cfg.gamma);
  });
  return TrainingProblem::from_coefficients(coef, ds.targets());
}

WeightSolution solve(const TrainingProblem& problem, LossNorm loss, const SolverOptions& options) {
  return loss == LossNorm::L2 ? solve_qp(problem, options) : solve_lp(problem, 1e-9);
}

TrainResult train(const Forest& forest, const Dataset& ds, const AttentionConfig& cfg,
                  const SolverOptions& options, unsigned jobs) {
  const TrainingProblem problem = build_problem(forest, ds, cfg, jobs);
  auto sol = solve(problem, cfg.loss, options);
  TrainResult out;
  out.model.forest = forest;
  out.model.config = cfg;
  out.model.w = std::move(sol.w);
  out.model.v = std::move(sol.v);
  out.report = std::move(sol.report);
  out.training_loss = problem.loss(cfg.loss, out.model.w, out.model.v);
  const std::vector<double> uniform(problem.num_trees, 1.0 / static_cast<double>(problem.num_trees));
  out.uniform_loss = problem.loss(cfg.loss, uniform, uniform);
  return out;
}

}  // namespace satrf
