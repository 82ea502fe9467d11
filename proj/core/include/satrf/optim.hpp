#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "satrf/attention.hpp"
#include "satrf/dataset.hpp"
#include "satrf/forest.hpp"

namespace satrf {

/// Per-example affine coefficients plus targets. H and G are row-major n x T.
/// The training loss is sum_s |y_s - R_s - <H_s, w> - <G_s, v>|^p for p = 2 or 1.
struct TrainingProblem {
  std::size_t num_trees = 0;
  std::vector<double> R;
  std::vector<double> H;
  std::vector<double> G;
  std::vector<double> y;

  std::size_t size() const noexcept { return y.size(); }
  std::span<const double> H_row(std::size_t s) const { return {H.data() + s * num_trees, num_trees}; }
  std::span<const double> G_row(std::size_t s) const { return {G.data() + s * num_trees, num_trees}; }

  static TrainingProblem from_coefficients(std::span<const Coefficients> coef, std::span<const double> y);

  /// Throws DataError on inconsistent lengths or non-finite entries.
  void validate() const;

  std::vector<double> residuals(std::span<const double> w, std::span<const double> v) const;
  double l2_loss(std::span<const double> w, std::span<const double> v) const;
  double l1_loss(std::span<const double> w, std::span<const double> v) const;
  double loss(LossNorm norm, std::span<const double> w, std::span<const double> v) const {
    return norm == LossNorm::L2 ? l2_loss(w, v) : l1_loss(w, v);
  }
};

struct SolverReport {
  double objective = 0.0;
  std::size_t iterations = 0;
  double kkt_residual = 0.0;
  bool converged = false;
  std::vector<double> history;  // objective after each accepted iteration (QP only, when requested)
};

struct SolverOptions {
  double tolerance = 1e-8;
  std::size_t max_iterations = 50'000;
  bool record_history = false;
};

struct WeightSolution {
  std::vector<double> w;
  std::vector<double> v;
  SolverReport report;
};

/// Euclidean projection onto {p : p >= 0, sum p = 1} (sort-based, O(T log T)).
std::vector<double> project_simplex(std::span<const double> z);
void project_simplex_inplace(std::span<double> z);

/// True when p is nonnegative and sums to 1 within tol.
bool on_simplex(std::span<const double> p, double tol = 1e-9);

/// L2 training: projected gradient on the product of two simplices with
/// Barzilai-Borwein trial steps and Armijo backtracking, started from uniform
/// weights. The objective never increases between accepted iterates.
WeightSolution solve_qp(const TrainingProblem& problem, const SolverOptions& options = {});

/// L1 training: the slack-variable linear program min sum_s Q_s subject to
/// Q_s >= +-(y_s - R_s - <H_s, w> - <G_s, v>) and the simplex constraints,
/// solved by a dense revised primal simplex method.
WeightSolution solve_lp(const TrainingProblem& problem, double tolerance = 1e-9);

/// Projected-gradient stationarity ||z - P(z - grad f(z) / L)|| for the L2
/// objective, with L the gradient Lipschitz constant.
double qp_stationarity(const TrainingProblem& problem, std::span<const double> w, std::span<const double> v);

TrainingProblem build_problem(const Forest& forest, const Dataset& ds, const AttentionConfig& cfg,
                              unsigned jobs = 1);

struct TrainResult {
  SatRfModel model;
  SolverReport report;
  double training_loss = 0.0;  // under cfg.loss at the trained weights
  double uniform_loss = 0.0;   // under cfg.loss at w = v = uniform
};

/// Builds the training problem on ds (the forest's own training data) and
/// solves for (w, v). Solver non-convergence is reported, not thrown.
TrainResult train(const Forest& forest, const Dataset& ds, const AttentionConfig& cfg,
                  const SolverOptions& options = {}, unsigned jobs = 1);

/// Same, on a problem that was already assembled.
WeightSolution solve(const TrainingProblem& problem, LossNorm loss, const SolverOptions& options = {});

}  // namespace satrf
