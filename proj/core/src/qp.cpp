#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "satrf/error.hpp"
#include "satrf/optim.hpp"

namespace satrf {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// f(z) = |A z - b|^2 with z = (w, v), A = [H G], b = y - R, kept in Gram form.
struct Quadratic {
  std::size_t T = 0;
  MatrixXd Q;  // A^T A
  VectorXd c;  // A^T b
  double lipschitz = 0.0;

  explicit Quadratic(const TrainingProblem& p) : T(p.num_trees) {
    const auto n = static_cast<Eigen::Index>(p.size());
    const auto d = static_cast<Eigen::Index>(2 * T);
    MatrixXd A(n, d);
    VectorXd b(n);
    for (Eigen::Index s = 0; s < n; ++s) {
      const auto h = p.H_row(static_cast<std::size_t>(s));
      const auto g = p.G_row(static_cast<std::size_t>(s));
      for (std::size_t k = 0; k < T; ++k) {
        A(s, static_cast<Eigen::Index>(k)) = h[k];
        A(s, static_cast<Eigen::Index>(T + k)) = g[k];
      }
      b(s) = p.y[static_cast<std::size_t>(s)] - p.R[static_cast<std::size_t>(s)];
    }
    Q.noalias() = A.transpose() * A;
    c.noalias() = A.transpose() * b;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(Q, Eigen::EigenvaluesOnly);
    lipschitz = 2.0 * std::max(0.0, eig.eigenvalues().maxCoeff());
  }

  VectorXd gradient(const VectorXd& z) const { return 2.0 * (Q * z - c); }
};

void project_pair(VectorXd& z, std::size_t T) {
  project_simplex_inplace(std::span<double>(z.data(), T));
  project_simplex_inplace(std::span<double>(z.data() + T, T));
}

double stationarity(const Quadratic& q, const VectorXd& z, const VectorXd& grad) {
  if (q.lipschitz <= 0.0) return 0.0;
  VectorXd trial = z - grad / q.lipschitz;
  project_pair(trial, q.T);
  return (z - trial).norm();
}

}  // namespace

double qp_stationarity(const TrainingProblem& problem, std::span<const double> w, std::span<const double> v) {
  problem.validate();
  const Quadratic q(problem);
  VectorXd z(static_cast<Eigen::Index>(2 * q.T));
  for (std::size_t k = 0; k < q.T; ++k) {
    z(static_cast<Eigen::Index>(k)) = w[k];
    z(static_cast<Eigen::Index>(q.T + k)) = v[k];
  }
  return stationarity(q, z, q.gradient(z));
}

WeightSolution solve_qp(const TrainingProblem& problem, const SolverOptions& options) {
  problem.validate();
  const Quadratic q(problem);
  const std::size_t T = q.T;
  const auto dim = static_cast<Eigen::Index>(2 * T);

  VectorXd z = VectorXd::Constant(dim, 1.0 / static_cast<double>(T));
  VectorXd grad = q.gradient(z);
  double f = problem.l2_loss(std::span<const double>(z.data(), T), std::span<const double>(z.data() + T, T));

  WeightSolution sol;
  SolverReport& rep = sol.report;
  if (options.record_history) rep.history.push_back(f);

  constexpr double kArmijo = 1e-4;
  const double min_step = q.lipschitz > 0.0 ? 1e-3 / q.lipschitz : 0.0;
  const double max_step = q.lipschitz > 0.0 ? 1e6 / q.lipschitz : 0.0;
  double step = q.lipschitz > 0.0 ? 1.0 / q.lipschitz : 0.0;

  double kkt = stationarity(q, z, grad);
  std::size_t it = 0;
  while (kkt > options.tolerance && it < options.max_iterations) {
    // Backtrack along the projection arc. Any step <= 1/L satisfies Armijo in
    // exact arithmetic, so failure below min_step means round-off dominates.
    VectorXd next;
    VectorXd d;
    double delta = 0.0;
    bool accepted = false;
    for (double a = step; a >= min_step; a *= 0.5) {
      next = z - a * grad;
      project_pair(next, T);
      d = next - z;
      const double slope = grad.dot(d);
      if (slope >= 0.0) break;
      // f(z + d) - f(z) = grad.d + d^T Q d, free of the |b|^2 cancellation.
      delta = slope + d.dot(q.Q * d);
      if (delta <= kArmijo * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    ++it;
    const VectorXd next_grad = q.gradient(next);
    const VectorXd dg = next_grad - grad;
    const double sy = d.dot(dg);
    step = sy > 0.0 ? std::clamp(d.squaredNorm() / sy, min_step, max_step) : 1.0 / q.lipschitz;
    z = std::move(next);
    grad = next_grad;
    f += delta;
    if (options.record_history) rep.history.push_back(f);
    kkt = stationarity(q, z, grad);
  }

  // Final exact renormalization onto the simplices.
  project_pair(z, T);
  sol.w.assign(z.data(), z.data() + T);
  sol.v.assign(z.data() + T, z.data() + 2 * T);
  rep.iterations = it;
  rep.kkt_residual = stationarity(q, z, q.gradient(z));
  rep.converged = rep.kkt_residual <= options.tolerance;
  rep.objective = problem.l2_loss(sol.w, sol.v);
  if (!std::isfinite(rep.objective)) throw NumericError("QP objective is not finite");
  return sol;
}

}  // namespace satrf
