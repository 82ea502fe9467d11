#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "satrf/error.hpp"
#include "satrf/optim.hpp"

namespace satrf {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Standard form of the L1 training LP:
//
//   min  sum_s (p_s + q_s)
//   s.t. <H_s, w> + <G_s, v> + p_s - q_s = y_s - R_s     (s = 0..n-1)
//        sum w = 1,  sum v = 1,  w, v, p, q >= 0
//
// The slack Q_s = p_s + q_s equals |residual_s| at any optimum. Columns are
// ordered [w (T) | v (T) | p (n) | q (n)], rows [residual rows | w-sum | v-sum].
class RevisedSimplex {
 public:
  RevisedSimplex(const TrainingProblem& p, double tol)
      : p_(p), T_(p.num_trees), n_(p.size()), m_(n_ + 2), tol_(tol) {
    double scale = 1.0;
    for (double h : p.H) scale = std::max(scale, std::abs(h));
    for (double g : p.G) scale = std::max(scale, std::abs(g));
    cost_tol_ = tol_ * scale;
    rhs_ = VectorXd(static_cast<Index>(m_));
    for (std::size_t s = 0; s < n_; ++s) rhs_(static_cast<Index>(s)) = p.y[s] - p.R[s];
    rhs_(static_cast<Index>(n_)) = 1.0;
    rhs_(static_cast<Index>(n_ + 1)) = 1.0;
  }

  std::size_t num_columns() const { return 2 * T_ + 2 * n_; }

  WeightSolution run() {
    initial_basis();
    refactor();
    const std::size_t max_iter = 50 * (m_ + num_columns());
    std::size_t degenerate_run = 0;
    bool bland = false;
    std::size_t it = 0;
    bool optimal = false;
    double worst_reduced = 0.0;
    for (; it < max_iter; ++it) {
      if (it > 0 && it % 100 == 0) refactor();
      const VectorXd duals = binv_.transpose() * basic_costs();
      const auto [enter, reduced] = price(duals, bland);
      worst_reduced = reduced;
      if (enter == kNone) {
        optimal = true;
        break;
      }
      const VectorXd u = binv_ * column(enter);
      std::size_t leave_pos = kNone;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < m_; ++r) {
        const double ur = u(static_cast<Index>(r));
        if (ur <= kPivotTol) continue;
        const double ratio = std::max(0.0, x_(static_cast<Index>(r))) / ur;
        bool take = leave_pos == kNone;
        if (!take) {
          const double tie_tol = 1e-12 * std::max(1.0, best_ratio);
          if (ratio < best_ratio - tie_tol) {
            take = true;
          } else if (ratio <= best_ratio + tie_tol) {
            // Ties: Bland takes the lowest variable index, otherwise the larger pivot.
            take = bland ? basis_[r] < basis_[leave_pos] : ur > u(static_cast<Index>(leave_pos));
          }
        }
        if (take) {
          best_ratio = ratio;
          leave_pos = r;
        }
      }
      if (leave_pos == kNone) throw NumericError("L1 training LP reported unbounded; this is a solver bug");
      pivot(leave_pos, enter, u);
      if (best_ratio <= 1e-14) {
        if (++degenerate_run > 50) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }
    }
    refactor();
    return extract(it, optimal, worst_reduced);
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  static constexpr double kPivotTol = 1e-11;

  bool is_w(std::size_t j) const { return j < T_; }
  bool is_v(std::size_t j) const { return j >= T_ && j < 2 * T_; }
  bool is_p(std::size_t j) const { return j >= 2 * T_ && j < 2 * T_ + n_; }
  double cost(std::size_t j) const { return j < 2 * T_ ? 0.0 : 1.0; }

  VectorXd column(std::size_t j) const {
    VectorXd a = VectorXd::Zero(static_cast<Index>(m_));
    if (is_w(j)) {
      for (std::size_t s = 0; s < n_; ++s) a(static_cast<Index>(s)) = p_.H[s * T_ + j];
      a(static_cast<Index>(n_)) = 1.0;
    } else if (is_v(j)) {
      const std::size_t k = j - T_;
      for (std::size_t s = 0; s < n_; ++s) a(static_cast<Index>(s)) = p_.G[s * T_ + k];
      a(static_cast<Index>(n_ + 1)) = 1.0;
    } else if (is_p(j)) {
      a(static_cast<Index>(j - 2 * T_)) = 1.0;
    } else {
      a(static_cast<Index>(j - 2 * T_ - n_)) = -1.0;
    }
    return a;
  }

  // Feasible start: w = e_0, v = e_0, and per row the slack whose sign matches
  // the remaining residual.
  void initial_basis() {
    basis_.assign(m_, kNone);
    in_basis_.assign(num_columns(), false);
    for (std::size_t s = 0; s < n_; ++s) {
      const double rem = p_.y[s] - p_.R[s] - p_.H[s * T_] - p_.G[s * T_];
      basis_[s] = rem >= 0.0 ? 2 * T_ + s : 2 * T_ + n_ + s;
    }
    basis_[n_] = 0;
    basis_[n_ + 1] = T_;
    for (std::size_t j : basis_) in_basis_[j] = true;
  }

  void refactor() {
    MatrixXd B(static_cast<Index>(m_), static_cast<Index>(m_));
    for (std::size_t r = 0; r < m_; ++r) B.col(static_cast<Index>(r)) = column(basis_[r]);
    Eigen::PartialPivLU<MatrixXd> lu(B);
    binv_ = lu.inverse();
    x_ = binv_ * rhs_;
  }

  VectorXd basic_costs() const {
    VectorXd c(static_cast<Index>(m_));
    for (std::size_t r = 0; r < m_; ++r) c(static_cast<Index>(r)) = cost(basis_[r]);
    return c;
  }

  // Dantzig pricing, or Bland's rule (first improving column) after a long
  // degenerate run. Returns (entering column, most negative reduced cost).
  std::pair<std::size_t, double> price(const VectorXd& y, bool bland) const {
    std::size_t enter = kNone;
    double best = -cost_tol_;
    double worst = 0.0;
    auto consider = [&](std::size_t j, double d) {
      worst = std::min(worst, d);
      if (in_basis_[j] || d >= -cost_tol_) return;
      if (bland) {
        if (enter == kNone) enter = j;
      } else if (d < best) {
        best = d;
        enter = j;
      }
    };
    for (std::size_t i = 0; i < 2 * T_; ++i) {
      const bool w = i < T_;
      const std::size_t k = w ? i : i - T_;
      const auto& coef = w ? p_.H : p_.G;
      double dot = y(static_cast<Index>(w ? n_ : n_ + 1));
      for (std::size_t s = 0; s < n_; ++s) dot += y(static_cast<Index>(s)) * coef[s * T_ + k];
      if (!in_basis_[i]) consider(i, -dot);
    }
    for (std::size_t s = 0; s < n_; ++s) {
      const double ys = y(static_cast<Index>(s));
      if (!in_basis_[2 * T_ + s]) consider(2 * T_ + s, 1.0 - ys);
      if (!in_basis_[2 * T_ + n_ + s]) consider(2 * T_ + n_ + s, 1.0 + ys);
    }
    return {enter, worst};
  }

  void pivot(std::size_t r, std::size_t enter, const VectorXd& u) {
    const auto ri = static_cast<Index>(r);
    const double ur = u(ri);
    const double theta = std::max(0.0, x_(ri)) / ur;
    x_ -= theta * u;
    x_(ri) = theta;
    binv_.row(ri) /= ur;
    VectorXd uu = u;
    uu(ri) = 0.0;
    binv_.noalias() -= uu * binv_.row(ri);
    in_basis_[basis_[r]] = false;
    basis_[r] = enter;
    in_basis_[enter] = true;
  }

  WeightSolution extract(std::size_t iterations, bool optimal, double worst_reduced) {
    WeightSolution sol;
    sol.w.assign(T_, 0.0);
    sol.v.assign(T_, 0.0);
    double slack_sum = 0.0;
    double infeas = 0.0;
    for (std::size_t r = 0; r < m_; ++r) {
      const double xv = x_(static_cast<Index>(r));
      infeas = std::max(infeas, -xv);
      const std::size_t j = basis_[r];
      if (is_w(j)) {
        sol.w[j] = std::max(0.0, xv);
      } else if (is_v(j)) {
        sol.v[j - T_] = std::max(0.0, xv);
      } else {
        slack_sum += std::max(0.0, xv);
      }
    }
    auto renormalize = [](std::vector<double>& p) {
      double s = 0.0;
      for (double v : p) s += v;
      if (s <= 0.0) throw NumericError("L1 training LP returned an empty weight vector");
      for (auto& v : p) v /= s;
    };
    renormalize(sol.w);
    renormalize(sol.v);
    SolverReport& rep = sol.report;
    rep.iterations = iterations;
    rep.objective = slack_sum;
    rep.kkt_residual = std::max(infeas, -worst_reduced);
    rep.converged = optimal;
    if (!std::isfinite(rep.objective)) throw NumericError("LP objective is not finite");
    return sol;
  }

  const TrainingProblem& p_;
  std::size_t T_, n_, m_;
  double tol_;
  double cost_tol_ = 0.0;
  VectorXd rhs_;
  MatrixXd binv_;
  VectorXd x_;
  std::vector<std::size_t> basis_;
  std::vector<bool> in_basis_;
};

}  // namespace

WeightSolution solve_lp(const TrainingProblem& problem, double tolerance) {
  problem.validate();
  return RevisedSimplex(problem, tolerance).run();
}

}  // namespace satrf
