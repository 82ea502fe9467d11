#include <algorithm>
#include <cmath>
#include <functional>

#include "satrf/error.hpp"
#include "satrf/optim.hpp"

namespace satrf {

void project_simplex_inplace(std::span<double> z) {
  if (z.empty()) return;
  std::vector<double> sorted(z.begin(), z.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  // Largest rho with sorted[rho] - (sum_{j<=rho} sorted[j] - 1) / (rho + 1) > 0.
  double running = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    running += sorted[j];
    const double t = (running - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - t > 0.0) theta = t;
  }
  for (auto& v : z) v = std::max(v - theta, 0.0);
}

std::vector<double> project_simplex(std::span<const double> z) {
  std::vector<double> out(z.begin(), z.end());
  project_simplex_inplace(out);
  return out;
}

bool on_simplex(std::span<const double> p, double tol) {
  double s = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) return false;
    s += v;
  }
  return std::abs(s - 1.0) <= tol;
}

TrainingProblem TrainingProblem::from_coefficients(std::span<const Coefficients> coef,
                                                   std::span<const double> y) {
  if (coef.size() != y.size()) throw DataError("coefficient count does not match target count");
  TrainingProblem p;
  p.num_trees = coef.empty() ? 0 : coef.front().H.size();
  p.R.reserve(coef.size());
  p.H.reserve(coef.size() * p.num_trees);
  p.G.reserve(coef.size() * p.num_trees);
  for (const auto& c : coef) {
    if (c.H.size() != p.num_trees || c.G.size() != p.num_trees) {
      throw DataError("inconsistent coefficient lengths");
    }
    p.R.push_back(c.R);
    p.H.insert(p.H.end(), c.H.begin(), c.H.end());
    p.G.insert(p.G.end(), c.G.begin(), c.G.end());
  }
  p.y.assign(y.begin(), y.end());
  return p;
}

void TrainingProblem::validate() const {
  const std::size_t n = y.size();
  if (num_trees == 0) throw DataError("training problem has no trees");
  if (n == 0) throw DataError("training problem has no examples");
  if (R.size() != n || H.size() != n * num_trees || G.size() != n * num_trees) {
    throw DataError("training problem arrays have inconsistent lengths");
  }
  auto finite = [](const std::vector<double>& a) {
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
  };
  if (!finite(R) || !finite(H) || !finite(G) || !finite(y)) {
    throw DataError("training problem has non-finite coefficients");
  }
}

std::vector<double> TrainingProblem::residuals(std::span<const double> w, std::span<const double> v) const {
  std::vector<double> r(size());
  for (std::size_t s = 0; s < size(); ++s) {
    const auto h = H_row(s);
    const auto g = G_row(s);
    double pred = R[s];
    for (std::size_t k = 0; k < num_trees; ++k) pred += h[k] * w[k] + g[k] * v[k];
    r[s] = y[s] - pred;
  }
  return r;
}

double TrainingProblem::l2_loss(std::span<const double> w, std::span<const double> v) const {
  double s = 0.0;
  for (double r : residuals(w, v)) s += r * r;
  return s;
}

double TrainingProblem::l1_loss(std::span<const double> w, std::span<const double> v) const {
  double s = 0.0;
  for (double r : residuals(w, v)) s += std::abs(r);
  return s;
}

}  // namespace satrf
