#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"

using namespace satrf;

TEST_CASE("project_simplex examples") {
  auto close = [](const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
  };
  close(project_simplex(std::vector<double>{0.5, 0.5}), {0.5, 0.5});
  close(project_simplex(std::vector<double>{2.0, 0.0}), {1.0, 0.0});
  close(project_simplex(std::vector<double>{1.0, 1.0}), {0.5, 0.5});
  close(project_simplex(std::vector<double>{-1.0, -1.0, -1.0}), {1.0 / 3, 1.0 / 3, 1.0 / 3});
  close(project_simplex(std::vector<double>{0.6, 0.3, -0.5}), {0.65, 0.35, 0.0});
  close(project_simplex(std::vector<double>{7.0}), {1.0});
}

TEST_CASE("project_simplex is the nearest simplex point") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t T = 2 + rng.index(3);
    std::vector<double> z(T);
    for (auto& v : z) v = rng.uniform(-2.0, 2.0);
    const auto p = project_simplex(z);
    CHECK(on_simplex(p, 1e-12));
    const double d = oracle::sqdist(p, z);
    for (const auto& q : oracle::simplex_lattice(T, 20)) CHECK(d <= oracle::sqdist(q, z) + 1e-12);
    // Idempotent.
    const auto pp = project_simplex(p);
    for (std::size_t k = 0; k < T; ++k) CHECK(std::abs(pp[k] - p[k]) <= 1e-15);
  }
}

TEST_CASE("QP matches the grid minimum on small problems") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = oracle::random_problem(rng, 2, 8, 0.5);
    const auto sol = solve_qp(p);
    CHECK(sol.report.converged);
    CHECK(on_simplex(sol.w));
    CHECK(on_simplex(sol.v));
    const double grid = oracle::grid_minimum(p, LossNorm::L2, 200);
    CHECK(sol.report.objective <= grid + 1e-12);
    CHECK(grid - sol.report.objective <= 1e-3);
    CHECK(std::abs(sol.report.objective - oracle::residual_loss(p, sol.w, sol.v, LossNorm::L2)) <= 1e-12);
  }
}

TEST_CASE("QP objective history is monotone") {
  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t T = 2 + rng.index(10);
    const auto p = oracle::random_problem(rng, T, 30, 1.0);
    SolverOptions o;
    o.record_history = true;
    const auto sol = solve_qp(p, o);
    for (std::size_t i = 1; i < sol.report.history.size(); ++i) {
      CHECK(sol.report.history[i] <= sol.report.history[i - 1] + 1e-12 * (1.0 + sol.report.history[i - 1]));
    }
    CHECK(sol.report.objective <= oracle::residual_loss(p, std::vector<double>(T, 1.0 / T),
                                                         std::vector<double>(T, 1.0 / T), LossNorm::L2) +
                                      1e-12);
    CHECK(qp_stationarity(p, sol.w, sol.v) <= 1e-6);
  }
}

TEST_CASE("QP solution beats every feasible convex combination") {
  Rng rng(33);
  const auto p = oracle::random_problem(rng, 4, 25, 1.0);
  const auto sol = solve_qp(p);
  for (int k = 0; k < 200; ++k) {
    const auto w = oracle::random_simplex(rng, 4);
    const auto v = oracle::random_simplex(rng, 4);
    CHECK(sol.report.objective <= oracle::residual_loss(p, w, v, LossNorm::L2) + 1e-10);
  }
}

TEST_CASE("interpolable problem reaches zero loss") {
  TrainingProblem p;
  p.num_trees = 3;
  const std::vector<double> wt{0.2, 0.5, 0.3};
  const std::vector<double> vt{0.6, 0.1, 0.3};
  Rng rng(4);
  for (int s = 0; s < 12; ++s) {
    double y = 0.1;
    p.R.push_back(0.1);
    for (int k = 0; k < 3; ++k) {
      const double h = rng.uniform(-1.0, 1.0);
      const double g = rng.uniform(-1.0, 1.0);
      p.H.push_back(h);
      p.G.push_back(g);
      y += h * wt[k] + g * vt[k];
    }
    p.y.push_back(y);
  }
  CHECK(solve_qp(p).report.objective <= 1e-12);
  CHECK(solve_lp(p).report.objective <= 1e-9);
}

TEST_CASE("LP matches exact L1 minima") {
  Rng rng(41);
  SUBCASE("generic T = 2 against vertex enumeration") {
    for (int trial = 0; trial < 30; ++trial) {
      const auto p = oracle::random_problem(rng, 2, 10, 1.0);
      const auto sol = solve_lp(p);
      CHECK(sol.report.converged);
      CHECK(on_simplex(sol.w));
      CHECK(on_simplex(sol.v));
      CHECK(std::abs(sol.report.objective - oracle::l1_vertex_minimum(p)) <= 1e-9);
    }
  }
  SUBCASE("lattice-aligned T = 3 against the grid") {
    for (int trial = 0; trial < 5; ++trial) {
      const auto p = oracle::lattice_l1_problem(rng, 3, 12, 20);
      const auto sol = solve_lp(p);
      CHECK(std::abs(sol.report.objective - oracle::grid_minimum(p, LossNorm::L1, 20)) <= 1e-9);
    }
  }
  SUBCASE("objective equals the recomputed L1 loss and is below the QP point's L1 loss") {
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t T = 2 + rng.index(8);
      const auto p = oracle::random_problem(rng, T, 40, 1.0);
      const auto lp = solve_lp(p);
      const auto qp = solve_qp(p);
      CHECK(std::abs(lp.report.objective - p.l1_loss(lp.w, lp.v)) <= 1e-9);
      CHECK(lp.report.objective <= p.l1_loss(qp.w, qp.v) + 1e-9);
      CHECK(lp.report.objective <=
            p.l1_loss(std::vector<double>(T, 1.0 / T), std::vector<double>(T, 1.0 / T)) + 1e-9);
    }
  }
}

TEST_CASE("degenerate LP with many ties terminates") {
  TrainingProblem p;
  p.num_trees = 4;
  for (int s = 0; s < 30; ++s) {
    p.R.push_back(0.0);
    p.y.push_back(s % 2);
    for (int k = 0; k < 4; ++k) {
      p.H.push_back(k == s % 4 ? 1.0 : 0.0);
      p.G.push_back(0.0);
    }
  }
  const auto sol = solve_lp(p);
  CHECK(sol.report.converged);
  CHECK(std::abs(sol.report.objective - p.l1_loss(sol.w, sol.v)) <= 1e-9);
}

TEST_CASE("TrainingProblem validation") {
  TrainingProblem p;
  p.num_trees = 2;
  p.R = {0.0};
  p.H = {1.0};
  p.G = {1.0, 2.0};
  p.y = {1.0};
  CHECK_THROWS_AS(p.validate(), DataError);
  p.H = {1.0, NAN};
  CHECK_THROWS_AS(p.validate(), DataError);
}

TEST_CASE("train on a forest: trained loss never exceeds uniform loss") {
  const auto ds = gen_friedman(2, 80, 12);
  ForestParams fp;
  fp.num_trees = 20;
  const auto forest = fit_forest(ds, fp);
  for (auto loss : {LossNorm::L2, LossNorm::L1}) {
    AttentionConfig cfg;
    cfg.epsilon = 0.5;
    cfg.gamma = 0.5;
    cfg.loss = loss;
    const auto r = train(forest, ds, cfg);
    CHECK(r.training_loss <= r.uniform_loss * (1 + 1e-9) + 1e-9);
    CHECK(on_simplex(r.model.w));
    CHECK(on_simplex(r.model.v));
    // The stored problem reproduces the same loss.
    const auto p = build_problem(forest, ds, cfg);
    CHECK(p.loss(loss, r.model.w, r.model.v) == doctest::Approx(r.training_loss).epsilon(1e-10));
  }
}
