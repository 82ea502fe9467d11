#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "oracles.hpp"

using namespace satrf;

namespace {

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

AttentionConfig random_config(Rng& rng) {
  AttentionConfig cfg;
  cfg.epsilon = rng.uniform();
  cfg.gamma = rng.uniform();
  cfg.tau = rng.uniform(0.2, 3.0);
  cfg.kappa = rng.uniform(0.2, 3.0);
  cfg.variant = static_cast<SelfAttentionVariant>(rng.index(3));
  return cfg;
}

}  // namespace

TEST_CASE("stable_softmax") {
  SUBCASE("equal scores") {
    const auto p = stable_softmax(std::vector<double>{0.0, 0.0, 0.0});
    for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("two entries") {
    const auto p = stable_softmax(std::vector<double>{0.0, -1.0});
    CHECK(p[0] == doctest::Approx(0.7310585786300049).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(0.2689414213699951).epsilon(1e-14));
  }
  SUBCASE("huge scores do not overflow") {
    const auto p = stable_softmax(std::vector<double>{1000.0, 1000.0});
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 0.5);
  }
  SUBCASE("-inf entries get zero weight") {
    const double inf = std::numeric_limits<double>::infinity();
    const auto p = stable_softmax(std::vector<double>{-inf, 0.0});
    CHECK(p[0] == 0.0);
    CHECK(p[1] == 1.0);
    CHECK_THROWS_AS(stable_softmax(std::vector<double>{-inf, -inf}), NumericError);
    CHECK_THROWS_AS(stable_softmax(std::vector<double>{0.0, std::nan("")}), NumericError);
  }
  SUBCASE("agrees with the naive formula and is shift invariant") {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> s(1 + rng.index(8));
      for (auto& v : s) v = rng.uniform(-5.0, 5.0);
      const auto p = stable_softmax(s);
      const auto q = oracle::naive_softmax(s);
      const double c = rng.uniform(-50.0, 50.0);
      std::vector<double> shifted = s;
      for (auto& v : shifted) v += c;
      const auto r = stable_softmax(shifted);
      CHECK(std::abs(sum(p) - 1.0) <= 1e-12);
      for (std::size_t k = 0; k < s.size(); ++k) {
        CHECK(std::abs(p[k] - q[k]) <= 1e-12);
        CHECK(std::abs(p[k] - r[k]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("config validation and parsing") {
  AttentionConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.epsilon = 1.5;
  CHECK_THROWS_AS(cfg.validate(), DataError);
  cfg.epsilon = 0.5;
  cfg.tau = 0.0;
  CHECK_THROWS_AS(cfg.validate(), DataError);
  cfg.tau = 1.0;
  cfg.kappa = -1.0;
  CHECK_THROWS_AS(cfg.validate(), DataError);
  CHECK(parse_variant("yx") == SelfAttentionVariant::YX);
  CHECK(parse_loss("L1") == LossNorm::L1);
  CHECK_THROWS_AS(parse_variant("z"), DataError);
}

TEST_CASE("two trees, y = (0, 1), variant Y, kappa = 1") {
  LeafAssignment la;
  la.num_features = 1;
  la.means = {0.0, 0.0};
  la.predictions = {0.0, 1.0};
  AttentionConfig cfg;
  const auto C = self_attention_matrix(la, cfg);
  CHECK(C[0] == doctest::Approx(0.7310585786300049).epsilon(1e-14));
  CHECK(C[1] == doctest::Approx(0.2689414213699951).epsilon(1e-14));
  CHECK(C[2] == doctest::Approx(0.2689414213699951).epsilon(1e-14));
  CHECK(C[3] == doctest::Approx(0.7310585786300049).epsilon(1e-14));
}

TEST_CASE("normalization: sum D = 1 - eps, C rows sum to 1 - gamma") {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t T = 1 + rng.index(8);
    const std::size_t m = 1 + rng.index(4);
    const auto cfg = random_config(rng);
    const auto la = oracle::random_assignment(rng, T, m);
    const auto x = oracle::random_point(rng, m);
    const auto w = oracle::random_simplex(rng, T);
    const auto row = attention_row(x, la, cfg, w);
    CHECK(std::abs(sum(row.D) - (1.0 - cfg.epsilon)) <= 1e-12);
    CHECK(std::abs(sum(row.alpha) - 1.0) <= 1e-12);
    const auto C = self_attention_matrix(la, cfg);
    for (std::size_t i = 0; i < T; ++i) {
      CHECK(std::abs(sum(std::span<const double>(C.data() + i * T, T)) - (1.0 - cfg.gamma)) <= 1e-12);
      for (std::size_t k = 0; k < T; ++k) {
        std::vector<double> s(T);
        for (std::size_t q = 0; q < T; ++q) s[q] = oracle::self_score(la, cfg, i, q);
        CHECK(std::abs(C[i * T + k] - (1.0 - cfg.gamma) * oracle::naive_softmax(s)[k]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("YX variant survives identical leaf means") {
  LeafAssignment la;
  la.num_features = 2;
  la.means = {1.0, 1.0, 1.0, 1.0, 0.0, 0.0};
  la.predictions = {1.0, 1.0 + 1e-3, 2.0};
  AttentionConfig cfg;
  cfg.variant = SelfAttentionVariant::YX;
  const auto C = self_attention_matrix(la, cfg);
  for (double c : C) CHECK(std::isfinite(c));
  for (std::size_t i = 0; i < 3; ++i) CHECK(C[i * 3] + C[i * 3 + 1] + C[i * 3 + 2] == doctest::Approx(1.0));
}

TEST_CASE("affine decomposition matches the direct double sum") {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t T = 1 + rng.index(8);
    const std::size_t m = 1 + rng.index(5);
    const auto cfg = random_config(rng);
    const auto la = oracle::random_assignment(rng, T, m);
    const auto x = oracle::random_point(rng, m);
    const auto w = oracle::random_simplex(rng, T);
    const auto v = oracle::random_simplex(rng, T);
    const auto b = coefficient_bundle(x, la, cfg);
    const double direct = oracle::direct_prediction(x, la, cfg, w, v);
    CHECK(std::abs(b.coef.evaluate(w, v) - direct) <= 1e-10);
    // The cached kernel gives the same coefficients.
    const auto k = compute_kernel(x, la, cfg).coefficients(cfg.epsilon, cfg.gamma);
    CHECK(std::abs(k.evaluate(w, v) - direct) <= 1e-10);
  }
}

TEST_CASE("endpoint identities") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t T = 2 + rng.index(6);
    const auto la = oracle::random_assignment(rng, T, 3);
    const auto x = oracle::random_point(rng, 3);
    const auto w = oracle::random_simplex(rng, T);
    const auto v = oracle::random_simplex(rng, T);
    AttentionConfig cfg;
    cfg.epsilon = 1.0;
    cfg.gamma = 1.0;
    const auto c = coefficient_bundle(x, la, cfg).coef;
    double vy = 0.0;
    for (std::size_t k = 0; k < T; ++k) vy += v[k] * la.predictions[k];
    CHECK(std::abs(c.evaluate(w, v) - vy) <= 1e-12);

    // With gamma = 0 the prediction ignores v; with epsilon = 0 it ignores w.
    cfg.epsilon = 0.3;
    cfg.gamma = 0.0;
    const auto g0 = coefficient_bundle(x, la, cfg).coef;
    for (double g : g0.G) CHECK(g == 0.0);
    cfg.epsilon = 0.0;
    cfg.gamma = 0.4;
    const auto e0 = coefficient_bundle(x, la, cfg).coef;
    for (double h : e0.H) CHECK(h == 0.0);
  }
}

TEST_CASE("T = 1 collapses to the single tree prediction") {
  LeafAssignment la;
  la.num_features = 2;
  la.means = {0.3, -0.2};
  la.predictions = {4.25};
  AttentionConfig cfg;
  cfg.epsilon = 0.6;
  cfg.gamma = 0.7;
  const std::vector<double> x{1.0, 2.0};
  const std::vector<double> one{1.0};
  CHECK(coefficient_bundle(x, la, cfg).coef.evaluate(one, one) == doctest::Approx(4.25).epsilon(1e-15));
}

TEST_CASE("model predictions") {
  const auto ds = gen_friedman(1, 60, 5);
  ForestParams fp;
  fp.num_trees = 15;
  fp.seed = 2;
  const auto forest = fit_forest(ds, fp);

  SUBCASE("eps = gamma = 0 equals the softmax baseline bit for bit") {
    AttentionConfig cfg;
    cfg.tau = 0.7;
    auto model = softmax_baseline(forest, cfg);
    model.w.assign(15, 0.0);
    model.w[3] = 1.0;
    model.v = model.w;
    const auto base = softmax_baseline(forest, cfg);
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK(predict(model, ds.row(i)) == predict(base, ds.row(i)));
  }
  SUBCASE("predictions stay within the tree prediction range") {
    Rng rng(9);
    for (auto variant : {SelfAttentionVariant::Y, SelfAttentionVariant::X, SelfAttentionVariant::YX}) {
      SatRfModel model;
      model.forest = forest;
      model.config.variant = variant;
      model.config.epsilon = 0.5;
      model.config.gamma = 0.5;
      model.w = oracle::random_simplex(rng, 15);
      model.v = oracle::random_simplex(rng, 15);
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto trace = trace_prediction(model, ds.row(i));
        const auto& y = trace.assignment.predictions;
        const double lo = *std::min_element(y.begin(), y.end());
        const double hi = *std::max_element(y.begin(), y.end());
        const double slack = 1e-12 * std::max(std::abs(lo), std::abs(hi));
        CHECK(trace.value >= lo - slack);
        CHECK(trace.value <= hi + slack);
      }
    }
  }
  SUBCASE("batch prediction matches single prediction for any job count") {
    AttentionConfig cfg;
    cfg.epsilon = 0.25;
    cfg.gamma = 0.75;
    auto model = softmax_baseline(forest, cfg);
    model.config = cfg;
    const auto a = predict(model, ds, 1);
    const auto b = predict(model, ds, 3);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      CHECK(a[i] == b[i]);
      CHECK(a[i] == predict(model, ds.row(i)));
    }
  }
  SUBCASE("dimension mismatch is a data error") {
    const auto model = softmax_baseline(forest, AttentionConfig{});
    CHECK_THROWS_AS(predict(model, std::vector<double>(3, 0.0)), DataError);
  }
}

TEST_CASE("G reduces to gamma times the tree predictions") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t T = 1 + rng.index(8);
    const auto cfg = random_config(rng);
    const auto la = oracle::random_assignment(rng, T, 2);
    const auto x = oracle::random_point(rng, 2);
    const auto c = coefficient_bundle(x, la, cfg).coef;
    for (std::size_t k = 0; k < T; ++k) CHECK(std::abs(c.G[k] - cfg.gamma * la.predictions[k]) <= 1e-12);
  }
}
