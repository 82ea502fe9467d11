#include <doctest.h>

#include <cmath>

#include "oracles.hpp"

using namespace satrf;

namespace {

Dataset small_dataset(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n * 3);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 3; ++j) x[i * 3 + j] = rng.uniform();
    y[i] = 3.0 * x[i * 3] - x[i * 3 + 1] + 0.1 * rng.normal();
  }
  return Dataset(std::move(x), 3, std::move(y));
}

void check_leaf_stats(const Forest& f, const Dataset& ds) {
  for (const auto& tree : f.trees) {
    const auto recount = oracle::recount_leaves(tree, ds);
    for (std::size_t l = 0; l < tree.leaves.size(); ++l) {
      const auto& leaf = tree.leaves[l];
      CHECK(leaf.count == recount[l].count);
      CHECK(leaf.count >= f.params.min_leaf);
      CHECK(std::abs(leaf.mean_target - recount[l].mean_target) <= 1e-12);
      for (std::size_t j = 0; j < ds.num_features(); ++j) {
        CHECK(std::abs(leaf.mean_features[j] - recount[l].mean_features[j]) <= 1e-12);
      }
    }
  }
}

}  // namespace

TEST_CASE("default forest: 100 trees, every leaf holds at least 10 rows") {
  const auto ds = gen_friedman(1, 100, 2);
  ForestParams p;
  p.seed = 5;
  const auto f = fit_forest(ds, p);
  CHECK(f.size() == 100);
  std::size_t splits = 0;
  for (const auto& t : f.trees) {
    for (const auto& leaf : t.leaves) CHECK(leaf.count >= 10);
    splits += t.nodes.size() - t.leaves.size();
  }
  CHECK(splits > 0);
}

TEST_CASE("leaf statistics match brute-force recomputation") {
  for (auto kind : {ForestKind::RandomForest, ForestKind::ExtraTrees}) {
    CAPTURE(to_string(kind));
    const auto ds = small_dataset(50, 11);
    ForestParams p;
    p.kind = kind;
    p.num_trees = 20;
    p.seed = 3;
    check_leaf_stats(fit_forest(ds, p), ds);
  }
}

TEST_CASE("constant target gives single-leaf trees") {
  std::vector<double> x(40);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  const Dataset ds(x, 1, std::vector<double>(40, 7.5));
  ForestParams p;
  p.num_trees = 5;
  const auto f = fit_forest(ds, p);
  for (const auto& t : f.trees) {
    CHECK(t.nodes.size() == 1);
    CHECK(t.leaves.size() == 1);
    CHECK(t.leaves[0].mean_target == 7.5);
  }
}

TEST_CASE("T = 1 single-leaf tree: y = mean, A = column means") {
  // A constant target never splits, so the one leaf holds every row.
  const Dataset ds({1.0, 10.0, 2.0, 20.0, 3.0, 30.0}, 2, {4.0, 4.0, 4.0});
  ForestParams p;
  p.num_trees = 1;
  p.min_leaf = 1;
  p.bootstrap = 0;
  const auto f = fit_forest(ds, p);
  const std::vector<double> x{2.0, 20.0};
  const auto la = assign(f, x);
  REQUIRE(la.size() == 1);
  CHECK(la.predictions[0] == 4.0);
  CHECK(la.mean(0)[0] == doctest::Approx(2.0));
  CHECK(la.mean(0)[1] == doctest::Approx(20.0));
}

TEST_CASE("assign returns the leaf of each tree for a training row") {
  const auto ds = small_dataset(20, 4);
  ForestParams p;
  p.num_trees = 7;
  p.min_leaf = 3;
  p.seed = 8;
  const auto f = fit_forest(ds, p);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto la = assign(f, ds.row(i));
    REQUIRE(la.size() == 7);
    for (std::size_t k = 0; k < f.size(); ++k) {
      const auto recount = oracle::recount_leaves(f.trees[k], ds);
      const auto leaf = f.trees[k].leaf_index(ds.row(i));
      CHECK(la.predictions[k] == f.trees[k].leaves[leaf].mean_target);
      if (recount[leaf].count > 0) {
        for (std::size_t j = 0; j < 3; ++j) {
          CHECK(std::abs(la.mean(k)[j] - recount[leaf].mean_features[j]) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("forests are deterministic and independent of the job count") {
  const auto ds = gen_friedman(2, 80, 1);
  for (auto kind : {ForestKind::RandomForest, ForestKind::ExtraTrees}) {
    ForestParams p;
    p.kind = kind;
    p.num_trees = 12;
    p.seed = 99;
    const auto a = fit_forest(ds, p, 1);
    const auto b = fit_forest(ds, p, 4);
    REQUIRE(a.size() == b.size());
    for (std::size_t t = 0; t < a.size(); ++t) {
      REQUIRE(a.trees[t].nodes.size() == b.trees[t].nodes.size());
      for (std::size_t n = 0; n < a.trees[t].nodes.size(); ++n) {
        CHECK(a.trees[t].nodes[n].feature == b.trees[t].nodes[n].feature);
        CHECK(a.trees[t].nodes[n].threshold == b.trees[t].nodes[n].threshold);
      }
    }
    const auto x = ds.row(3);
    const auto la1 = assign(a, x);
    const auto la2 = assign(a, x);
    CHECK(la1.predictions == la2.predictions);
    CHECK(la1.means == la2.means);
  }
}

TEST_CASE("RF uses bootstrap samples, ERT the full sample") {
  const auto ds = gen_friedman(1, 60, 1);
  ForestParams p;
  p.num_trees = 3;
  const auto rf = fit_forest(ds, p);
  p.kind = ForestKind::ExtraTrees;
  const auto ert = fit_forest(ds, p);
  for (const auto& t : rf.trees) {
    std::vector<std::uint32_t> s = t.sample;
    std::sort(s.begin(), s.end());
    CHECK(std::adjacent_find(s.begin(), s.end()) != s.end());  // some duplicate
  }
  for (const auto& t : ert.trees) {
    std::vector<std::uint32_t> s = t.sample;
    std::sort(s.begin(), s.end());
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == i);
  }
}

TEST_CASE("forest errors") {
  const auto ds = gen_friedman(1, 15, 1);
  ForestParams p;
  CHECK_THROWS_AS(fit_forest(ds, p), DataError);  // n < 2 * min_leaf
  p.min_leaf = 5;
  p.num_trees = 0;
  CHECK_THROWS_AS(fit_forest(ds, p), DataError);
  p.num_trees = 2;
  const auto f = fit_forest(ds, p);
  CHECK_THROWS_AS(assign(f, std::vector<double>(3, 0.0)), DataError);
}

TEST_CASE("predict_mean is the unweighted average of tree predictions") {
  const auto ds = gen_friedman(3, 60, 6);
  ForestParams p;
  p.num_trees = 9;
  const auto f = fit_forest(ds, p);
  const auto x = ds.row(0);
  double s = 0.0;
  for (const auto& t : f.trees) s += t.route(x).mean_target;
  CHECK(predict_mean(f, x) == doctest::Approx(s / 9.0).epsilon(1e-15));
}
