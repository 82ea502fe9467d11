#include "satrf/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include "satrf/error.hpp"
#include "satrf/parallel.hpp"
#include "satrf/random.hpp"

namespace satrf {

const char* to_string(ForestKind kind) {
  return kind == ForestKind::RandomForest ? "rf" : "ert";
}

ForestKind parse_forest_kind(const std::string& s) {
  if (s == "rf" || s == "RF") return ForestKind::RandomForest;
  if (s == "ert" || s == "ERT") return ForestKind::ExtraTrees;
  throw DataError("unknown forest kind '" + s + "' (expected rf or ert)");
}

std::size_t ForestParams::candidate_features(std::size_t m) const {
  if (max_features > 0) return std::min(max_features, m);
  return std::max<std::size_t>(1, m / 3);
}

std::size_t Tree::leaf_index(std::span<const double> x) const {
  std::uint32_t at = 0;
  while (!nodes[at].is_leaf()) {
    const Node& n = nodes[at];
    at = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[at].leaf;
}

namespace {

struct SplitCandidate {
  bool valid = false;
  std::uint32_t feature = 0;
  double threshold = 0.0;
  double score = 0.0;  // sumL^2/nL + sumR^2/nR; larger means larger SSE reduction

  bool better_than(const SplitCandidate& o) const {
    if (!o.valid) return valid;
    if (score != o.score) return score > o.score;
    if (feature != o.feature) return feature < o.feature;
    return threshold < o.threshold;
  }
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& ds, const ForestParams& params, std::uint64_t seed)
      : ds_(ds), params_(params), rng_(seed), m_(ds.num_features()) {
    features_.resize(m_);
    std::iota(features_.begin(), features_.end(), 0u);
  }

  Tree build(std::vector<std::uint32_t> sample) {
    Tree tree;
    tree.sample = sample;
    work_ = std::move(sample);
    struct Pending {
      std::uint32_t node;
      std::size_t begin, end, depth;
    };
    tree.nodes.emplace_back();
    std::vector<Pending> stack{{0, 0, work_.size(), 0}};
    while (!stack.empty()) {
      const Pending p = stack.back();
      stack.pop_back();
      const auto split = find_split(p.begin, p.end, p.depth);
      if (!split.valid) {
        make_leaf(tree, p.node, p.begin, p.end);
        continue;
      }
      auto mid_it = std::partition(work_.begin() + static_cast<std::ptrdiff_t>(p.begin),
                                   work_.begin() + static_cast<std::ptrdiff_t>(p.end),
                                   [&](std::uint32_t i) {
                                     return ds_.row(i)[split.feature] <= split.threshold;
                                   });
      const auto mid = static_cast<std::size_t>(mid_it - work_.begin());
      const auto left = static_cast<std::uint32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      Node& n = tree.nodes[p.node];
      n.feature = split.feature;
      n.threshold = split.threshold;
      n.left = left;
      n.right = left + 1;
      // Right first so the left subtree is expanded first (stable node order).
      stack.push_back({left + 1, mid, p.end, p.depth + 1});
      stack.push_back({left, p.begin, mid, p.depth + 1});
    }
    return tree;
  }

 private:
  void make_leaf(Tree& tree, std::uint32_t node, std::size_t begin, std::size_t end) {
    Leaf leaf;
    leaf.count = end - begin;
    leaf.mean_features.assign(m_, 0.0);
    double sum_y = 0.0;
    for (std::size_t p = begin; p < end; ++p) {
      const auto r = ds_.row(work_[p]);
      for (std::size_t j = 0; j < m_; ++j) leaf.mean_features[j] += r[j];
      sum_y += ds_.target(work_[p]);
    }
    const auto cnt = static_cast<double>(leaf.count);
    for (auto& v : leaf.mean_features) v /= cnt;
    leaf.mean_target = sum_y / cnt;
    tree.nodes[node].leaf = static_cast<std::uint32_t>(tree.leaves.size());
    tree.leaves.push_back(std::move(leaf));
  }

  SplitCandidate find_split(std::size_t begin, std::size_t end, std::size_t depth) {
    SplitCandidate best;
    const std::size_t count = end - begin;
    const std::size_t min_leaf = std::max<std::size_t>(1, params_.min_leaf);
    if (count < 2 * min_leaf) return best;
    if (params_.max_depth > 0 && depth >= params_.max_depth) return best;

    double sum = 0.0;
    const double first = ds_.target(work_[begin]);
    bool constant = true;
    for (std::size_t p = begin; p < end; ++p) {
      const double y = ds_.target(work_[p]);
      sum += y;
      constant = constant && y == first;
    }
    if (constant) return best;
    const double parent_score = sum * sum / static_cast<double>(count);

    // Visit features in random order until `mtry` non-constant ones were tried.
    const std::size_t mtry = params_.candidate_features(m_);
    rng_.shuffle(features_);
    std::size_t tried = 0;
    for (std::size_t f = 0; f < m_ && tried < mtry; ++f) {
      const std::uint32_t j = features_[f];
      const auto cand = params_.kind == ForestKind::RandomForest
                            ? best_exhaustive(j, begin, end, sum, min_leaf)
                            : best_random(j, begin, end, sum, min_leaf);
      if (!cand) continue;  // constant within node
      ++tried;
      if (cand->valid && cand->better_than(best)) best = *cand;
    }
    // Require a strict SSE decrease.
    if (best.valid && !(best.score > parent_score * (1.0 + 1e-12))) best.valid = false;
    return best;
  }

  // Returns nullopt when feature j is constant on the node.
  std::optional<SplitCandidate> best_exhaustive(std::uint32_t j, std::size_t begin, std::size_t end,
                                                double sum, std::size_t min_leaf) {
    order_.clear();
    for (std::size_t p = begin; p < end; ++p) order_.push_back({ds_.row(work_[p])[j], ds_.target(work_[p])});
    std::sort(order_.begin(), order_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    if (order_.front().first == order_.back().first) return std::nullopt;
    SplitCandidate best;
    const std::size_t count = order_.size();
    double left_sum = 0.0;
    for (std::size_t i = 1; i < count; ++i) {
      left_sum += order_[i - 1].second;
      if (i < min_leaf || count - i < min_leaf) continue;
      const double lo = order_[i - 1].first;
      const double hi = order_[i].first;
      if (lo == hi) continue;
      const auto nl = static_cast<double>(i);
      const auto nr = static_cast<double>(count - i);
      const double right_sum = sum - left_sum;
      SplitCandidate c;
      c.valid = true;
      c.feature = j;
      c.threshold = lo + (hi - lo) / 2.0;
      if (!(c.threshold < hi)) c.threshold = lo;
      c.score = left_sum * left_sum / nl + right_sum * right_sum / nr;
      if (c.better_than(best)) best = c;
    }
    return best;
  }

  std::optional<SplitCandidate> best_random(std::uint32_t j, std::size_t begin, std::size_t end,
                                            double sum, std::size_t min_leaf) {
    double lo = ds_.row(work_[begin])[j];
    double hi = lo;
    for (std::size_t p = begin; p < end; ++p) {
      const double v = ds_.row(work_[p])[j];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (lo == hi) return std::nullopt;
    double threshold = rng_.uniform(lo, hi);
    if (threshold >= hi) threshold = lo;
    std::size_t nl = 0;
    double left_sum = 0.0;
    for (std::size_t p = begin; p < end; ++p) {
      if (ds_.row(work_[p])[j] <= threshold) {
        ++nl;
        left_sum += ds_.target(work_[p]);
      }
    }
    const std::size_t nr = (end - begin) - nl;
    SplitCandidate c;
    if (nl < min_leaf || nr < min_leaf) return c;
    const double right_sum = sum - left_sum;
    c.valid = true;
    c.feature = j;
    c.threshold = threshold;
    c.score = left_sum * left_sum / static_cast<double>(nl) + right_sum * right_sum / static_cast<double>(nr);
    return c;
  }

  const Dataset& ds_;
  const ForestParams& params_;
  Rng rng_;
  std::size_t m_;
  std::vector<std::uint32_t> features_;
  std::vector<std::uint32_t> work_;
  std::vector<std::pair<double, double>> order_;
};

}  // namespace

Tree grow_tree(const Dataset& ds, std::vector<std::uint32_t> sample, const ForestParams& params,
               std::uint64_t seed) {
  if (sample.empty()) throw DataError("cannot grow a tree on an empty sample");
  return TreeBuilder(ds, params, seed).build(std::move(sample));
}

Forest fit_forest(const Dataset& ds, const ForestParams& params, unsigned jobs) {
  if (params.num_trees < 1) throw DataError("forest needs at least one tree");
  const std::size_t min_leaf = std::max<std::size_t>(1, params.min_leaf);
  if (ds.size() < 2 * min_leaf) {
    throw DataError("need at least " + std::to_string(2 * min_leaf) + " rows for min_leaf=" +
                    std::to_string(min_leaf) + ", got " + std::to_string(ds.size()));
  }
  Forest forest;
  forest.params = params;
  forest.num_features = ds.num_features();
  forest.trees.resize(params.num_trees);
  const std::size_t n = ds.size();
  parallel_for(params.num_trees, jobs, [&](std::size_t t) {
    const std::uint64_t tree_seed = derive_seed(params.seed, t);
    Rng rng(derive_seed(tree_seed, 0xb007));
    std::vector<std::uint32_t> sample(n);
    if (params.uses_bootstrap()) {
      for (auto& s : sample) s = static_cast<std::uint32_t>(rng.index(n));
    } else {
      std::iota(sample.begin(), sample.end(), 0u);
    }
    forest.trees[t] = grow_tree(ds, std::move(sample), params, tree_seed);
  });
  return forest;
}

LeafAssignment assign(const Forest& forest, std::span<const double> x) {
  if (x.size() != forest.num_features) {
    throw DataError("input has " + std::to_string(x.size()) + " features, forest expects " +
                    std::to_string(forest.num_features));
  }
  LeafAssignment la;
  la.num_features = forest.num_features;
  la.means.reserve(forest.size() * forest.num_features);
  la.predictions.reserve(forest.size());
  for (const Tree& tree : forest.trees) {
    const Leaf& leaf = tree.route(x);
    la.means.insert(la.means.end(), leaf.mean_features.begin(), leaf.mean_features.end());
    la.predictions.push_back(leaf.mean_target);
  }
  return la;
}

double predict_mean(const Forest& forest, std::span<const double> x) {
  const auto la = assign(forest, x);
  double s = 0.0;
  for (double y : la.predictions) s += y;
  return s / static_cast<double>(la.size());
}

}  // namespace satrf
