#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "satrf/dataset.hpp"

namespace satrf {

enum class ForestKind { RandomForest, ExtraTrees };

const char* to_string(ForestKind kind);
ForestKind parse_forest_kind(const std::string& s);

struct ForestParams {
  ForestKind kind = ForestKind::RandomForest;
  std::size_t num_trees = 100;
  std::size_t min_leaf = 10;
  std::size_t max_depth = 0;      // 0: unlimited
  std::size_t max_features = 0;   // 0: max(1, floor(m/3))
  int bootstrap = -1;             // -1: on for RF, off for ERT
  std::uint64_t seed = 0;

  bool uses_bootstrap() const { return bootstrap < 0 ? kind == ForestKind::RandomForest : bootstrap != 0; }
  std::size_t candidate_features(std::size_t m) const;
};

/// Leaf statistics: member count (with bootstrap multiplicity), mean target B
/// and mean feature vector A of the tree's own training rows that reach it.
struct Leaf {
  std::size_t count = 0;
  double mean_target = 0.0;
  std::vector<double> mean_features;
};

struct Node {
  static constexpr std::uint32_t kNone = 0xffffffffu;
  std::uint32_t feature = kNone;  // kNone marks a leaf
  double threshold = 0.0;
  std::uint32_t left = kNone;
  std::uint32_t right = kNone;
  std::uint32_t leaf = kNone;     // index into Tree::leaves for leaf nodes

  bool is_leaf() const noexcept { return feature == kNone; }
};

struct Tree {
  std::vector<Node> nodes;  // nodes[0] is the root
  std::vector<Leaf> leaves;
  // Row indices (into the fitting dataset) this tree was grown on, with
  // multiplicity. Kept for inspection; not serialized.
  std::vector<std::uint32_t> sample;

  /// Routes x (feature <= threshold goes left) and returns the leaf index.
  std::size_t leaf_index(std::span<const double> x) const;
  const Leaf& route(std::span<const double> x) const { return leaves[leaf_index(x)]; }
};

struct Forest {
  ForestParams params;
  std::size_t num_features = 0;
  std::vector<Tree> trees;

  std::size_t size() const noexcept { return trees.size(); }
};

/// Per-tree (A_k(x), y_k(x)) for one input. means is row-major T x m.
struct LeafAssignment {
  std::size_t num_features = 0;
  std::vector<double> means;
  std::vector<double> predictions;

  std::size_t size() const noexcept { return predictions.size(); }
  std::span<const double> mean(std::size_t k) const {
    return {means.data() + k * num_features, num_features};
  }
};

/// Grows params.num_trees trees. Each tree draws from its own derived seed, so
/// the result is identical for every `jobs` value.
Forest fit_forest(const Dataset& ds, const ForestParams& params, unsigned jobs = 1);

/// Grows a single tree on the given sample (row indices, duplicates allowed).
Tree grow_tree(const Dataset& ds, std::vector<std::uint32_t> sample, const ForestParams& params,
               std::uint64_t seed);

LeafAssignment assign(const Forest& forest, std::span<const double> x);

/// Unweighted average of the tree predictions (the classic forest output).
double predict_mean(const Forest& forest, std::span<const double> x);

}  // namespace satrf
