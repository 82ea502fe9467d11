#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "satrf/forest.hpp"

namespace satrf {

/// One self-attention head: row i of its weight matrix is
/// (1 - gamma) softmax_k(-(y_i - y_k)^2 / kappa) + gamma * v.
struct HeadSpec {
  double gamma = 0.0;
  double kappa = 1.0;
  std::vector<double> v;
};

/// How head j >= 2 picks the query prediction of its scores.
///   Chained:  head j compares y_{k(j-1)} with y_{k(j)}, giving alpha^T B_1 ... B_t y.
///   Anchored: every head compares y_i (the attention index) with y_{k(j)}.
enum class HeadChain { Chained, Anchored };

/// Prediction of t chained self-attention heads behind the contaminated
/// attention alpha = (1 - eps) softmax(-|x - A_i|^2 / tau) + eps * w.
/// O(t T^2) per input.
double multihead_predict(const LeafAssignment& la, std::span<const double> x, std::span<const double> w,
                         std::span<const HeadSpec> heads, double epsilon, double tau,
                         HeadChain chain = HeadChain::Chained);
double multihead_predict(const Forest& forest, std::span<const double> x, std::span<const double> w,
                         std::span<const HeadSpec> heads, double epsilon, double tau,
                         HeadChain chain = HeadChain::Chained);

/// Heads with gamma and kappa drawn from fixed grids and uniform v.
std::vector<HeadSpec> random_heads(std::size_t count, std::size_t num_trees, std::uint64_t seed);

struct LinearityReport {
  std::size_t head = 0;
  double f0 = 0.0;  // prediction at v_j
  double f1 = 0.0;  // at v_j + h d
  double f2 = 0.0;  // at v_j + 2 h d
  double second_difference = 0.0;
  double scale = 0.0;  // max_k |y_k|
  bool affine = false;  // |second_difference| <= 1e-9 * scale
};

/// Second difference of the prediction along v_j -> v_j + s d (d must sum to 0).
LinearityReport verify_linearity(const LeafAssignment& la, std::span<const double> x, std::span<const double> w,
                                 std::span<const HeadSpec> heads, double epsilon, double tau,
                                 std::size_t probe, std::span<const double> direction, double step,
                                 HeadChain chain = HeadChain::Chained);

/// Same, along d = u - v_j for a random simplex point u, with h = 1/2 so all
/// three probe points stay feasible.
LinearityReport verify_linearity(const Forest& forest, std::span<const double> x, std::span<const double> w,
                                 std::span<const HeadSpec> heads, double epsilon, double tau,
                                 std::size_t probe, std::uint64_t seed, HeadChain chain = HeadChain::Chained);

/// Uniform draw from the probability simplex.
std::vector<double> random_simplex_point(std::size_t n, std::uint64_t seed);

}  // namespace satrf
