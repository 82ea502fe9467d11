#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "satrf/dataset.hpp"
#include "satrf/forest.hpp"

namespace satrf {

/// How tree-to-tree self-attention scores are formed.
///   Y:  -(y_i - y_k)^2 / kappa
///   X:  -|A_i - A_k|^2 / (2 kappa)
///   YX: -(y_i - y_k)^2 / (2 kappa max(|A_i - A_k|^2, delta))
enum class SelfAttentionVariant { Y, X, YX };
enum class LossNorm { L2, L1 };

const char* to_string(SelfAttentionVariant v);
const char* to_string(LossNorm l);
SelfAttentionVariant parse_variant(const std::string& s);
LossNorm parse_loss(const std::string& s);

/// Lower clamp on |A_i - A_k|^2 in the YX score denominator.
inline constexpr double kYxMinDistance = 1e-8;

struct AttentionConfig {
  double epsilon = 0.0;  // attention contamination rate
  double gamma = 0.0;    // self-attention contamination rate
  double tau = 1.0;
  double kappa = 1.0;
  SelfAttentionVariant variant = SelfAttentionVariant::Y;
  LossNorm loss = LossNorm::L2;

  /// Throws DataError when a field is out of range.
  void validate() const;
};

/// Softmax computed after subtracting the maximum score. Entries may be -inf
/// (weight 0) as long as one is finite; otherwise throws NumericError.
std::vector<double> stable_softmax(std::span<const double> scores);
void stable_softmax(std::span<const double> scores, std::span<double> out);

double squared_distance(std::span<const double> a, std::span<const double> b);

struct AttentionRow {
  std::vector<double> alpha;  // D + epsilon * w, sums to 1
  std::vector<double> D;      // (1 - epsilon) * softmax(-|x - A_i|^2 / tau), sums to 1 - epsilon
};

AttentionRow attention_row(std::span<const double> x, const LeafAssignment& la,
                           const AttentionConfig& cfg, std::span<const double> w);

/// Row-major T x T matrix C with C_ik = (1 - gamma) softmax_k(score_ik).
/// The full self-attention row i is C_i + gamma * v.
std::vector<double> self_attention_matrix(const LeafAssignment& la, const AttentionConfig& cfg);

/// Affine form of one prediction: yhat = R + <H, w> + <G, v> for (w, v) on
/// the product of simplices.
struct Coefficients {
  double R = 0.0;
  std::vector<double> H;
  std::vector<double> G;

  double evaluate(std::span<const double> w, std::span<const double> v) const;
};

Coefficients assemble_coefficients(const LeafAssignment& la, std::span<const double> D,
                                   std::span<const double> C, const AttentionConfig& cfg);

/// D, C and their (R, H, G) reduction for one example, kept together for inspection.
struct CoefficientBundle {
  std::vector<double> D;
  std::vector<double> C;
  Coefficients coef;
};

CoefficientBundle coefficient_bundle(std::span<const double> x, const LeafAssignment& la,
                                     const AttentionConfig& cfg);

/// The parts of an example's attention that do not depend on (epsilon, gamma):
/// softmax attention weights, uncontaminated self-attention mixes
/// mix_i = sum_k softmax_k(score_ik) y_k, and the tree predictions. Grid search
/// builds one per example and re-derives Coefficients for every grid cell.
struct KernelCache {
  std::vector<double> attention;
  std::vector<double> self_mix;
  std::vector<double> predictions;

  Coefficients coefficients(double epsilon, double gamma) const;
};

KernelCache compute_kernel(std::span<const double> x, const LeafAssignment& la, const AttentionConfig& cfg);

struct SatRfModel {
  Forest forest;
  AttentionConfig config;
  std::vector<double> w;
  std::vector<double> v;
  std::optional<Standardizer> input_scaling;  // applied to x before routing

  std::size_t num_trees() const { return forest.size(); }
};

/// Model with epsilon = gamma = 0 and uniform (w, v): softmax weights only.
SatRfModel softmax_baseline(const Forest& forest, AttentionConfig cfg);

double predict(const SatRfModel& model, std::span<const double> x);
std::vector<double> predict(const SatRfModel& model, const Dataset& ds, unsigned jobs = 1);

/// Same prediction, with the per-input pieces exposed.
struct PredictionTrace {
  LeafAssignment assignment;
  Coefficients coef;
  double value = 0.0;
};
PredictionTrace trace_prediction(const SatRfModel& model, std::span<const double> x);

}  // namespace satrf
