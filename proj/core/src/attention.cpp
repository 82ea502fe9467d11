#include "satrf/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "satrf/error.hpp"
#include "satrf/parallel.hpp"

namespace satrf {

const char* to_string(SelfAttentionVariant v) {
  switch (v) {
    case SelfAttentionVariant::Y: return "y";
    case SelfAttentionVariant::X: return "x";
    case SelfAttentionVariant::YX: return "yx";
  }
  return "?";
}

const char* to_string(LossNorm l) { return l == LossNorm::L2 ? "l2" : "l1"; }

SelfAttentionVariant parse_variant(const std::string& s) {
  if (s == "y" || s == "Y") return SelfAttentionVariant::Y;
  if (s == "x" || s == "X") return SelfAttentionVariant::X;
  if (s == "yx" || s == "YX") return SelfAttentionVariant::YX;
  throw DataError("unknown self-attention variant '" + s + "' (expected y, x or yx)");
}

LossNorm parse_loss(const std::string& s) {
  if (s == "l2" || s == "L2") return LossNorm::L2;
  if (s == "l1" || s == "L1") return LossNorm::L1;
  throw DataError("unknown loss '" + s + "' (expected l2 or l1)");
}

void AttentionConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DataError("epsilon must lie in [0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DataError("gamma must lie in [0, 1]");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DataError("tau must be positive");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw DataError("kappa must be positive");
}

void stable_softmax(std::span<const double> scores, std::span<double> out) {
  double top = -std::numeric_limits<double>::infinity();
  for (double s : scores) {
    if (std::isnan(s)) throw NumericError("softmax score is NaN");
    top = std::max(top, s);
  }
  if (!std::isfinite(top)) throw NumericError("softmax needs at least one finite score");
  double total = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out[k] = std::exp(scores[k] - top);
    total += out[k];
  }
  for (std::size_t k = 0; k < scores.size(); ++k) out[k] /= total;
}

std::vector<double> stable_softmax(std::span<const double> scores) {
  std::vector<double> out(scores.size());
  stable_softmax(scores, out);
  return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

namespace {

void check_input(std::span<const double> x, const LeafAssignment& la) {
  if (x.size() != la.num_features) throw DataError("input dimension does not match leaf means");
  if (la.size() == 0) throw DataError("empty leaf assignment");
}

void attention_softmax(std::span<const double> x, const LeafAssignment& la, double tau,
                       std::span<double> out) {
  const std::size_t T = la.size();
  std::vector<double> scores(T);
  for (std::size_t i = 0; i < T; ++i) scores[i] = -squared_distance(x, la.mean(i)) / tau;
  stable_softmax(scores, out);
}

// Softmax rows of the self-attention scores, row-major T x T.
std::vector<double> self_attention_softmax(const LeafAssignment& la, const AttentionConfig& cfg) {
  const std::size_t T = la.size();
  const auto& y = la.predictions;
  std::vector<double> leaf_dist;
  if (cfg.variant != SelfAttentionVariant::Y) {
    leaf_dist.assign(T * T, 0.0);
    for (std::size_t i = 0; i < T; ++i) {
      for (std::size_t k = i + 1; k < T; ++k) {
        const double d = squared_distance(la.mean(i), la.mean(k));
        leaf_dist[i * T + k] = d;
        leaf_dist[k * T + i] = d;
      }
    }
  }
  std::vector<double> rows(T * T);
  std::vector<double> scores(T);
  for (std::size_t i = 0; i < T; ++i) {
    for (std::size_t k = 0; k < T; ++k) {
      if (i == k) {
        scores[k] = 0.0;
        continue;
      }
      const double dy = y[i] - y[k];
      switch (cfg.variant) {
        case SelfAttentionVariant::Y:
          scores[k] = -(dy * dy) / cfg.kappa;
          break;
        case SelfAttentionVariant::X:
          scores[k] = -leaf_dist[i * T + k] / (2.0 * cfg.kappa);
          break;
        case SelfAttentionVariant::YX:
          scores[k] = -(dy * dy) / (2.0 * cfg.kappa * std::max(leaf_dist[i * T + k], kYxMinDistance));
          break;
      }
    }
    stable_softmax(scores, std::span<double>(rows.data() + i * T, T));
  }
  return rows;
}

// D and the per-tree self-attended values Cy_i = sum_k C_ik y_k determine the
// whole affine form.
Coefficients reduce(std::span<const double> D, std::span<const double> Cy, std::span<const double> y,
                    double epsilon, double gamma) {
  const std::size_t T = D.size();
  Coefficients c;
  c.H.resize(T);
  c.G.resize(T);
  double sum_d = 0.0;
  for (std::size_t i = 0; i < T; ++i) {
    c.R += D[i] * Cy[i];
    c.H[i] = epsilon * Cy[i];
    sum_d += D[i];
  }
  const double g = gamma * (sum_d + epsilon);
  for (std::size_t k = 0; k < T; ++k) c.G[k] = g * y[k];
  return c;
}

}  // namespace

AttentionRow attention_row(std::span<const double> x, const LeafAssignment& la, const AttentionConfig& cfg,
                           std::span<const double> w) {
  check_input(x, la);
  const std::size_t T = la.size();
  if (w.size() != T) throw DataError("weight vector length does not match tree count");
  AttentionRow row;
  row.D.resize(T);
  attention_softmax(x, la, cfg.tau, row.D);
  row.alpha.resize(T);
  for (std::size_t i = 0; i < T; ++i) {
    row.D[i] *= 1.0 - cfg.epsilon;
    row.alpha[i] = row.D[i] + cfg.epsilon * w[i];
  }
  return row;
}

std::vector<double> self_attention_matrix(const LeafAssignment& la, const AttentionConfig& cfg) {
  auto C = self_attention_softmax(la, cfg);
  for (auto& c : C) c *= 1.0 - cfg.gamma;
  return C;
}

double Coefficients::evaluate(std::span<const double> w, std::span<const double> v) const {
  double hw = 0.0;
  double gv = 0.0;
  for (std::size_t i = 0; i < H.size(); ++i) hw += H[i] * w[i];
  for (std::size_t k = 0; k < G.size(); ++k) gv += G[k] * v[k];
  return R + hw + gv;
}

Coefficients assemble_coefficients(const LeafAssignment& la, std::span<const double> D,
                                   std::span<const double> C, const AttentionConfig& cfg) {
  const std::size_t T = la.size();
  if (D.size() != T || C.size() != T * T) throw DataError("coefficient inputs do not match tree count");
  std::vector<double> Cy(T, 0.0);
  for (std::size_t i = 0; i < T; ++i) {
    for (std::size_t k = 0; k < T; ++k) Cy[i] += C[i * T + k] * la.predictions[k];
  }
  return reduce(D, Cy, la.predictions, cfg.epsilon, cfg.gamma);
}

CoefficientBundle coefficient_bundle(std::span<const double> x, const LeafAssignment& la,
                                     const AttentionConfig& cfg) {
  check_input(x, la);
  CoefficientBundle b;
  b.D.resize(la.size());
  attention_softmax(x, la, cfg.tau, b.D);
  for (auto& d : b.D) d *= 1.0 - cfg.epsilon;
  b.C = self_attention_matrix(la, cfg);
  b.coef = assemble_coefficients(la, b.D, b.C, cfg);
  return b;
}

KernelCache compute_kernel(std::span<const double> x, const LeafAssignment& la, const AttentionConfig& cfg) {
  check_input(x, la);
  const std::size_t T = la.size();
  KernelCache kc;
  kc.attention.resize(T);
  attention_softmax(x, la, cfg.tau, kc.attention);
  const auto S = self_attention_softmax(la, cfg);
  kc.self_mix.assign(T, 0.0);
  for (std::size_t i = 0; i < T; ++i) {
    for (std::size_t k = 0; k < T; ++k) kc.self_mix[i] += S[i * T + k] * la.predictions[k];
  }
  kc.predictions = la.predictions;
  return kc;
}

Coefficients KernelCache::coefficients(double epsilon, double gamma) const {
  const std::size_t T = attention.size();
  std::vector<double> D(T);
  std::vector<double> Cy(T);
  for (std::size_t i = 0; i < T; ++i) {
    D[i] = (1.0 - epsilon) * attention[i];
    Cy[i] = (1.0 - gamma) * self_mix[i];
  }
  return reduce(D, Cy, predictions, epsilon, gamma);
}

SatRfModel softmax_baseline(const Forest& forest, AttentionConfig cfg) {
  cfg.epsilon = 0.0;
  cfg.gamma = 0.0;
  const std::size_t T = forest.size();
  SatRfModel m;
  m.forest = forest;
  m.config = cfg;
  m.w.assign(T, 1.0 / static_cast<double>(T));
  m.v.assign(T, 1.0 / static_cast<double>(T));
  return m;
}

PredictionTrace trace_prediction(const SatRfModel& model, std::span<const double> x) {
  PredictionTrace t;
  if (model.input_scaling) {
    std::vector<double> z(x.begin(), x.end());
    model.input_scaling->apply_row(z);
    t.assignment = assign(model.forest, z);
    t.coef = compute_kernel(z, t.assignment, model.config)
                 .coefficients(model.config.epsilon, model.config.gamma);
  } else {
    t.assignment = assign(model.forest, x);
    t.coef = compute_kernel(x, t.assignment, model.config)
                 .coefficients(model.config.epsilon, model.config.gamma);
  }
  t.value = t.coef.evaluate(model.w, model.v);
  return t;
}

double predict(const SatRfModel& model, std::span<const double> x) {
  return trace_prediction(model, x).value;
}

std::vector<double> predict(const SatRfModel& model, const Dataset& ds, unsigned jobs) {
  std::vector<double> out(ds.size());
  parallel_for(ds.size(), jobs, [&](std::size_t i) { out[i] = predict(model, ds.row(i)); });
  return out;
}

}  // namespace satrf
