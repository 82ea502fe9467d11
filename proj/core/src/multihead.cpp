#include "satrf/multihead.hpp"

#include <algorithm>
#include <cmath>

#include "satrf/attention.hpp"
#include "satrf/error.hpp"
#include "satrf/random.hpp"

namespace satrf {

namespace {

void check_heads(std::span<const HeadSpec> heads, std::size_t T) {
  if (heads.empty()) throw DataError("multi-head prediction needs at least one head");
  for (const auto& h : heads) {
    if (!(h.gamma >= 0.0 && h.gamma <= 1.0)) throw DataError("head gamma must lie in [0, 1]");
    if (!(h.kappa > 0.0)) throw DataError("head kappa must be positive");
    if (h.v.size() != T) throw DataError("head weight vector length does not match tree count");
  }
}

// Row i of the head's full weight matrix.
void head_row(const HeadSpec& head, std::span<const double> y, std::size_t i, std::span<double> out) {
  const std::size_t T = y.size();
  for (std::size_t k = 0; k < T; ++k) {
    const double d = y[i] - y[k];
    out[k] = -(d * d) / head.kappa;
  }
  stable_softmax(out, out);
  for (std::size_t k = 0; k < T; ++k) out[k] = (1.0 - head.gamma) * out[k] + head.gamma * head.v[k];
}

}  // namespace

double multihead_predict(const LeafAssignment& la, std::span<const double> x, std::span<const double> w,
                         std::span<const HeadSpec> heads, double epsilon, double tau, HeadChain chain) {
  const std::size_t T = la.size();
  check_heads(heads, T);
  AttentionConfig cfg;
  cfg.epsilon = epsilon;
  cfg.tau = tau;
  const auto alpha = attention_row(x, la, cfg, w).alpha;
  const auto& y = la.predictions;
  std::vector<double> row(T);

  if (chain == HeadChain::Chained) {
    // u <- B_j u for j = t..1, starting from u = y.
    std::vector<double> u = y;
    std::vector<double> next(T);
    for (std::size_t j = heads.size(); j-- > 0;) {
      for (std::size_t i = 0; i < T; ++i) {
        head_row(heads[j], y, i, row);
        double s = 0.0;
        for (std::size_t k = 0; k < T; ++k) s += row[k] * u[k];
        next[i] = s;
      }
      u.swap(next);
    }
    double out = 0.0;
    for (std::size_t i = 0; i < T; ++i) out += alpha[i] * u[i];
    return out;
  }

  // Anchored: heads before the last only contribute their row sums at i.
  double out = 0.0;
  for (std::size_t i = 0; i < T; ++i) {
    double factor = 1.0;
    for (std::size_t j = 0; j + 1 < heads.size(); ++j) {
      head_row(heads[j], y, i, row);
      double s = 0.0;
      for (double r : row) s += r;
      factor *= s;
    }
    head_row(heads.back(), y, i, row);
    double last = 0.0;
    for (std::size_t k = 0; k < T; ++k) last += row[k] * y[k];
    out += alpha[i] * factor * last;
  }
  return out;
}

double multihead_predict(const Forest& forest, std::span<const double> x, std::span<const double> w,
                         std::span<const HeadSpec> heads, double epsilon, double tau, HeadChain chain) {
  return multihead_predict(assign(forest, x), x, w, heads, epsilon, tau, chain);
}

std::vector<HeadSpec> random_heads(std::size_t count, std::size_t num_trees, std::uint64_t seed) {
  static constexpr double kGammas[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  static constexpr double kKappas[] = {0.1, 0.5, 1.0, 5.0, 10.0};
  Rng rng(seed);
  std::vector<HeadSpec> heads(count);
  for (auto& h : heads) {
    h.gamma = kGammas[rng.index(std::size(kGammas))];
    h.kappa = kKappas[rng.index(std::size(kKappas))];
    h.v.assign(num_trees, 1.0 / static_cast<double>(num_trees));
  }
  return heads;
}

std::vector<double> random_simplex_point(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& v : p) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    v = -std::log(u);
    s += v;
  }
  for (auto& v : p) v /= s;
  return p;
}

LinearityReport verify_linearity(const LeafAssignment& la, std::span<const double> x, std::span<const double> w,
                                 std::span<const HeadSpec> heads, double epsilon, double tau,
                                 std::size_t probe, std::span<const double> direction, double step,
                                 HeadChain chain) {
  if (probe >= heads.size()) throw DataError("probe head index out of range");
  if (direction.size() != la.size()) throw DataError("probe direction length does not match tree count");
  std::vector<HeadSpec> h(heads.begin(), heads.end());
  const std::vector<double> base = h[probe].v;
  auto at = [&](double s) {
    for (std::size_t k = 0; k < base.size(); ++k) h[probe].v[k] = base[k] + s * direction[k];
    return multihead_predict(la, x, w, h, epsilon, tau, chain);
  };
  LinearityReport r;
  r.head = probe;
  r.f0 = at(0.0);
  r.f1 = at(step);
  r.f2 = at(2.0 * step);
  r.second_difference = r.f0 - 2.0 * r.f1 + r.f2;
  for (double y : la.predictions) r.scale = std::max(r.scale, std::abs(y));
  r.affine = std::abs(r.second_difference) <= 1e-9 * r.scale;
  return r;
}

LinearityReport verify_linearity(const Forest& forest, std::span<const double> x, std::span<const double> w,
                                 std::span<const HeadSpec> heads, double epsilon, double tau,
                                 std::size_t probe, std::uint64_t seed, HeadChain chain) {
  if (probe >= heads.size()) throw DataError("probe head index out of range");
  const auto la = assign(forest, x);
  const auto target = random_simplex_point(la.size(), seed);
  std::vector<double> d(la.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = target[k] - heads[probe].v[k];
  return verify_linearity(la, x, w, heads, epsilon, tau, probe, d, 0.5, chain);
}

}  // namespace satrf
