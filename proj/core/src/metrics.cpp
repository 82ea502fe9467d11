#include <cmath>

#include "satrf/error.hpp"
#include "satrf/eval.hpp"

namespace satrf {

double r2(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw DataError("r2: length mismatch");
  if (y.size() < 2) throw DataError("r2: need at least two values");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (!(ss_tot > 0.0)) throw DataError("r2: target is constant");
  return 1.0 - ss_res / ss_tot;
}

double mae(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw DataError("mae: length mismatch");
  if (y.empty()) throw DataError("mae: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - yhat[i]);
  return s / static_cast<double>(y.size());
}

}  // namespace satrf
