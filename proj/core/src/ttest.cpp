#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>

#include "satrf/error.hpp"
#include "satrf/eval.hpp"

namespace satrf {

TTestResult paired_t_test(std::span<const double> diffs) {
  if (diffs.size() < 2) throw DataError("t-test needs at least two differences");
  const auto n = static_cast<double>(diffs.size());
  TTestResult r;
  r.df = diffs.size() - 1;
  for (double d : diffs) r.mean += d;
  r.mean /= n;
  double ss = 0.0;
  for (double d : diffs) ss += (d - r.mean) * (d - r.mean);
  r.sd = std::sqrt(ss / (n - 1.0));
  const double se = r.sd / std::sqrt(n);

  if (!(se > 0.0)) {
    r.ci_low = r.ci_high = r.mean;
    if (r.mean == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = std::copysign(std::numeric_limits<double>::infinity(), r.mean);
      r.p = 0.0;
    }
    return r;
  }

  const boost::math::students_t dist(static_cast<double>(r.df));
  r.t = r.mean / se;
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  const double crit = boost::math::quantile(boost::math::complement(dist, 0.025));
  r.ci_low = r.mean - crit * se;
  r.ci_high = r.mean + crit * se;
  return r;
}

}  // namespace satrf
