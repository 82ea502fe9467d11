#include "satrf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "satrf/error.hpp"
#include "satrf/random.hpp"

namespace satrf {

Dataset::Dataset(std::vector<double> features, std::size_t num_features, std::vector<double> targets,
                 std::vector<std::string> feature_names, std::string name)
    : features_(std::move(features)),
      num_features_(num_features),
      targets_(std::move(targets)),
      feature_names_(std::move(feature_names)),
      name_(std::move(name)) {
  if (num_features_ == 0) throw DataError("dataset needs at least one feature");
  if (targets_.empty()) throw DataError("empty dataset");
  if (features_.size() != targets_.size() * num_features_) {
    throw DataError("feature matrix size does not match n x m");
  }
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (!std::isfinite(features_[i])) {
      throw DataError("non-finite feature at row " + std::to_string(i / num_features_) +
                      ", column " + std::to_string(i % num_features_));
    }
  }
  for (std::size_t i = 0; i < targets_.size(); ++i) {
    if (!std::isfinite(targets_[i])) throw DataError("non-finite target at row " + std::to_string(i));
  }
  if (feature_names_.empty()) {
    feature_names_.reserve(num_features_);
    for (std::size_t j = 0; j < num_features_; ++j) feature_names_.push_back("x" + std::to_string(j + 1));
  } else if (feature_names_.size() != num_features_) {
    throw DataError("feature name count does not match feature count");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<double> x;
  std::vector<double> y;
  x.reserve(indices.size() * num_features_);
  y.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw DataError("subset index out of range");
    auto r = row(i);
    x.insert(x.end(), r.begin(), r.end());
    y.push_back(targets_[i]);
  }
  return Dataset(std::move(x), num_features_, std::move(y), feature_names_, name_);
}

Standardizer Standardizer::fit(const Dataset& ds) {
  const std::size_t m = ds.num_features();
  const auto n = static_cast<double>(ds.size());
  Standardizer s;
  s.mean.assign(m, 0.0);
  s.scale.assign(m, 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto r = ds.row(i);
    for (std::size_t j = 0; j < m; ++j) s.mean[j] += r[j];
  }
  for (auto& v : s.mean) v /= n;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto r = ds.row(i);
    for (std::size_t j = 0; j < m; ++j) s.scale[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
  }
  for (auto& v : s.scale) {
    v = std::sqrt(v / n);
    if (!(v > 0.0)) v = 1.0;  // constant column
  }
  return s;
}

void Standardizer::apply_row(std::span<double> x) const {
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = (x[j] - mean[j]) / scale[j];
}

Dataset Standardizer::apply(const Dataset& ds) const {
  if (ds.num_features() != mean.size()) throw DataError("standardizer dimension mismatch");
  std::vector<double> x(ds.features().begin(), ds.features().end());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    apply_row(std::span<double>(x.data() + i * mean.size(), mean.size()));
  }
  std::vector<double> y(ds.targets().begin(), ds.targets().end());
  return Dataset(std::move(x), ds.num_features(), std::move(y), ds.feature_names(), ds.name());
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

Dataset parse_csv(std::istream& in, const std::string& target_column, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": missing header row");
  std::vector<std::string> header;
  for (auto f : split_fields(line)) header.emplace_back(f);
  if (header.size() < 2) throw DataError(source + ": need at least 2 columns, got " +
                                         std::to_string(header.size()));

  std::size_t target = header.size() - 1;
  if (!target_column.empty()) {
    auto it = std::find(header.begin(), header.end(), target_column);
    if (it == header.end()) throw DataError(source + ": no column named '" + target_column + "'");
    target = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<std::string> names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j != target) names.push_back(header[j]);
  }

  std::vector<double> x;
  std::vector<double> y;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError(source + ": row " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      double v = 0.0;
      if (!parse_double(fields[j], v)) {
        throw DataError(source + ": non-numeric value '" + std::string(fields[j]) + "' at row " +
                        std::to_string(line_no) + ", column " + std::to_string(j + 1) + " (" +
                        header[j] + ")");
      }
      (j == target ? y : x).push_back(v);
    }
  }
  if (y.empty()) throw DataError(source + ": empty dataset");
  std::string name = source;
  if (auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
  if (auto dot = name.rfind('.'); dot != std::string::npos && dot > 0) name = name.substr(0, dot);
  return Dataset(std::move(x), header.size() - 1, std::move(y), std::move(names), std::move(name));
}

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_csv(in, target_column, path.string());
}

namespace {
void write_number(std::ostream& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, ptr - buf);
}
}  // namespace

void write_csv(const Dataset& ds, std::ostream& out, const std::string& target_name) {
  for (const auto& n : ds.feature_names()) out << n << ',';
  out << target_name << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.row(i)) {
      write_number(out, v);
      out << ',';
    }
    write_number(out, ds.target(i));
    out << '\n';
  }
}

void write_csv(const Dataset& ds, const std::filesystem::path& path, const std::string& target_name) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_csv(ds, out, target_name);
}

double friedman_response(int variant, std::span<const double> x) {
  using std::numbers::pi;
  switch (variant) {
    case 1:
      if (x.size() < 5) throw DataError("friedman1 needs at least 5 inputs");
      return 10.0 * std::sin(pi * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) + 10.0 * x[3] +
             5.0 * x[4];
    case 2: {
      if (x.size() != 4) throw DataError("friedman2 needs 4 inputs");
      const double t = x[1] * x[2] - 1.0 / (x[1] * x[3]);
      return std::sqrt(x[0] * x[0] + t * t);
    }
    case 3: {
      if (x.size() != 4) throw DataError("friedman3 needs 4 inputs");
      const double t = x[1] * x[2] - 1.0 / (x[1] * x[3]);
      return std::atan(t / x[0]);
    }
    default:
      throw DataError("unknown Friedman variant " + std::to_string(variant));
  }
}

Dataset gen_friedman(int variant, std::size_t n, std::uint64_t seed, bool noise) {
  using std::numbers::pi;
  if (variant < 1 || variant > 3) throw DataError("unknown Friedman variant " + std::to_string(variant));
  if (n == 0) throw DataError("empty dataset");
  const std::size_t m = variant == 1 ? 10 : 4;
  const double noise_sd = variant == 1 ? 1.0 : (variant == 2 ? 125.0 : 0.1);
  Rng rng(seed);
  std::vector<double> x(n * m);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> r(x.data() + i * m, m);
    if (variant == 1) {
      for (auto& v : r) v = rng.uniform();
    } else {
      r[0] = rng.uniform(0.0, 100.0);
      r[1] = rng.uniform(40.0 * pi, 560.0 * pi);
      r[2] = rng.uniform();
      r[3] = rng.uniform(1.0, 11.0);
    }
    y[i] = friedman_response(variant, r);
  }
  if (noise) {
    for (auto& v : y) v += noise_sd * rng.normal();
  }
  return Dataset(std::move(x), m, std::move(y), {}, "friedman" + std::to_string(variant));
}

Dataset gen_linear_regression(std::size_t n, std::size_t m, std::uint64_t seed, std::size_t informative,
                              double noise) {
  if (n == 0 || m == 0) throw DataError("empty dataset");
  informative = std::min(informative, m);
  Rng rng(seed);
  std::vector<double> x(n * m);
  for (auto& v : x) v = rng.normal();
  std::vector<double> beta(m, 0.0);
  for (std::size_t j = 0; j < informative; ++j) beta[j] = 100.0 * rng.uniform();
  // Informative columns land at random positions.
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  std::vector<double> coef(m);
  for (std::size_t j = 0; j < m; ++j) coef[perm[j]] = beta[j];
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += x[i * m + j] * coef[j];
    y[i] = s + noise * rng.normal();
  }
  return Dataset(std::move(x), m, std::move(y), {}, "regression");
}

Dataset gen_sparse_uncorrelated(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m < 4) throw DataError("sparse generator needs at least 4 features");
  if (n == 0) throw DataError("empty dataset");
  Rng rng(seed);
  std::vector<double> x(n * m);
  for (auto& v : x) v = rng.normal();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = x.data() + i * m;
    y[i] = r[0] + 2.0 * r[1] - 2.0 * r[2] - 1.5 * r[3] + rng.normal();
  }
  return Dataset(std::move(x), m, std::move(y), {}, "sparse");
}

bool is_generator_name(const std::string& name) {
  return name == "friedman1" || name == "friedman2" || name == "friedman3" || name == "regression" ||
         name == "sparse";
}

Dataset generate(const std::string& name, std::size_t n, std::uint64_t seed) {
  if (n == 0) n = 100;
  if (name == "friedman1") return gen_friedman(1, n, seed);
  if (name == "friedman2") return gen_friedman(2, n, seed);
  if (name == "friedman3") return gen_friedman(3, n, seed);
  if (name == "regression") return gen_linear_regression(n, 100, seed);
  if (name == "sparse") return gen_sparse_uncorrelated(n, 10, seed);
  throw DataError("unknown generator '" + name + "'");
}

TrainTestSplit split_indices(std::size_t n, std::uint64_t seed) {
  if (n < 5) throw DataError("train/test split needs n >= 5, got " + std::to_string(n));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.shuffle(perm);
  const std::size_t n_train = (4 * n) / 5;
  TrainTestSplit s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  return s;
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, std::uint64_t seed) {
  const auto s = split_indices(ds.size(), seed);
  return {ds.subset(s.train), ds.subset(s.test)};
}

FoldPlan make_folds(std::size_t n, std::size_t k, std::size_t repeats, std::uint64_t seed) {
  if (k < 2) throw DataError("fold count must be at least 2");
  if (repeats < 1) throw DataError("repeat count must be at least 1");
  if (n < k) throw DataError("cannot make " + std::to_string(k) + " folds from " + std::to_string(n) +
                             " rows");
  FoldPlan plan;
  plan.k = k;
  plan.repeats = repeats;
  plan.seed = seed;
  plan.assignments.resize(repeats);
  for (std::size_t r = 0; r < repeats; ++r) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(derive_seed(seed, r));
    rng.shuffle(perm);
    auto& a = plan.assignments[r];
    a.assign(n, 0);
    // Position p in the shuffled order goes to fold p mod k: sizes differ by at most 1.
    for (std::size_t p = 0; p < n; ++p) a[perm[p]] = p % k;
  }
  return plan;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> FoldPlan::partition(std::size_t r,
                                                                                  std::size_t f) const {
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
  const auto& a = assignments.at(r);
  for (std::size_t i = 0; i < a.size(); ++i) (a[i] == f ? out.second : out.first).push_back(i);
  return out;
}

}  // namespace satrf
