#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace satrf {

/// Dense tabular regression data. Features are stored row-major.
class Dataset {
 public:
  Dataset() = default;
  /// Validates shape and finiteness; throws DataError on violation.
  Dataset(std::vector<double> features, std::size_t num_features, std::vector<double> targets,
          std::vector<std::string> feature_names = {}, std::string name = {});

  std::size_t size() const noexcept { return targets_.size(); }
  std::size_t num_features() const noexcept { return num_features_; }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * num_features_, num_features_};
  }
  double target(std::size_t i) const { return targets_[i]; }
  std::span<const double> targets() const noexcept { return targets_; }
  std::span<const double> features() const noexcept { return features_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const std::string& name() const noexcept { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  /// Rows in the given order (duplicates allowed).
  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<double> features_;
  std::size_t num_features_ = 0;
  std::vector<double> targets_;
  std::vector<std::string> feature_names_;
  std::string name_;
};

/// Per-feature z-scoring fitted on one dataset and applied to others.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Dataset& ds);
  Dataset apply(const Dataset& ds) const;
  void apply_row(std::span<double> x) const;
};

// CSV: comma delimited, header required, '.' decimal point, no missing values.
// An empty target_column selects the last column.
Dataset load_csv(const std::filesystem::path& path, const std::string& target_column = {});
Dataset parse_csv(std::istream& in, const std::string& target_column = {},
                  const std::string& source = "<stream>");
void write_csv(const Dataset& ds, std::ostream& out, const std::string& target_name = "y");
void write_csv(const Dataset& ds, const std::filesystem::path& path,
               const std::string& target_name = "y");

/// Standard Friedman benchmark functions (x sampled as in Friedman 1991 / Breiman 1996).
///   1: y = 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5 + N(0, 1),  x ~ U[0,1]^10
///   2: y = sqrt(x1^2 + (x2 x3 - 1/(x2 x4))^2) + N(0, 125^2)
///   3: y = atan((x2 x3 - 1/(x2 x4)) / x1) + N(0, 0.1^2)
/// with x1 ~ U[0,100], x2 ~ U[40pi,560pi], x3 ~ U[0,1], x4 ~ U[1,11] for 2 and 3.
Dataset gen_friedman(int variant, std::size_t n, std::uint64_t seed, bool noise = true);

/// Noise-free Friedman response for a single input row.
double friedman_response(int variant, std::span<const double> x);

/// Random linear regression: x ~ N(0,1)^m, 10 informative features with
/// coefficients 100*U[0,1), y = x.beta + N(0, noise^2). Mirrors the common
/// scikit-learn generator; the exact stream differs.
Dataset gen_linear_regression(std::size_t n, std::size_t m, std::uint64_t seed,
                              std::size_t informative = 10, double noise = 1.0);

/// y = x1 + 2 x2 - 2 x3 - 1.5 x4 + N(0,1), x ~ N(0,1)^m, m >= 4.
Dataset gen_sparse_uncorrelated(std::size_t n, std::size_t m, std::uint64_t seed);

/// Generator lookup by name: friedman1|friedman2|friedman3|regression|sparse.
/// Uses the default sizes from the benchmark table when n == 0.
Dataset generate(const std::string& name, std::size_t n, std::uint64_t seed);
bool is_generator_name(const std::string& name);

struct TrainTestSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Shuffled split with floor(4n/5) training rows. Requires n >= 5.
TrainTestSplit split_indices(std::size_t n, std::uint64_t seed);
std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, std::uint64_t seed);

/// Repeated k-fold assignment. assignments[r][i] is the fold of row i in repeat r.
struct FoldPlan {
  std::size_t k = 0;
  std::size_t repeats = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> assignments;

  std::size_t num_rows() const { return assignments.empty() ? 0 : assignments.front().size(); }
  /// Rows outside (train) and inside (validation) fold f of repeat r.
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition(std::size_t r,
                                                                          std::size_t f) const;
};

FoldPlan make_folds(std::size_t n, std::size_t k, std::size_t repeats, std::uint64_t seed);

}  // namespace satrf
