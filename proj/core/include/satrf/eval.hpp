#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "satrf/attention.hpp"
#include "satrf/dataset.hpp"
#include "satrf/forest.hpp"
#include "satrf/multihead.hpp"
#include "satrf/optim.hpp"

namespace satrf {

/// Coefficient of determination 1 - SS_res / SS_tot. Throws DataError for
/// fewer than two values or a constant y.
double r2(std::span<const double> y, std::span<const double> yhat);
double mae(std::span<const double> y, std::span<const double> yhat);

struct TTestResult {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t df = 0;
  double t = 0.0;
  double p = 1.0;  // two-sided
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// One-sample t-test of mean(diffs) against 0 with a 95% interval, as used
/// for paired model comparisons over datasets. Zero spread gives t = 0, p = 1
/// for an all-zero vector and t = +-inf, p = 0 otherwise.
TTestResult paired_t_test(std::span<const double> diffs);

inline const std::vector<double> kDefaultContaminationGrid{0.0, 0.25, 0.5, 0.75, 1.0};
inline const std::vector<double> kDefaultScaleGrid{0.01, 0.1, 0.5, 1.0, 5.0, 10.0};

struct GridSpec {
  std::vector<double> epsilons = kDefaultContaminationGrid;
  std::vector<double> gammas = kDefaultContaminationGrid;
};

struct CvCell {
  double epsilon = 0.0;
  double gamma = 0.0;
  double mean_r2 = 0.0;
  std::size_t folds = 0;  // folds that produced a score
};

struct GridResult {
  AttentionConfig best;
  std::vector<CvCell> cells;  // epsilon-major, in grid order
  std::size_t skipped_folds = 0;
  std::vector<std::string> warnings;
};

/// Cross-validated (epsilon, gamma) selection. For every fold of the plan a
/// forest is grown on the fold's training rows (seed derived from
/// forest_params.seed and the fold), (w, v) are trained per cell, and the cell
/// score is the mean validation R^2. Ties go to smaller epsilon, then gamma.
GridResult grid_search(const Dataset& train, const ForestParams& forest_params, const AttentionConfig& base,
                       const GridSpec& grid, const FoldPlan& plan, const SolverOptions& solver = {},
                       unsigned jobs = 1);

struct Metrics {
  double r2 = 0.0;
  double mae = 0.0;
};

struct BenchmarkOptions {
  ForestParams forest;
  AttentionConfig base;  // tau, kappa, variant, loss; epsilon/gamma come from the grid
  GridSpec grid;
  std::size_t folds = 3;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  SolverOptions solver;
  unsigned jobs = 1;
  std::size_t heads = 0;  // > 0 adds a multi-head forward-pass column
  HeadChain chain = HeadChain::Chained;
  bool standardize = false;
};

struct BenchmarkRow {
  std::string dataset;
  ForestKind kind = ForestKind::RandomForest;
  SelfAttentionVariant variant = SelfAttentionVariant::Y;
  double epsilon_opt = 0.0;
  double gamma_opt = 0.0;
  Metrics base;
  Metrics softmax;
  Metrics satrf;
  std::optional<Metrics> multihead;
  double training_loss = 0.0;  // SAT-RF at trained (w, v)
  double uniform_loss = 0.0;   // SAT-RF config at uniform (w, v)
  SolverReport solver;
  std::vector<std::string> warnings;
  std::string error;  // non-empty when the dataset failed

  bool ok() const { return error.empty(); }
  bool dominance_holds() const;
};

/// Split 4:1, select (epsilon, gamma) by CV on the training part, refit on the
/// whole training part and score the base forest, the softmax-only model and
/// the trained model on the test part. Throws on failure.
BenchmarkRow benchmark_dataset(const Dataset& ds, const BenchmarkOptions& options);

/// Runs every dataset; failures are recorded in the row instead of thrown.
std::vector<BenchmarkRow> benchmark(std::span<const Dataset> datasets, const BenchmarkOptions& options);

void write_benchmark_tsv(std::span<const BenchmarkRow> rows, std::ostream& out);
void write_benchmark_markdown(std::span<const BenchmarkRow> rows, std::ostream& out);
void write_grid_tsv(const GridResult& result, std::ostream& out);

enum class SweepAxis { Tau, Kappa };

struct SweepPoint {
  double tau = 1.0;
  double epsilon = 0.0;
  double kappa = 1.0;
  double gamma = 0.0;
  double r2 = 0.0;
};

/// Test R^2 over (tau x epsilon) or (kappa x gamma), other parameters taken
/// from options.base. One forest on the training split is shared by all points.
std::vector<SweepPoint> sweep(const Dataset& ds, const BenchmarkOptions& options, SweepAxis axis,
                              const std::vector<double>& scales = kDefaultScaleGrid);
void write_sweep_tsv(const std::string& dataset, std::span<const SweepPoint> points, std::ostream& out);

}  // namespace satrf
