#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "satrf/error.hpp"
#include "satrf/eval.hpp"
#include "satrf/random.hpp"

namespace satrf {

namespace {

enum SeedStream : std::uint64_t { kSplit = 1, kFolds = 2, kForest = 3, kHeads = 4 };

Metrics score(std::span<const double> y, std::span<const double> yhat) { return {r2(y, yhat), mae(y, yhat)}; }

struct Prepared {
  Dataset train;
  Dataset test;
};

Prepared prepare(const Dataset& ds, const BenchmarkOptions& o) {
  auto [train, test] = split_train_test(ds, derive_seed(o.seed, kSplit));
  if (o.standardize) {
    const auto z = Standardizer::fit(train);
    train = z.apply(train);
    test = z.apply(test);
  }
  return {std::move(train), std::move(test)};
}

ForestParams forest_params(const BenchmarkOptions& o) {
  ForestParams fp = o.forest;
  fp.seed = derive_seed(o.seed, kForest);
  return fp;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

}  // namespace

bool BenchmarkRow::dominance_holds() const {
  return training_loss <= uniform_loss * (1.0 + 1e-9) + 1e-9;
}

BenchmarkRow benchmark_dataset(const Dataset& ds, const BenchmarkOptions& o) {
  o.base.validate();
  const auto [train_set, test_set] = prepare(ds, o);
  const ForestParams fp = forest_params(o);
  const FoldPlan plan = make_folds(train_set.size(), o.folds, o.repeats, derive_seed(o.seed, kFolds));
  const GridResult grid = grid_search(train_set, fp, o.base, o.grid, plan, o.solver, o.jobs);

  BenchmarkRow row;
  row.dataset = ds.name();
  row.kind = o.forest.kind;
  row.variant = o.base.variant;
  row.epsilon_opt = grid.best.epsilon;
  row.gamma_opt = grid.best.gamma;
  row.warnings = grid.warnings;

  const Forest forest = fit_forest(train_set, fp, o.jobs);
  const auto y = test_set.targets();

  std::vector<double> base_pred(test_set.size());
  for (std::size_t i = 0; i < test_set.size(); ++i) base_pred[i] = predict_mean(forest, test_set.row(i));
  row.base = score(y, base_pred);

  row.softmax = score(y, predict(softmax_baseline(forest, o.base), test_set, o.jobs));

  const TrainResult trained = train(forest, train_set, grid.best, o.solver, o.jobs);
  row.satrf = score(y, predict(trained.model, test_set, o.jobs));
  row.training_loss = trained.training_loss;
  row.uniform_loss = trained.uniform_loss;
  row.solver = trained.report;
  if (!trained.report.converged) {
    row.warnings.push_back("solver stopped before reaching tolerance (kkt residual " +
                           std::to_string(trained.report.kkt_residual) + ")");
  }

  if (o.heads > 0) {
    // Head 1 reuses the trained self-attention; further heads are random.
    std::vector<HeadSpec> heads{{grid.best.gamma, grid.best.kappa, trained.model.v}};
    const auto extra = random_heads(o.heads - 1, forest.size(), derive_seed(o.seed, kHeads));
    heads.insert(heads.end(), extra.begin(), extra.end());
    std::vector<double> mh(test_set.size());
    for (std::size_t i = 0; i < test_set.size(); ++i) {
      mh[i] = multihead_predict(forest, test_set.row(i), trained.model.w, heads, grid.best.epsilon,
                                grid.best.tau, o.chain);
    }
    row.multihead = score(y, mh);
  }
  return row;
}

std::vector<BenchmarkRow> benchmark(std::span<const Dataset> datasets, const BenchmarkOptions& options) {
  std::vector<BenchmarkRow> rows;
  for (const auto& ds : datasets) {
    try {
      rows.push_back(benchmark_dataset(ds, options));
    } catch (const std::exception& e) {
      BenchmarkRow r;
      r.dataset = ds.name();
      r.kind = options.forest.kind;
      r.variant = options.base.variant;
      r.error = e.what();
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

void write_benchmark_tsv(std::span<const BenchmarkRow> rows, std::ostream& out) {
  bool heads = false;
  for (const auto& r : rows) heads = heads || r.multihead.has_value();
  out << "dataset\tbase\tvariant\tepsilon_opt\tgamma_opt\tr2_base\tr2_softmax\tr2_satrf";
  if (heads) out << "\tr2_multihead";
  out << "\tmae_base\tmae_softmax\tmae_satrf";
  if (heads) out << "\tmae_multihead";
  out << "\ttrain_loss\tuniform_loss\terror\n";
  const auto prec = std::setprecision(10);
  for (const auto& r : rows) {
    out << r.dataset << '\t' << to_string(r.kind) << '\t' << to_string(r.variant) << '\t';
    if (!r.ok()) {
      out << "\t\t\t\t";
      if (heads) out << '\t';
      out << "\t\t";
      if (heads) out << '\t';
      out << "\t\t\t" << r.error << '\n';
      continue;
    }
    out << prec << r.epsilon_opt << '\t' << r.gamma_opt << '\t' << r.base.r2 << '\t' << r.softmax.r2 << '\t'
        << r.satrf.r2;
    if (heads) out << '\t' << (r.multihead ? r.multihead->r2 : std::nan(""));
    out << '\t' << r.base.mae << '\t' << r.softmax.mae << '\t' << r.satrf.mae;
    if (heads) out << '\t' << (r.multihead ? r.multihead->mae : std::nan(""));
    out << '\t' << r.training_loss << '\t' << r.uniform_loss << "\t\n";
  }
}

void write_benchmark_markdown(std::span<const BenchmarkRow> rows, std::ostream& out) {
  bool heads = false;
  for (const auto& r : rows) heads = heads || r.multihead.has_value();
  const std::string base = rows.empty() || rows.front().kind == ForestKind::RandomForest ? "RF" : "ERT";
  const std::string sat =
      rows.empty() ? "SAT-RF" : std::string("SAT-RF-") + to_string(rows.front().variant);
  std::vector<std::string> header{"Data set", "eps_opt", "gamma_opt", "R2 " + base, "R2 Softmax", "R2 " + sat};
  if (heads) header.push_back("R2 MultiHead");
  for (const auto& h : {"MAE " + base, std::string("MAE Softmax"), "MAE " + sat}) header.push_back(h);
  if (heads) header.push_back("MAE MultiHead");

  std::vector<std::vector<std::string>> table;
  for (const auto& r : rows) {
    std::vector<std::string> line{r.dataset};
    if (!r.ok()) {
      line.push_back("error: " + r.error);
      line.resize(header.size());
    } else {
      line.push_back(fmt(r.epsilon_opt, 2));
      line.push_back(fmt(r.gamma_opt, 2));
      line.push_back(fmt(r.base.r2, 3));
      line.push_back(fmt(r.softmax.r2, 3));
      line.push_back(fmt(r.satrf.r2, 3));
      if (heads) line.push_back(r.multihead ? fmt(r.multihead->r2, 3) : "-");
      line.push_back(fmt(r.base.mae, 3));
      line.push_back(fmt(r.softmax.mae, 3));
      line.push_back(fmt(r.satrf.mae, 3));
      if (heads) line.push_back(r.multihead ? fmt(r.multihead->mae, 3) : "-");
    }
    table.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& line : table) width[c] = std::max(width[c], line[c].size());
  }
  auto emit = [&](const std::vector<std::string>& cells) {
    out << '|';
    for (std::size_t c = 0; c < cells.size(); ++c) {
      out << ' ' << cells[c] << std::string(width[c] - cells[c].size(), ' ') << " |";
    }
    out << '\n';
  };
  emit(header);
  out << '|';
  for (auto w : width) out << std::string(w + 2, '-') << '|';
  out << '\n';
  for (const auto& line : table) emit(line);
}

void write_grid_tsv(const GridResult& result, std::ostream& out) {
  out << "epsilon\tgamma\tmean_r2\tfolds\tselected\n" << std::setprecision(10);
  for (const auto& c : result.cells) {
    const bool sel = c.epsilon == result.best.epsilon && c.gamma == result.best.gamma;
    out << c.epsilon << '\t' << c.gamma << '\t' << c.mean_r2 << '\t' << c.folds << '\t' << (sel ? 1 : 0)
        << '\n';
  }
}

std::vector<SweepPoint> sweep(const Dataset& ds, const BenchmarkOptions& o, SweepAxis axis,
                              const std::vector<double>& scales) {
  o.base.validate();
  const auto [train_set, test_set] = prepare(ds, o);
  const Forest forest = fit_forest(train_set, forest_params(o), o.jobs);
  const auto& contamination = axis == SweepAxis::Tau ? o.grid.epsilons : o.grid.gammas;
  std::vector<SweepPoint> points;
  for (double scale : scales) {
    for (double c : contamination) {
      AttentionConfig cfg = o.base;
      if (axis == SweepAxis::Tau) {
        cfg.tau = scale;
        cfg.epsilon = c;
      } else {
        cfg.kappa = scale;
        cfg.gamma = c;
      }
      const auto trained = train(forest, train_set, cfg, o.solver, o.jobs);
      const auto pred = predict(trained.model, test_set, o.jobs);
      points.push_back({cfg.tau, cfg.epsilon, cfg.kappa, cfg.gamma, r2(test_set.targets(), pred)});
    }
  }
  return points;
}

void write_sweep_tsv(const std::string& dataset, std::span<const SweepPoint> points, std::ostream& out) {
  out << "dataset\ttau\teps\tkappa\tgamma\tr2\n" << std::setprecision(10);
  for (const auto& p : points) {
    out << dataset << '\t' << p.tau << '\t' << p.epsilon << '\t' << p.kappa << '\t' << p.gamma << '\t' << p.r2
        << '\n';
  }
}

}  // namespace satrf
