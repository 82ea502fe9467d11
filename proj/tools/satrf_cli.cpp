// satrf command-line tool: gen, train, eval, bench, grid.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "satrf/satrf.hpp"

namespace fs = std::filesystem;
using namespace satrf;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Settings shared by every command; each one can come from the config file.
struct RunConfig {
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::size_t n = 100;  // rows drawn when a dataset is a generator name
  std::string target;
  std::string base = "rf";
  std::size_t trees = 100;
  std::size_t min_leaf = 10;
  std::size_t max_depth = 0;
  std::size_t max_features = 0;
  std::string variant = "y";
  std::string loss = "l2";
  double eps = 0.0;
  double gamma = 0.0;
  double tau = 1.0;
  double kappa = 1.0;
  std::vector<double> eps_grid = kDefaultContaminationGrid;
  std::vector<double> gamma_grid = kDefaultContaminationGrid;
  std::size_t folds = 3;
  std::size_t repeats = 100;
  bool zscore = false;
  double tolerance = 1e-8;
  std::size_t max_iter = 50'000;
};

std::string join(const std::vector<double>& v) {
  std::ostringstream s;
  s << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return s.str();
}

void dump(const RunConfig& c, const std::string& command, std::ostream& out) {
  out << std::setprecision(17) << "# satrf " << command << "\n"
      << "seed = " << c.seed << "\njobs = " << c.jobs << "\nn = " << c.n << "\ntarget = \"" << c.target
      << "\"\nbase = \"" << c.base << "\"\ntrees = " << c.trees << "\nmin-leaf = " << c.min_leaf
      << "\nmax-depth = " << c.max_depth << "\nmax-features = " << c.max_features << "\nvariant = \""
      << c.variant << "\"\nloss = \"" << c.loss << "\"\neps = " << c.eps << "\ngamma = " << c.gamma
      << "\ntau = " << c.tau << "\nkappa = " << c.kappa << "\neps-grid = [" << join(c.eps_grid)
      << "]\ngamma-grid = [" << join(c.gamma_grid) << "]\nfolds = " << c.folds << "\nrepeats = " << c.repeats
      << "\nzscore = " << (c.zscore ? "true" : "false") << "\ntolerance = " << c.tolerance
      << "\nmax-iter = " << c.max_iter << "\n";
}

void add_shared_options(CLI::App& app, RunConfig& c) {
  app.add_option("--seed", c.seed, "Random seed");
  app.add_option("--jobs,-j", c.jobs, "Worker threads (0: all cores)");
  app.add_option("--n", c.n, "Rows for generated datasets");
  app.add_option("--target", c.target, "CSV target column (default: last)");
  app.add_option("--base", c.base, "Base forest: rf or ert")->check(CLI::IsMember({"rf", "ert"}));
  app.add_option("--trees,-T", c.trees, "Number of trees");
  app.add_option("--min-leaf", c.min_leaf, "Minimum rows per leaf");
  app.add_option("--max-depth", c.max_depth, "Maximum tree depth (0: unlimited)");
  app.add_option("--max-features", c.max_features, "Features tried per split (0: max(1, m/3))");
  app.add_option("--variant", c.variant, "Self-attention variant: y, x or yx")
      ->check(CLI::IsMember({"y", "x", "yx"}));
  app.add_option("--loss", c.loss, "Training loss: l2 or l1")->check(CLI::IsMember({"l2", "l1"}));
  app.add_option("--eps", c.eps, "Attention contamination rate")->check(CLI::Range(0.0, 1.0));
  app.add_option("--gamma", c.gamma, "Self-attention contamination rate")->check(CLI::Range(0.0, 1.0));
  app.add_option("--tau", c.tau, "Attention temperature")->check(CLI::PositiveNumber);
  app.add_option("--kappa", c.kappa, "Self-attention temperature")->check(CLI::PositiveNumber);
  app.add_option("--eps-grid", c.eps_grid, "Epsilon grid")->delimiter(',');
  app.add_option("--gamma-grid", c.gamma_grid, "Gamma grid")->delimiter(',');
  app.add_option("--folds", c.folds, "Cross-validation folds");
  app.add_option("--repeats", c.repeats, "Cross-validation repeats");
  app.add_flag("--zscore", c.zscore, "Z-score features using training statistics");
  app.add_option("--tolerance", c.tolerance, "Solver tolerance");
  app.add_option("--max-iter", c.max_iter, "Solver iteration cap");
}

unsigned resolve_jobs(unsigned jobs) { return jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : jobs; }

ForestParams forest_params(const RunConfig& c) {
  ForestParams p;
  p.kind = parse_forest_kind(c.base);
  p.num_trees = c.trees;
  p.min_leaf = c.min_leaf;
  p.max_depth = c.max_depth;
  p.max_features = c.max_features;
  p.seed = c.seed;
  return p;
}

AttentionConfig attention_config(const RunConfig& c) {
  AttentionConfig a;
  a.epsilon = c.eps;
  a.gamma = c.gamma;
  a.tau = c.tau;
  a.kappa = c.kappa;
  a.variant = parse_variant(c.variant);
  a.loss = parse_loss(c.loss);
  a.validate();
  return a;
}

SolverOptions solver_options(const RunConfig& c) {
  SolverOptions s;
  s.tolerance = c.tolerance;
  s.max_iterations = c.max_iter;
  return s;
}

// A dataset argument is a CSV path, or a generator name when no such file exists.
Dataset load_dataset(const std::string& spec, const RunConfig& c) {
  if (!fs::exists(spec) && is_generator_name(spec)) {
    auto ds = generate(spec, c.n, c.seed);
    ds.set_name(spec);
    return ds;
  }
  auto ds = load_csv(spec, c.target);
  ds.set_name(fs::path(spec).stem().string());
  return ds;
}

// Writes to the file at path, or to stdout when path is empty or "-".
template <typename Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  fn(out);
  if (!out) throw DataError("failed writing " + path);
}

int cmd_gen(const RunConfig& c, const std::string& name, const std::string& out) {
  if (!is_generator_name(name)) {
    throw UsageError("unknown generator '" + name + "' (expected friedman1, friedman2, friedman3, regression, sparse)");
  }
  const auto ds = generate(name, c.n, c.seed);
  emit(out, [&](std::ostream& o) { write_csv(ds, o); });
  return kOk;
}

int cmd_train(const RunConfig& c, const std::string& data, const std::string& out, bool cv) {
  const unsigned jobs = resolve_jobs(c.jobs);
  Dataset ds = load_dataset(data, c);
  std::optional<Standardizer> scaling;
  if (c.zscore) {
    scaling = Standardizer::fit(ds);
    ds = scaling->apply(ds);
  }
  AttentionConfig cfg = attention_config(c);
  const ForestParams fp = forest_params(c);
  if (cv) {
    GridSpec grid{c.eps_grid, c.gamma_grid};
    const auto plan = make_folds(ds.size(), c.folds, c.repeats, derive_seed(c.seed, 2));
    const auto result = grid_search(ds, fp, cfg, grid, plan, solver_options(c), jobs);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    cfg = result.best;
  }
  const Forest forest = fit_forest(ds, fp, jobs);
  TrainResult r = train(forest, ds, cfg, solver_options(c), jobs);
  r.model.input_scaling = scaling;
  if (!r.report.converged) {
    std::cerr << "warning: solver stopped before reaching tolerance (kkt residual " << r.report.kkt_residual
              << ")\n";
  }
  if (!out.empty()) save_model(r.model, out);

  std::ostringstream s;
  s << std::setprecision(10) << "trained " << forest.size() << " " << to_string(fp.kind) << " trees on "
    << ds.size() << " rows: eps=" << cfg.epsilon << " gamma=" << cfg.gamma << " tau=" << cfg.tau
    << " kappa=" << cfg.kappa << " variant=" << to_string(cfg.variant) << "; " << to_string(cfg.loss)
    << " training loss " << r.training_loss << " (uniform weights " << r.uniform_loss << "), "
    << r.report.iterations << " iterations";
  if (cfg.epsilon == 0.0 && cfg.gamma == 0.0) s << "; trainable weights inactive (eps = gamma = 0)";
  std::cout << s.str() << '\n';
  return kOk;
}

int cmd_eval(const RunConfig& c, const std::string& model_path, const std::string& data, const std::string& out) {
  const auto model = load_model(model_path);
  const Dataset ds = load_dataset(data, c);
  const auto pred = predict(model, ds, resolve_jobs(c.jobs));
  if (!out.empty()) {
    emit(out, [&](std::ostream& o) {
      o << "y\tprediction\n" << std::setprecision(17);
      for (std::size_t i = 0; i < ds.size(); ++i) o << ds.target(i) << '\t' << pred[i] << '\n';
    });
  }
  std::cout << std::setprecision(10) << "rows " << ds.size() << "\tr2 " << r2(ds.targets(), pred) << "\tmae "
            << mae(ds.targets(), pred) << '\n';
  return kOk;
}

BenchmarkOptions bench_options(const RunConfig& c) {
  BenchmarkOptions o;
  o.forest = forest_params(c);
  o.base = attention_config(c);
  o.grid = {c.eps_grid, c.gamma_grid};
  o.folds = c.folds;
  o.repeats = c.repeats;
  o.seed = c.seed;
  o.solver = solver_options(c);
  o.jobs = resolve_jobs(c.jobs);
  o.standardize = c.zscore;
  return o;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_bench(const RunConfig& c, const std::string& datasets, std::size_t heads, const std::string& chain,
              const std::string& sweep_axes, const std::string& format, const std::string& out) {
  BenchmarkOptions o = bench_options(c);
  o.heads = heads;
  o.chain = chain == "anchored" ? HeadChain::Anchored : HeadChain::Chained;
  std::vector<Dataset> sets;
  for (const auto& d : split_list(datasets)) sets.push_back(load_dataset(d, c));
  if (sets.empty()) throw UsageError("--datasets needs at least one dataset");

  if (!sweep_axes.empty()) {
    std::vector<SweepAxis> axes;
    for (const auto& a : split_list(sweep_axes)) {
      if (a == "tau") {
        axes.push_back(SweepAxis::Tau);
      } else if (a == "kappa") {
        axes.push_back(SweepAxis::Kappa);
      } else {
        throw UsageError("--sweep takes tau, kappa or tau,kappa");
      }
    }
    emit(out, [&](std::ostream& os) {
      bool header = true;
      for (const auto& ds : sets) {
        for (auto axis : axes) {
          const auto pts = sweep(ds, o, axis);
          std::ostringstream block;
          write_sweep_tsv(ds.name(), pts, block);
          std::string text = block.str();
          if (!header) text = text.substr(text.find('\n') + 1);
          header = false;
          os << text;
        }
      }
    });
    return kOk;
  }

  const auto rows = benchmark(sets, o);
  int status = kOk;
  std::vector<double> diffs;
  for (const auto& r : rows) {
    if (!r.ok()) {
      std::cerr << "error: " << r.dataset << ": " << r.error << '\n';
      status = kData;
      continue;
    }
    for (const auto& w : r.warnings) std::cerr << "warning: " << r.dataset << ": " << w << '\n';
    diffs.push_back(r.satrf.r2 - r.base.r2);
  }
  emit(out, [&](std::ostream& os) {
    if (format == "tsv") {
      write_benchmark_tsv(rows, os);
      return;
    }
    write_benchmark_markdown(rows, os);
    if (diffs.size() >= 2) {
      const auto t = paired_t_test(diffs);
      os << std::setprecision(4) << "\npaired t-test, R2 SAT-RF minus " << c.base << " over " << diffs.size()
         << " datasets: mean " << t.mean << ", t = " << t.t << ", p = " << t.p << ", 95% CI [" << t.ci_low
         << ", " << t.ci_high << "]\n";
    }
  });
  return status;
}

int cmd_grid(const RunConfig& c, const std::string& data, const std::string& out) {
  Dataset ds = load_dataset(data, c);
  if (c.zscore) ds = Standardizer::fit(ds).apply(ds);
  const auto plan = make_folds(ds.size(), c.folds, c.repeats, derive_seed(c.seed, 2));
  const auto result = grid_search(ds, forest_params(c), attention_config(c), {c.eps_grid, c.gamma_grid}, plan,
                                  solver_options(c), resolve_jobs(c.jobs));
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  emit(out, [&](std::ostream& os) { write_grid_tsv(result, os); });
  std::cerr << "selected eps=" << result.best.epsilon << " gamma=" << result.best.gamma << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention and self-attention weighted random forests"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Config file of key = value lines; command-line flags take precedence");
  bool dump_config = false;
  app.add_flag("--dump-config", dump_config, "Print the resolved configuration and exit");
  RunConfig cfg;
  add_shared_options(app, cfg);

  std::string gen_name, gen_out;
  auto* gen = app.add_subcommand("gen", "Write a synthetic dataset as CSV");
  gen->add_option("name", gen_name, "friedman1, friedman2, friedman3, regression or sparse")->required();
  gen->add_option("--out,-o", gen_out, "Output CSV (default: stdout)");

  std::string train_data, train_out;
  bool train_cv = false;
  auto* train_cmd = app.add_subcommand("train", "Fit a forest and train attention weights");
  train_cmd->add_option("data", train_data, "CSV file or generator name")->required();
  train_cmd->add_option("--out,-o", train_out, "Model file");
  train_cmd->add_flag("--cv", train_cv, "Select eps and gamma by cross-validation first");

  std::string eval_model, eval_data, eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "Score a saved model on a dataset");
  eval_cmd->add_option("model", eval_model, "Model file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("data", eval_data, "CSV file or generator name")->required();
  eval_cmd->add_option("--predictions", eval_out, "Write y and predictions as TSV");

  std::string bench_sets = "friedman1,friedman2,friedman3", bench_chain = "chained", bench_sweep,
              bench_format = "md", bench_out;
  std::size_t bench_heads = 0;
  auto* bench = app.add_subcommand("bench", "Benchmark base forest, softmax and SAT-RF");
  bench->add_option("--datasets", bench_sets, "Comma-separated CSV files or generator names");
  bench->add_option("--heads", bench_heads, "Add a multi-head column with this many heads");
  bench->add_option("--chain", bench_chain, "Multi-head chaining")->check(CLI::IsMember({"chained", "anchored"}));
  bench->add_option("--sweep", bench_sweep, "Surface sweep over tau, kappa or tau,kappa (TSV)");
  bench->add_option("--format", bench_format, "Report format")->check(CLI::IsMember({"md", "tsv"}));
  bench->add_option("--out,-o", bench_out, "Report file (default: stdout)");

  std::string grid_data, grid_out;
  auto* grid = app.add_subcommand("grid", "Cross-validated (eps, gamma) grid scores");
  grid->add_option("data", grid_data, "CSV file or generator name")->required();
  grid->add_option("--out,-o", grid_out, "TSV file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (dump_config) {
      dump(cfg, app.get_subcommands().front()->get_name(), std::cout);
      return kOk;
    }
    if (*gen) return cmd_gen(cfg, gen_name, gen_out);
    if (*train_cmd) return cmd_train(cfg, train_data, train_out, train_cv);
    if (*eval_cmd) return cmd_eval(cfg, eval_model, eval_data, eval_out);
    if (*bench) return cmd_bench(cfg, bench_sets, bench_heads, bench_chain, bench_sweep, bench_format, bench_out);
    if (*grid) return cmd_grid(cfg, grid_data, grid_out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
