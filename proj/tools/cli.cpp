#include "cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <set>

namespace taylorcl::cli {

namespace {

struct RunArgs {
  std::string suite;
  std::vector<std::string> methods;
  std::vector<Index> epochs;
  double lambda = 0.0;
  double xi = 0.0;
  std::vector<std::uint64_t> seeds;
  std::string out;
  double scale = 1.0;
  std::vector<Index> hidden;
  std::string activation;
  Index tasks = 0;
  Index n_train = 0;
  Index n_test = 0;
  double learning_rate = 0.0;
  Index batch_size = 0;
  std::string mode;
  std::string fisher;
  std::string normalization;
  double rotation_step = 0.0;
  std::string data_dir;
  bool no_records = false;
  Index trace_every = 0;
  Index dim = 0;
  double condition_number = 0.0;
  double spread = 0.0;
  Index classes = 0;
  Index input_dim = 0;
  bool dry_run = false;
};

const std::vector<std::string> kTheorySuites = {"prop1", "appendix_b", "quadratic", "neural", "rademacher"};

struct TheoryArgs {
  std::vector<std::string> suites = kTheorySuites;
  std::string out = "reports";
  std::uint64_t seed = 1;
  Index neural_iterations = 100;
  Index rademacher_trials = 20;
};

bool given(const CLI::App* app, const std::string& name) { return app->count(name) > 0; }

// CLI11 only reads the root app's config file, so subcommand files are
// applied here. Command-line values win over file values.
void apply_config_file(CLI::App* sub) {
  auto* cfg = sub->get_config_ptr();
  if (cfg == nullptr || cfg->count() == 0) return;
  const auto items = CLI::ConfigTOML().from_file(cfg->as<std::string>());
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == sub->get_name()))
      throw CLI::ConfigError::Extras(item.fullname());
    auto* opt = sub->get_option_no_throw("--" + item.name);
    if (opt == nullptr || opt == cfg) throw CLI::ConfigError::Extras(item.fullname());
    if (opt->count() > 0) continue;
    if (opt->get_type_size() == 0) {
      opt->add_result(CLI::ConfigTOML().to_flag(item));
    } else {
      opt->add_result(item.inputs);
    }
    opt->run_callback();
  }
}

ExperimentConfig to_config(const CLI::App* run, const RunArgs& a) {
  ExperimentConfig c;
  if (given(run, "--suite")) {
    const auto s = parse_suite(a.suite);
    if (!s) throw ConfigError("unknown suite '" + a.suite + "'");
    c.suite = *s;
  }
  if (given(run, "--method")) {
    std::vector<Method> ms;
    for (const auto& name : a.methods) {
      const auto m = parse_method(name);
      if (!m) throw ConfigError("unknown method '" + name + "'");
      ms.push_back(*m);
    }
    c.methods = ms;
  }
  if (given(run, "--epochs")) c.epochs = a.epochs;
  if (given(run, "--lambda")) c.lambda = a.lambda;
  if (given(run, "--xi")) c.xi = a.xi;
  if (given(run, "--seed")) c.seeds = a.seeds;
  if (given(run, "--out")) c.out_dir = a.out;
  if (given(run, "--scale")) c.scale = a.scale;
  if (given(run, "--hidden")) c.hidden = a.hidden;
  if (given(run, "--activation")) {
    if (a.activation == "relu") c.activation = Activation::relu;
    else if (a.activation == "tanh") c.activation = Activation::tanh;
    else throw ConfigError("unknown activation '" + a.activation + "'");
  }
  if (given(run, "--tasks")) c.tasks = a.tasks;
  if (given(run, "--n-train")) c.n_train = a.n_train;
  if (given(run, "--n-test")) c.n_test = a.n_test;
  if (given(run, "--lr")) c.learning_rate = a.learning_rate;
  if (given(run, "--batch-size")) c.batch_size = a.batch_size;
  if (given(run, "--mode")) {
    const auto m = parse_train_mode(a.mode);
    if (!m) throw ConfigError("unknown mode '" + a.mode + "'");
    c.mode = *m;
  }
  if (given(run, "--fisher")) {
    if (a.fisher == "sampled") c.fisher_mode = FisherMode::sampled_label;
    else if (a.fisher == "empirical") c.fisher_mode = FisherMode::empirical_label;
    else throw ConfigError("unknown fisher mode '" + a.fisher + "'");
  }
  if (given(run, "--normalization")) {
    if (a.normalization == "average") c.normalization = Normalization::average;
    else if (a.normalization == "sum") c.normalization = Normalization::sum;
    else throw ConfigError("unknown normalization '" + a.normalization + "'");
  }
  if (given(run, "--rotation-step")) c.rotation_step = a.rotation_step;
  if (given(run, "--data-dir")) c.data_dir = a.data_dir;
  if (a.no_records) c.write_records = false;
  if (given(run, "--trace-every")) c.trace_every = a.trace_every;
  if (given(run, "--dim")) c.dim = a.dim;
  if (given(run, "--condition-number")) c.condition_number = a.condition_number;
  if (given(run, "--spread")) c.spread = a.spread;
  if (given(run, "--classes")) c.classes = a.classes;
  if (given(run, "--input-dim")) c.input_dim = a.input_dim;
  return c;
}

void print_table(const ExperimentResult& result, std::ostream& out) {
  out << "epochs  method        " << (result.rows.empty() ? "metric" : result.rows.front().metric)
      << "  std  n\n";
  for (const auto& row : result.rows) {
    out << row.epochs << "  " << to_string(row.method) << "  " << row.mean << "  ";
    if (row.stddev) out << *row.stddev;
    else out << "-";
    out << "  " << row.values.size() << '\n';
  }
}

int do_run(const CLI::App* run, const RunArgs& a, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = to_config(run, a);
    if (a.dry_run) {
      const auto resolved = resolve(cfg);
      out << to_json(resolved).dump(2) << '\n';
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    const auto result = run_experiment(cfg, &out);
    out << "config " << hex64(result.hash) << ", " << version_string() << '\n';
    print_table(result, out);
    if (!result.failures.empty()) {
      err << result.failures.size() << " cell(s) failed; see results.json\n";
      return kExitFailure;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int do_theory(const TheoryArgs& a, std::ostream& out, std::ostream& err) {
  const std::set<std::string> known(kTheorySuites.begin(), kTheorySuites.end());
  for (const auto& s : a.suites) {
    if (!known.count(s)) {
      err << "config error: unknown theory suite '" << s << "'\n";
      return kExitConfig;
    }
  }
  if (a.neural_iterations < 1 || a.rademacher_trials < 1) {
    err << "config error: iteration and trial counts must be positive\n";
    return kExitConfig;
  }
  const Json config{{"suites", a.suites},
                    {"seed", a.seed},
                    {"neural_iterations", a.neural_iterations},
                    {"rademacher_trials", a.rademacher_trials}};
  const Json provenance{{"config", config}, {"config_hash", hex64(config_hash(config))}};
  try {
    std::vector<SuiteResult> results;
    for (const auto& name : a.suites) {
      out << "running " << name << '\n' << std::flush;
      if (name == "prop1") {
        results.push_back(prop1_suite());
      } else if (name == "appendix_b") {
        results.push_back(appendix_b_suite());
      } else if (name == "quadratic") {
        QuadraticSuiteOptions o;
        o.seed = a.seed;
        results.push_back(quadratic_suite(o));
      } else if (name == "neural") {
        auto o = default_neural_suite();
        o.problem.seed = a.seed;
        o.problem.data.seed = a.seed;
        o.iterations = a.neural_iterations;
        results.push_back(neural_suite(o));
      } else {
        RademacherSuiteOptions o;
        o.seed = a.seed;
        o.trials = a.rademacher_trials;
        results.push_back(rademacher_suite(o));
      }
    }
    const auto summary = emit_report(results, a.out, provenance);
    out << format_summary(summary);
    return summary.total.violated == 0 ? kExitOk : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int do_report(const std::string& dir, std::ostream& out, std::ostream& err) {
  try {
    const auto summary = tally(load_report(dir));
    out << format_summary(summary);
    return summary.total.violated == 0 ? kExitOk : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continual learning with quadratic loss proxies, plus numerical checks of their error bounds."};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Train every (method, epochs, seed) cell and write records and tables");
  run->set_config("--config", "", "TOML or INI file with the same keys as the long options");
  run->add_option("--suite", ra.suite, "permuted | rotated | quadratic | gaussian (default permuted)");
  run->add_option("--method", ra.methods, "vanilla, ewc, si, kron, full-hessian")->delimiter(',');
  run->add_option("--epochs", ra.epochs, "Epochs per task (GD: iterations per task)")->delimiter(',');
  run->add_option("--lambda", ra.lambda, "Regularization strength for every method");
  run->add_option("--xi", ra.xi, "SI damping");
  run->add_option("--seed", ra.seeds, "Seeds; each varies data and initialization")->delimiter(',');
  run->add_option("--out", ra.out, "Output directory (default runs)");
  run->add_option("--scale", ra.scale, "Multiplier on the train and test sizes");
  run->add_option("--hidden", ra.hidden, "Hidden layer widths")->delimiter(',');
  run->add_option("--activation", ra.activation, "relu | tanh");
  run->add_option("--tasks", ra.tasks, "Number of tasks");
  run->add_option("--n-train", ra.n_train, "Training examples per task");
  run->add_option("--n-test", ra.n_test, "Test examples per task");
  run->add_option("--lr", ra.learning_rate, "Learning rate");
  run->add_option("--batch-size", ra.batch_size, "Minibatch size");
  run->add_option("--mode", ra.mode, "sgd | gd");
  run->add_option("--fisher", ra.fisher, "sampled | empirical");
  run->add_option("--normalization", ra.normalization,
                  "average: divide task loss plus penalties by k+1 (default) | sum: leave them unscaled");
  run->add_option("--rotation-step", ra.rotation_step, "Degrees between consecutive rotated tasks");
  run->add_option("--data-dir", ra.data_dir, "Directory with images-idx3-ubyte and labels-idx1-ubyte");
  run->add_flag("--no-records", ra.no_records, "Skip the per-run binary records");
  run->add_option("--trace-every", ra.trace_every, "Trace entry every n updates");
  run->add_option("--dim", ra.dim, "Quadratic suite: parameter dimension");
  run->add_option("--condition-number", ra.condition_number, "Quadratic suite: Hessian condition number");
  run->add_option("--spread", ra.spread, "Quadratic suite: distance between minimizers");
  run->add_option("--classes", ra.classes, "Gaussian suite: classes");
  run->add_option("--input-dim", ra.input_dim, "Gaussian suite: input dimension");
  run->add_flag("--dry-run", ra.dry_run, "Print the resolved configuration and exit");

  TheoryArgs ta;
  auto* theory = app.add_subcommand("theory", "Run the bound-checking suites and write a report");
  theory->set_config("--config", "", "TOML or INI file with the same keys as the long options");
  theory->add_option("--suite", ta.suites, "prop1, appendix_b, quadratic, neural, rademacher (default all)")
      ->delimiter(',');
  theory->add_option("--out", ta.out, "Report directory");
  theory->add_option("--seed", ta.seed, "Seed for the randomized suites");
  theory->add_option("--neural-iterations", ta.neural_iterations, "GD iterations on the last neural task");
  theory->add_option("--rademacher-trials", ta.rademacher_trials, "Independent samples in the Rademacher suite");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Re-audit a report directory and print its summary");
  report->add_option("dir", report_dir, "Directory written by 'theory'")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (*run) apply_config_file(run);
    if (*theory) apply_config_file(theory);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  if (*run) return do_run(run, ra, out, err);
  if (*theory) return do_theory(ta, out, err);
  return do_report(report_dir, out, err);
}

}  // namespace taylorcl::cli
