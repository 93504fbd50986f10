#pragma once

// Grid runner over (method, epochs, seed) cells and the report writer for
// theory suites. Everything here takes explicit paths; nothing is read from
// the environment.

#include "taylorcl/record.hpp"
#include "taylorcl/suites.hpp"
#include "taylorcl/tasks.hpp"
#include "taylorcl/trainer.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace taylorcl {

enum class Suite { permuted, rotated, quadratic, gaussian };
std::string_view to_string(Suite suite);
std::optional<Suite> parse_suite(std::string_view name);

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unset optionals take the defaults of the chosen suite (see resolve()).
struct ExperimentConfig {
  Suite suite = Suite::permuted;
  std::optional<std::vector<Method>> methods;
  std::optional<std::vector<Index>> epochs;       // SGD: epochs per task; GD: iterations per task
  std::optional<double> lambda;                   // overrides the per-method default
  std::optional<double> xi;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::vector<Index>> hidden;
  Activation activation = Activation::relu;
  double scale = 1.0;                             // multiplies the train and test sizes
  std::optional<Index> tasks;
  std::optional<Index> n_train;
  std::optional<Index> n_test;
  std::optional<double> learning_rate;
  Index batch_size = 10;
  std::optional<TrainMode> mode;
  FisherMode fisher_mode = FisherMode::sampled_label;
  Normalization normalization = Normalization::average;  // 1/(k+1) scaling of the regularized objective
  double rotation_step = 10.0;                    // degrees between consecutive tasks
  std::string data_dir = "data/mnist";
  std::string out_dir = "runs";
  bool write_records = true;
  Index trace_every = 100;
  // quadratic suite
  Index dim = 1;
  double condition_number = 1.0;
  double spread = 2.0;
  // gaussian suite
  Index classes = 2;
  Index input_dim = 2;
};

/// Copy with every optional filled in; throws ConfigError on invalid values.
ExperimentConfig resolve(const ExperimentConfig& cfg);

/// Regularization strength and SI damping for a method on a suite.
double default_lambda(Suite suite, Method method);
double default_xi(Suite suite, Method method);

/// Training settings of one cell of a resolved config.
TrainConfig cell_train_config(const ExperimentConfig& resolved, Method method, Index epochs, std::uint64_t seed);

Json to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const Json& j);

/// Task sequence, initial parameters and descriptors for one seed.
struct SeedTasks {
  std::vector<SequenceTask> tasks;
  Vector w_init;
  std::vector<std::string> descriptors;
};

/// `pool` is required for the image suites and ignored otherwise.
SeedTasks build_tasks(const ExperimentConfig& resolved, std::uint64_t seed, const ImagePool* pool);

struct ResultsRow {
  Index epochs = 0;
  Method method = Method::vanilla;
  std::string metric;                  // "accuracy" or "loss"
  std::vector<double> values;          // one per successful seed, in seed order
  double mean = 0.0;
  std::optional<double> stddev;        // sample (n - 1) deviation; unset below two values
};

struct CellFailure {
  Method method = Method::vanilla;
  Index epochs = 0;
  std::uint64_t seed = 0;
  std::string error;
};

struct ExperimentResult {
  ExperimentConfig config;             // resolved
  std::uint64_t hash = 0;
  std::vector<ResultsRow> rows;        // sorted by (epochs, method order in the config)
  std::vector<CellFailure> failures;
  std::vector<std::filesystem::path> files;

  const ResultsRow* row(Index epochs, Method method) const;
};

/// Mean and sample standard deviation.
ResultsRow aggregate(Index epochs, Method method, std::string metric, std::vector<double> values);

/// Runs every cell and writes, under out_dir: records/<method>_e<E>_s<seed>.tclrec,
/// results.json, results.csv and plot/<metric>_vs_epochs.csv. A failing cell
/// is logged in results.json and the rest continue. `log` receives one line
/// per finished cell when given.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// Verdict after re-checking a stored record: a "satisfied" record whose lhs
/// exceeds rhs + kExactSlack is downgraded to violated (exact constants) or
/// indeterminate (estimated constants). Stored failures are kept.
Verdict audit(const CheckRecord& r);

struct ReportSummary {
  struct Entry {
    std::string suite;
    SuiteSummary counts;
    std::vector<Index> violated;       // indices into the suite's records
  };
  std::vector<Entry> suites;
  SuiteSummary total;
};

/// Audited verdict counts without writing anything.
ReportSummary tally(const std::vector<SuiteResult>& suites);

/// Writes <dir>/<suite>.json per suite plus summary.json and summary.txt.
ReportSummary emit_report(const std::vector<SuiteResult>& suites, const std::filesystem::path& dir,
                          const Json& provenance);

/// Reads back the per-suite files listed in <dir>/summary.json.
std::vector<SuiteResult> load_report(const std::filesystem::path& dir);

std::string format_summary(const ReportSummary& summary);

}  // namespace taylorcl
