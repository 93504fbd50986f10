#pragma once

// Sequential training over a list of tasks. While task k+1 trains, the loss is
// combined with the proxies of tasks 1..k; after it finishes, the method's
// proxy for task k+1 is built at the end parameters and pushed on the stack.

#include "taylorcl/curvature.hpp"
#include "taylorcl/linalg.hpp"
#include "taylorcl/objective.hpp"
#include "taylorcl/proxy.hpp"

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace taylorcl {

enum class TrainMode { gd, sgd };
enum class Method { vanilla, ewc, si, kron, full_hessian };

std::string_view to_string(TrainMode mode);
std::string_view to_string(Method method);
std::optional<TrainMode> parse_train_mode(std::string_view name);
std::optional<Method> parse_method(std::string_view name);
std::optional<CurvatureKind> curvature_for(Method method);

struct TrainConfig {
  TrainMode mode = TrainMode::sgd;
  double learning_rate = 1e-3;
  Index epochs = 1;        // GD: number of full-batch iterations
  Index batch_size = 10;   // SGD only; the last minibatch of an epoch may be short
  double lambda = 1.0;
  double xi = 1.0;         // SI damping
  ProxyFlags flags;
  Normalization normalization = Normalization::average;
  FisherMode fisher_mode = FisherMode::sampled_label;
  bool psd_project = false;
  std::uint64_t seed = 0;
  Index trace_every = 1;   // record a trace entry every n parameter updates
  bool keep_iterates = false;
  double lr_decay = 0.0;   // eta_t = eta / (1 + lr_decay * t); off by default

  void validate() const;
};

struct TraceEntry {
  Index step = 0;                 // number of updates applied before this point
  double objective = 0.0;         // combined objective on the data used for the step
  double grad_norm = 0.0;
  double task_loss = 0.0;
  std::vector<double> anchor_distances;
  std::optional<Vector> iterate;  // present when keep_iterates is set
};

using Trace = std::vector<TraceEntry>;

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, Trace trace) : std::runtime_error(what), trace_(std::move(trace)) {}
  const Trace& trace() const { return trace_; }

 private:
  Trace trace_;
};

struct TaskResult {
  Vector w_hat;
  Trace trace;
};

/// Trains one task from `w0` on `current` combined with `stack`. In GD mode the
/// trace holds the state before each of the T updates plus the final state.
/// When `si` is given, every update feeds the current-task gradient and the
/// parameter change into the accumulator. `task_index` keys the SGD shuffles.
TaskResult train_task(const Objective& current, const Vector& w0, const ProxyStack& stack, const TrainConfig& cfg,
                      Index task_index = 0, SIAccumulator* si = nullptr);

struct SequenceTask {
  std::shared_ptr<const Objective> train;
  std::shared_ptr<const Objective> test;  // scored after every task
};

struct RunRecord {
  Method method = Method::vanilla;
  TrainConfig config;
  std::vector<Vector> anchors;
  // Rows are "after training task k", columns are tasks j <= k.
  std::vector<std::vector<double>> accuracy;  // empty rows when the test losses are not classifiers
  std::vector<std::vector<double>> test_loss;
  ProxyStack proxies;
  std::vector<Trace> traces;

  /// Mean of the last accuracy row.
  double final_average_accuracy() const;
  /// Mean of the last test-loss row.
  double final_average_loss() const;
};

/// Test accuracy on each task's test split; empty when a test loss is not a
/// classifier.
std::vector<double> evaluate(const std::vector<SequenceTask>& seen, const Vector& w);

RunRecord run_sequence(const std::vector<SequenceTask>& tasks, Method method, const TrainConfig& cfg,
                       const Vector& w_init);

}  // namespace taylorcl
