#include "taylorcl/trainer.hpp"

#include <cmath>
#include <numeric>

namespace taylorcl {

std::string_view to_string(TrainMode mode) { return mode == TrainMode::gd ? "gd" : "sgd"; }

std::string_view to_string(Method method) {
  switch (method) {
    case Method::vanilla: return "vanilla";
    case Method::ewc: return "ewc";
    case Method::si: return "si";
    case Method::kron: return "kron";
    case Method::full_hessian: return "full_hessian";
  }
  return "unknown";
}

std::optional<TrainMode> parse_train_mode(std::string_view name) {
  if (name == "gd") return TrainMode::gd;
  if (name == "sgd") return TrainMode::sgd;
  return std::nullopt;
}

std::optional<Method> parse_method(std::string_view name) {
  for (const auto m : {Method::vanilla, Method::ewc, Method::si, Method::kron, Method::full_hessian})
    if (to_string(m) == name) return m;
  if (name == "full-hessian") return Method::full_hessian;
  return std::nullopt;
}

std::optional<CurvatureKind> curvature_for(Method method) {
  switch (method) {
    case Method::vanilla: return std::nullopt;
    case Method::ewc: return CurvatureKind::diagonal_fisher;
    case Method::si: return CurvatureKind::si_diagonal;
    case Method::kron: return CurvatureKind::kronecker;
    case Method::full_hessian: return CurvatureKind::full;
  }
  return std::nullopt;
}

void TrainConfig::validate() const {
  require(std::isfinite(learning_rate) && learning_rate >= 0.0, "learning rate must be finite and >= 0");
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_size >= 1, "batch size must be >= 1");
  require(std::isfinite(lambda) && lambda > 0.0, "lambda must be positive");
  require(std::isfinite(xi) && xi > 0.0, "xi must be positive");
  require(trace_every >= 1, "trace_every must be >= 1");
  require(std::isfinite(lr_decay) && lr_decay >= 0.0, "lr_decay must be >= 0");
}

namespace {

TraceEntry make_entry(Index step, const ObjectiveParts& parts, const ProxyStack& stack, const Vector& w,
                      bool keep_iterate) {
  TraceEntry e;
  e.step = step;
  e.objective = parts.value;
  e.grad_norm = parts.grad.norm();
  e.task_loss = parts.task_loss;
  e.anchor_distances.reserve(stack.size());
  for (const auto& p : stack) e.anchor_distances.push_back((w - p.anchor).norm());
  if (keep_iterate) e.iterate = w;
  return e;
}

class Stepper {
 public:
  Stepper(const ProxyStack& stack, const TrainConfig& cfg, SIAccumulator* si, Vector w)
      : stack_(stack), cfg_(cfg), si_(si), w_(std::move(w)) {}

  void step(const Objective& loss) {
    ObjectiveParts parts;
    try {
      parts = combined_objective(stack_, loss, w_, cfg_.lambda, cfg_.normalization);
      require_finite(parts.grad, "objective gradient");
    } catch (const NumericError& e) {
      throw TrainingError(std::string("non-finite objective at step ") + std::to_string(steps_) + ": " + e.what(),
                          std::move(trace_));
    }
    if (steps_ % cfg_.trace_every == 0) trace_.push_back(make_entry(steps_, parts, stack_, w_, cfg_.keep_iterates));
    const double eta = cfg_.learning_rate / (1.0 + cfg_.lr_decay * static_cast<double>(steps_));
    const Vector delta = -eta * parts.grad;
    if (si_ != nullptr) si_step(*si_, parts.task_grad, delta);
    w_ += delta;
    ++steps_;
  }

  TaskResult finish(const Objective& full) {
    ObjectiveParts parts;
    try {
      parts = combined_objective(stack_, full, w_, cfg_.lambda, cfg_.normalization);
      require_finite(parts.grad, "objective gradient");
    } catch (const NumericError& e) {
      throw TrainingError(std::string("non-finite objective at the end of the task: ") + e.what(), std::move(trace_));
    }
    trace_.push_back(make_entry(steps_, parts, stack_, w_, cfg_.keep_iterates));
    return {std::move(w_), std::move(trace_)};
  }

 private:
  const ProxyStack& stack_;
  const TrainConfig& cfg_;
  SIAccumulator* si_;
  Vector w_;
  Index steps_ = 0;
  Trace trace_;
};

}  // namespace

TaskResult train_task(const Objective& current, const Vector& w0, const ProxyStack& stack, const TrainConfig& cfg,
                      Index task_index, SIAccumulator* si) {
  cfg.validate();
  require(w0.size() == current.dim(), "train_task: initial parameters do not match the loss");
  for (const auto& p : stack) require(p.anchor.size() == w0.size(), "train_task: proxy dimension mismatch");

  Stepper stepper(stack, cfg, si, w0);
  if (cfg.mode == TrainMode::gd) {
    for (Index t = 0; t < cfg.epochs; ++t) stepper.step(current);
    return stepper.finish(current);
  }

  const Index n = current.num_examples();
  require(n >= 1, "SGD needs a loss defined over examples");
  for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto order = Rng::keyed(cfg.seed, {0x56d, static_cast<std::uint64_t>(task_index),
                                       static_cast<std::uint64_t>(epoch)})
                     .permutation(n);
    const std::span<const Index> all(order);
    for (Index start = 0; start < n; start += cfg.batch_size) {
      const Index len = std::min(cfg.batch_size, n - start);
      const auto batch = current.minibatch(all.subspan(static_cast<std::size_t>(start), static_cast<std::size_t>(len)));
      stepper.step(*batch);
    }
  }
  return stepper.finish(current);
}

double RunRecord::final_average_accuracy() const {
  require(!accuracy.empty() && !accuracy.back().empty(), "run has no accuracy row");
  const auto& row = accuracy.back();
  return std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
}

double RunRecord::final_average_loss() const {
  require(!test_loss.empty() && !test_loss.back().empty(), "run has no test-loss row");
  const auto& row = test_loss.back();
  return std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
}

std::vector<double> evaluate(const std::vector<SequenceTask>& seen, const Vector& w) {
  std::vector<double> row;
  for (const auto& task : seen) {
    const auto* mlp = dynamic_cast<const MlpObjective*>(task.test.get());
    if (mlp == nullptr) return {};
    row.push_back(accuracy(mlp->arch(), w, mlp->batch()));
  }
  return row;
}

RunRecord run_sequence(const std::vector<SequenceTask>& tasks, Method method, const TrainConfig& cfg,
                       const Vector& w_init) {
  require(!tasks.empty(), "run_sequence: need at least one task");
  cfg.validate();
  RunRecord record;
  record.method = method;
  record.config = cfg;

  const auto kind = curvature_for(method);
  Vector w = w_init;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const auto& task = tasks[k];
    require(task.train && task.test, "run_sequence: task is missing a split");

    std::optional<SIAccumulator> si;
    if (method == Method::si) si = si_start(w, cfg.xi);
    auto result = train_task(*task.train, w, record.proxies, cfg, static_cast<Index>(k), si ? &*si : nullptr);
    w = std::move(result.w_hat);
    record.traces.push_back(std::move(result.trace));
    record.anchors.push_back(w);

    // The last task's proxy is never used for training but is kept so the
    // stack describes every finished task.
    if (kind) {
      if (*kind == CurvatureKind::si_diagonal) {
        record.proxies.push_back(build_proxy(*task.train, w, si_finalize(*si, w), cfg.flags));
      } else {
        ProxyBuildOptions options;
        options.kind = *kind;
        options.flags = cfg.flags;
        options.fisher_mode = cfg.fisher_mode;
        options.psd_project = cfg.psd_project;
        options.seed = Rng::keyed(cfg.seed, {0xc0a, static_cast<std::uint64_t>(k)}).next_u64();
        record.proxies.push_back(build_proxy(*task.train, w, options));
      }
    }

    const std::vector<SequenceTask> seen(tasks.begin(), tasks.begin() + static_cast<std::ptrdiff_t>(k + 1));
    record.accuracy.push_back(evaluate(seen, w));
    std::vector<double> losses;
    for (const auto& s : seen) losses.push_back(s.test->value(w));
    record.test_loss.push_back(std::move(losses));
  }
  return record;
}

}  // namespace taylorcl
