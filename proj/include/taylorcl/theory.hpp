#pragma once

// Numerical checks of the approximation-error bounds and convergence rates
// for the proxy-regularized objective of the last task,
//
//   F(w)  = 1/K sum_k L_k(w)
//   Ft(w) = 1/K (sum_{k<K} proxy_k(w) + L_K(w)),
//
// with both proxy flags on and lambda = 1. Every inequality instance becomes a
// CheckRecord with a satisfied / violated / indeterminate verdict.

#include "taylorcl/curvature.hpp"
#include "taylorcl/linalg.hpp"
#include "taylorcl/mlp.hpp"
#include "taylorcl/objective.hpp"
#include "taylorcl/proxy.hpp"
#include "taylorcl/tasks.hpp"
#include "taylorcl/trainer.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace taylorcl {

enum class Verdict { satisfied, violated, indeterminate };
std::string_view to_string(Verdict verdict);

/// Absolute slack allowed on inequalities whose constants are exact.
inline constexpr double kExactSlack = 1e-9;

struct TheoryProblem {
  std::string family;
  std::vector<std::shared_ptr<const Objective>> population;  // L_1..L_K
  ProxyStack proxies;                                        // K-1 proxies, both flags on
  std::vector<double> delta;                                 // per proxy
  double rho = 0.0;
  bool constants_exact = false;  // false: rho is an empirical lower bound
  // Standard error of each population loss as a mean over a finite sample
  // (0 for closed-form losses). Reported, never added to a bound.
  std::vector<double> population_stderr;

  Index dim() const;
  Index num_tasks() const { return static_cast<Index>(population.size()); }
  void validate() const;
};

double true_objective(const TheoryProblem& p, const Vector& w);
Vector true_gradient(const TheoryProblem& p, const Vector& w);
double proxy_objective(const TheoryProblem& p, const Vector& w);
Vector proxy_objective_gradient(const TheoryProblem& p, const Vector& w);

struct CheckRecord {
  std::string check;   // lemma1, lemma2, thm1_condition, thm1_decrease, thm2, thm3, rademacher
  std::string family;
  Index instance = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  Verdict verdict = Verdict::satisfied;
  std::string constants;  // "exact" or "empirical rho"
  std::map<std::string, double> extras;
};

struct GapReport {
  Vector w;
  double gap = 0.0;  // ||Delta(w)|| or |F - Ft|
  std::vector<double> distances;
  double bound = 0.0;
  bool satisfied = true;
  Verdict verdict = Verdict::satisfied;
  double required_rho = 0.0;  // smallest rho that would make the bound hold
};

/// ||grad Ft(w) - grad F(w)|| against 1/K sum_k [delta_k d_k + rho d_k^2].
GapReport delta_gap(const TheoryProblem& p, const Vector& w);
/// |F(w) - Ft(w)| against 1/(2K) sum_k [delta_k d_k^2 + rho d_k^3].
GapReport value_gap(const TheoryProblem& p, const Vector& w);

struct Thm1Condition {
  bool holds = false;
  double lhs = 0.0;  // ||grad Ft(w)||
  double rhs = 0.0;  // c/K sum_k [delta_k d_k + rho d_k^2]
  double max_feasible_c = 0.0;  // +inf when the sum vanishes
};

Thm1Condition thm1_condition(const TheoryProblem& p, const Vector& w, double c);

/// Descent guarantee along a gradient-descent trace on Ft with step `eta`.
/// For every step where the condition holds with its largest feasible c > 1
/// and eta <= 2(1 - 1/c)/mu, checks
///   F(w_t) <= F(w_{t-1}) - eta (1 - 1/c - mu eta / 2) ||grad Ft(w_{t-1})||^2 + 1e-9.
/// With an empirical rho a failure is counted as a violation only when the
/// exact gradient gap satisfies ||grad Ft|| >= c ||Delta|| and the descent
/// lemma holds with `mu` on that step; otherwise it is indeterminate.
struct Thm1DecreaseReport {
  std::vector<CheckRecord> records;  // one per step where the hypotheses hold
  Index steps = 0;
  Index applicable = 0;
};

Thm1DecreaseReport thm1_decrease_check(const TheoryProblem& p, const std::vector<Vector>& iterates, double eta,
                                       double mu);

struct Prop1Point {
  double w = 0.0;
  double proxy_slope = 0.0;  // Ft'(w)
  double true_slope = 0.0;   // F'(w)
  bool condition_violated = false;
  bool signs_opposite = false;
};

/// Scan of the two-task one-dimensional construction with anchor 0.
std::vector<Prop1Point> prop1_counterexample(double delta, double rho, const std::vector<double>& grid);
/// `points` uniform points on [0, 1], endpoints included.
std::vector<double> unit_grid(Index points = 1001);

struct BoundTrace {
  std::vector<double> lhs;  // entry T-1 holds the left side after T iterations
  std::vector<double> rhs;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double mu = 0.0;
  double f0 = 0.0;
  double f_star = 0.0;
  double ft0 = 0.0;
  double ft_star = 0.0;
  double d_tilde = 0.0;  // convex case only
  Index t_star = 0;      // minimizer of the right side over the evaluated T
  std::vector<CheckRecord> records;
};

/// Non-convex rate along GD iterates w_0..w_T run with eta = 1/mu.
/// `f_star` and `ft_star` are the minima of F and Ft; unless `optima_exact`
/// they are estimates and a failed instance is only indeterminate. t_star is
/// the T minimizing the right side over all positive integers, 0 when the
/// right side keeps decreasing.
BoundTrace nonconvex_bound_trace(const TheoryProblem& p, const std::vector<Vector>& iterates, double mu,
                                 double f_star, double ft_star, bool optima_exact);

/// Right side of the non-convex rate at T.
double nonconvex_rhs(const BoundTrace& b, double t);

/// Convex rate on quadratic tasks with exact Hessians: runs GD with
/// eta = 1/mu, mu = max_k ||A_k||, from `w0` and checks
/// F(w_T) - F* <= 2 mu D~^2 / T for T = 1..iterations.
BoundTrace convex_rate_check(const std::vector<QuadraticTask>& tasks, const std::vector<Vector>& anchors,
                             const Vector& w0, Index iterations);

/// Best value of `f` found by `restarts` gradient-descent runs of
/// `iterations` steps from `start` (first run) and seeded perturbations of it.
/// An upper bound on the minimum.
double estimate_minimum(const std::function<LossGrad(const Vector&)>& f, const Vector& start, double eta,
                        Index iterations, Index restarts, double perturbation, std::uint64_t seed);

// Problem builders.

/// K = 2, d = 1, anchor 0, L_2 = 0 and L_1 = 2(w-1)^2 + rho/3 w^3 with a
/// proxy whose curvature is 4 - delta, so F = (w-1)^2 + rho/6 w^3 and
/// Ft = (w-1)^2 - delta/4 w^2. `rho` is the third derivative of F.
TheoryProblem appendix_b_problem(double delta, double rho);

/// Quadratic tasks with exact-Hessian proxies at `anchors` (K-1 of them).
TheoryProblem quadratic_problem(const std::vector<QuadraticTask>& tasks, const std::vector<Vector>& anchors);

struct NeuralTheoryOptions {
  GaussianTaskOptions data;  // population split must be >= 5x the train split
  std::vector<Index> hidden = {16};
  CurvatureKind curvature = CurvatureKind::kronecker;
  FisherMode fisher_mode = FisherMode::sampled_label;
  Index steps_per_task = 200;  // GD iterations on each earlier task
  double learning_rate = 0.5;  // for the earlier tasks only
  std::uint64_t seed = 0;
};

struct NeuralTheorySetup {
  TheoryProblem problem;
  MlpArch arch;
  Vector w0;  // anchor of task K-1, start of the last task
};

/// Tanh network on rotating Gaussian tasks. Earlier tasks are trained in
/// sequence with plain GD on their train splits, each starting from the
/// previous anchor; proxies are built on the population stand-ins so F, Ft
/// and delta are exact with respect to them.
NeuralTheorySetup neural_problem(const NeuralTheoryOptions& options);

/// Largest operator norm of the task Hessians and stored curvatures over
/// `points`, exact via dense eigendecomposition.
double max_curvature_norm(const TheoryProblem& p, const std::vector<Vector>& points);

/// Refreshes p.rho with probes on the segments between every anchor and
/// every point in `points` (same-task Hessians, exact dense norms).
double refine_rho(TheoryProblem& p, const std::vector<Vector>& points, Index segments = 4);

/// Full-batch GD on Ft from w0; returns w_0..w_T.
std::vector<Vector> gd_iterates(const TheoryProblem& p, const Vector& w0, double eta, Index iterations);

struct SuiteSummary {
  Index satisfied = 0;
  Index violated = 0;
  Index indeterminate = 0;
};
SuiteSummary summarize(const std::vector<CheckRecord>& records);

CheckRecord to_record(const GapReport& g, std::string check, std::string family, Index instance, bool exact);

// Rademacher estimates on a finite hypothesis grid.

struct RademacherOptions {
  Index draws = 2000;          // sign patterns for the loss complexity
  Index vector_draws = 200;    // sign patterns for the gradient and Hessian complexities
  bool hessian = true;         // needs dim <= 50
  double delta_conf = 0.1;
  std::uint64_t seed = 0;
  Index exhaustive_max_n = 12;
};

struct RademacherEstimate {
  double r_loss = 0.0;
  double r_loss_stderr = 0.0;
  bool r_loss_exhaustive = false;
  double r_grad = 0.0;
  double r_grad_stderr = 0.0;
  double r_hess = 0.0;
  double r_hess_stderr = 0.0;
  double b = 0.0;
  double g = 0.0;
  double h = 0.0;
  Index n = 0;
  std::vector<CheckRecord> records;  // one uniform-convergence check per grid point
  bool all_hold = true;
};

/// Loss complexity E_sigma[1/n max_j sum_i sigma_i loss_ji] for a fixed
/// m x n per-example loss matrix. Exhaustive over all 2^n sign patterns when
/// n <= exhaustive_max_n and `exhaustive` is set.
struct ComplexityValue {
  double value = 0.0;
  double stderr_ = 0.0;
  bool exhaustive = false;
};
ComplexityValue loss_complexity(const Matrix& losses, Index draws, Rng& rng, bool exhaustive = false);

RademacherEstimate rademacher_micro(const MlpArch& arch, const Batch& train, const Batch& population,
                                    const std::vector<Vector>& grid, const RademacherOptions& options);

}  // namespace taylorcl
