#include "taylorcl/theory.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace taylorcl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sym_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Matrix s = 0.5 * (m + m.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

std::vector<double> anchor_distances(const TheoryProblem& p, const Vector& w) {
  std::vector<double> d;
  for (const auto& proxy : p.proxies) d.push_back((w - proxy.anchor).norm());
  return d;
}

bool within(double lhs, double rhs) { return lhs <= rhs + kExactSlack; }

}  // namespace

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::satisfied: return "satisfied";
    case Verdict::violated: return "violated";
    case Verdict::indeterminate: return "indeterminate";
  }
  return "unknown";
}

Index TheoryProblem::dim() const {
  require(!population.empty(), "theory problem has no tasks");
  return population.front()->dim();
}

void TheoryProblem::validate() const {
  require(population.size() >= 1, "theory problem needs at least one task");
  require(proxies.size() + 1 == population.size(), "theory problem needs one proxy per earlier task");
  require(delta.size() == proxies.size(), "theory problem needs one delta per proxy");
  require(rho >= 0.0, "rho must be non-negative");
  const Index d = dim();
  for (const auto& l : population) require(l && l->dim() == d, "population losses must share a dimension");
  for (const auto& proxy : proxies) {
    require(proxy.anchor.size() == d, "proxy dimension mismatch");
    require(proxy.flags.include_const && proxy.flags.include_grad, "theory proxies keep both Taylor terms");
  }
}

double true_objective(const TheoryProblem& p, const Vector& w) {
  double total = 0.0;
  for (const auto& l : p.population) total += l->value(w);
  return total / static_cast<double>(p.num_tasks());
}

Vector true_gradient(const TheoryProblem& p, const Vector& w) {
  Vector total = Vector::Zero(w.size());
  for (const auto& l : p.population) total += l->value_grad(w).grad;
  return total / static_cast<double>(p.num_tasks());
}

double proxy_objective(const TheoryProblem& p, const Vector& w) {
  return combined_objective(p.proxies, *p.population.back(), w, 1.0, Normalization::average).value;
}

Vector proxy_objective_gradient(const TheoryProblem& p, const Vector& w) {
  return combined_objective(p.proxies, *p.population.back(), w, 1.0, Normalization::average).grad;
}

namespace {

// Bound of the form scale * sum_k [delta_k d_k^a + rho d_k^(a+1)] and the
// verdict for gap <= bound.
GapReport finish_gap(const TheoryProblem& p, const Vector& w, double gap, double scale, int power) {
  GapReport r;
  r.w = w;
  r.gap = gap;
  r.distances = anchor_distances(p, w);
  double delta_part = 0.0;
  double rho_weight = 0.0;
  for (std::size_t k = 0; k < r.distances.size(); ++k) {
    const double d = r.distances[k];
    delta_part += p.delta[k] * std::pow(d, power);
    rho_weight += std::pow(d, power + 1);
  }
  r.bound = scale * (delta_part + p.rho * rho_weight);
  r.satisfied = within(gap, r.bound);
  if (rho_weight > 0.0) {
    r.required_rho = std::max(0.0, (gap / scale - delta_part) / rho_weight);
  } else {
    r.required_rho = r.satisfied ? 0.0 : kInf;
  }
  if (r.satisfied) {
    r.verdict = Verdict::satisfied;
  } else if (p.constants_exact || !std::isfinite(r.required_rho)) {
    r.verdict = Verdict::violated;
  } else {
    // The true Hessian-Lipschitz constant is at least rho; any value of at
    // least required_rho would make the bound hold.
    r.verdict = Verdict::indeterminate;
  }
  return r;
}

}  // namespace

GapReport delta_gap(const TheoryProblem& p, const Vector& w) {
  p.validate();
  const double gap = (proxy_objective_gradient(p, w) - true_gradient(p, w)).norm();
  return finish_gap(p, w, gap, 1.0 / static_cast<double>(p.num_tasks()), 1);
}

GapReport value_gap(const TheoryProblem& p, const Vector& w) {
  p.validate();
  const double gap = std::abs(true_objective(p, w) - proxy_objective(p, w));
  return finish_gap(p, w, gap, 0.5 / static_cast<double>(p.num_tasks()), 2);
}

CheckRecord to_record(const GapReport& g, std::string check, std::string family, Index instance, bool exact) {
  CheckRecord r;
  r.check = std::move(check);
  r.family = std::move(family);
  r.instance = instance;
  r.lhs = g.gap;
  r.rhs = g.bound;
  r.verdict = g.verdict;
  r.constants = exact ? "exact" : "empirical rho";
  if (!exact) r.extras["required_rho"] = std::isfinite(g.required_rho) ? g.required_rho : -1.0;
  double nearest = kInf;
  for (const double d : g.distances) nearest = std::min(nearest, d);
  if (!g.distances.empty()) r.extras["min_anchor_distance"] = nearest;
  return r;
}

Thm1Condition thm1_condition(const TheoryProblem& p, const Vector& w, double c) {
  require(c > 1.0, "thm1_condition: c must exceed 1");
  p.validate();
  Thm1Condition out;
  out.lhs = proxy_objective_gradient(p, w).norm();
  const auto d = anchor_distances(p, w);
  double sum = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) sum += p.delta[k] * d[k] + p.rho * d[k] * d[k];
  const double per_c = sum / static_cast<double>(p.num_tasks());
  out.rhs = c * per_c;
  out.holds = out.lhs >= out.rhs;
  out.max_feasible_c = per_c > 0.0 ? out.lhs / per_c : kInf;
  return out;
}

Thm1DecreaseReport thm1_decrease_check(const TheoryProblem& p, const std::vector<Vector>& iterates, double eta,
                                       double mu) {
  require(eta > 0.0 && mu > 0.0, "thm1_decrease_check: eta and mu must be positive");
  Thm1DecreaseReport out;
  for (std::size_t t = 1; t < iterates.size(); ++t) {
    ++out.steps;
    const Vector& prev = iterates[t - 1];
    const auto cond = thm1_condition(p, prev, 2.0);
    const double c = cond.max_feasible_c;
    if (!(c > 1.0)) continue;
    const double inv_c = std::isfinite(c) ? 1.0 / c : 0.0;
    if (eta > 2.0 * (1.0 - inv_c) / mu) continue;
    ++out.applicable;

    const Vector g_tilde = proxy_objective_gradient(p, prev);
    const Vector step = -eta * g_tilde;
    const Vector next = prev + step;
    const double f_prev = true_objective(p, prev);
    const double f_next = true_objective(p, next);
    const double decrease = eta * (1.0 - inv_c - 0.5 * mu * eta) * g_tilde.squaredNorm();

    CheckRecord r;
    r.check = "thm1_decrease";
    r.family = p.family;
    r.instance = static_cast<Index>(t);
    r.lhs = f_next;
    r.rhs = f_prev - decrease;
    r.constants = p.constants_exact ? "exact" : "empirical rho";
    r.extras["c"] = std::isfinite(c) ? c : -1.0;
    r.extras["eta"] = eta;
    r.extras["guaranteed_decrease"] = decrease;
    if (within(r.lhs, r.rhs)) {
      r.verdict = Verdict::satisfied;
    } else if (p.constants_exact) {
      r.verdict = Verdict::violated;
    } else {
      // The implication is certified when its two ingredients hold exactly
      // on this step: the gradient-gap ratio and the descent lemma with mu.
      const Vector g_true = true_gradient(p, prev);
      const double gap = (g_tilde - g_true).norm();
      const bool ratio_ok = g_tilde.norm() >= c * gap;
      const bool descent_ok = f_next <= f_prev + g_true.dot(step) + 0.5 * mu * step.squaredNorm() + kExactSlack;
      r.extras["gap_ratio_holds"] = ratio_ok ? 1.0 : 0.0;
      r.extras["descent_lemma_holds"] = descent_ok ? 1.0 : 0.0;
      r.verdict = ratio_ok && descent_ok ? Verdict::violated : Verdict::indeterminate;
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

std::vector<double> unit_grid(Index points) {
  require(points >= 2, "unit_grid: need at least two points");
  std::vector<double> out(static_cast<std::size_t>(points));
  for (Index i = 0; i < points; ++i) out[static_cast<std::size_t>(i)] = static_cast<double>(i) / static_cast<double>(points - 1);
  return out;
}

std::vector<Prop1Point> prop1_counterexample(double delta, double rho, const std::vector<double>& grid) {
  require(delta > 0.0 && rho > 0.0, "prop1_counterexample: delta and rho must be positive");
  std::vector<Prop1Point> out;
  out.reserve(grid.size());
  for (const double w : grid) {
    require(w >= 0.0 && w <= 1.0, "prop1_counterexample: grid must lie in [0, 1]");
    Prop1Point pt;
    pt.w = w;
    pt.proxy_slope = 2.0 * (w - 1.0) - 0.5 * delta * w;
    pt.true_slope = 2.0 * (w - 1.0) + 0.5 * rho * w * w;
    pt.condition_violated = std::abs(pt.proxy_slope) < 0.5 * (delta * std::abs(w) + rho * w * w);
    pt.signs_opposite = pt.proxy_slope * pt.true_slope < 0.0;
    out.push_back(pt);
  }
  return out;
}

double nonconvex_rhs(const BoundTrace& b, double t) {
  return b.alpha / std::sqrt(t) + b.beta + b.gamma1 * std::sqrt(t) + b.gamma2 * t;
}

BoundTrace nonconvex_bound_trace(const TheoryProblem& p, const std::vector<Vector>& iterates, double mu,
                                 double f_star, double ft_star, bool optima_exact) {
  p.validate();
  require(iterates.size() >= 2, "nonconvex_bound_trace: need at least one iteration");
  require(mu > 0.0, "nonconvex_bound_trace: mu must be positive");
  const auto k_tasks = static_cast<double>(p.num_tasks());
  BoundTrace b;
  b.mu = mu;
  b.f0 = true_objective(p, iterates.front());
  b.ft0 = proxy_objective(p, iterates.front());
  b.f_star = f_star;
  b.ft_star = ft_star;
  const double f_drop = std::max(0.0, b.f0 - f_star);
  const double ft_drop = std::max(0.0, b.ft0 - ft_star);
  const double delta_max = p.delta.empty() ? 0.0 : *std::max_element(p.delta.begin(), p.delta.end());

  b.alpha = std::sqrt(2.0 * mu * f_drop);
  double c_sum = 0.0;
  for (std::size_t k = 0; k < p.proxies.size(); ++k) {
    const double d = (iterates.front() - p.proxies[k].anchor).norm();
    c_sum += p.delta[k] * d + 2.0 * p.rho * d * d;
  }
  b.beta = std::sqrt(3.0) / k_tasks * c_sum;
  b.gamma1 = delta_max * std::sqrt(3.0 / mu * ft_drop);
  b.gamma2 = 4.0 * p.rho / mu * ft_drop;

  const bool exact = p.constants_exact && optima_exact;
  double running = 0.0;
  for (std::size_t t = 1; t < iterates.size(); ++t) {
    running += true_gradient(p, iterates[t - 1]).norm();
    const auto big_t = static_cast<double>(t);
    const double lhs = running / big_t;
    const double rhs = nonconvex_rhs(b, big_t);
    b.lhs.push_back(lhs);
    b.rhs.push_back(rhs);
    CheckRecord r;
    r.check = "thm2";
    r.family = p.family;
    r.instance = static_cast<Index>(t);
    r.lhs = lhs;
    r.rhs = rhs;
    r.constants = exact ? "exact" : "empirical rho";
    if (within(lhs, rhs)) {
      r.verdict = Verdict::satisfied;
    } else {
      r.verdict = exact ? Verdict::violated : Verdict::indeterminate;
    }
    b.records.push_back(std::move(r));
  }

  // The right side is convex in T; search the integers for its minimum.
  if (b.gamma1 > 0.0 || b.gamma2 > 0.0) {
    double lo = 1.0;
    double hi = 1e15;
    for (int i = 0; i < 300 && hi - lo > 2.0; ++i) {
      const double m1 = lo + (hi - lo) / 3.0;
      const double m2 = hi - (hi - lo) / 3.0;
      if (nonconvex_rhs(b, m1) <= nonconvex_rhs(b, m2)) hi = m2; else lo = m1;
    }
    double best = kInf;
    for (double t = std::max(1.0, std::floor(lo) - 2.0); t <= std::ceil(hi) + 2.0; t += 1.0) {
      const double v = nonconvex_rhs(b, t);
      if (v < best) {
        best = v;
        b.t_star = static_cast<Index>(t);
      }
    }
  }
  return b;
}

TheoryProblem appendix_b_problem(double delta, double rho) {
  require(delta >= 0.0 && rho >= 0.0, "appendix_b_problem: constants must be non-negative");
  TheoryProblem p;
  p.family = "appendix_b";
  auto l1 = std::make_shared<ScalarObjective>(
      [rho](double w) { return 2.0 * (w - 1.0) * (w - 1.0) + rho / 3.0 * w * w * w; },
      [rho](double w) { return 4.0 * (w - 1.0) + rho * w * w; },
      [rho](double w) { return 4.0 + 2.0 * rho * w; });
  p.population = {l1, std::make_shared<ZeroObjective>(1)};
  const Vector anchor = Vector::Zero(1);
  p.proxies.push_back(build_proxy(*l1, anchor, FullHessian{Matrix::Constant(1, 1, 4.0 - delta)}, {true, true}));
  p.delta = {std::abs(4.0 - delta - l1->hvp(anchor, Vector::Ones(1))[0])};
  p.rho = rho;
  p.constants_exact = true;
  p.population_stderr = {0.0, 0.0};
  return p;
}

TheoryProblem quadratic_problem(const std::vector<QuadraticTask>& tasks, const std::vector<Vector>& anchors) {
  require(!tasks.empty(), "quadratic_problem: need at least one task");
  require(anchors.size() + 1 >= tasks.size(), "quadratic_problem: need an anchor for every earlier task");
  TheoryProblem p;
  p.family = "quadratic";
  for (const auto& t : tasks) p.population.push_back(std::make_shared<QuadraticObjective>(t.objective()));
  for (std::size_t k = 0; k + 1 < tasks.size(); ++k) {
    const auto& loss = *p.population[k];
    p.proxies.push_back(build_proxy(loss, anchors[k], build_full(loss, anchors[k]), {true, true}));
    p.delta.push_back(sym_norm(to_dense(p.proxies.back().curvature) - tasks[k].hessian));
  }
  p.rho = 0.0;
  p.constants_exact = true;
  p.population_stderr.assign(tasks.size(), 0.0);
  return p;
}

std::vector<Vector> gd_iterates(const TheoryProblem& p, const Vector& w0, double eta, Index iterations) {
  std::vector<Vector> out{w0};
  out.reserve(static_cast<std::size_t>(iterations + 1));
  for (Index t = 0; t < iterations; ++t) {
    Vector next = out.back() - eta * proxy_objective_gradient(p, out.back());
    require_finite(next, "gd_iterates");
    out.push_back(std::move(next));
  }
  return out;
}

BoundTrace convex_rate_check(const std::vector<QuadraticTask>& tasks, const std::vector<Vector>& anchors,
                             const Vector& w0, Index iterations) {
  require(iterations >= 1, "convex_rate_check: need at least one iteration");
  double mu = 0.0;
  for (const auto& t : tasks) {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(t.hessian, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    require(eig.eigenvalues().minCoeff() >= -1e-12 * scale, "convex_rate_check: task Hessian is not PSD");
    mu = std::max(mu, eig.eigenvalues().cwiseAbs().maxCoeff());
  }
  require(mu > 0.0, "convex_rate_check: all task Hessians vanish");
  TheoryProblem p = quadratic_problem(tasks, anchors);

  // Closed-form optima of the two quadratics.
  const Index d = p.dim();
  Matrix a_sum = Matrix::Zero(d, d);
  Vector b_sum = Vector::Zero(d);
  for (const auto& t : tasks) {
    a_sum += t.hessian;
    b_sum += t.hessian * t.minimizer;
  }
  const Eigen::CompleteOrthogonalDecomposition<Matrix> solve_f(a_sum);
  const Vector w_star = solve_f.solve(b_sum);

  Matrix h_tilde = tasks.back().hessian;
  for (const auto& proxy : p.proxies) h_tilde += to_dense(proxy.curvature);
  h_tilde /= static_cast<double>(tasks.size());
  const Vector g0 = proxy_objective_gradient(p, Vector::Zero(d));
  const Eigen::CompleteOrthogonalDecomposition<Matrix> solve_ft(h_tilde);
  const Vector w_tilde_star = solve_ft.solve(-g0);

  BoundTrace b;
  b.mu = mu;
  b.f_star = true_objective(p, w_star);
  b.ft_star = proxy_objective(p, w_tilde_star);
  b.f0 = true_objective(p, w0);
  b.ft0 = proxy_objective(p, w0);
  b.d_tilde = (w0 - w_tilde_star).norm();
  b.alpha = 2.0 * mu * b.d_tilde * b.d_tilde;
  b.beta = 0.0;

  Vector w = w0;
  const double eta = 1.0 / mu;
  for (Index t = 1; t <= iterations; ++t) {
    w -= eta * proxy_objective_gradient(p, w);
    const double lhs = true_objective(p, w) - b.f_star;
    const double rhs = b.alpha / static_cast<double>(t) + b.beta;
    b.lhs.push_back(lhs);
    b.rhs.push_back(rhs);
    CheckRecord r;
    r.check = "thm3";
    r.family = p.family;
    r.instance = t;
    r.lhs = lhs;
    r.rhs = rhs;
    r.constants = "exact";
    r.verdict = within(lhs, rhs) ? Verdict::satisfied : Verdict::violated;
    b.records.push_back(std::move(r));
  }
  return b;
}

double estimate_minimum(const std::function<LossGrad(const Vector&)>& f, const Vector& start, double eta,
                        Index iterations, Index restarts, double perturbation, std::uint64_t seed) {
  require(restarts >= 1 && iterations >= 0 && eta > 0.0, "estimate_minimum: invalid settings");
  double best = kInf;
  for (Index r = 0; r < restarts; ++r) {
    Vector w = start;
    if (r > 0) {
      Rng rng = Rng::keyed(seed, {0x3e57, static_cast<std::uint64_t>(r)});
      w += perturbation * rng.normal_vector(start.size());
    }
    for (Index t = 0; t <= iterations; ++t) {
      const auto lg = f(w);
      if (!std::isfinite(lg.loss)) break;
      best = std::min(best, lg.loss);
      if (t < iterations) w -= eta * lg.grad;
    }
  }
  return best;
}

double max_curvature_norm(const TheoryProblem& p, const std::vector<Vector>& points) {
  double out = 0.0;
  for (const auto& proxy : p.proxies) out = std::max(out, sym_norm(to_dense(proxy.curvature)));
  for (const auto& w : points)
    for (const auto& l : p.population) out = std::max(out, sym_norm(dense_hessian(*l, w)));
  return out;
}

double refine_rho(TheoryProblem& p, const std::vector<Vector>& points, Index segments) {
  require(segments >= 1, "refine_rho: need at least one segment");
  for (std::size_t k = 0; k < p.proxies.size(); ++k) {
    const auto& loss = *p.population[k];
    const Vector& anchor = p.proxies[k].anchor;
    const Matrix h_anchor = dense_hessian(loss, anchor);
    for (const auto& w : points) {
      const double length = (w - anchor).norm();
      if (length < 1e-10) continue;
      for (Index s = 1; s <= segments; ++s) {
        const double frac = static_cast<double>(s) / static_cast<double>(segments);
        const Vector mid = anchor + frac * (w - anchor);
        p.rho = std::max(p.rho, sym_norm(dense_hessian(loss, mid) - h_anchor) / (frac * length));
      }
    }
  }
  return p.rho;
}

NeuralTheorySetup neural_problem(const NeuralTheoryOptions& options) {
  const auto& data = options.data;
  require(data.n_population >= 5 * data.n_train, "neural_problem: population split must be >= 5x train");
  require(data.tasks >= 2, "neural_problem: need at least two tasks");

  NeuralTheorySetup out;
  out.arch.layer_sizes.push_back(data.dim);
  for (const Index h : options.hidden) out.arch.layer_sizes.push_back(h);
  out.arch.layer_sizes.push_back(data.classes);
  out.arch.hidden_activation = Activation::tanh;
  out.arch.validate();
  require(out.arch.num_params() <= 2000, "neural_problem: keep d <= 2000");

  const auto tasks = gen_gaussian_tasks(data);
  auto& p = out.problem;
  p.family = "tanh_mlp_gaussian";
  for (const auto& t : tasks) p.population.push_back(std::make_shared<MlpObjective>(out.arch, t.population));

  Rng init = Rng::keyed(options.seed, {0x1417});
  Vector w = init_params(out.arch, init);
  TrainConfig cfg;
  cfg.mode = TrainMode::gd;
  cfg.learning_rate = options.learning_rate;
  cfg.epochs = options.steps_per_task;
  cfg.lambda = 1.0;
  cfg.flags = {true, true};
  cfg.normalization = Normalization::average;
  cfg.trace_every = options.steps_per_task;
  for (std::size_t k = 0; k + 1 < tasks.size(); ++k) {
    const MlpObjective train(out.arch, tasks[k].train);
    // Plain GD: a proxy whose curvature is indefinite would make the
    // regularized objective unbounded below on the earlier tasks.
    w = train_task(train, w, ProxyStack{}, cfg, static_cast<Index>(k)).w_hat;
    ProxyBuildOptions build;
    build.kind = options.curvature;
    build.flags = {true, true};
    build.fisher_mode = options.fisher_mode;
    build.seed = Rng::keyed(options.seed, {0xc0a, static_cast<std::uint64_t>(k)}).next_u64();
    const auto& pop = *p.population[k];
    p.proxies.push_back(build_proxy(pop, w, build));
    p.delta.push_back(sym_norm(to_dense(p.proxies.back().curvature) - dense_hessian(pop, w)));
  }
  out.w0 = w;

  for (const auto& t : tasks) {
    const Vector losses = per_example_losses(out.arch, w, t.population);
    const double mean = losses.mean();
    const double var = (losses.array() - mean).square().sum() / static_cast<double>(losses.size() - 1);
    p.population_stderr.push_back(std::sqrt(var / static_cast<double>(losses.size())));
  }

  // Initial rho from segments between every anchor and the other anchors.
  std::vector<Vector> points;
  for (const auto& proxy : p.proxies) points.push_back(proxy.anchor);
  p.rho = 0.0;
  p.constants_exact = false;
  refine_rho(p, points);
  return out;
}

SuiteSummary summarize(const std::vector<CheckRecord>& records) {
  SuiteSummary s;
  for (const auto& r : records) {
    switch (r.verdict) {
      case Verdict::satisfied: ++s.satisfied; break;
      case Verdict::violated: ++s.violated; break;
      case Verdict::indeterminate: ++s.indeterminate; break;
    }
  }
  return s;
}

ComplexityValue loss_complexity(const Matrix& losses, Index draws, Rng& rng, bool exhaustive) {
  require(losses.rows() >= 1 && losses.cols() >= 1, "loss_complexity: empty grid or sample");
  const Index n = losses.cols();
  const auto inv_n = 1.0 / static_cast<double>(n);
  ComplexityValue out;
  Vector sigma(n);
  if (exhaustive) {
    require(n <= 24, "loss_complexity: exhaustive enumeration limited to n <= 24");
    const std::uint64_t patterns = std::uint64_t{1} << n;
    double total = 0.0;
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
      for (Index i = 0; i < n; ++i) sigma[i] = (mask >> i) & 1U ? 1.0 : -1.0;
      total += (losses * sigma).maxCoeff() * inv_n;
    }
    out.value = total / static_cast<double>(patterns);
    out.exhaustive = true;
    return out;
  }
  require(draws >= 2, "loss_complexity: need at least two draws");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (Index r = 0; r < draws; ++r) {
    for (Index i = 0; i < n; ++i) sigma[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const double v = (losses * sigma).maxCoeff() * inv_n;
    sum += v;
    sum_sq += v * v;
  }
  const auto m = static_cast<double>(draws);
  out.value = sum / m;
  const double var = std::max(0.0, (sum_sq - m * out.value * out.value) / (m - 1.0));
  out.stderr_ = std::sqrt(var / m);
  return out;
}

namespace {

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

MeanStderr mean_stderr(const std::vector<double>& v) {
  MeanStderr out;
  const auto m = static_cast<double>(v.size());
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / m;
  if (v.size() < 2) return out;
  double ss = 0.0;
  for (const double x : v) ss += (x - out.mean) * (x - out.mean);
  out.stderr_ = std::sqrt(ss / (m - 1.0) / m);
  return out;
}

}  // namespace

RademacherEstimate rademacher_micro(const MlpArch& arch, const Batch& train, const Batch& population,
                                    const std::vector<Vector>& grid, const RademacherOptions& options) {
  require(!grid.empty(), "rademacher_micro: empty hypothesis grid");
  require(grid.size() <= 500, "rademacher_micro: grid limited to 500 hypotheses");
  require(train.size() >= 1 && train.size() <= 2000, "rademacher_micro: need 1 <= n <= 2000");
  require(options.delta_conf > 0.0 && options.delta_conf < 1.0, "rademacher_micro: delta_conf must be in (0, 1)");
  validate_batch(arch, train);
  validate_batch(arch, population);
  const Index m = static_cast<Index>(grid.size());
  const Index n = train.size();
  const Index d = arch.num_params();
  const bool with_hessian = options.hessian && d <= 50;

  RademacherEstimate est;
  est.n = n;
  Matrix losses(m, n);
  std::vector<Matrix> grads;
  std::vector<Matrix> hessians;  // n x d*d per hypothesis
  Vector pop_loss(m);
  Vector train_loss(m);
  for (Index j = 0; j < m; ++j) {
    const Vector& w = grid[static_cast<std::size_t>(j)];
    require(w.size() == d, "rademacher_micro: hypothesis dimension mismatch");
    const Vector lt = per_example_losses(arch, w, train);
    const Vector lp = per_example_losses(arch, w, population);
    losses.row(j) = lt.transpose();
    train_loss[j] = lt.mean();
    pop_loss[j] = lp.mean();
    est.b = std::max({est.b, lt.cwiseAbs().maxCoeff(), lp.cwiseAbs().maxCoeff()});

    Matrix g = per_example_gradients(arch, w, train);
    est.g = std::max({est.g, g.rowwise().norm().maxCoeff(),
                      per_example_gradients(arch, w, population).rowwise().norm().maxCoeff()});
    grads.push_back(std::move(g));

    if (with_hessian) {
      // Per-example Hessians come from the training sample only.
      Matrix h(n, d * d);
      for (Index i = 0; i < n; ++i) {
        const Index row[] = {i};
        const MlpObjective single(arch, train.subset(row));
        const Matrix hi = dense_hessian(single, w);
        est.h = std::max(est.h, sym_norm(hi));
        h.row(i) = Eigen::Map<const Eigen::RowVectorXd>(hi.data(), d * d);
      }
      hessians.push_back(std::move(h));
    }
  }

  Rng rng = Rng::keyed(options.seed, {0x4ad});
  const bool exhaustive = n <= options.exhaustive_max_n;
  const auto rl = loss_complexity(losses, options.draws, rng, exhaustive);
  est.r_loss = rl.value;
  est.r_loss_stderr = rl.stderr_;
  est.r_loss_exhaustive = rl.exhaustive;

  std::vector<double> g_draws;
  std::vector<double> h_draws;
  Vector sigma(n);
  const auto inv_n = 1.0 / static_cast<double>(n);
  for (Index r = 0; r < options.vector_draws; ++r) {
    for (Index i = 0; i < n; ++i) sigma[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    double best_g = 0.0;
    for (const auto& g : grads) best_g = std::max(best_g, (g.transpose() * sigma).norm());
    g_draws.push_back(best_g * inv_n);
    if (with_hessian) {
      double best_h = 0.0;
      for (const auto& h : hessians) {
        const Vector flat = h.transpose() * sigma;
        best_h = std::max(best_h, sym_norm(Eigen::Map<const Matrix>(flat.data(), d, d)));
      }
      h_draws.push_back(best_h * inv_n);
    }
  }
  if (!g_draws.empty()) {
    const auto gs = mean_stderr(g_draws);
    est.r_grad = gs.mean;
    est.r_grad_stderr = gs.stderr_;
  }
  if (!h_draws.empty()) {
    const auto hs = mean_stderr(h_draws);
    est.r_hess = hs.mean;
    est.r_hess_stderr = hs.stderr_;
  }

  const double slack = 3.0 * est.b * std::sqrt(std::log(2.0 / options.delta_conf) / static_cast<double>(n));
  for (Index j = 0; j < m; ++j) {
    CheckRecord r;
    r.check = "rademacher";
    r.family = "finite_grid";
    r.instance = j;
    r.lhs = pop_loss[j];
    r.rhs = train_loss[j] + 2.0 * est.b * est.r_loss + slack;
    // The inequality is only promised with probability 1 - delta_conf, so a
    // single miss is not a counterexample.
    r.verdict = r.lhs <= r.rhs ? Verdict::satisfied : Verdict::indeterminate;
    r.constants = "empirical b";
    r.extras["train_loss"] = train_loss[j];
    est.all_hold = est.all_hold && r.verdict == Verdict::satisfied;
    est.records.push_back(std::move(r));
  }
  return est;
}

}  // namespace taylorcl
