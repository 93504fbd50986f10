#include "taylorcl/suites.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace taylorcl {

namespace {

CheckRecord make_record(std::string check, std::string family, Index instance, double lhs, double rhs,
                        Verdict verdict, std::string constants = "exact") {
  CheckRecord r;
  r.check = std::move(check);
  r.family = std::move(family);
  r.instance = instance;
  r.lhs = lhs;
  r.rhs = rhs;
  r.verdict = verdict;
  r.constants = std::move(constants);
  return r;
}

std::string pair_tag(double delta, double rho) {
  std::ostringstream s;
  s << "delta=" << delta << ",rho=" << rho;
  return s.str();
}

void append(std::vector<CheckRecord>& out, std::vector<CheckRecord> more) {
  out.insert(out.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
}

}  // namespace

SuiteResult prop1_suite(const std::vector<double>& values, Index grid_points) {
  SuiteResult out;
  out.name = "prop1";
  const auto grid = unit_grid(grid_points);
  Json pairs = Json::array();
  for (const double delta : values) {
    for (const double rho : values) {
      const auto family = "appendix_b(" + pair_tag(delta, rho) + ")";
      const auto scan = prop1_counterexample(delta, rho, grid);
      Index violated = 0;
      double first = -1.0;
      for (std::size_t i = 0; i < scan.size(); ++i) {
        const auto& pt = scan[i];
        if (!pt.condition_violated) continue;
        if (violated == 0) first = pt.w;
        ++violated;
        auto r = make_record("prop1_signs", family, static_cast<Index>(i), pt.proxy_slope * pt.true_slope, 0.0,
                             pt.signs_opposite ? Verdict::satisfied : Verdict::violated);
        r.extras = {{"w", pt.w}, {"proxy_slope", pt.proxy_slope}, {"true_slope", pt.true_slope}};
        out.records.push_back(std::move(r));
      }
      out.records.push_back(make_record("prop1_nonempty", family, 0, 1.0, static_cast<double>(violated),
                                        violated >= 1 ? Verdict::satisfied : Verdict::violated));
      pairs.push_back({{"delta", delta}, {"rho", rho}, {"violated_points", violated}, {"first_violated_w", first}});
    }
  }
  const auto worked = prop1_counterexample(1.0, 1.0, {0.9}).front();
  out.info = {{"grid_points", grid_points},
              {"pairs", pairs},
              {"worked_point",
               {{"delta", 1.0}, {"rho", 1.0}, {"w", 0.9}, {"proxy_slope", worked.proxy_slope},
                {"true_slope", worked.true_slope}, {"condition_violated", worked.condition_violated},
                {"signs_opposite", worked.signs_opposite}}}};
  return out;
}

SuiteResult appendix_b_suite(const std::vector<double>& values, Index grid_points, Index gd_steps) {
  SuiteResult out;
  out.name = "appendix_b";
  const auto grid = unit_grid(grid_points);
  Json pairs = Json::array();
  for (const double delta : values) {
    for (const double rho : values) {
      auto p = appendix_b_problem(delta, rho);
      p.family = "appendix_b(" + pair_tag(delta, rho) + ")";
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vector w = Vector::Constant(1, grid[i]);
        const auto idx = static_cast<Index>(i);
        out.records.push_back(to_record(delta_gap(p, w), "lemma1", p.family, idx, true));
        out.records.push_back(to_record(value_gap(p, w), "lemma2", p.family, idx, true));
      }
      // Gradient descent on Ft from the anchor stays in [0, 2], where the
      // curvature of L_1 is at most 4 + 4 rho.
      const double mu = 4.0 + 4.0 * rho;
      const auto iterates = gd_iterates(p, Vector::Zero(1), 1.0 / mu, gd_steps);
      auto descent = thm1_decrease_check(p, iterates, 1.0 / mu, mu);
      append(out.records, std::move(descent.records));
      const auto cond = thm1_condition(p, Vector::Constant(1, 0.9), 2.0);
      pairs.push_back({{"delta", delta},
                       {"rho", rho},
                       {"mu", mu},
                       {"descent_steps", descent.steps},
                       {"descent_applicable", descent.applicable},
                       {"thm1_at_0.9", {{"lhs", cond.lhs}, {"rhs", cond.rhs}, {"holds", cond.holds}}}});
    }
  }
  out.info = {{"grid_points", grid_points}, {"pairs", pairs}};
  return out;
}

SuiteResult quadratic_suite(const QuadraticSuiteOptions& options) {
  SuiteResult out;
  out.name = "quadratic";
  const auto tasks =
      gen_quadratic_suite(options.tasks, options.dim, options.condition_number, options.spread, options.seed);
  std::vector<Vector> anchors;
  for (std::size_t k = 0; k + 1 < tasks.size(); ++k) anchors.push_back(tasks[k].minimizer);
  auto p = quadratic_problem(tasks, anchors);

  Rng rng = Rng::keyed(options.seed, {0x9b0be});
  for (Index i = 0; i < options.probes; ++i) {
    const Vector& center = anchors.empty() ? tasks.back().minimizer
                                           : anchors[static_cast<std::size_t>(i) % anchors.size()];
    Vector dir = rng.normal_vector(p.dim());
    dir.normalize();
    const Vector w = center + options.probe_radius * rng.uniform() * dir;
    out.records.push_back(to_record(delta_gap(p, w), "lemma1", p.family, i, true));
    out.records.push_back(to_record(value_gap(p, w), "lemma2", p.family, i, true));
  }

  const Vector w0 = anchors.empty() ? Vector::Zero(p.dim()) : anchors.back();
  auto convex = convex_rate_check(tasks, anchors, w0, options.horizon);
  const auto iterates = gd_iterates(p, w0, 1.0 / convex.mu, options.gd_steps);
  auto nonconvex = nonconvex_bound_trace(p, iterates, convex.mu, convex.f_star, convex.ft_star, true);
  auto descent = thm1_decrease_check(p, iterates, 1.0 / convex.mu, convex.mu);

  Json deltas = p.delta;
  out.info = {{"tasks", options.tasks},
              {"dim", options.dim},
              {"condition_number", options.condition_number},
              {"spread", options.spread},
              {"seed", options.seed},
              {"delta", deltas},
              {"rho", p.rho},
              {"mu", convex.mu},
              {"thm3", {{"alpha", convex.alpha}, {"beta", convex.beta}, {"d_tilde", convex.d_tilde},
                        {"f_star", convex.f_star}, {"horizon", options.horizon}}},
              {"thm2", {{"alpha", nonconvex.alpha}, {"beta", nonconvex.beta}, {"gamma1", nonconvex.gamma1},
                        {"gamma2", nonconvex.gamma2}, {"t_star", nonconvex.t_star}, {"steps", options.gd_steps}}},
              {"thm1_descent", {{"steps", descent.steps}, {"applicable", descent.applicable}}}};
  append(out.records, std::move(convex.records));
  append(out.records, std::move(nonconvex.records));
  append(out.records, std::move(descent.records));
  return out;
}

NeuralSuiteOptions default_neural_suite() {
  NeuralSuiteOptions o;
  o.problem.data.tasks = 3;
  o.problem.data.classes = 3;
  o.problem.data.dim = 4;
  o.problem.data.rotation_step_degrees = 20.0;
  o.problem.data.mean_radius = 2.0;
  o.problem.data.noise = 1.0;
  o.problem.data.n_train = 200;
  o.problem.data.n_test = 200;
  o.problem.data.n_population = 1000;
  o.problem.data.seed = 7;
  o.problem.hidden = {16};
  o.problem.steps_per_task = 200;
  o.problem.learning_rate = 0.5;
  o.problem.seed = 7;
  return o;
}

SuiteResult neural_suite(const NeuralSuiteOptions& options) {
  SuiteResult out;
  out.name = "neural";
  Json runs = Json::array();
  for (const auto kind : options.kinds) {
    auto problem_options = options.problem;
    problem_options.curvature = kind;
    auto setup = neural_problem(problem_options);
    auto& p = setup.problem;
    p.family = "tanh_mlp_gaussian(" + std::string(to_string(kind)) + ")";

    // mu: largest exact curvature norm over anchors and sampled iterates,
    // times 1.1, refreshed until the trajectory stays within it.
    std::vector<Vector> base;
    for (const auto& proxy : p.proxies) base.push_back(proxy.anchor);
    double mu = 1.1 * max_curvature_norm(p, base);
    std::vector<Vector> iterates;
    std::vector<Vector> sampled;
    Index mu_rounds = 0;
    for (;;) {
      ++mu_rounds;
      iterates = gd_iterates(p, setup.w0, 1.0 / mu, options.iterations);
      sampled.clear();
      for (std::size_t t = 0; t < iterates.size(); t += static_cast<std::size_t>(options.probe_every))
        sampled.push_back(iterates[t]);
      sampled.push_back(iterates.back());
      const double seen = max_curvature_norm(p, sampled);
      if (seen <= mu || mu_rounds >= 5) break;
      mu = 1.1 * seen;
    }

    std::vector<Vector> probes = sampled;
    Rng rng = Rng::keyed(problem_options.seed, {0x9e0b, static_cast<std::uint64_t>(kind)});
    for (Index i = 0; i < options.random_probes; ++i) {
      const Vector& center = p.proxies[static_cast<std::size_t>(i) % p.proxies.size()].anchor;
      Vector dir = rng.normal_vector(p.dim());
      dir.normalize();
      probes.push_back(center + options.probe_radius * rng.uniform() * dir);
    }
    const double rho_anchors = p.rho;
    refine_rho(p, probes, options.rho_segments);

    for (std::size_t i = 0; i < probes.size(); ++i) {
      const auto idx = static_cast<Index>(i);
      out.records.push_back(to_record(delta_gap(p, probes[i]), "lemma1", p.family, idx, false));
      out.records.push_back(to_record(value_gap(p, probes[i]), "lemma2", p.family, idx, false));
    }
    auto descent = thm1_decrease_check(p, iterates, 1.0 / mu, mu);

    // Optima of F and Ft: best values from longer restarted runs, never
    // worse than what the trace itself reached.
    const Index long_run = 5 * options.iterations;
    double f_star = estimate_minimum([&](const Vector& w) { return LossGrad{true_objective(p, w), true_gradient(p, w)}; },
                                     setup.w0, 1.0 / mu, long_run, options.restarts, 0.1, problem_options.seed);
    double ft_star = estimate_minimum(
        [&](const Vector& w) { return LossGrad{proxy_objective(p, w), proxy_objective_gradient(p, w)}; }, setup.w0,
        1.0 / mu, long_run, options.restarts, 0.1, problem_options.seed + 1);
    for (const auto& w : iterates) {
      f_star = std::min(f_star, true_objective(p, w));
      ft_star = std::min(ft_star, proxy_objective(p, w));
    }
    auto nonconvex = nonconvex_bound_trace(p, iterates, mu, f_star, ft_star, false);

    Json deltas = p.delta;
    Json stderrs = p.population_stderr;
    runs.push_back({{"curvature", to_string(kind)},
                    {"dim", p.dim()},
                    {"delta", deltas},
                    {"rho_anchor_segments", rho_anchors},
                    {"rho", p.rho},
                    {"mu", mu},
                    {"mu_rounds", mu_rounds},
                    {"population_loss_stderr", stderrs},
                    {"thm1_descent", {{"steps", descent.steps}, {"applicable", descent.applicable}}},
                    {"thm2", {{"alpha", nonconvex.alpha}, {"beta", nonconvex.beta}, {"gamma1", nonconvex.gamma1},
                              {"gamma2", nonconvex.gamma2}, {"t_star", nonconvex.t_star},
                              {"f_star_upper", f_star}, {"ft_star_upper", ft_star}}}});
    append(out.records, std::move(descent.records));
    append(out.records, std::move(nonconvex.records));
  }
  out.info = {{"runs", runs}, {"iterations", options.iterations}};
  return out;
}

SuiteResult rademacher_suite(const RademacherSuiteOptions& options) {
  SuiteResult out;
  out.name = "rademacher";
  const MlpArch arch{{2, 2}, Activation::relu};

  // Fixed grid of softmax-regression hypotheses shared by every trial.
  Rng grid_rng = Rng::keyed(options.seed, {0x96d});
  std::vector<Vector> grid;
  for (Index j = 0; j < options.grid; ++j) grid.push_back(grid_rng.normal_vector(arch.num_params()));

  Index holding = 0;
  Json trials = Json::array();
  for (Index t = 0; t < options.trials; ++t) {
    GaussianTaskOptions data;
    data.tasks = 1;
    data.classes = 2;
    data.dim = 2;
    data.n_train = options.n;
    data.n_test = 1;
    data.n_population = options.population;
    data.seed = Rng::keyed(options.seed, {0x7a1, static_cast<std::uint64_t>(t)}).next_u64();
    const auto task = gen_gaussian_tasks(data).front();
    auto est_options = options.estimate;
    est_options.seed = data.seed;
    const auto est = rademacher_micro(arch, task.train, task.population, grid, est_options);
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& r : est.records) worst = std::max(worst, r.lhs - r.rhs);
    if (est.all_hold) ++holding;
    // A single failed trial is allowed with probability delta_conf.
    out.records.push_back(make_record("rademacher_trial", "softmax_regression_gaussian", t, worst, 0.0,
                                      est.all_hold ? Verdict::satisfied : Verdict::indeterminate, "empirical b"));
    trials.push_back({{"r_loss", est.r_loss}, {"r_loss_stderr", est.r_loss_stderr}, {"r_grad", est.r_grad},
                      {"r_hess", est.r_hess}, {"b", est.b}, {"g", est.g}, {"h", est.h}, {"all_hold", est.all_hold}});
  }
  const double fraction = static_cast<double>(holding) / static_cast<double>(options.trials);
  out.records.push_back(make_record("rademacher_frequency", "softmax_regression_gaussian", 0, 0.9, fraction,
                                    fraction >= 0.9 ? Verdict::satisfied : Verdict::violated, "empirical b"));

  // Constant-prediction hypotheses on balanced labels: Monte Carlo against
  // exhaustive enumeration of every sign pattern.
  Json exhaustive = Json::array();
  for (Index g = 0; g < options.exhaustive_grids; ++g) {
    Rng rng = Rng::keyed(options.seed, {0xe4a, static_cast<std::uint64_t>(g)});
    const Index n = std::max<Index>(2, options.exhaustive_n - g);
    Batch sample{Matrix::Zero(n, 2), {}};
    for (Index i = 0; i < n; ++i) sample.labels.push_back(static_cast<int>(i % 2));
    std::vector<Vector> constant_grid;
    for (Index j = 0; j < 9; ++j) {
      Vector w = Vector::Zero(arch.num_params());
      w[4] = 0.0;
      w[5] = 3.0 * (rng.uniform() * 2.0 - 1.0);
      constant_grid.push_back(w);
    }
    Matrix losses(static_cast<Index>(constant_grid.size()), n);
    for (std::size_t j = 0; j < constant_grid.size(); ++j)
      losses.row(static_cast<Index>(j)) = per_example_losses(arch, constant_grid[j], sample).transpose();
    Rng mc_rng = Rng::keyed(options.seed, {0xe4b, static_cast<std::uint64_t>(g)});
    const auto exact = loss_complexity(losses, 0, mc_rng, true);
    const auto mc = loss_complexity(losses, options.estimate.draws, mc_rng, false);
    out.records.push_back(make_record("rademacher_exhaustive", "constant_prediction", g, std::abs(mc.value - exact.value),
                                      3.0 * mc.stderr_,
                                      std::abs(mc.value - exact.value) <= 3.0 * mc.stderr_ ? Verdict::satisfied
                                                                                           : Verdict::violated,
                                      "exhaustive"));
    out.records.back().extras["n"] = static_cast<double>(n);
    exhaustive.push_back({{"n", n}, {"exact", exact.value}, {"monte_carlo", mc.value}, {"stderr", mc.stderr_}});
  }

  out.info = {{"trials", trials},
              {"holding_fraction", fraction},
              {"n", options.n},
              {"grid", options.grid},
              {"population", options.population},
              {"delta_conf", options.estimate.delta_conf},
              {"exhaustive", exhaustive}};
  return out;
}

}  // namespace taylorcl
