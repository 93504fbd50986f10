#include "oracles.hpp"
#include "taylorcl/theory.hpp"

#include <doctest.h>

#include <numeric>

using namespace taylorcl;

namespace {

// F = (w-1)^2 + rho/6 w^3 and Ft = (w-1)^2 - delta/4 w^2 on the two-task line.
double f_slope(double delta, double rho, double w) {
  (void)delta;
  return 2.0 * (w - 1.0) + rho / 2.0 * w * w;
}
double ft_slope(double delta, double w) { return 2.0 * (w - 1.0) - delta / 2.0 * w; }

TheoryProblem quad_problem(std::uint64_t seed, Index tasks = 3, Index dim = 4, double cond = 20.0) {
  const auto qs = gen_quadratic_suite(tasks, dim, cond, 2.0, seed);
  std::vector<Vector> anchors;
  Rng rng(seed);
  for (Index k = 0; k + 1 < tasks; ++k) anchors.push_back(qs[static_cast<std::size_t>(k)].minimizer + 0.3 * rng.normal_vector(dim));
  return quadratic_problem(qs, anchors);
}

}  // namespace

TEST_CASE("two-task line: worked point and anchor") {
  const auto pts = prop1_counterexample(1.0, 1.0, {0.0, 0.9});
  CHECK(std::abs(pts[1].proxy_slope + 0.65) <= 1e-12);
  CHECK(std::abs(pts[1].true_slope - 0.205) <= 1e-12);
  CHECK(pts[1].condition_violated);
  CHECK(pts[1].signs_opposite);
  CHECK(pts[1].proxy_slope * pts[1].true_slope < 0.0);
  CHECK(pts[0].proxy_slope == -2.0);
  CHECK(pts[0].true_slope == -2.0);
  CHECK_FALSE(pts[0].condition_violated);
}

TEST_CASE("two-task line scan: violations exist and always flip the slope sign") {
  const auto grid = unit_grid();
  CHECK(grid.size() == 1001);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 1.0);
  for (double delta : {0.5, 1.0, 2.0}) {
    for (double rho : {0.5, 1.0, 2.0}) {
      Index violated = 0;
      for (const auto& p : prop1_counterexample(delta, rho, grid)) {
        CHECK(std::abs(p.proxy_slope - ft_slope(delta, p.w)) <= 1e-12);
        CHECK(std::abs(p.true_slope - f_slope(delta, rho, p.w)) <= 1e-12);
        if (p.condition_violated) {
          ++violated;
          CHECK(p.signs_opposite);
        }
      }
      CHECK(violated > 0);
    }
  }
}

TEST_CASE("gradient gap on the two-task construction") {
  for (double delta : {0.5, 1.0, 2.0}) {
    for (double rho : {0.5, 1.0, 2.0}) {
      const auto p = appendix_b_problem(delta, rho);
      CHECK(p.constants_exact);
      for (double w : unit_grid(101)) {
        const auto g = delta_gap(p, Vector::Constant(1, w));
        const double closed = delta / 2.0 * w + rho / 2.0 * w * w;
        CHECK(std::abs(g.gap - closed) <= 1e-12);
        CHECK(std::abs(g.bound - closed) <= 1e-12);
        CHECK(g.verdict == Verdict::satisfied);
        const auto v = value_gap(p, Vector::Constant(1, w));
        CHECK(std::abs(v.gap - (delta / 4.0 * w * w + rho / 6.0 * w * w * w)) <= 1e-12);
        CHECK(v.gap <= v.bound + kExactSlack);
        CHECK(v.verdict == Verdict::satisfied);
      }
    }
  }
}

TEST_CASE("quadratic tasks with exact proxies have no gap") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = quad_problem(seed);
    Rng rng(seed + 100);
    for (int i = 0; i < 20; ++i) {
      const Vector w = 5.0 * rng.normal_vector(p.dim());
      const auto g = delta_gap(p, w);
      CHECK(g.gap <= 1e-9);
      CHECK(g.bound == 0.0);
      CHECK(value_gap(p, w).gap <= 1e-9);
      const auto c = thm1_condition(p, w, 3.0);
      CHECK(c.rhs == 0.0);
      CHECK(c.holds);
    }
  }
}

TEST_CASE("gaps vanish at the anchor of a single proxy") {
  NeuralTheoryOptions o;
  o.data.tasks = 2;
  o.data.classes = 3;
  o.data.dim = 3;
  o.data.n_train = 40;
  o.data.n_population = 200;
  o.hidden = {5};
  o.steps_per_task = 20;
  o.seed = 3;
  o.data.seed = 3;
  const auto setup = neural_problem(o);
  const Vector anchor = setup.problem.proxies[0].anchor;
  const auto g = delta_gap(setup.problem, anchor);
  CHECK(g.gap <= 1e-9);
  CHECK(g.bound == 0.0);
  CHECK(value_gap(setup.problem, anchor).gap <= 1e-9);
}

TEST_CASE("descent condition examples") {
  const auto p = appendix_b_problem(1.0, 1.0);
  const auto c = thm1_condition(p, Vector::Constant(1, 0.9), 2.0);
  CHECK(c.rhs == doctest::Approx(1.71).epsilon(1e-12));
  CHECK(c.lhs == doctest::Approx(0.65).epsilon(1e-12));
  CHECK_FALSE(c.holds);
  // Ft' = 2(w-1) - w/2 vanishes at w = 4/3.
  const auto at_min = thm1_condition(p, Vector::Constant(1, 4.0 / 3.0), 2.0);
  CHECK(at_min.lhs <= 1e-12);
  CHECK_FALSE(at_min.holds);
}

TEST_CASE("descent check on exactly known families never reports a violation") {
  const auto p = quad_problem(7);
  const auto iters = gd_iterates(p, Vector::Zero(p.dim()), 0.02, 200);
  const auto rep = thm1_decrease_check(p, iters, 0.02, 20.0);
  CHECK(rep.steps == 200);
  CHECK(rep.applicable > 0);
  CHECK(summarize(rep.records).violated == 0);
  for (double d : {0.5, 2.0}) {
    const auto q = appendix_b_problem(d, d);
    const auto it = gd_iterates(q, Vector::Zero(1), 0.05, 200);
    CHECK(summarize(thm1_decrease_check(q, it, 0.05, 4 + 4 * d).records).violated == 0);
  }
}

TEST_CASE("non-convex rate constants") {
  const auto p = quad_problem(2);
  const double mu = max_curvature_norm(p, {Vector::Zero(p.dim())});
  const auto iters = gd_iterates(p, Vector::Zero(p.dim()), 1.0 / mu, 300);
  const auto conv = convex_rate_check(gen_quadratic_suite(3, 4, 20.0, 2.0, 2), {p.proxies[0].anchor, p.proxies[1].anchor},
                                      Vector::Zero(p.dim()), 10);
  const auto b = nonconvex_bound_trace(p, iters, mu, conv.f_star, conv.ft_star, true);
  CHECK(b.beta == 0.0);
  CHECK(b.gamma1 == 0.0);
  CHECK(b.gamma2 == 0.0);
  CHECK(b.t_star == 0);
  CHECK(b.alpha == doctest::Approx(std::sqrt(2.0 * mu * (b.f0 - b.f_star))).epsilon(1e-14));
  double running = 0.0;
  for (std::size_t t = 1; t <= 300; ++t) {
    running += true_gradient(p, iters[t - 1]).norm();
    CHECK(b.lhs[t - 1] == doctest::Approx(running / static_cast<double>(t)).epsilon(1e-12));
    CHECK(b.rhs[t - 1] == doctest::Approx(b.alpha / std::sqrt(static_cast<double>(t))).epsilon(1e-14));
    CHECK(b.lhs[t - 1] <= b.rhs[t - 1] + kExactSlack);
  }
  CHECK(summarize(b.records).violated == 0);
}

TEST_CASE("non-convex rate with curvature error") {
  auto p = appendix_b_problem(1.0, 1.0);
  const double mu = 8.0;
  const auto iters = gd_iterates(p, Vector::Constant(1, 0.2), 1.0 / mu, 50);
  // Closed-form optima: F has its minimum on [0, 1] at the root of F', Ft at 0.8.
  const double w_f = (-2.0 + std::sqrt(4.0 + 4.0 * 0.5 * 2.0)) / (2.0 * 0.5);
  const double f_star = (w_f - 1) * (w_f - 1) + w_f * w_f * w_f / 6;
  const double ft_star = 0.04 - 0.16;
  const auto b = nonconvex_bound_trace(p, iters, mu, f_star, ft_star, true);
  const double ft_drop = proxy_objective(p, iters[0]) - ft_star;
  CHECK(b.gamma1 == doctest::Approx(1.0 * std::sqrt(3.0 / mu * ft_drop)).epsilon(1e-14));
  CHECK(b.gamma2 == doctest::Approx(4.0 / mu * ft_drop).epsilon(1e-14));
  const double d0 = 0.2;
  CHECK(b.beta == doctest::Approx(std::sqrt(3.0) / 2.0 * (d0 + 2.0 * d0 * d0)).epsilon(1e-14));
  REQUIRE(b.t_star > 0);
  const double t = static_cast<double>(b.t_star);
  CHECK(nonconvex_rhs(b, t) <= nonconvex_rhs(b, t - 1));
  CHECK(nonconvex_rhs(b, t) <= nonconvex_rhs(b, t + 1));

  p.rho *= 2.0;
  const auto doubled = nonconvex_bound_trace(p, iters, mu, f_star, ft_star, true);
  CHECK(doubled.gamma2 == doctest::Approx(2.0 * b.gamma2).epsilon(1e-14));
}

TEST_CASE("convex rate: identity pair converges in one step") {
  std::vector<QuadraticTask> tasks(2);
  tasks[0] = {Matrix::Identity(2, 2), Vector::Unit(2, 0), 0.0};
  tasks[1] = {Matrix::Identity(2, 2), -Vector::Unit(2, 0), 0.0};
  const auto b = convex_rate_check(tasks, {tasks[0].minimizer}, Vector::Constant(2, 3.0), 5);
  CHECK(b.mu == doctest::Approx(1.0));
  CHECK(b.lhs[0] <= 1e-15);
  CHECK(summarize(b.records).violated == 0);
}

TEST_CASE("convex rate on an ill-conditioned pair matches the GD recursion") {
  std::vector<QuadraticTask> tasks(2);
  Matrix a0 = Matrix::Zero(2, 2), a1 = Matrix::Zero(2, 2);
  a0.diagonal() << 100.0, 1.0;
  a1.diagonal() << 1.0, 100.0;
  tasks[0] = {a0, Vector::Unit(2, 0), 0.0};
  tasks[1] = {a1, Vector::Unit(2, 1), 0.0};
  const Vector w0 = Vector::Constant(2, -4.0);
  const auto b = convex_rate_check(tasks, {tasks[0].minimizer}, w0, 2000);
  // Oracle: GD on F = 1/2 sum_k 1/2 (w - m_k)^T A_k (w - m_k) with eta = 1/100.
  const Matrix a = (a0 + a1) / 2.0;
  const Vector rhs = (a0 * tasks[0].minimizer + a1 * tasks[1].minimizer) / 2.0;
  const Vector w_star = a.ldlt().solve(rhs);
  auto f = [&](const Vector& w) {
    return 0.25 * ((w - tasks[0].minimizer).dot(a0 * (w - tasks[0].minimizer)) +
                   (w - tasks[1].minimizer).dot(a1 * (w - tasks[1].minimizer)));
  };
  Vector w = w0;
  const double d2 = (w0 - w_star).squaredNorm();
  for (Index t = 1; t <= 2000; ++t) {
    w -= (a * w - rhs) / 100.0;
    const double gap = f(w) - f(w_star);
    CHECK(std::abs(b.lhs[static_cast<std::size_t>(t - 1)] - gap) <= 1e-9 * std::max(1.0, gap));
    CHECK(gap <= 2.0 * 100.0 * d2 / static_cast<double>(t) + 1e-9);
  }
  CHECK(summarize(b.records).violated == 0);
}

TEST_CASE("estimate_minimum finds a quadratic's minimum") {
  Matrix a(2, 2);
  a << 3, 1, 1, 2;
  const QuadraticObjective q(a, Vector::Constant(2, 1.5), 0.25);
  const double m = estimate_minimum([&](const Vector& w) { return q.value_grad(w); }, Vector::Zero(2), 0.2, 500, 3,
                                    0.1, 1);
  CHECK(m == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("audit-level record conversion") {
  auto p = appendix_b_problem(1.0, 1.0);
  p.delta[0] = 0.0;  // understate delta so the bound fails
  const auto g = delta_gap(p, Vector::Constant(1, 0.9));
  CHECK(g.verdict == Verdict::violated);
  CHECK(to_record(g, "lemma1", "test", 0, true).verdict == Verdict::violated);
  p.constants_exact = false;
  CHECK(delta_gap(p, Vector::Constant(1, 0.9)).verdict == Verdict::indeterminate);
}

namespace {

// All 2^n sign patterns, enumerated recursively.
double exhaustive_complexity(const Matrix& losses) {
  const Index n = losses.cols();
  Vector sigma(n);
  double total = 0.0;
  std::function<void(Index)> rec = [&](Index i) {
    if (i == n) {
      total += (losses * sigma).maxCoeff() / static_cast<double>(n);
      return;
    }
    for (double s : {-1.0, 1.0}) {
      sigma[i] = s;
      rec(i + 1);
    }
  };
  rec(0);
  return total / std::pow(2.0, static_cast<double>(n));
}

Matrix constant_predictor_losses(Index n, Index hypotheses, Rng& rng) {
  // Hypothesis j predicts class 1 with probability p_j everywhere; labels alternate.
  Matrix l(hypotheses, n);
  for (Index j = 0; j < hypotheses; ++j) {
    const double p = 0.05 + 0.9 * rng.uniform();
    for (Index i = 0; i < n; ++i) l(j, i) = i % 2 ? -std::log(p) : -std::log(1.0 - p);
  }
  return l;
}

}  // namespace

TEST_CASE("loss complexity: exhaustive enumeration matches an independent oracle") {
  Rng rng(1);
  for (Index n = 2; n <= 12; ++n) {
    const Matrix l = constant_predictor_losses(n, 9, rng);
    Rng unused(0);
    const auto ex = loss_complexity(l, 0, unused, true);
    CHECK(ex.exhaustive);
    CHECK(ex.value == doctest::Approx(exhaustive_complexity(l)).epsilon(1e-12));
  }
}

TEST_CASE("loss complexity: singleton grid is zero up to Monte Carlo error") {
  Rng rng(2);
  const Matrix l = Matrix::Random(1, 50).cwiseAbs();
  const auto mc = loss_complexity(l, 2000, rng);
  CHECK(std::abs(mc.value) <= 3.0 * mc.stderr_);
  Rng r2(0);
  CHECK(std::abs(loss_complexity(l.leftCols(10), 0, r2, true).value) <= 1e-15);
}

TEST_CASE("loss complexity: Monte Carlo z-scores are calibrated") {
  // 200 independent comparisons; about 0.27% should exceed 3 standard errors.
  Rng rng(3);
  Index beyond3 = 0, beyond1 = 0;
  const int comparisons = 200;
  for (int i = 0; i < comparisons; ++i) {
    const Index n = 8 + i % 5;
    const Matrix l = constant_predictor_losses(n, 9, rng);
    const double exact = exhaustive_complexity(l);
    const auto mc = loss_complexity(l, 2000, rng);
    const double z = std::abs(mc.value - exact) / mc.stderr_;
    beyond3 += z > 3.0;
    beyond1 += z > 1.0;
  }
  // Binomial(200, 0.317) for |z| > 1: mean 63, sd 6.6.
  CHECK(beyond1 >= 40);
  CHECK(beyond1 <= 86);
  CHECK(beyond3 <= 4);
}

TEST_CASE("loss complexity: standard error shrinks by sqrt 2 when draws double") {
  Rng rng(4);
  const Matrix l = constant_predictor_losses(30, 9, rng);
  double small = 0.0, large = 0.0;
  for (int t = 0; t < 10; ++t) {
    small += loss_complexity(l, 1000, rng).stderr_;
    large += loss_complexity(l, 2000, rng).stderr_;
  }
  const double ratio = small / large;
  CHECK(ratio >= std::sqrt(2.0) * 0.8);
  CHECK(ratio <= std::sqrt(2.0) * 1.2);
}
