#include "oracles.hpp"
#include "taylorcl/curvature.hpp"

#include <doctest.h>

using namespace taylorcl;

namespace {

Batch gaussian_batch(Index n, Index dim, Index classes, Rng& rng) {
  Batch b;
  b.inputs.resize(n, dim);
  for (Index i = 0; i < b.inputs.size(); ++i) b.inputs.data()[i] = rng.normal();
  for (Index i = 0; i < n; ++i) b.labels.push_back(static_cast<int>(rng.below(classes)));
  return b;
}

std::vector<HessianRep> all_reps(const MlpArch& arch, const Vector& w, const Batch& b) {
  Rng rng(1);
  auto si = si_start(w, 0.5);
  for (int i = 0; i < 5; ++i) si_step(si, rng.normal_vector(w.size()), 0.01 * rng.normal_vector(w.size()));
  return {build_full(MlpObjective(arch, b), w), build_diag_fisher(arch, w, b, FisherMode::sampled_label, rng),
          build_kron(arch, w, b, FisherMode::sampled_label, rng), si_finalize(si, w + rng.normal_vector(w.size()))};
}

}  // namespace

TEST_CASE("full curvature of a quadratic is its matrix") {
  Matrix a(3, 3);
  a << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  const QuadraticObjective q(a, Vector::Ones(3));
  const auto rep = build_full(q, Vector::Zero(3));
  CHECK(std::get<FullHessian>(rep).matrix == a);
  CHECK(estimate_delta(rep, q, Vector::Zero(3)) <= 1e-8);
}

TEST_CASE("logistic Fisher at zero weights") {
  // Two-class softmax on one feature x = 2: the logit difference is the
  // logistic model, and each weight's squared gradient is (x/2)^2 = 1.
  MlpArch arch{{1, 2}, Activation::relu};
  Batch b;
  b.inputs = Matrix::Constant(1, 1, 2.0);
  b.labels = {1};
  for (auto mode : {FisherMode::sampled_label, FisherMode::empirical_label}) {
    Rng rng(4);
    const auto d = std::get<DiagonalFisher>(build_diag_fisher(arch, Vector::Zero(4), b, mode, rng)).diagonal;
    const auto layout = layer_layout(arch);
    const auto block = layer_block(d, layout[0]);
    CHECK(block(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(block(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(block(0, 1) == doctest::Approx(0.25).epsilon(1e-15));
  }
}

TEST_CASE("diagonal Fisher vanishes where every example has zero gradient") {
  // With zero inputs and zero weights, weight gradients vanish; only biases move.
  MlpArch arch{{3, 2}, Activation::relu};
  Batch b;
  b.inputs = Matrix::Zero(4, 3);
  b.labels = {0, 1, 0, 1};
  Rng rng(5);
  const auto d = std::get<DiagonalFisher>(build_diag_fisher(arch, Vector::Zero(8), b, FisherMode::empirical_label, rng)).diagonal;
  CHECK(d.head(6).norm() == 0.0);
  CHECK(d.minCoeff() >= 0.0);
}

TEST_CASE("kronecker factors: single example single layer is exact") {
  MlpArch arch{{3, 3}, Activation::relu};
  Rng rng(6);
  const Vector w = rng.normal_vector(arch.num_params());
  const Batch b = gaussian_batch(1, 3, 3, rng);
  Rng r1(7), r2(7);
  const auto kron = build_kron(arch, w, b, FisherMode::sampled_label, r1);
  const auto labels = fisher_labels(arch, w, b, r2, FisherMode::sampled_label);
  Batch relabelled = b;
  relabelled.labels = labels;
  const Vector g = per_example_gradients(arch, w, relabelled).row(0).transpose();
  for (int t = 0; t < 10; ++t) {
    const Vector v = rng.normal_vector(w.size());
    const double exact = v.dot(g) * v.dot(g);
    CHECK(std::abs(quad_form(kron, v) - exact) <= 1e-10);
  }
}

TEST_CASE("kronecker layout partitions a two-layer net into two blocks") {
  MlpArch arch{{5, 7, 3}, Activation::tanh};
  Rng rng(8);
  const Vector w = init_params(arch, rng);
  const auto rep = std::get<KroneckerFactors>(build_kron(arch, w, gaussian_batch(30, 5, 3, rng), FisherMode::sampled_label, rng));
  REQUIRE(rep.layout.size() == 2);
  CHECK(rep.layout[0].size() == 6 * 7);
  CHECK(rep.layout[1].size() == 8 * 3);
  CHECK(rep.layout[0].size() + rep.layout[1].size() == w.size());
}

TEST_CASE("si accumulator arithmetic") {
  auto acc = si_start(Vector::Zero(1), 0.1);
  si_step(acc, Vector::Constant(1, 2.0), Vector::Constant(1, -0.1));
  CHECK(acc.omega[0] == doctest::Approx(0.2));
  si_step(acc, Vector::Constant(1, 5.0), Vector::Zero(1));
  CHECK(acc.omega[0] == doctest::Approx(0.2));
  si_step(acc, Vector::Constant(1, -1.0), Vector::Constant(1, 0.3));
  CHECK(acc.omega[0] == doctest::Approx(0.5));

  auto fin = si_start(Vector::Zero(1), 0.1);
  fin.omega[0] = 0.2;
  CHECK(std::get<SIDiagonal>(si_finalize(fin, Vector::Constant(1, 0.1))).importance[0] ==
        doctest::Approx(0.2 / 0.11).epsilon(1e-12));
  CHECK(std::get<SIDiagonal>(si_finalize(fin, Vector::Zero(1))).importance[0] == doctest::Approx(2.0));
  fin.omega[0] = -0.3;
  CHECK(std::get<SIDiagonal>(si_finalize(fin, Vector::Constant(1, 0.1))).importance[0] == 0.0);
}

TEST_CASE("apply and quad_form examples") {
  const HessianRep id = FullHessian{Matrix::Identity(3, 3)};
  const Vector v = Vector::LinSpaced(3, 1, 3);
  CHECK(taylorcl::apply(id, v) == v);
  CHECK(quad_form(id, v) == doctest::Approx(v.squaredNorm()));
  Vector d(2), x(2);
  d << 1, 4;
  x << 2, 1;
  const HessianRep diag = DiagonalFisher{d};
  CHECK(taylorcl::apply(diag, x) == Vector((Vector(2) << 2, 4).finished()));
  CHECK(quad_form(diag, x) == 8.0);
}

TEST_CASE("every representation is consistent, linear and matches its dense form") {
  MlpArch arch{{3, 4, 3}, Activation::tanh};
  Rng rng(10);
  const Vector w = init_params(arch, rng);
  const Batch b = gaussian_batch(25, 3, 3, rng);
  for (const auto& rep : all_reps(arch, w, b)) {
    validate(rep);
    const Matrix dense = to_dense(rep);
    for (int t = 0; t < 5; ++t) {
      const Vector u = rng.normal_vector(w.size());
      const Vector v = rng.normal_vector(w.size());
      const double qf = quad_form(rep, u);
      CHECK(std::abs(qf - u.dot(taylorcl::apply(rep, u))) <= 1e-12 * std::max(1.0, std::abs(qf)));
      const Vector lin = taylorcl::apply(rep, 2.5 * u - 0.5 * v) - (2.5 * taylorcl::apply(rep, u) - 0.5 * taylorcl::apply(rep, v));
      CHECK(lin.norm() <= 1e-10 * std::max(1.0, taylorcl::apply(rep, u).norm()));
      CHECK((dense * u - taylorcl::apply(rep, u)).norm() <= 1e-10 * std::max(1.0, dense.norm()));
      if (kind_of(rep) != CurvatureKind::full) CHECK(qf >= -1e-12);
    }
  }
}

TEST_CASE("psd projection clamps negative curvature") {
  MlpArch arch{{3, 6, 3}, Activation::tanh};
  Rng rng(14);
  const Vector w = 2.0 * rng.normal_vector(arch.num_params());
  const MlpObjective obj(arch, gaussian_batch(20, 3, 3, rng));
  const Matrix raw = std::get<FullHessian>(build_full(obj, w)).matrix;
  const Matrix proj = std::get<FullHessian>(build_full(obj, w, true)).matrix;
  Eigen::SelfAdjointEigenSolver<Matrix> es(raw);
  REQUIRE(es.eigenvalues().minCoeff() < 0.0);
  for (double e : oracle::jacobi_eigenvalues(proj)) CHECK(e >= -1e-10);
  for (int t = 0; t < 10; ++t) CHECK(quad_form(FullHessian{proj}, rng.normal_vector(w.size())) >= -1e-10);
}

TEST_CASE("validate rejects broken representations") {
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 1e-6;
  CHECK_THROWS_AS(validate(FullHessian{asym}), DimensionError);
  CHECK_THROWS_AS(validate(DiagonalFisher{Vector::Constant(2, -1.0)}), DimensionError);
  CHECK_THROWS_AS(validate(SIDiagonal{Vector::Constant(2, -1.0)}), DimensionError);
  KroneckerFactors k;
  k.layout = {LayerSlice{0, 1, 1}};
  k.a = {Matrix::Identity(2, 2)};
  k.g = {-Matrix::Identity(1, 1)};
  CHECK_THROWS_AS(validate(k), DimensionError);
}

TEST_CASE("delta examples") {
  Matrix a(2, 2);
  a << 2, 1, 1, 2;
  const QuadraticObjective q(a, Vector::Zero(2));
  CHECK(estimate_delta(DiagonalFisher{Vector::Constant(2, 2.0)}, q, Vector::Zero(2)) ==
        doctest::Approx(1.0).epsilon(1e-10));
  MlpArch arch{{3, 4, 3}, Activation::tanh};
  Rng rng(15);
  const Vector w = init_params(arch, rng);
  const Batch b = gaussian_batch(25, 3, 3, rng);
  const MlpObjective obj(arch, b);
  for (const auto& rep : all_reps(arch, w, b)) {
    const double delta = estimate_delta(rep, obj, w);
    CHECK(delta >= 0.0);
    const double exact = oracle::spectral_norm(to_dense(rep) - dense_hessian(obj, w));
    CHECK(std::abs(delta - exact) <= 1e-8 * std::max(1.0, exact));
  }
  CHECK(estimate_delta(build_full(obj, w), obj, w) <= 1e-8);
}

TEST_CASE("rho examples") {
  Matrix a(2, 2);
  a << 3, 1, 1, 2;
  const QuadraticObjective q(a, Vector::Zero(2));
  Rng rng(16);
  std::vector<std::pair<Vector, Vector>> probes;
  for (int i = 0; i < 10; ++i) probes.emplace_back(rng.normal_vector(2), rng.normal_vector(2));
  CHECK(estimate_rho(q, probes).rho <= 1e-8);

  const double rho = 1.7;
  const ScalarObjective cubic([=](double w) { return rho * w * w * w / 6; }, [=](double w) { return rho * w * w / 2; },
                              [=](double w) { return rho * w; });
  std::vector<std::pair<Vector, Vector>> pairs;
  for (int i = 0; i < 10; ++i) pairs.emplace_back(Vector::Constant(1, rng.normal()), Vector::Constant(1, rng.normal()));
  pairs.emplace_back(Vector::Constant(1, 0.5), Vector::Constant(1, 0.5));
  const auto est = estimate_rho(cubic, pairs);
  CHECK(est.rho == doctest::Approx(rho).epsilon(1e-12));
  CHECK(est.skipped == 1);
  for (std::size_t i = 1; i < est.running.size(); ++i) CHECK(est.running[i] >= est.running[i - 1]);
}

TEST_CASE("diagonal versus kronecker delta on small nets (report only)") {
  Index kron_better = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng = Rng::keyed(seed, {21});
    MlpArch arch{{3, 5, 3}, Activation::tanh};
    const Vector w = init_params(arch, rng);
    const Batch b = gaussian_batch(40, 3, 3, rng);
    const MlpObjective obj(arch, b);
    const double dd = estimate_delta(build_diag_fisher(arch, w, b, FisherMode::sampled_label, rng), obj, w);
    const double dk = estimate_delta(build_kron(arch, w, b, FisherMode::sampled_label, rng), obj, w);
    kron_better += dd >= dk;
  }
  MESSAGE("diagonal delta >= kronecker delta on " << kron_better << " of 20 nets");
}
