#include "taylorcl/record.hpp"
#include "taylorcl/tasks.hpp"
#include "taylorcl/trainer.hpp"

#include <doctest.h>

using namespace taylorcl;

namespace {

std::shared_ptr<const Objective> quad1d(double center) {
  return std::make_shared<QuadraticObjective>(Matrix::Identity(1, 1), Vector::Constant(1, center));
}

TrainConfig gd(Index steps, double lr) {
  TrainConfig cfg;
  cfg.mode = TrainMode::gd;
  cfg.epochs = steps;
  cfg.learning_rate = lr;
  cfg.flags = {true, true};
  return cfg;
}

std::vector<SequenceTask> two_quadratics() {
  auto a = quad1d(1.0), b = quad1d(-1.0);
  return {{a, a}, {b, b}};
}

std::vector<SequenceTask> gaussian_sequence(Index tasks, std::uint64_t seed, const MlpArch& arch) {
  GaussianTaskOptions o;
  o.tasks = tasks;
  o.classes = 3;
  o.dim = 4;
  o.rotation_step_degrees = 30.0;
  o.n_train = 60;
  o.n_test = 40;
  o.n_population = 1;
  o.seed = seed;
  std::vector<SequenceTask> out;
  for (const auto& t : gen_gaussian_tasks(o))
    out.push_back({std::make_shared<MlpObjective>(arch, t.train), std::make_shared<MlpObjective>(arch, t.test)});
  return out;
}

}  // namespace

TEST_CASE("two gradient steps on a 1-D quadratic") {
  const auto obj = quad1d(3.0);
  auto res = train_task(*obj, Vector::Zero(1), {}, gd(2, 0.5));
  CHECK(res.w_hat[0] == 2.25);
  TrainConfig keep = gd(2, 0.5);
  keep.keep_iterates = true;
  res = train_task(*obj, Vector::Zero(1), {}, keep);
  REQUIRE(res.trace.size() == 3);
  CHECK((*res.trace[1].iterate)[0] == 1.5);
  CHECK((*res.trace[2].iterate)[0] == 2.25);
}

TEST_CASE("zero learning rate leaves everything constant") {
  const auto obj = quad1d(3.0);
  TrainConfig cfg = gd(5, 0.0);
  const auto res = train_task(*obj, Vector::Constant(1, 0.25), {}, cfg);
  CHECK(res.w_hat[0] == 0.25);
  for (const auto& e : res.trace) CHECK(e.objective == res.trace.front().objective);
}

TEST_CASE("vanilla forgets, full curvature averages the two quadratics") {
  const auto tasks = two_quadratics();
  const auto vanilla = run_sequence(tasks, Method::vanilla, gd(200, 0.5), Vector::Zero(1));
  CHECK(std::abs(vanilla.anchors.back()[0] + 1.0) <= 1e-12);
  CHECK(std::abs(vanilla.final_average_loss() - 1.0) <= 1e-6);
  const auto full = run_sequence(tasks, Method::full_hessian, gd(200, 0.5), Vector::Zero(1));
  CHECK(std::abs(full.anchors.back()[0]) <= 1e-12);
  CHECK(std::abs(full.final_average_loss() - 0.5) <= 1e-6);
}

TEST_CASE("vanilla loss on the first task strictly grows while the second trains") {
  auto a = quad1d(1.0), b = quad1d(-1.0);
  TrainConfig cfg = gd(30, 0.3);
  cfg.keep_iterates = true;
  const auto res = train_task(*b, Vector::Constant(1, 1.0), {}, cfg);
  double last = -1.0;
  for (const auto& e : res.trace) {
    const double l = a->value(*e.iterate);
    CHECK(l > last);
    last = l;
  }
}

TEST_CASE("a single task is the same for every method") {
  MlpArch arch{{4, 8, 3}, Activation::relu};
  const auto tasks = gaussian_sequence(1, 3, arch);
  Rng rng(1);
  const Vector w0 = init_params(arch, rng);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.epochs = 2;
  cfg.seed = 5;
  for (auto m : {Method::ewc, Method::si, Method::kron, Method::full_hessian}) {
    const auto run = run_sequence(tasks, m, cfg, w0);
    CHECK(run.anchors.back() == run_sequence(tasks, Method::vanilla, cfg, w0).anchors.back());
    CHECK(run.accuracy == run_sequence(tasks, Method::vanilla, cfg, w0).accuracy);
  }
}

TEST_CASE("runs are bit-identical for equal seeds") {
  MlpArch arch{{4, 8, 3}, Activation::tanh};
  const auto tasks = gaussian_sequence(3, 4, arch);
  Rng rng(2);
  const Vector w0 = init_params(arch, rng);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.epochs = 2;
  cfg.seed = 9;
  for (auto m : {Method::vanilla, Method::ewc, Method::si, Method::kron, Method::full_hessian}) {
    const auto a = encode(encode_run(run_sequence(tasks, m, cfg, w0), Json::object()));
    const auto b = encode(encode_run(run_sequence(tasks, m, cfg, w0), Json::object()));
    CHECK(a == b);
  }
  TrainConfig other = cfg;
  other.seed = 10;
  CHECK(run_sequence(tasks, Method::vanilla, cfg, w0).anchors.back() !=
        run_sequence(tasks, Method::vanilla, other, w0).anchors.back());
}

TEST_CASE("accuracy matrix shape and averages") {
  MlpArch arch{{4, 8, 3}, Activation::relu};
  const auto tasks = gaussian_sequence(3, 5, arch);
  Rng rng(3);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  const auto run = run_sequence(tasks, Method::kron, cfg, init_params(arch, rng));
  REQUIRE(run.accuracy.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) CHECK(run.accuracy[k].size() == k + 1);
  CHECK(run.proxies.size() == 3);
  RunRecord fake;
  fake.accuracy = {{0.9}, {0.8, 0.7}};
  CHECK(fake.final_average_accuracy() == doctest::Approx(0.75));
}

TEST_CASE("a memorizing net scores 1 on its own data") {
  MlpArch arch{{4, 32, 3}, Activation::tanh};
  auto tasks = gaussian_sequence(1, 6, arch);
  tasks[0].test = tasks[0].train;
  Rng rng(4);
  TrainConfig cfg = gd(3000, 0.5);
  cfg.flags = {};
  const auto run = run_sequence(tasks, Method::vanilla, cfg, init_params(arch, rng));
  CHECK(run.accuracy[0][0] == 1.0);
}

TEST_CASE("divergence is reported with the partial trace") {
  const auto obj = quad1d(3.0);
  TrainConfig cfg = gd(5000, 3.0);
  CHECK_THROWS_AS(train_task(*obj, Vector::Zero(1), {}, cfg), TrainingError);
  TrainConfig bad;
  bad.learning_rate = -1.0;
  CHECK_THROWS(bad.validate());
}
