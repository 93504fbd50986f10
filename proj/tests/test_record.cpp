#include "taylorcl/record.hpp"
#include "taylorcl/tasks.hpp"
#include "tempdir.hpp"

#include <doctest.h>

#include <fstream>

using namespace taylorcl;

namespace {

RunRecord sample_run() {
  GaussianTaskOptions o;
  o.tasks = 2;
  o.classes = 3;
  o.dim = 3;
  o.n_train = 30;
  o.n_test = 20;
  o.n_population = 1;
  o.seed = 2;
  MlpArch arch{{3, 4, 3}, Activation::tanh};
  std::vector<SequenceTask> tasks;
  for (const auto& t : gen_gaussian_tasks(o))
    tasks.push_back({std::make_shared<MlpObjective>(arch, t.train), std::make_shared<MlpObjective>(arch, t.test)});
  Rng rng(1);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.seed = 3;
  return run_sequence(tasks, Method::kron, cfg, init_params(arch, rng));
}

}  // namespace

TEST_CASE("binary layout is little-endian with a self-describing header") {
  RecordFile f;
  f.meta = {{"b", 1}, {"a", "x"}};
  Vector v(2);
  v << 1.0, -2.5;
  f.add("v", v);
  const std::string bytes = encode(f);
  CHECK(bytes.substr(0, 8) == "TCLREC01");
  const std::string json = R"({"a":"x","b":1})";
  CHECK(static_cast<unsigned char>(bytes[8]) == json.size());
  for (int i = 9; i < 16; ++i) CHECK(bytes[static_cast<std::size_t>(i)] == 0);
  CHECK(bytes.substr(16, json.size()) == json);
  // The last eight bytes are -2.5 in IEEE little-endian.
  const unsigned char tail[8] = {0, 0, 0, 0, 0, 0, 0x04, 0xc0};
  for (int i = 0; i < 8; ++i) CHECK(static_cast<unsigned char>(bytes[bytes.size() - 8 + static_cast<std::size_t>(i)]) == tail[i]);
  const auto back = decode(bytes);
  CHECK(back.meta == f.meta);
  CHECK(back.tensor("v").data == std::vector<double>{1.0, -2.5});
}

TEST_CASE("decode rejects damaged files") {
  RecordFile f;
  f.add("m", Matrix(Matrix::Identity(3, 3)));
  std::string bytes = encode(f);
  CHECK_THROWS_AS(decode(bytes.substr(0, bytes.size() - 1)), RecordError);
  CHECK_THROWS_AS(decode("NOTAREC!" + bytes.substr(8)), RecordError);
  CHECK_THROWS_AS(decode(""), RecordError);
  CHECK_THROWS_AS(f.tensor("missing"), RecordError);
}

TEST_CASE("run records round-trip exactly") {
  const auto run = sample_run();
  const auto file = encode_run(run, {{"config_hash", "abc"}});
  TempDir dir;
  write_record_file(dir.path / "r.tclrec", file);
  const auto back = decode_run(read_record_file(dir.path / "r.tclrec"));
  CHECK(back.method == run.method);
  CHECK(back.anchors == run.anchors);
  CHECK(back.accuracy == run.accuracy);
  CHECK(back.test_loss == run.test_loss);
  REQUIRE(back.proxies.size() == run.proxies.size());
  for (std::size_t k = 0; k < run.proxies.size(); ++k) CHECK(to_dense(back.proxies[k].curvature) == to_dense(run.proxies[k].curvature));
  CHECK(encode(encode_run(back, {{"config_hash", "abc"}})) == encode(file));
  CHECK(read_record_file(dir.path / "r.tclrec").meta.at("config_hash") == "abc");
}

TEST_CASE("every curvature payload round-trips") {
  Rng rng(5);
  std::vector<HessianRep> reps;
  Matrix x = Matrix::Random(4, 4);
  reps.push_back(FullHessian{x * x.transpose()});
  reps.push_back(DiagonalFisher{Vector::Random(4).cwiseAbs()});
  reps.push_back(SIDiagonal{Vector::Random(4).cwiseAbs()});
  KroneckerFactors k;
  k.layout = {LayerSlice{0, 1, 2}};
  k.a = {Matrix::Identity(2, 2) * 2};
  k.g = {Matrix::Identity(2, 2) * 3};
  reps.push_back(k);
  for (const auto& rep : reps) {
    RecordFile f;
    const Json meta = add_curvature(f, "c", rep);
    const auto back = read_curvature(decode(encode(f)), "c", meta);
    CHECK(kind_of(back) == kind_of(rep));
    CHECK(to_dense(back) == to_dense(rep));
  }
}

TEST_CASE("train config and check records round-trip through JSON") {
  TrainConfig cfg;
  cfg.mode = TrainMode::gd;
  cfg.learning_rate = 0.123;
  cfg.lambda = 7.0;
  cfg.flags = {true, false};
  cfg.normalization = Normalization::sum;
  cfg.fisher_mode = FisherMode::empirical_label;
  cfg.seed = 99;
  CHECK(to_json(train_config_from_json(to_json(cfg))) == to_json(cfg));
  CheckRecord r{"lemma1", "quadratic", 3, 0.5, 0.75, Verdict::indeterminate, "empirical rho", {{"mu", 2.0}}};
  const auto back = check_from_json(to_json(r));
  CHECK(back.check == r.check);
  CHECK(back.lhs == r.lhs);
  CHECK(back.verdict == r.verdict);
  CHECK(back.extras == r.extras);
}

TEST_CASE("config hash ignores key order") {
  CHECK(config_hash(Json::parse(R"({"a":1,"b":2})")) == config_hash(Json::parse(R"({"b":2,"a":1})")));
  CHECK(config_hash(Json::parse(R"({"a":1})")) != config_hash(Json::parse(R"({"a":2})")));
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}
