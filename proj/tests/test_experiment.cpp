#include "taylorcl/experiment.hpp"
#include "tempdir.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace taylorcl;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig quadratic_config(const fs::path& out) {
  ExperimentConfig c;
  c.suite = Suite::quadratic;
  c.methods = std::vector<Method>{Method::full_hessian};
  c.seeds = std::vector<std::uint64_t>{1};
  c.out_dir = out.string();
  return c;
}

CheckRecord rec(double lhs, double rhs, Verdict v, const std::string& constants = "exact") {
  return {"lemma1", "test", 0, lhs, rhs, v, constants, {}};
}

}  // namespace

TEST_CASE("resolve fills suite defaults and rejects bad values") {
  ExperimentConfig c;
  const auto r = resolve(c);
  CHECK(r.methods->size() == 3);
  CHECK(*r.epochs == std::vector<Index>{1, 4, 16});
  CHECK(r.seeds->size() == 5);
  CHECK(*r.hidden == std::vector<Index>{64, 64});
  CHECK(*r.n_train == 2000);
  CHECK(*r.learning_rate == 1e-3);
  CHECK(r.batch_size == 10);
  CHECK(default_lambda(Suite::permuted, Method::kron) == 10.0);
  CHECK(default_lambda(Suite::permuted, Method::ewc) == 1.0);
  CHECK(default_lambda(Suite::rotated, Method::ewc) == 10.0);
  CHECK(default_lambda(Suite::rotated, Method::si) == 1.0);
  CHECK(default_xi(Suite::permuted, Method::si) == 1.0);

  ExperimentConfig bad;
  bad.epochs = std::vector<Index>{0};
  CHECK_THROWS_AS(resolve(bad), ConfigError);
  ExperimentConfig q;
  q.suite = Suite::quadratic;
  q.methods = std::vector<Method>{Method::ewc};
  CHECK_THROWS_AS(resolve(q), ConfigError);
  CHECK(experiment_config_from_json(to_json(r)).methods == r.methods);
}

TEST_CASE("quadratic experiment: one row, records, provenance and byte-identical re-runs") {
  TempDir a, b;
  const auto ra = run_experiment(quadratic_config(a.path));
  const auto rb = run_experiment(quadratic_config(b.path));
  REQUIRE(ra.rows.size() == 1);
  CHECK(ra.failures.empty());
  CHECK(ra.hash == rb.hash);
  CHECK(ra.rows[0].values.size() == 1);
  CHECK_FALSE(ra.rows[0].stddev.has_value());
  for (const auto& rel : {"records/full_hessian_e100_s1.tclrec", "results.json", "results.csv", "plot/loss_vs_epochs.csv"}) {
    const auto x = slurp(a.path / rel);
    CHECK_MESSAGE(!x.empty(), rel);
    CHECK_MESSAGE(x == slurp(b.path / rel), rel);
    CHECK_MESSAGE(x.find(hex64(ra.hash)) != std::string::npos, rel);
    CHECK_MESSAGE(x.find(version_string()) != std::string::npos, rel);
  }
}

TEST_CASE("std is zero for identical per-seed values and uses n-1") {
  const auto same = aggregate(1, Method::vanilla, "accuracy", {0.5, 0.5});
  REQUIRE(same.stddev.has_value());
  CHECK(*same.stddev == 0.0);
  const auto spread = aggregate(1, Method::vanilla, "accuracy", {1.0, 2.0, 3.0});
  CHECK(spread.mean == 2.0);
  CHECK(*spread.stddev == doctest::Approx(1.0));
}

TEST_CASE("failing cells are recorded while the rest continue") {
  TempDir d;
  auto c = quadratic_config(d.path);
  c.methods = std::vector<Method>{Method::vanilla, Method::full_hessian};
  c.learning_rate = 50.0;
  c.epochs = std::vector<Index>{1, 2000};
  const auto r = run_experiment(c);
  CHECK(r.failures.size() == 2);
  CHECK(r.rows.size() == 2);
  const auto j = read_json(d.path / "results.json");
  CHECK(j.at("failures").size() == 2);
}

TEST_CASE("missing image data is a configuration error") {
  TempDir d;
  ExperimentConfig c;
  c.data_dir = (d.path / "nowhere").string();
  c.out_dir = d.path.string();
  CHECK_THROWS_AS(run_experiment(c), ConfigError);
}

TEST_CASE("audit rules") {
  CHECK(audit(rec(1.0, 2.0, Verdict::satisfied)) == Verdict::satisfied);
  CHECK(audit(rec(3.0, 2.0, Verdict::satisfied)) == Verdict::violated);
  CHECK(audit(rec(3.0, 2.0, Verdict::satisfied, "empirical rho")) == Verdict::indeterminate);
  CHECK(audit(rec(1.0, 2.0, Verdict::violated)) == Verdict::violated);
  CHECK(audit(rec(std::nan(""), 2.0, Verdict::satisfied)) == Verdict::indeterminate);
  CHECK(audit(rec(2.0 + 0.5 * kExactSlack, 2.0, Verdict::satisfied)) == Verdict::satisfied);
}

TEST_CASE("report: clean suite, injected violation, bookkeeping") {
  TempDir d;
  SuiteResult clean{"clean", {rec(0.1, 1.0, Verdict::satisfied), rec(0.2, 1.0, Verdict::satisfied)}, Json::object()};
  SuiteResult dirty{"dirty", {rec(0.1, 1.0, Verdict::satisfied), rec(5.0, 1.0, Verdict::satisfied),
                              rec(2.0, 1.0, Verdict::indeterminate, "empirical rho")}, Json::object()};
  const auto s = emit_report({clean, dirty}, d.path, {{"config_hash", "feed"}});
  CHECK(s.suites[0].counts.violated == 0);
  CHECK(s.suites[1].counts.violated == 1);
  CHECK(s.suites[1].violated == std::vector<Index>{1});
  CHECK(s.total.satisfied == 3);
  CHECK(s.total.indeterminate == 1);

  const auto summary = read_json(d.path / "summary.json");
  Index files_total = 0;
  for (const auto& item : summary.at("suites")) {
    const auto file = read_json(d.path / item.at("file").get<std::string>());
    const auto& c = file.at("summary");
    const Index n = c.at("satisfied").get<Index>() + c.at("violated").get<Index>() + c.at("indeterminate").get<Index>();
    CHECK(n == static_cast<Index>(file.at("records").size()));
    files_total += n;
    CHECK(file.at("config_hash") == "feed");
  }
  const auto& t = summary.at("total");
  CHECK(files_total == t.at("satisfied").get<Index>() + t.at("violated").get<Index>() + t.at("indeterminate").get<Index>());
  CHECK(tally(load_report(d.path)).total.violated == 1);
  const auto txt = format_summary(s);
  CHECK(txt.find("violated in dirty: 1") != std::string::npos);
  CHECK_THROWS(emit_report({}, d.path, Json::object()));
  CHECK_THROWS(load_report(d.path / "absent"));
}
