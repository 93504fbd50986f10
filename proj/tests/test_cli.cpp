#include "cli.hpp"
#include "tempdir.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace taylorcl;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "taylorcl");
  std::ostringstream out, err;
  const int code = cli::main(args, out, err);
  return {code, out.str(), err.str()};
}

Json dry(std::vector<std::string> args) {
  args.insert(args.begin(), "run");
  args.push_back("--dry-run");
  const auto o = run(args);
  REQUIRE_MESSAGE(o.code == 0, o.err);
  return Json::parse(o.out);
}

}  // namespace

TEST_CASE("flags override the config file, which overrides defaults") {
  TempDir d;
  const auto file = d.path / "exp.toml";
  std::ofstream(file) << "suite = \"rotated\"\nlambda = 3.5\nepochs = [2, 8]\nseed = [4, 5]\nout = \"from_file\"\n";

  const auto defaults = dry({});
  CHECK(defaults.at("suite") == "permuted");
  CHECK(defaults.at("lambda").is_null());
  CHECK(defaults.at("epochs") == Json::array({1, 4, 16}));

  const auto from_file = dry({"--config", file.string()});
  CHECK(from_file.at("suite") == "rotated");
  CHECK(from_file.at("lambda") == 3.5);
  CHECK(from_file.at("epochs") == Json::array({2, 8}));
  CHECK(from_file.at("seeds") == Json::array({4, 5}));
  CHECK(from_file.at("out_dir") == "from_file");

  const auto both = dry({"--config", file.string(), "--lambda", "9", "--epochs", "3", "--out", "flag_dir"});
  CHECK(both.at("suite") == "rotated");
  CHECK(both.at("lambda") == 9.0);
  CHECK(both.at("epochs") == Json::array({3}));
  CHECK(both.at("out_dir") == "flag_dir");
  CHECK(both.at("seeds") == Json::array({4, 5}));
}

TEST_CASE("the annotated example config parses") {
  const auto j = dry({"--config", std::string(TAYLORCL_SOURCE_DIR) + "/configs/example.toml"});
  CHECK(j.at("suite") == "permuted");
}

TEST_CASE("configuration errors exit with 2") {
  CHECK(run({"run", "--suite", "mnist"}).code == 2);
  CHECK(run({"run", "--method", "adam"}).code == 2);
  CHECK(run({"run", "--epochs", "0", "--dry-run"}).code == 2);
  CHECK(run({"run", "--config", "/nonexistent/file.toml"}).code == 2);
  CHECK(run({"run", "--bogus"}).code == 2);
  CHECK(run({}).code == 2);
  TempDir d;
  CHECK(run({"run", "--data-dir", (d.path / "none").string(), "--out", d.path.string()}).code == 2);
  CHECK(run({"theory", "--suite", "nonsense"}).code == 2);
}

TEST_CASE("quadratic run succeeds, a failing cell exits with 1") {
  TempDir d;
  auto ok = run({"run", "--suite", "quadratic", "--method", "vanilla,full-hessian", "--out", d.path.string()});
  CHECK_MESSAGE(ok.code == 0, ok.err);
  CHECK(ok.out.find("full_hessian") != std::string::npos);
  auto bad = run({"run", "--suite", "quadratic", "--lr", "50", "--epochs", "2000", "--out", (d.path / "b").string()});
  CHECK(bad.code == 1);
}

TEST_CASE("theory and report round trip") {
  TempDir d;
  const auto t = run({"theory", "--suite", "prop1,appendix_b", "--out", d.path.string()});
  CHECK_MESSAGE(t.code == 0, t.err);
  const auto r = run({"report", d.path.string()});
  CHECK(r.code == 0);
  CHECK(r.out == t.out.substr(t.out.find("suite ")));
  CHECK(run({"report", (d.path / "missing").string()}).code == 2);
}

TEST_CASE("report flags an injected violation") {
  TempDir d;
  SuiteResult s{"fake", {{"lemma1", "fake", 0, 2.0, 1.0, Verdict::satisfied, "exact", {}}}, Json::object()};
  emit_report({s}, d.path, Json::object());
  const auto r = run({"report", d.path.string()});
  CHECK(r.code == 1);
  CHECK(r.out.find("violated in fake: 0") != std::string::npos);
}

TEST_CASE("version flag") {
  const auto v = run({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find(version_string()) != std::string::npos);
}
