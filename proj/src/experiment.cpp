#include "taylorcl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <type_traits>

namespace taylorcl {

std::string_view to_string(Suite suite) {
  switch (suite) {
    case Suite::permuted: return "permuted";
    case Suite::rotated: return "rotated";
    case Suite::quadratic: return "quadratic";
    case Suite::gaussian: return "gaussian";
  }
  return "unknown";
}

std::optional<Suite> parse_suite(std::string_view name) {
  for (const auto s : {Suite::permuted, Suite::rotated, Suite::quadratic, Suite::gaussian}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

namespace {

bool is_image(Suite s) { return s == Suite::permuted || s == Suite::rotated; }

Index scaled(Index n, double scale) { return std::max<Index>(1, static_cast<Index>(std::llround(n * scale))); }

template <class T>
void fill(std::optional<T>& slot, std::type_identity_t<T> value) {
  if (!slot) slot = std::move(value);
}

std::string_view activation_name(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + s + "'");
}

std::string_view normalization_name(Normalization n) { return n == Normalization::average ? "average" : "sum"; }

Normalization parse_normalization(const std::string& s) {
  if (s == "average") return Normalization::average;
  if (s == "sum") return Normalization::sum;
  throw ConfigError("unknown normalization '" + s + "'");
}

std::string_view fisher_name(FisherMode m) { return m == FisherMode::sampled_label ? "sampled" : "empirical"; }

FisherMode parse_fisher(const std::string& s) {
  if (s == "sampled") return FisherMode::sampled_label;
  if (s == "empirical") return FisherMode::empirical_label;
  throw ConfigError("unknown fisher mode '" + s + "'");
}

template <class T>
Json opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json method_list(const std::vector<Method>& methods) {
  Json out = Json::array();
  for (const auto m : methods) out.push_back(to_string(m));
  return out;
}

// Configuration echo without the fields that only say where output goes.
Json results_config(const ExperimentConfig& r) {
  Json j = to_json(r);
  j.erase("out_dir");
  j.erase("write_records");
  return j;
}

std::string cell_name(Method m, Index epochs, std::uint64_t seed) {
  return std::string(to_string(m)) + "_e" + std::to_string(epochs) + "_s" + std::to_string(seed);
}

std::string csv_header(std::uint64_t hash) {
  return "# config_hash=" + hex64(hash) + "\n# version=" + version_string() + "\n";
}

std::string number(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

double default_lambda(Suite suite, Method method) {
  if (suite == Suite::permuted) {
    if (method == Method::kron) return 10.0;
    return 1.0;
  }
  if (suite == Suite::rotated) {
    if (method == Method::ewc || method == Method::kron) return 10.0;
    return 1.0;
  }
  return 1.0;
}

double default_xi(Suite, Method) { return 1.0; }

ExperimentConfig resolve(const ExperimentConfig& cfg) {
  ExperimentConfig r = cfg;
  switch (r.suite) {
    case Suite::permuted:
    case Suite::rotated:
      fill(r.methods, {Method::vanilla, Method::ewc, Method::kron});
      fill(r.epochs, {1, 4, 16});
      fill(r.seeds, {1, 2, 3, 4, 5});
      fill(r.hidden, {64, 64});
      fill(r.tasks, Index{5});
      fill(r.n_train, Index{2000});
      fill(r.n_test, Index{1000});
      fill(r.learning_rate, 1e-3);
      fill(r.mode, TrainMode::sgd);
      break;
    case Suite::quadratic:
      fill(r.methods, {Method::vanilla, Method::full_hessian});
      fill(r.epochs, {100});
      fill(r.seeds, {1});
      fill(r.hidden, {});
      fill(r.tasks, Index{2});
      fill(r.n_train, Index{1});
      fill(r.n_test, Index{1});
      fill(r.learning_rate, 0.5);
      fill(r.mode, TrainMode::gd);
      break;
    case Suite::gaussian:
      fill(r.methods, {Method::vanilla, Method::ewc, Method::si, Method::kron, Method::full_hessian});
      fill(r.epochs, {5});
      fill(r.seeds, {1, 2, 3});
      fill(r.hidden, {16});
      fill(r.tasks, Index{5});
      fill(r.n_train, Index{200});
      fill(r.n_test, Index{200});
      fill(r.learning_rate, 1e-2);
      fill(r.mode, TrainMode::sgd);
      break;
  }
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (r.methods->empty()) fail("methods must not be empty");
  if (r.epochs->empty()) fail("epochs must not be empty");
  if (r.seeds->empty()) fail("seeds must not be empty");
  for (const auto e : *r.epochs)
    if (e < 1) fail("epochs must be >= 1");
  if (!(*r.learning_rate > 0.0) || !std::isfinite(*r.learning_rate)) fail("learning_rate must be positive");
  if (r.lambda && !(*r.lambda > 0.0)) fail("lambda must be positive");
  if (r.xi && !(*r.xi > 0.0)) fail("xi must be positive");
  if (!(r.scale > 0.0) || !std::isfinite(r.scale)) fail("scale must be positive");
  if (r.batch_size < 1) fail("batch_size must be >= 1");
  if (*r.tasks < 1) fail("tasks must be >= 1");
  if (*r.n_train < 1 || *r.n_test < 1) fail("n_train and n_test must be >= 1");
  if (r.trace_every < 1) fail("trace_every must be >= 1");
  for (const auto h : *r.hidden)
    if (h < 1) fail("hidden layer sizes must be >= 1");
  if (r.suite == Suite::quadratic) {
    if (r.dim < 1 || r.condition_number < 1.0 || !(r.spread >= 0.0)) fail("invalid quadratic suite parameters");
    for (const auto m : *r.methods)
      if (m == Method::ewc || m == Method::kron)
        fail(std::string(to_string(m)) + " needs a classifier; the quadratic suite supports vanilla, si, full-hessian");
  }
  if (r.suite == Suite::gaussian && (r.classes < 2 || r.input_dim < 2)) fail("gaussian suite needs classes, input_dim >= 2");
  return r;
}

TrainConfig cell_train_config(const ExperimentConfig& r, Method method, Index epochs, std::uint64_t seed) {
  TrainConfig t;
  t.mode = *r.mode;
  t.learning_rate = *r.learning_rate;
  t.epochs = epochs;
  t.batch_size = r.batch_size;
  t.lambda = r.lambda.value_or(default_lambda(r.suite, method));
  t.xi = r.xi.value_or(default_xi(r.suite, method));
  // Closed-form tasks keep the full expansion; the classifiers drop the
  // constant and gradient terms as is usual in practice.
  const bool full_expansion = r.suite == Suite::quadratic;
  t.flags = {full_expansion, full_expansion};
  t.normalization = r.normalization;
  t.fisher_mode = r.fisher_mode;
  t.seed = seed;
  t.trace_every = r.suite == Suite::quadratic ? 1 : r.trace_every;
  t.validate();
  return t;
}

Json to_json(const ExperimentConfig& c) {
  Json seeds = nullptr;
  if (c.seeds) seeds = *c.seeds;
  return Json{{"suite", to_string(c.suite)},
              {"methods", c.methods ? method_list(*c.methods) : Json(nullptr)},
              {"epochs", opt(c.epochs)},
              {"lambda", opt(c.lambda)},
              {"xi", opt(c.xi)},
              {"seeds", seeds},
              {"hidden", opt(c.hidden)},
              {"activation", activation_name(c.activation)},
              {"scale", c.scale},
              {"tasks", opt(c.tasks)},
              {"n_train", opt(c.n_train)},
              {"n_test", opt(c.n_test)},
              {"learning_rate", opt(c.learning_rate)},
              {"batch_size", c.batch_size},
              {"mode", c.mode ? Json(to_string(*c.mode)) : Json(nullptr)},
              {"fisher_mode", fisher_name(c.fisher_mode)},
              {"normalization", normalization_name(c.normalization)},
              {"rotation_step", c.rotation_step},
              {"data_dir", c.data_dir},
              {"out_dir", c.out_dir},
              {"write_records", c.write_records},
              {"trace_every", c.trace_every},
              {"dim", c.dim},
              {"condition_number", c.condition_number},
              {"spread", c.spread},
              {"classes", c.classes},
              {"input_dim", c.input_dim}};
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  ExperimentConfig c;
  auto has = [&](const char* key) { return j.contains(key) && !j.at(key).is_null(); };
  try {
    if (has("suite")) {
      const auto s = parse_suite(j.at("suite").get<std::string>());
      if (!s) throw ConfigError("unknown suite " + j.at("suite").dump());
      c.suite = *s;
    }
    if (has("methods")) {
      std::vector<Method> ms;
      for (const auto& m : j.at("methods")) {
        const auto parsed = parse_method(m.get<std::string>());
        if (!parsed) throw ConfigError("unknown method " + m.dump());
        ms.push_back(*parsed);
      }
      c.methods = ms;
    }
    if (has("epochs")) c.epochs = j.at("epochs").get<std::vector<Index>>();
    if (has("lambda")) c.lambda = j.at("lambda").get<double>();
    if (has("xi")) c.xi = j.at("xi").get<double>();
    if (has("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (has("hidden")) c.hidden = j.at("hidden").get<std::vector<Index>>();
    if (has("activation")) c.activation = parse_activation(j.at("activation").get<std::string>());
    if (has("scale")) c.scale = j.at("scale").get<double>();
    if (has("tasks")) c.tasks = j.at("tasks").get<Index>();
    if (has("n_train")) c.n_train = j.at("n_train").get<Index>();
    if (has("n_test")) c.n_test = j.at("n_test").get<Index>();
    if (has("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (has("batch_size")) c.batch_size = j.at("batch_size").get<Index>();
    if (has("mode")) {
      const auto m = parse_train_mode(j.at("mode").get<std::string>());
      if (!m) throw ConfigError("unknown mode " + j.at("mode").dump());
      c.mode = *m;
    }
    if (has("fisher_mode")) c.fisher_mode = parse_fisher(j.at("fisher_mode").get<std::string>());
    if (has("normalization")) c.normalization = parse_normalization(j.at("normalization").get<std::string>());
    if (has("rotation_step")) c.rotation_step = j.at("rotation_step").get<double>();
    if (has("data_dir")) c.data_dir = j.at("data_dir").get<std::string>();
    if (has("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (has("write_records")) c.write_records = j.at("write_records").get<bool>();
    if (has("trace_every")) c.trace_every = j.at("trace_every").get<Index>();
    if (has("dim")) c.dim = j.at("dim").get<Index>();
    if (has("condition_number")) c.condition_number = j.at("condition_number").get<double>();
    if (has("spread")) c.spread = j.at("spread").get<double>();
    if (has("classes")) c.classes = j.at("classes").get<Index>();
    if (has("input_dim")) c.input_dim = j.at("input_dim").get<Index>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
  return c;
}

SeedTasks build_tasks(const ExperimentConfig& r, std::uint64_t seed, const ImagePool* pool) {
  SeedTasks out;
  const Index k_tasks = *r.tasks;
  if (r.suite == Suite::quadratic) {
    const auto tasks = gen_quadratic_suite(k_tasks, r.dim, r.condition_number, r.spread, seed);
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      auto obj = std::make_shared<QuadraticObjective>(tasks[k].objective());
      out.tasks.push_back({obj, obj});
      std::ostringstream d;
      d << "quadratic(task=" << k << ",dim=" << r.dim << ",condition=" << r.condition_number
        << ",spread=" << r.spread << ",seed=" << seed << ")";
      out.descriptors.push_back(d.str());
    }
    out.w_init = Vector::Zero(r.dim);
    return out;
  }

  std::vector<TaskDataset> data;
  Index input_dim = 0;
  Index classes = 0;
  if (is_image(r.suite)) {
    if (!pool) throw ConfigError("image suites need a loaded image pool");
    TaskDataset base = split_pool(*pool, scaled(*r.n_train, r.scale), scaled(*r.n_test, r.scale), 0, seed);
    base.population = Batch{};  // the benchmarks only train and test
    for (Index k = 0; k < k_tasks; ++k) {
      if (r.suite == Suite::permuted) {
        const std::uint64_t pseed =
            k == 0 ? 0 : (Rng::keyed(seed, {0x9e3, static_cast<std::uint64_t>(k)}).next_u64() | 1U);
        data.push_back(permute_task(base, pseed));
      } else {
        data.push_back(rotate_task(base, static_cast<double>(k) * r.rotation_step));
      }
    }
    input_dim = pool->rows * pool->cols;
    classes = 10;
  } else {
    GaussianTaskOptions g;
    g.tasks = k_tasks;
    g.classes = r.classes;
    g.dim = r.input_dim;
    g.rotation_step_degrees = r.rotation_step;
    g.n_train = scaled(*r.n_train, r.scale);
    g.n_test = scaled(*r.n_test, r.scale);
    g.n_population = 1;
    g.seed = seed;
    data = gen_gaussian_tasks(g);
    input_dim = r.input_dim;
    classes = r.classes;
  }

  MlpArch arch;
  arch.layer_sizes.push_back(input_dim);
  for (const auto h : *r.hidden) arch.layer_sizes.push_back(h);
  arch.layer_sizes.push_back(classes);
  arch.hidden_activation = r.activation;
  for (auto& t : data) {
    out.tasks.push_back({std::make_shared<MlpObjective>(arch, std::move(t.train)),
                         std::make_shared<MlpObjective>(arch, std::move(t.test))});
    out.descriptors.push_back(t.descriptor);
  }
  Rng init = Rng::keyed(seed, {0x1a17});
  out.w_init = init_params(arch, init);
  return out;
}

ResultsRow aggregate(Index epochs, Method method, std::string metric, std::vector<double> values) {
  ResultsRow row;
  row.epochs = epochs;
  row.method = method;
  row.metric = std::move(metric);
  row.values = std::move(values);
  const double n = static_cast<double>(row.values.size());
  if (row.values.empty()) {
    row.mean = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  double sum = 0.0;
  for (const double v : row.values) sum += v;
  row.mean = sum / n;
  if (row.values.size() >= 2) {
    double ss = 0.0;
    for (const double v : row.values) ss += (v - row.mean) * (v - row.mean);
    row.stddev = std::sqrt(ss / (n - 1.0));
  }
  return row;
}

const ResultsRow* ExperimentResult::row(Index epochs, Method method) const {
  for (const auto& r : rows)
    if (r.epochs == epochs && r.method == method) return &r;
  return nullptr;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  ExperimentResult result;
  result.config = resolve(cfg);
  const auto& r = result.config;
  const Json echo = results_config(r);
  result.hash = config_hash(echo);
  const std::filesystem::path out_dir(r.out_dir);

  std::optional<ImagePool> pool;
  if (is_image(r.suite)) {
    const std::filesystem::path dir(r.data_dir);
    try {
      pool = load_idx(dir / "images-idx3-ubyte", dir / "labels-idx1-ubyte");
    } catch (const IdxError& e) {
      throw ConfigError(std::string("cannot load image data: ") + e.what());
    }
  }

  std::map<std::pair<Index, Method>, std::vector<double>> values;
  std::string metric = "accuracy";
  for (const auto seed : *r.seeds) {
    SeedTasks seed_tasks;
    try {
      seed_tasks = build_tasks(r, seed, pool ? &*pool : nullptr);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      for (const auto m : *r.methods)
        for (const auto e_count : *r.epochs) result.failures.push_back({m, e_count, seed, e.what()});
      continue;
    }
    for (const auto method : *r.methods) {
      for (const auto epochs : *r.epochs) {
        const auto name = cell_name(method, epochs, seed);
        try {
          const auto tcfg = cell_train_config(r, method, epochs, seed);
          const auto run = run_sequence(seed_tasks.tasks, method, tcfg, seed_tasks.w_init);
          const bool classifier = !run.accuracy.empty() && !run.accuracy.back().empty();
          metric = classifier ? "accuracy" : "loss";
          const double value = classifier ? run.final_average_accuracy() : run.final_average_loss();
          values[{epochs, method}].push_back(value);
          if (r.write_records) {
            Json provenance{{"config_hash", hex64(result.hash)},
                            {"experiment", echo},
                            {"cell", {{"method", to_string(method)}, {"epochs", epochs}, {"seed", seed}}},
                            {"task_descriptors", seed_tasks.descriptors}};
            const auto path = out_dir / "records" / (name + ".tclrec");
            write_record_file(path, encode_run(run, provenance));
            result.files.push_back(path);
          }
          if (log) *log << name << ' ' << metric << '=' << number(value) << '\n';
        } catch (const std::exception& e) {
          result.failures.push_back({method, epochs, seed, e.what()});
          if (log) *log << name << " FAILED: " << e.what() << '\n';
        }
      }
    }
  }

  std::vector<Index> epoch_order = *r.epochs;
  std::sort(epoch_order.begin(), epoch_order.end());
  epoch_order.erase(std::unique(epoch_order.begin(), epoch_order.end()), epoch_order.end());
  for (const auto e : epoch_order) {
    for (const auto m : *r.methods) {
      const auto it = values.find({e, m});
      if (it == values.end()) continue;
      result.rows.push_back(aggregate(e, m, metric, it->second));
    }
  }

  Json rows = Json::array();
  std::ostringstream csv;
  csv << csv_header(result.hash) << "epochs,method,metric,mean,std,n\n";
  for (const auto& row : result.rows) {
    rows.push_back({{"epochs", row.epochs},
                    {"method", to_string(row.method)},
                    {"metric", row.metric},
                    {"mean", row.mean},
                    {"std", opt(row.stddev)},
                    {"n", row.values.size()},
                    {"values", row.values}});
    csv << row.epochs << ',' << to_string(row.method) << ',' << row.metric << ',' << number(row.mean) << ','
        << (row.stddev ? number(*row.stddev) : "") << ',' << row.values.size() << '\n';
  }
  Json failures = Json::array();
  for (const auto& f : result.failures)
    failures.push_back({{"method", to_string(f.method)}, {"epochs", f.epochs}, {"seed", f.seed}, {"error", f.error}});

  const Json summary{{"config", echo},
                     {"config_hash", hex64(result.hash)},
                     {"version", version_string()},
                     {"rows", rows},
                     {"failures", failures}};
  write_json(out_dir / "results.json", summary);
  write_text(out_dir / "results.csv", csv.str());
  result.files.push_back(out_dir / "results.json");
  result.files.push_back(out_dir / "results.csv");

  // One series per method: metric against epochs per task.
  std::ostringstream plot;
  plot << csv_header(result.hash) << "method,epochs," << metric << "_mean," << metric << "_std\n";
  for (const auto m : *r.methods) {
    for (const auto& row : result.rows) {
      if (row.method != m) continue;
      plot << to_string(m) << ',' << row.epochs << ',' << number(row.mean) << ','
           << (row.stddev ? number(*row.stddev) : "") << '\n';
    }
  }
  const auto plot_path = out_dir / "plot" / (metric + "_vs_epochs.csv");
  write_text(plot_path, plot.str());
  result.files.push_back(plot_path);
  return result;
}

Verdict audit(const CheckRecord& r) {
  if (r.verdict != Verdict::satisfied) return r.verdict;
  if (std::isnan(r.lhs) || std::isnan(r.rhs)) return Verdict::indeterminate;
  if (r.lhs <= r.rhs + kExactSlack) return Verdict::satisfied;
  return r.constants == "exact" ? Verdict::violated : Verdict::indeterminate;
}

ReportSummary tally(const std::vector<SuiteResult>& suites) {
  ReportSummary summary;
  for (const auto& suite : suites) {
    ReportSummary::Entry entry;
    entry.suite = suite.name;
    for (std::size_t i = 0; i < suite.records.size(); ++i) {
      switch (audit(suite.records[i])) {
        case Verdict::satisfied: ++entry.counts.satisfied; break;
        case Verdict::violated:
          ++entry.counts.violated;
          entry.violated.push_back(static_cast<Index>(i));
          break;
        case Verdict::indeterminate: ++entry.counts.indeterminate; break;
      }
    }
    summary.total.satisfied += entry.counts.satisfied;
    summary.total.violated += entry.counts.violated;
    summary.total.indeterminate += entry.counts.indeterminate;
    summary.suites.push_back(std::move(entry));
  }
  return summary;
}

ReportSummary emit_report(const std::vector<SuiteResult>& suites, const std::filesystem::path& dir,
                          const Json& provenance) {
  if (suites.empty()) throw std::invalid_argument("emit_report: no check records");
  for (const auto& suite : suites)
    if (suite.records.empty()) throw std::invalid_argument("emit_report: suite " + suite.name + " has no records");
  const ReportSummary summary = tally(suites);
  Json listed = Json::array();
  for (std::size_t s = 0; s < suites.size(); ++s) {
    const auto& suite = suites[s];
    const auto& entry = summary.suites[s];
    Json records = Json::array();
    for (auto rec : suite.records) {
      rec.verdict = audit(rec);
      records.push_back(to_json(rec));
    }
    const Json counts{{"satisfied", entry.counts.satisfied},
                      {"violated", entry.counts.violated},
                      {"indeterminate", entry.counts.indeterminate}};
    Json file = provenance;
    file["suite"] = suite.name;
    file["info"] = suite.info;
    file["records"] = records;
    file["summary"] = counts;
    file["version"] = version_string();
    write_json(dir / (suite.name + ".json"), file);
    Json item = counts;
    item["suite"] = suite.name;
    item["file"] = suite.name + ".json";
    item["violated_instances"] = entry.violated;
    listed.push_back(item);
  }
  Json j = provenance;
  j["version"] = version_string();
  j["suites"] = listed;
  j["total"] = {{"satisfied", summary.total.satisfied},
                {"violated", summary.total.violated},
                {"indeterminate", summary.total.indeterminate}};
  write_json(dir / "summary.json", j);
  std::string header = "version " + version_string();
  if (provenance.contains("config_hash")) header += ", config " + provenance.at("config_hash").get<std::string>();
  write_text(dir / "summary.txt", header + "\n" + format_summary(summary));
  return summary;
}

std::vector<SuiteResult> load_report(const std::filesystem::path& dir) {
  const Json summary = read_json(dir / "summary.json");
  if (!summary.contains("suites")) throw RecordError("summary.json lists no suites");
  std::vector<SuiteResult> out;
  for (const auto& s : summary.at("suites")) {
    const Json file = read_json(dir / s.at("file").get<std::string>());
    SuiteResult suite;
    suite.name = file.at("suite").get<std::string>();
    suite.info = file.value("info", Json::object());
    for (const auto& r : file.at("records")) suite.records.push_back(check_from_json(r));
    out.push_back(std::move(suite));
  }
  if (out.empty()) throw RecordError("no check records under " + dir.string());
  return out;
}

std::string format_summary(const ReportSummary& summary) {
  std::ostringstream s;
  s << std::left << std::setw(14) << "suite" << std::right << std::setw(11) << "satisfied" << std::setw(10)
    << "violated" << std::setw(15) << "indeterminate" << '\n';
  for (const auto& e : summary.suites) {
    s << std::left << std::setw(14) << e.suite << std::right << std::setw(11) << e.counts.satisfied << std::setw(10)
      << e.counts.violated << std::setw(15) << e.counts.indeterminate << '\n';
  }
  s << std::left << std::setw(14) << "total" << std::right << std::setw(11) << summary.total.satisfied
    << std::setw(10) << summary.total.violated << std::setw(15) << summary.total.indeterminate << '\n';
  for (const auto& e : summary.suites) {
    if (e.violated.empty()) continue;
    s << "violated in " << e.suite << ":";
    for (const auto i : e.violated) s << ' ' << i;
    s << '\n';
  }
  return s.str();
}

}  // namespace taylorcl
