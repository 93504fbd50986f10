#include "taylorcl/record.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#ifndef TAYLORCL_VERSION
#define TAYLORCL_VERSION "dev"
#endif

namespace taylorcl {

namespace {

constexpr char kMagic[8] = {'T', 'C', 'L', 'R', 'E', 'C', '0', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t u64() { return take<std::uint64_t>(8); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(take<std::uint64_t>(4)); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw RecordError("record file truncated");
  }
  template <class T>
  T take(int width) {
    need(static_cast<std::size_t>(width));
    T v = 0;
    for (int i = 0; i < width; ++i) v |= T{static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)])} << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

Vector to_vector(const Tensor& t) {
  if (t.shape.size() != 1) throw RecordError("tensor " + t.name + " is not a vector");
  return Eigen::Map<const Vector>(t.data.data(), static_cast<Index>(t.data.size()));
}

Matrix to_matrix(const Tensor& t) {
  if (t.shape.size() != 2) throw RecordError("tensor " + t.name + " is not a matrix");
  return Eigen::Map<const Matrix>(t.data.data(), static_cast<Index>(t.shape[0]), static_cast<Index>(t.shape[1]));
}

template <class E>
E enum_from(const Json& j, const char* key, std::optional<E> (*parse)(std::string_view)) {
  const auto parsed = parse(j.at(key).get<std::string>());
  if (!parsed) throw RecordError(std::string("unknown value for ") + key);
  return *parsed;
}

std::optional<Normalization> parse_normalization(std::string_view s) {
  if (s == "average") return Normalization::average;
  if (s == "sum") return Normalization::sum;
  return std::nullopt;
}

std::optional<FisherMode> parse_fisher(std::string_view s) {
  if (s == "sampled") return FisherMode::sampled_label;
  if (s == "empirical") return FisherMode::empirical_label;
  return std::nullopt;
}

}  // namespace

std::string version_string() { return std::string("taylorcl ") + TAYLORCL_VERSION; }

std::string hex64(std::uint64_t value) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << value;
  return s.str();
}

std::uint64_t config_hash(const Json& config) { return fnv1a64(config.dump()); }

const Tensor& RecordFile::tensor(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw RecordError("record has no tensor named " + name);
}

void RecordFile::add(std::string name, const Vector& v) {
  tensors.push_back({std::move(name), {static_cast<std::uint64_t>(v.size())}, {v.data(), v.data() + v.size()}});
}

void RecordFile::add(std::string name, const Matrix& m) {
  tensors.push_back({std::move(name),
                     {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())},
                     {m.data(), m.data() + m.size()}});
}

std::string encode(const RecordFile& file) {
  std::string out(kMagic, sizeof(kMagic));
  const std::string meta = file.meta.dump();
  put_u64(out, meta.size());
  out += meta;
  put_u64(out, file.tensors.size());
  for (const auto& t : file.tensors) {
    std::uint64_t count = 1;
    for (const auto e : t.shape) count *= e;
    if (count != t.data.size()) throw RecordError("tensor " + t.name + " payload does not match its shape");
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (const auto e : t.shape) put_u64(out, e);
    for (const double x : t.data) put_u64(out, std::bit_cast<std::uint64_t>(x));
  }
  return out;
}

RecordFile decode(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw RecordError("not a run-record file (bad magic)");
  Reader in(bytes);
  in.str(sizeof(kMagic));
  RecordFile file;
  const auto meta_len = in.u64();
  file.meta = Json::parse(in.str(meta_len));
  const auto count = in.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    Tensor t;
    t.name = in.str(in.u32());
    const auto rank = in.u32();
    std::uint64_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      t.shape.push_back(in.u64());
      n *= t.shape.back();
    }
    t.data.reserve(n);
    for (std::uint64_t j = 0; j < n; ++j) t.data.push_back(in.f64());
    file.tensors.push_back(std::move(t));
  }
  if (!in.done()) throw RecordError("trailing bytes after the last tensor");
  return file;
}

void write_record_file(const std::filesystem::path& path, const RecordFile& file) {
  write_text(path, encode(file));
}

RecordFile read_record_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RecordError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return decode(s.str());
}

Json to_json(const TrainConfig& cfg) {
  return Json{{"mode", to_string(cfg.mode)},
              {"learning_rate", cfg.learning_rate},
              {"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"lambda", cfg.lambda},
              {"xi", cfg.xi},
              {"include_const", cfg.flags.include_const},
              {"include_grad", cfg.flags.include_grad},
              {"normalization", cfg.normalization == Normalization::average ? "average" : "sum"},
              {"fisher_mode", cfg.fisher_mode == FisherMode::sampled_label ? "sampled" : "empirical"},
              {"psd_project", cfg.psd_project},
              {"seed", cfg.seed},
              {"trace_every", cfg.trace_every},
              {"keep_iterates", cfg.keep_iterates},
              {"lr_decay", cfg.lr_decay}};
}

TrainConfig train_config_from_json(const Json& j) {
  TrainConfig cfg;
  cfg.mode = enum_from<TrainMode>(j, "mode", parse_train_mode);
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.epochs = j.at("epochs").get<Index>();
  cfg.batch_size = j.at("batch_size").get<Index>();
  cfg.lambda = j.at("lambda").get<double>();
  cfg.xi = j.at("xi").get<double>();
  cfg.flags.include_const = j.at("include_const").get<bool>();
  cfg.flags.include_grad = j.at("include_grad").get<bool>();
  cfg.normalization = enum_from<Normalization>(j, "normalization", parse_normalization);
  cfg.fisher_mode = enum_from<FisherMode>(j, "fisher_mode", parse_fisher);
  cfg.psd_project = j.at("psd_project").get<bool>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.trace_every = j.at("trace_every").get<Index>();
  cfg.keep_iterates = j.at("keep_iterates").get<bool>();
  cfg.lr_decay = j.at("lr_decay").get<double>();
  return cfg;
}

Json add_curvature(RecordFile& file, const std::string& prefix, const HessianRep& rep) {
  Json meta{{"kind", to_string(kind_of(rep))}, {"dim", dim(rep)}};
  if (const auto* full = std::get_if<FullHessian>(&rep)) {
    file.add(prefix + "/matrix", full->matrix);
  } else if (const auto* diag = std::get_if<DiagonalFisher>(&rep)) {
    file.add(prefix + "/diagonal", diag->diagonal);
  } else if (const auto* si = std::get_if<SIDiagonal>(&rep)) {
    file.add(prefix + "/importance", si->importance);
  } else {
    const auto& kron = std::get<KroneckerFactors>(rep);
    Json layout = Json::array();
    for (std::size_t l = 0; l < kron.layout.size(); ++l) {
      const auto& s = kron.layout[l];
      layout.push_back({s.offset, s.fan_in, s.fan_out});
      file.add(prefix + "/a/" + std::to_string(l), kron.a[l]);
      file.add(prefix + "/g/" + std::to_string(l), kron.g[l]);
    }
    meta["layout"] = layout;
  }
  return meta;
}

HessianRep read_curvature(const RecordFile& file, const std::string& prefix, const Json& meta) {
  const auto kind = parse_curvature_kind(meta.at("kind").get<std::string>());
  if (!kind) throw RecordError("unknown curvature kind");
  switch (*kind) {
    case CurvatureKind::full: return FullHessian{to_matrix(file.tensor(prefix + "/matrix"))};
    case CurvatureKind::diagonal_fisher: return DiagonalFisher{to_vector(file.tensor(prefix + "/diagonal"))};
    case CurvatureKind::si_diagonal: return SIDiagonal{to_vector(file.tensor(prefix + "/importance"))};
    case CurvatureKind::kronecker: {
      KroneckerFactors kron;
      std::size_t l = 0;
      for (const auto& s : meta.at("layout")) {
        kron.layout.push_back({s.at(0).get<Index>(), s.at(1).get<Index>(), s.at(2).get<Index>()});
        kron.a.push_back(to_matrix(file.tensor(prefix + "/a/" + std::to_string(l))));
        kron.g.push_back(to_matrix(file.tensor(prefix + "/g/" + std::to_string(l))));
        ++l;
      }
      return kron;
    }
  }
  throw RecordError("unknown curvature kind");
}

RecordFile encode_run(const RunRecord& run, const Json& provenance) {
  RecordFile file;
  file.meta = provenance;
  file.meta["format"] = "run-record";
  file.meta["version"] = version_string();
  file.meta["method"] = to_string(run.method);
  file.meta["config"] = to_json(run.config);
  file.meta["accuracy"] = run.accuracy;
  file.meta["test_loss"] = run.test_loss;
  file.meta["tasks"] = run.anchors.size();

  for (std::size_t k = 0; k < run.anchors.size(); ++k) file.add("anchor/" + std::to_string(k), run.anchors[k]);

  Json proxies = Json::array();
  for (std::size_t k = 0; k < run.proxies.size(); ++k) {
    const auto& p = run.proxies[k];
    const std::string prefix = "proxy/" + std::to_string(k);
    file.add(prefix + "/anchor", p.anchor);
    file.add(prefix + "/grad", p.grad_term);
    proxies.push_back({{"const_term", p.const_term},
                       {"include_const", p.flags.include_const},
                       {"include_grad", p.flags.include_grad},
                       {"curvature", add_curvature(file, prefix + "/curvature", p.curvature)}});
  }
  file.meta["proxies"] = proxies;

  Json traces = Json::array();
  for (std::size_t k = 0; k < run.traces.size(); ++k) {
    const auto& trace = run.traces[k];
    const Index anchors = trace.empty() ? 0 : static_cast<Index>(trace.front().anchor_distances.size());
    Matrix table(static_cast<Index>(trace.size()), 4 + anchors);
    bool iterates = !trace.empty();
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const auto& e = trace[i];
      const auto r = static_cast<Index>(i);
      table(r, 0) = static_cast<double>(e.step);
      table(r, 1) = e.objective;
      table(r, 2) = e.grad_norm;
      table(r, 3) = e.task_loss;
      for (Index a = 0; a < anchors; ++a) table(r, 4 + a) = e.anchor_distances[static_cast<std::size_t>(a)];
      iterates = iterates && e.iterate.has_value();
    }
    file.add("trace/" + std::to_string(k), table);
    if (iterates) {
      Matrix w(trace.front().iterate->size(), static_cast<Index>(trace.size()));
      for (std::size_t i = 0; i < trace.size(); ++i) w.col(static_cast<Index>(i)) = *trace[i].iterate;
      file.add("trace/" + std::to_string(k) + "/iterates", w);
    }
    traces.push_back({{"entries", trace.size()}, {"anchors", anchors}, {"iterates", iterates}});
  }
  file.meta["traces"] = traces;
  return file;
}

RunRecord decode_run(const RecordFile& file) {
  const auto& meta = file.meta;
  if (meta.value("format", "") != "run-record") throw RecordError("file is not a run record");
  RunRecord run;
  const auto method = parse_method(meta.at("method").get<std::string>());
  if (!method) throw RecordError("unknown method");
  run.method = *method;
  run.config = train_config_from_json(meta.at("config"));
  run.accuracy = meta.at("accuracy").get<std::vector<std::vector<double>>>();
  run.test_loss = meta.at("test_loss").get<std::vector<std::vector<double>>>();
  const auto tasks = meta.at("tasks").get<std::size_t>();
  for (std::size_t k = 0; k < tasks; ++k) run.anchors.push_back(to_vector(file.tensor("anchor/" + std::to_string(k))));

  const auto& proxies = meta.at("proxies");
  for (std::size_t k = 0; k < proxies.size(); ++k) {
    const auto& pm = proxies[k];
    const std::string prefix = "proxy/" + std::to_string(k);
    QuadraticProxy p;
    p.anchor = to_vector(file.tensor(prefix + "/anchor"));
    p.grad_term = to_vector(file.tensor(prefix + "/grad"));
    p.const_term = pm.at("const_term").get<double>();
    p.flags = {pm.at("include_const").get<bool>(), pm.at("include_grad").get<bool>()};
    p.curvature = read_curvature(file, prefix + "/curvature", pm.at("curvature"));
    run.proxies.push_back(std::move(p));
  }

  const auto& traces = meta.at("traces");
  for (std::size_t k = 0; k < traces.size(); ++k) {
    const Matrix table = to_matrix(file.tensor("trace/" + std::to_string(k)));
    const bool iterates = traces[k].at("iterates").get<bool>();
    Matrix w;
    if (iterates) w = to_matrix(file.tensor("trace/" + std::to_string(k) + "/iterates"));
    Trace trace;
    for (Index r = 0; r < table.rows(); ++r) {
      TraceEntry e;
      e.step = static_cast<Index>(table(r, 0));
      e.objective = table(r, 1);
      e.grad_norm = table(r, 2);
      e.task_loss = table(r, 3);
      for (Index a = 4; a < table.cols(); ++a) e.anchor_distances.push_back(table(r, a));
      if (iterates) e.iterate = w.col(r);
      trace.push_back(std::move(e));
    }
    run.traces.push_back(std::move(trace));
  }
  return run;
}

Json to_json(const CheckRecord& r) {
  Json j{{"check", r.check},   {"family", r.family}, {"instance", r.instance},
         {"lhs", r.lhs},       {"rhs", r.rhs},       {"verdict", to_string(r.verdict)},
         {"constants", r.constants}};
  if (!r.extras.empty()) j["extras"] = r.extras;
  return j;
}

CheckRecord check_from_json(const Json& j) {
  CheckRecord r;
  r.check = j.at("check").get<std::string>();
  r.family = j.at("family").get<std::string>();
  r.instance = j.at("instance").get<Index>();
  r.lhs = j.at("lhs").get<double>();
  r.rhs = j.at("rhs").get<double>();
  const auto v = j.at("verdict").get<std::string>();
  if (v == "satisfied") r.verdict = Verdict::satisfied;
  else if (v == "violated") r.verdict = Verdict::violated;
  else if (v == "indeterminate") r.verdict = Verdict::indeterminate;
  else throw RecordError("unknown verdict " + v);
  r.constants = j.at("constants").get<std::string>();
  if (j.contains("extras")) r.extras = j.at("extras").get<std::map<std::string, double>>();
  return r;
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RecordError("cannot open " + path.string());
  return Json::parse(in);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RecordError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw RecordError("write failed for " + path.string());
}

}  // namespace taylorcl
