#pragma once

// Persistence. Run records are binary files:
//
//   "TCLREC01"                       8-byte magic
//   u64 n, then n bytes of JSON      metadata (keys sorted)
//   u64 tensor count, then for each tensor:
//     u32 name length, name bytes
//     u32 rank, rank x u64 extents
//     prod(extents) x f64            column-major payload
//
// All integers and floats are little-endian. Reports and tables are JSON or
// CSV text. Every file carries the config hash and the library version.

#include "taylorcl/curvature.hpp"
#include "taylorcl/proxy.hpp"
#include "taylorcl/theory.hpp"
#include "taylorcl/trainer.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace taylorcl {

using Json = nlohmann::json;

std::string version_string();
std::string hex64(std::uint64_t value);

/// FNV-1a of the compact dump of `config` (object keys are sorted).
std::uint64_t config_hash(const Json& config);

class RecordError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Tensor {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<double> data;
};

struct RecordFile {
  Json meta = Json::object();
  std::vector<Tensor> tensors;

  const Tensor& tensor(const std::string& name) const;
  void add(std::string name, const Vector& v);
  void add(std::string name, const Matrix& m);
};

std::string encode(const RecordFile& file);
RecordFile decode(const std::string& bytes);
void write_record_file(const std::filesystem::path& path, const RecordFile& file);
RecordFile read_record_file(const std::filesystem::path& path);

Json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const Json& j);

/// Curvature payload under `prefix`; returns the metadata describing it.
Json add_curvature(RecordFile& file, const std::string& prefix, const HessianRep& rep);
HessianRep read_curvature(const RecordFile& file, const std::string& prefix, const Json& meta);

/// `provenance` is merged into the metadata (descriptors, hashes, version).
RecordFile encode_run(const RunRecord& run, const Json& provenance);
RunRecord decode_run(const RecordFile& file);

Json to_json(const CheckRecord& r);
CheckRecord check_from_json(const Json& j);

/// Pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace taylorcl
