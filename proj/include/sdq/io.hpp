// SPDX-License-Identifier: Apache-2.0
//
// SDQT matrix container, run manifests and line-oriented reports.
//
// SDQT layout (little-endian):
//   0  char[4]  "SDQT"
//   4  u16      version (1)
//   6  u8       dtype (1 = f32, 2 = f64)
//   7  u8       rank (2)
//   8  u64      rows
//   16 u64      cols
//   24 payload  rows·cols values, row-major
#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdq/pipeline.hpp"
#include "sdq/tensor.hpp"

namespace sdq {

enum class Dtype : std::uint8_t { F32 = 1, F64 = 2 };

inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 24;

std::vector<std::uint8_t> encode_matrix(const DenseMatrix& m, Dtype dtype = Dtype::F64);
DenseMatrix decode_matrix(const std::vector<std::uint8_t>& bytes);

void save_matrix(const std::filesystem::path& path, const DenseMatrix& m, Dtype dtype = Dtype::F64);
/// Throws FormatError on bad magic, version, dtype or rank, on a payload that
/// does not match the header, and on non-finite values.
DenseMatrix load_matrix(const std::filesystem::path& path);

/// Everything `sdq run` needs to reproduce a result. Relative input and output
/// paths resolve against the manifest's directory.
struct RunManifest {
  std::string config;
  std::size_t q_vector_size = kDefaultQVectorSize;
  std::string scale_format = "none";
  std::string metric = "product";
  std::string order = "large";
  std::string index_encoding = "ellpack";
  double damping = kDefaultDamping;
  std::uint64_t seed = 0;

  std::filesystem::path weights;
  std::filesystem::path calibration;
  std::filesystem::path eval;

  std::filesystem::path report;
  std::filesystem::path reconstruction;

  static RunManifest load(const std::filesystem::path& path);
  std::string to_json() const;

  /// parse_config(config) with the overrides applied.
  SdqConfig resolve() const;
  /// Throws FormatError naming the first input path that does not exist.
  void check_inputs() const;
};

/// Ordered key=value lines. Keys keep insertion order, doubles are written
/// with 17 significant digits so reports diff cleanly and round-trip.
class Report {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, double value);
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
  template <std::integral T>
    requires(!std::same_as<T, bool>)
  void set(const std::string& key, T value) {
    set(key, std::to_string(value));
  }

  std::optional<std::string> get(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  std::string str() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Writes the resolved configuration under `config.*`.
void append_config(Report& report, const SdqConfig& cfg);
/// Writes a cost report under `prefix.*`.
void append_cost(Report& report, const std::string& prefix, const CostReport& cost);

}  // namespace sdq
