// SPDX-License-Identifier: Apache-2.0
#include "sdq/io.hpp"

#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "sdq/errors.hpp"

namespace sdq {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(static_cast<T>(p[i]) << (8 * i));
  return value;
}

}  // namespace

std::vector<std::uint8_t> encode_matrix(const DenseMatrix& m, Dtype dtype) {
  std::vector<std::uint8_t> out;
  const std::size_t width = dtype == Dtype::F32 ? 4 : 8;
  out.reserve(kContainerHeaderBytes + m.size() * width);
  for (char c : {'S', 'D', 'Q', 'T'}) out.push_back(static_cast<std::uint8_t>(c));
  put_le<std::uint16_t>(out, kContainerVersion);
  out.push_back(static_cast<std::uint8_t>(dtype));
  out.push_back(2);
  put_le<std::uint64_t>(out, m.rows());
  put_le<std::uint64_t>(out, m.cols());
  for (double v : m.data()) {
    if (dtype == Dtype::F32) {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    } else {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  return out;
}

DenseMatrix decode_matrix(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "SDQT", 4) != 0) {
    throw FormatError("not an SDQT container");
  }
  if (bytes.size() < kContainerHeaderBytes) {
    throw FormatError(fmt::format("truncated header: expected {} bytes, got {}", kContainerHeaderBytes, bytes.size()));
  }
  const auto version = get_le<std::uint16_t>(bytes.data() + 4);
  if (version != kContainerVersion) throw FormatError(fmt::format("unsupported SDQT version {}", version));
  const std::uint8_t dtype = bytes[6];
  if (dtype != static_cast<std::uint8_t>(Dtype::F32) && dtype != static_cast<std::uint8_t>(Dtype::F64)) {
    throw FormatError(fmt::format("unknown dtype tag {}", dtype));
  }
  if (bytes[7] != 2) throw FormatError(fmt::format("rank {} is not supported (expected 2)", bytes[7]));
  const auto rows = get_le<std::uint64_t>(bytes.data() + 8);
  const auto cols = get_le<std::uint64_t>(bytes.data() + 16);
  const std::size_t width = dtype == static_cast<std::uint8_t>(Dtype::F32) ? 4 : 8;
  if (cols != 0 && rows > (UINT64_MAX / cols) / width) throw FormatError("shape overflows the payload size");
  const std::uint64_t expected = kContainerHeaderBytes + rows * cols * width;
  if (bytes.size() != expected) {
    throw FormatError(fmt::format("{} payload: expected {} bytes, got {}",
                                  bytes.size() < expected ? "truncated" : "oversized", expected, bytes.size()));
  }
  std::vector<double> data(rows * cols);
  const std::uint8_t* p = bytes.data() + kContainerHeaderBytes;
  for (std::size_t i = 0; i < data.size(); ++i, p += width) {
    data[i] = width == 4 ? static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(p)))
                         : std::bit_cast<double>(get_le<std::uint64_t>(p));
    if (!std::isfinite(data[i])) throw FormatError(fmt::format("non-finite value at element {}", i));
  }
  return DenseMatrix(rows, cols, std::move(data));
}

void save_matrix(const std::filesystem::path& path, const DenseMatrix& m, Dtype dtype) {
  const auto bytes = encode_matrix(m, dtype);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

DenseMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_matrix(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest " + path.string() + ": " + e.what());
  }
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) -> std::filesystem::path {
    if (p.empty()) return {};
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  RunManifest m;
  try {
    m.config = j.at("config").get<std::string>();
    m.q_vector_size = j.value("qvs", m.q_vector_size);
    m.scale_format = j.value("scale_format", m.scale_format);
    m.metric = j.value("metric", m.metric);
    m.order = j.value("order", m.order);
    m.index_encoding = j.value("index_encoding", m.index_encoding);
    m.damping = j.value("damping", m.damping);
    m.seed = j.value("seed", m.seed);
    const auto& inputs = j.at("inputs");
    m.weights = resolve(inputs.at("weights").get<std::string>());
    m.calibration = resolve(inputs.value("calibration", std::string()));
    m.eval = resolve(inputs.at("eval").get<std::string>());
    if (j.contains("outputs")) {
      const auto& outputs = j.at("outputs");
      m.report = resolve(outputs.value("report", std::string()));
      m.reconstruction = resolve(outputs.value("reconstruction", std::string()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest " + path.string() + ": " + e.what());
  }
  return m;
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["config"] = config;
  j["qvs"] = q_vector_size;
  j["scale_format"] = scale_format;
  j["metric"] = metric;
  j["order"] = order;
  j["index_encoding"] = index_encoding;
  j["damping"] = damping;
  j["seed"] = seed;
  j["inputs"]["weights"] = weights.string();
  j["inputs"]["calibration"] = calibration.string();
  j["inputs"]["eval"] = eval.string();
  j["outputs"]["report"] = report.string();
  j["outputs"]["reconstruction"] = reconstruction.string();
  return j.dump(2) + "\n";
}

SdqConfig RunManifest::resolve() const {
  SdqConfig cfg = parse_config(config);
  cfg.q_vector_size = q_vector_size;
  cfg.scale_format = NumberFormat::from_optional_name(scale_format);
  cfg.metric = outlier_metric_from_name(metric);
  cfg.order = outlier_order_from_name(order);
  cfg.index_encoding = index_encoding_from_name(index_encoding);
  cfg.damping = damping;
  cfg.validate();
  return cfg;
}

void RunManifest::check_inputs() const {
  for (const auto* p : {&weights, &eval}) {
    if (!std::filesystem::exists(*p)) throw FormatError("input " + p->string() + " does not exist");
  }
  if (!calibration.empty() && !std::filesystem::exists(calibration)) {
    throw FormatError("input " + calibration.string() + " does not exist");
  }
}

void Report::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void Report::set(const std::string& key, double value) {
  // Integral values keep a ".0" so the field still reads as real.
  if (std::isfinite(value) && std::abs(value) < 1e15 && value == std::trunc(value)) {
    set(key, fmt::format("{:.1f}", value));
  } else {
    set(key, fmt::format("{:.17g}", value));
  }
}

std::optional<std::string> Report::get(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return std::nullopt;
}

std::string Report::str() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

void append_config(Report& report, const SdqConfig& cfg) {
  report.set("config.name", cfg.name());
  report.set("config.sparsify.method", to_string(cfg.method));
  report.set("config.sparsify.pattern", cfg.sparsity.to_string());
  report.set("config.sparsify.damping", cfg.damping);
  report.set("config.decompose.outlier_pattern",
             std::to_string(cfg.outlier_n) + ":" + std::to_string(cfg.sparsity.m()));
  report.set("config.decompose.inlier_pattern", cfg.inlier_pattern().to_string());
  report.set("config.decompose.metric", to_string(cfg.metric));
  report.set("config.decompose.order", to_string(cfg.order));
  report.set("config.quantize.outlier_format", cfg.outlier_format.name());
  report.set("config.quantize.inlier_format", cfg.inlier_format.name());
  report.set("config.quantize.outlier_activation_format", cfg.outlier_activation_format.name());
  report.set("config.quantize.inlier_activation_format", cfg.inlier_activation_format.name());
  report.set("config.quantize.scale_format", format_name(cfg.scale_format));
  report.set("config.quantize.qvs", cfg.q_vector_size);
  report.set("config.quantize.activation_scales", "dynamic");
  report.set("config.cost.index_encoding", to_string(cfg.index_encoding));
  report.set("config.accumulator", "double");
}

void append_cost(Report& report, const std::string& prefix, const CostReport& cost) {
  report.set(prefix + ".effective_throughput", cost.effective_throughput);
  report.set(prefix + ".effective_throughput_display", format_throughput(cost.effective_throughput));
  report.set(prefix + ".bits_per_weight", cost.bits_per_weight);
  report.set(prefix + ".data_bits", cost.breakdown.data_bits);
  report.set(prefix + ".index_bits", cost.breakdown.index_bits);
  report.set(prefix + ".scale_bits", cost.breakdown.scale_bits);
  report.set(prefix + ".scale_accounting", "per Q-Vector of stored values");
  for (const auto& b : cost.branches) {
    const std::string p = prefix + ".branch." + b.label;
    report.set(p + ".pattern", b.pattern.to_string());
    report.set(p + ".data_bits_per_value", b.data_bits);
    report.set(p + ".compute_bits", b.compute_bits);
    report.set(p + ".scale_bits_per_factor", b.scale_bits);
    report.set(p + ".bits_per_weight", b.per_weight.total());
  }
}

}  // namespace sdq
