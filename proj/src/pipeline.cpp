// SPDX-License-Identifier: Apache-2.0
#include "sdq/pipeline.hpp"

#include <array>
#include <cctype>
#include <string>

#include "sdq/errors.hpp"

namespace sdq {

std::optional<SparsityPattern> SdqConfig::outlier_pattern() const {
  if (outlier_n == 0) return std::nullopt;
  return SparsityPattern(outlier_n, sparsity.m());
}

namespace {

char method_letter(SparsifyMethod m) {
  switch (m) {
    case SparsifyMethod::Wanda:
      return 'W';
    case SparsifyMethod::SparseGpt:
      return 'S';
    case SparsifyMethod::Magnitude:
      return '\0';
  }
  return '\0';
}

}  // namespace

std::string SdqConfig::name() const {
  std::string s = "SDQ-";
  if (char c = method_letter(method)) s += c;
  const std::string m = std::to_string(sparsity.m());
  s += sparsity.to_string();
  s += "-" + std::to_string(outlier_n) + ":" + m + outlier_format.name();
  s += "-" + std::to_string(inlier_n) + ":" + m + inlier_format.name();
  return s;
}

void SdqConfig::validate() const {
  if (outlier_n < 0) throw ConfigError("outlier count must be non-negative");
  if (outlier_n + inlier_n != sparsity.n()) {
    throw ConfigError("outliers " + std::to_string(outlier_n) + " + inliers " + std::to_string(inlier_n) +
                      " != " + std::to_string(sparsity.n()) + " kept by " + sparsity.to_string());
  }
  if (inlier_n < 1) throw ConfigError("the inlier branch must keep at least one value per S-Vector");
  if (q_vector_size == 0) throw ConfigError("Q-Vector size must be positive");
  if (method == SparsifyMethod::SparseGpt && !(damping > 0.0)) throw ConfigError("damping must be positive");
}

namespace {

class NameCursor {
 public:
  explicit NameCursor(std::string_view text) : text_(text) {}

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == text_.size(); }
  char peek() const { return done() ? '\0' : text_[pos_]; }

  void expect(std::string_view lit) {
    if (text_.substr(pos_, lit.size()) != lit) fail("expected '" + std::string(lit) + "'");
    pos_ += lit.size();
  }

  int integer() {
    const std::size_t start = pos_;
    int v = 0;
    while (!done() && std::isdigit(static_cast<unsigned char>(peek())) && pos_ - start < 4) {
      v = v * 10 + (peek() - '0');
      ++pos_;
    }
    if (pos_ == start) fail("expected an integer");
    return v;
  }

  NumberFormat format() {
    // Longest names first so "fp8-e4m3" is not read as "fp8".
    static constexpr std::array<std::string_view, 13> kNames = {"ufp8-e6m2", "fp8-e4m3", "fp4-e2m1", "ufp8", "fp8",
                                                                "fp4",       "int2",     "int3",     "int4", "int5",
                                                                "int6",      "int7",     "int8"};
    for (auto name : kNames) {
      if (text_.substr(pos_, name.size()) == name) {
        pos_ += name.size();
        return NumberFormat::from_name(name);
      }
    }
    fail("expected a number format");
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

SparsityPattern checked_pattern(int n, int m) {
  try {
    return {n, m};
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

SdqConfig parse_config(std::string_view name) {
  NameCursor cur(name);
  cur.expect("SDQ-");
  SdqConfig cfg;
  switch (cur.peek()) {
    case 'W':
      cfg.method = SparsifyMethod::Wanda;
      cur.expect("W");
      break;
    case 'S':
      cfg.method = SparsifyMethod::SparseGpt;
      cur.expect("S");
      break;
    case 'M':
      cfg.method = SparsifyMethod::Magnitude;
      cur.expect("M");
      break;
    default:
      cfg.method = SparsifyMethod::Magnitude;
      break;
  }
  const int n = cur.integer();
  cur.expect(":");
  const int m = cur.integer();
  cur.expect("-");
  const int n_out = cur.integer();
  cur.expect(":");
  const int m_out = cur.integer();
  const NumberFormat out_fmt = cur.format();
  cur.expect("-");
  const int n_in = cur.integer();
  cur.expect(":");
  const int m_in = cur.integer();
  const NumberFormat in_fmt = cur.format();
  if (!cur.done()) cur.fail("unexpected trailing text");

  if (m_out != m || m_in != m) {
    throw ConfigError("all patterns must share M: got " + std::to_string(m) + ", " + std::to_string(m_out) + ", " +
                      std::to_string(m_in));
  }
  cfg.sparsity = checked_pattern(n, m);
  cfg.outlier_n = n_out;
  cfg.inlier_n = n_in;
  cfg.outlier_format = out_fmt;
  cfg.inlier_format = in_fmt;
  cfg.outlier_activation_format = out_fmt;
  cfg.inlier_activation_format = in_fmt;
  if (n_out > 0) checked_pattern(n_out, m);
  if (n_in > 0) checked_pattern(n_in, m);
  cfg.validate();
  return cfg;
}

namespace {

QuantizedBranch quantize_branch(std::string label, const DenseMatrix& w, SparsityPattern p,
                                const NumberFormat& weight_format, const NumberFormat& activation_format,
                                const SdqConfig& cfg) {
  QuantizedBranch b;
  b.label = std::move(label);
  b.skeleton = compress_nm(w, p);
  b.weights = quantize_sparse(b.skeleton, cfg.q_vector_size, weight_format, cfg.scale_format);
  b.activation_format = activation_format;
  b.dequantized = dequantize_sparse(b.weights, b.skeleton);
  return b;
}

}  // namespace

CostReport sdq_cost(const SdqConfig& cfg) {
  cfg.validate();
  std::vector<BranchSpec> branches;
  if (auto op = cfg.outlier_pattern()) {
    branches.push_back({"outliers", *op, cfg.outlier_format.total_bits(), cfg.outlier_activation_format.total_bits()});
  }
  branches.push_back(
      {"inliers", cfg.inlier_pattern(), cfg.inlier_format.total_bits(), cfg.inlier_activation_format.total_bits()});
  // Unquantized scales are stored as fp16.
  const int scale_bits = cfg.scale_format ? cfg.scale_format->total_bits() : 16;
  return decomposed_cost(branches, scale_bits, cfg.q_vector_size, cfg.index_encoding);
}

SdqResult run_sdq(const DenseMatrix& w, const DenseMatrix& x_calib, const DenseMatrix& x_eval, const SdqConfig& cfg) {
  cfg.validate();
  if (w.cols() != x_eval.rows()) {
    throw DimensionError("weights have " + std::to_string(w.cols()) + " inputs, eval activations have " +
                         std::to_string(x_eval.rows()) + " rows");
  }
  const bool calibrated = needs_calibration(cfg.method) || (cfg.outlier_n > 0 && cfg.metric == OutlierMetric::Product);
  if (calibrated && x_calib.empty()) {
    throw ConfigError(cfg.name() + " with the " + to_string(cfg.metric) + " metric needs calibration activations");
  }
  if (calibrated && x_calib.cols() != w.cols()) {
    throw DimensionError("calibration activations must have one column per weight input");
  }
  const std::size_t m = static_cast<std::size_t>(cfg.sparsity.m());
  if (w.cols() % m != 0) {
    throw DimensionError("weight inputs " + std::to_string(w.cols()) + " not divisible by S-Vector size " +
                         std::to_string(m));
  }
  // Each branch quantizes its packed slot stream, so every stream must tile evenly.
  for (int n : {cfg.outlier_n, cfg.inlier_n}) {
    const std::size_t stored = w.cols() / m * static_cast<std::size_t>(n);
    if (n > 0 && stored % cfg.q_vector_size != 0) {
      throw DimensionError("a " + std::to_string(n) + ":" + std::to_string(m) + " branch stores " +
                           std::to_string(stored) + " values per row, not a multiple of Q-Vector size " +
                           std::to_string(cfg.q_vector_size));
    }
  }
  if (x_eval.rows() % cfg.q_vector_size != 0) {
    throw DimensionError("activation rows " + std::to_string(x_eval.rows()) + " not divisible by Q-Vector size " +
                         std::to_string(cfg.q_vector_size));
  }

  SdqResult res;
  SignificanceMetric metric{cfg.method, std::nullopt, cfg.damping};
  if (needs_calibration(cfg.method)) metric.calibration = x_calib;
  res.w_sparse = sparsify(w, cfg.sparsity, metric);

  Decomposition parts{DenseMatrix(w.rows(), w.cols()), res.w_sparse};
  if (auto op = cfg.outlier_pattern()) {
    DecompositionSpec spec;
    spec.outlier_pattern = *op;
    spec.metric = cfg.metric;
    spec.order = cfg.order;
    spec.q_vector_size = cfg.q_vector_size;
    if (cfg.metric == OutlierMetric::Product) spec.calibration = x_calib;
    if (cfg.metric == OutlierMetric::OutputError) spec.inlier_format = cfg.inlier_format;
    parts = extract_outliers(res.w_sparse, cfg.sparsity, spec);
    res.outliers =
        quantize_branch("outliers", parts.outliers, *op, cfg.outlier_format, cfg.outlier_activation_format, cfg);
  }
  res.inliers = quantize_branch("inliers", parts.inliers, cfg.inlier_pattern(), cfg.inlier_format,
                                cfg.inlier_activation_format, cfg);

  const DenseMatrix reference = matmul_ref(w, x_eval);
  res.w_hat = decompress_nm(res.inliers.dequantized);
  res.output = spmm_ref(res.inliers.dequantized, fake_quantize_columns(x_eval, cfg.q_vector_size,
                                                                       cfg.inlier_activation_format, cfg.scale_format));
  if (res.outliers) {
    res.w_hat = add(decompress_nm(res.outliers->dequantized), res.w_hat);
    const DenseMatrix outlier_out =
        spmm_ref(res.outliers->dequantized,
                 fake_quantize_columns(x_eval, cfg.q_vector_size, cfg.outlier_activation_format, cfg.scale_format));
    res.output = add(outlier_out, res.output);
  }

  res.output_error = relative_error(res.output, reference);
  res.stages.sparsify = relative_error(matmul_ref(res.w_sparse, x_eval), reference);
  res.stages.weight_quant = relative_error(matmul_ref(res.w_hat, x_eval), reference);
  res.stages.total = res.output_error;
  res.cost = sdq_cost(cfg);
  return res;
}

double baseline_quant(const DenseMatrix& w, const DenseMatrix& x_eval, const NumberFormat& data_format,
                      const std::optional<NumberFormat>& scale_format, std::size_t qvs) {
  const DenseMatrix reference = matmul_ref(w, x_eval);
  const DenseMatrix out = matmul_ref(fake_quantize(w, qvs, data_format, scale_format),
                                     fake_quantize_columns(x_eval, qvs, data_format, scale_format));
  return relative_error(out, reference);
}

double baseline_sparse(const DenseMatrix& w, const DenseMatrix& x_calib, const DenseMatrix& x_eval,
                       SparsifyMethod method, SparsityPattern pattern, double damping) {
  SignificanceMetric metric{method, std::nullopt, damping};
  if (needs_calibration(method)) metric.calibration = x_calib;
  return relative_error(matmul_ref(sparsify(w, pattern, metric), x_eval), matmul_ref(w, x_eval));
}

}  // namespace sdq
