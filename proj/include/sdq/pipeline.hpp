// SPDX-License-Identifier: Apache-2.0
//
// End-to-end sparsify -> decompose -> quantize on one weight matrix, the
// decomposed fake-quantized SpMM, and the sparsity-only / quantization-only
// baselines it is compared against.
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "sdq/codec.hpp"
#include "sdq/costmodel.hpp"
#include "sdq/decompose.hpp"
#include "sdq/sparsify.hpp"
#include "sdq/tensor.hpp"

namespace sdq {

inline constexpr std::size_t kDefaultQVectorSize = 16;

struct SdqConfig {
  SparsifyMethod method = SparsifyMethod::Wanda;
  SparsityPattern sparsity{7, 8};
  double damping = kDefaultDamping;

  /// 0 disables the outlier branch.
  int outlier_n = 1;
  NumberFormat outlier_format = NumberFormat::int8();
  int inlier_n = 6;
  NumberFormat inlier_format = NumberFormat::fp4();

  OutlierMetric metric = OutlierMetric::Product;
  OutlierOrder order = OutlierOrder::Large;

  std::optional<NumberFormat> scale_format;
  std::size_t q_vector_size = kDefaultQVectorSize;
  NumberFormat outlier_activation_format = NumberFormat::int8();
  NumberFormat inlier_activation_format = NumberFormat::fp4();
  IndexEncoding index_encoding = IndexEncoding::Ellpack;

  std::optional<SparsityPattern> outlier_pattern() const;
  SparsityPattern inlier_pattern() const { return {inlier_n, sparsity.m()}; }

  /// Naming string, e.g. "SDQ-W7:8-1:8int8-6:8fp4". Magnitude pruning has no
  /// method letter.
  std::string name() const;

  /// Throws ConfigError when branch patterns do not add up to the sparsity
  /// pattern or the S-Vector sizes differ.
  void validate() const;
};

/// Parses SDQ-[W|S|M]{N}:{M}-{N_o}:{M}{fmt}-{N_i}:{M}{fmt}. A missing method
/// letter means magnitude pruning. Activation formats follow the branch weight
/// formats; every other field keeps its default. Throws ParseError on
/// malformed text and ConfigError on inconsistent patterns.
SdqConfig parse_config(std::string_view name);

struct QuantizedBranch {
  std::string label;
  StructuredSparseMatrix skeleton;
  QuantizedTensor weights;
  NumberFormat activation_format = NumberFormat::int8();
  /// Dequantized weights through the skeleton.
  StructuredSparseMatrix dequantized;
};

/// Relative Frobenius output error after each stage.
struct StageErrors {
  double sparsify = 0.0;
  /// Quantized weights, unquantized activations.
  double weight_quant = 0.0;
  /// Quantized weights and activations.
  double total = 0.0;
};

struct SdqResult {
  DenseMatrix w_sparse;
  std::optional<QuantizedBranch> outliers;
  QuantizedBranch inliers;
  DenseMatrix w_hat;
  DenseMatrix output;
  double output_error = 0.0;
  StageErrors stages;
  CostReport cost;
};

/// x_calib is samples × in-features (may be empty when no stage uses it);
/// x_eval is in-features × tokens.
SdqResult run_sdq(const DenseMatrix& w, const DenseMatrix& x_calib, const DenseMatrix& x_eval, const SdqConfig& cfg);

CostReport sdq_cost(const SdqConfig& cfg);

/// Relative output error of dense W·X with both operands fake-quantized.
double baseline_quant(const DenseMatrix& w, const DenseMatrix& x_eval, const NumberFormat& data_format,
                      const std::optional<NumberFormat>& scale_format, std::size_t qvs);

/// Relative output error of sparsified W against dense W, both at full precision.
double baseline_sparse(const DenseMatrix& w, const DenseMatrix& x_calib, const DenseMatrix& x_eval,
                       SparsifyMethod method, SparsityPattern pattern, double damping = kDefaultDamping);

}  // namespace sdq
