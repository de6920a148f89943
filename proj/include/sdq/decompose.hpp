// SPDX-License-Identifier: Apache-2.0
//
// Stage 2: split an N:M sparse weight tensor into an N_o:M outlier tensor and
// an (N − N_o):M inlier tensor by local (per S-Vector) extraction, plus the
// coverage analysis comparing local extraction to global / per-Q-Vector
// outlier designations.
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "sdq/codec.hpp"
#include "sdq/tensor.hpp"

namespace sdq {

enum class OutlierMetric { Magnitude, Product, OutputError };
enum class OutlierOrder { Large, Small };

OutlierMetric outlier_metric_from_name(std::string_view name);
OutlierOrder outlier_order_from_name(std::string_view name);
std::string to_string(OutlierMetric m);
std::string to_string(OutlierOrder o);

struct DecompositionSpec {
  SparsityPattern outlier_pattern{1, 8};
  OutlierMetric metric = OutlierMetric::Magnitude;
  OutlierOrder order = OutlierOrder::Large;
  /// samples × in-features; product metric only.
  std::optional<DenseMatrix> calibration;
  /// Inlier grid the output-error metric measures against.
  std::optional<NumberFormat> inlier_format;
  std::size_t q_vector_size = 16;

  /// Throws ConfigError when optional inputs do not match the metric.
  void validate() const;
};

struct Decomposition {
  DenseMatrix outliers;
  DenseMatrix inliers;
};

/// For every m-block, ranks the nonzeros by the metric (descending for Large,
/// ascending for Small, lower offset first on ties); the first N_o go to the
/// outlier tensor and the rest to the inlier tensor. `source` is the pattern
/// `ws` already satisfies. Throws ConfigError when N_o >= source.n().
Decomposition extract_outliers(const DenseMatrix& ws, SparsityPattern source, const DecompositionSpec& spec);

/// |ws − fake_quantize(ws, inlier_format, qvs)| elementwise, scale unquantized.
DenseMatrix score_output_error(const DenseMatrix& ws, const NumberFormat& inlier_format, std::size_t qvs);

enum class CoverageMode { Global, SemiLocal };

std::string to_string(CoverageMode m);

struct CoverageReport {
  double outlier_ratio = 0.0;
  SparsityPattern extraction{1, 8};
  CoverageMode mode = CoverageMode::Global;
  /// Semi-local only.
  std::size_t q_vector_size = 0;
  std::size_t designated = 0;
  std::size_t covered = 0;
  /// covered / designated, 1 when nothing is designated.
  double covered_fraction = 1.0;
};

/// Designates the ⌈p·numel⌉ largest |w| over the whole tensor and counts how
/// many rank within the top N_o magnitudes of their own S-Vector.
CoverageReport coverage_global(const DenseMatrix& w, double p_ratio, SparsityPattern extraction);

/// Designates the ⌊p·qvs⌋ largest |w| inside every Q-Vector and counts how many
/// rank within the top N_o magnitudes of their own S-Vector.
CoverageReport coverage_semilocal(const DenseMatrix& w, double p_ratio, SparsityPattern extraction, std::size_t qvs);

}  // namespace sdq
