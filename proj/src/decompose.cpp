// SPDX-License-Identifier: Apache-2.0
#include "sdq/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sdq/errors.hpp"
#include "sdq/parallel.hpp"
#include "sdq/sparsify.hpp"

namespace sdq {

OutlierMetric outlier_metric_from_name(std::string_view name) {
  if (name == "magnitude") return OutlierMetric::Magnitude;
  if (name == "product") return OutlierMetric::Product;
  if (name == "output-error") return OutlierMetric::OutputError;
  throw std::invalid_argument("unknown outlier metric '" + std::string(name) + "'");
}

OutlierOrder outlier_order_from_name(std::string_view name) {
  if (name == "large") return OutlierOrder::Large;
  if (name == "small") return OutlierOrder::Small;
  throw std::invalid_argument("unknown outlier order '" + std::string(name) + "'");
}

std::string to_string(OutlierMetric m) {
  switch (m) {
    case OutlierMetric::Magnitude:
      return "magnitude";
    case OutlierMetric::Product:
      return "product";
    case OutlierMetric::OutputError:
      return "output-error";
  }
  return "?";
}

std::string to_string(OutlierOrder o) { return o == OutlierOrder::Large ? "large" : "small"; }

std::string to_string(CoverageMode m) { return m == CoverageMode::Global ? "global" : "semilocal"; }

void DecompositionSpec::validate() const {
  if ((metric == OutlierMetric::Product) != calibration.has_value()) {
    throw ConfigError("calibration activations are required by, and only by, the product metric");
  }
  if ((metric == OutlierMetric::OutputError) != inlier_format.has_value()) {
    throw ConfigError("an inlier format is required by, and only by, the output-error metric");
  }
}

DenseMatrix score_output_error(const DenseMatrix& ws, const NumberFormat& inlier_format, std::size_t qvs) {
  DenseMatrix scores = subtract(ws, fake_quantize(ws, qvs, inlier_format, std::nullopt));
  for (double& v : scores.data()) v = std::fabs(v);
  return scores;
}

Decomposition extract_outliers(const DenseMatrix& ws, SparsityPattern source, const DecompositionSpec& spec) {
  spec.validate();
  const SparsityPattern op = spec.outlier_pattern;
  if (op.m() != source.m()) {
    throw ConfigError("outlier pattern " + op.to_string() + " and sparsity pattern " + source.to_string() +
                      " use different S-Vector sizes");
  }
  if (op.n() >= source.n()) {
    throw ConfigError("outlier count " + std::to_string(op.n()) + " leaves no inliers under " + source.to_string());
  }
  const NmReport report = validate_nm(ws, source);
  if (!report.valid) {
    const auto [r, b] = *report.first_violation;
    throw PatternViolation("input is not " + source.to_string() + " sparse", r, b);
  }

  DenseMatrix scores;
  switch (spec.metric) {
    case OutlierMetric::Magnitude:
      scores = score_magnitude(ws);
      break;
    case OutlierMetric::Product:
      scores = score_wanda(ws, *spec.calibration);
      break;
    case OutlierMetric::OutputError:
      scores = score_output_error(ws, *spec.inlier_format, spec.q_vector_size);
      break;
  }

  const std::size_t m = static_cast<std::size_t>(op.m());
  const std::size_t n_out = static_cast<std::size_t>(op.n());
  const bool descending = spec.order == OutlierOrder::Large;
  Decomposition d{DenseMatrix(ws.rows(), ws.cols()), DenseMatrix(ws.rows(), ws.cols())};
  parallel_for(ws.rows(), [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> nonzero;
    for (std::size_t r = begin; r < end; ++r) {
      for (std::size_t base = 0; base < ws.cols(); base += m) {
        nonzero.clear();
        for (std::size_t k = 0; k < m; ++k)
          if (ws(r, base + k) != 0.0) nonzero.push_back(base + k);
        std::stable_sort(nonzero.begin(), nonzero.end(), [&](std::size_t a, std::size_t b) {
          return descending ? scores(r, a) > scores(r, b) : scores(r, a) < scores(r, b);
        });
        for (std::size_t t = 0; t < nonzero.size(); ++t) {
          const std::size_t c = nonzero[t];
          (t < n_out ? d.outliers : d.inliers)(r, c) = ws(r, c);
        }
      }
    }
  });
  return d;
}

namespace {

/// Rank of `col` among the magnitudes of its S-Vector (0 = largest); ties go
/// to the lower offset.
std::size_t rank_in_block(std::span<const double> row, std::size_t col, std::size_t m) {
  const std::size_t base = col - col % m;
  const double v = std::fabs(row[col]);
  std::size_t rank = 0;
  for (std::size_t k = base; k < base + m; ++k) {
    const double u = std::fabs(row[k]);
    if (u > v || (u == v && k < col)) ++rank;
  }
  return rank;
}

/// Positions of the `count` largest magnitudes in a flat
/// buffer, ordered by magnitude then position.
std::vector<std::size_t> largest_positions(std::span<const double> data, std::size_t count) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  count = std::min(count, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double x = std::fabs(data[a]);
                      const double y = std::fabs(data[b]);
                      return x != y ? x > y : a < b;
                    });
  order.resize(count);
  return order;
}

void require_ratio(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("outlier ratio must lie in (0, 1)");
}

void finish(CoverageReport& rep) {
  rep.covered_fraction =
      rep.designated == 0 ? 1.0 : static_cast<double>(rep.covered) / static_cast<double>(rep.designated);
}

}  // namespace

CoverageReport coverage_global(const DenseMatrix& w, double p_ratio, SparsityPattern extraction) {
  require_ratio(p_ratio);
  const std::size_t m = static_cast<std::size_t>(extraction.m());
  if (w.cols() % m != 0) throw DimensionError("cols not divisible by S-Vector size");
  CoverageReport rep;
  rep.outlier_ratio = p_ratio;
  rep.extraction = extraction;
  rep.mode = CoverageMode::Global;
  const auto count = static_cast<std::size_t>(std::ceil(p_ratio * static_cast<double>(w.size()) - 1e-9));
  for (std::size_t flat : largest_positions(w.data(), count)) {
    const std::size_t r = flat / w.cols();
    const std::size_t c = flat % w.cols();
    ++rep.designated;
    if (rank_in_block(w.row(r), c, m) < static_cast<std::size_t>(extraction.n())) ++rep.covered;
  }
  finish(rep);
  return rep;
}

CoverageReport coverage_semilocal(const DenseMatrix& w, double p_ratio, SparsityPattern extraction, std::size_t qvs) {
  require_ratio(p_ratio);
  const std::size_t m = static_cast<std::size_t>(extraction.m());
  if (qvs == 0 || qvs % m != 0) {
    throw DimensionError("Q-Vector size " + std::to_string(qvs) + " is not a multiple of S-Vector size " +
                         std::to_string(m));
  }
  if (w.cols() % qvs != 0) throw DimensionError("cols not divisible by Q-Vector size");
  CoverageReport rep;
  rep.outlier_ratio = p_ratio;
  rep.extraction = extraction;
  rep.mode = CoverageMode::SemiLocal;
  rep.q_vector_size = qvs;
  const auto per_vector = static_cast<std::size_t>(std::floor(p_ratio * static_cast<double>(qvs) + 1e-9));
  for (std::size_t r = 0; r < w.rows(); ++r) {
    auto row = w.row(r);
    for (std::size_t base = 0; base < w.cols(); base += qvs) {
      for (std::size_t off : largest_positions(row.subspan(base, qvs), per_vector)) {
        ++rep.designated;
        if (rank_in_block(row, base + off, m) < static_cast<std::size_t>(extraction.n())) ++rep.covered;
      }
    }
  }
  finish(rep);
  return rep;
}

}  // namespace sdq
