// SPDX-License-Identifier: Apache-2.0
#include "sdq/sparsify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "sdq/errors.hpp"
#include "sdq/parallel.hpp"

namespace sdq {

SparsifyMethod sparsify_method_from_name(std::string_view name) {
  if (name == "magnitude") return SparsifyMethod::Magnitude;
  if (name == "wanda") return SparsifyMethod::Wanda;
  if (name == "sparsegpt") return SparsifyMethod::SparseGpt;
  throw std::invalid_argument("unknown sparsification method '" + std::string(name) + "'");
}

std::string to_string(SparsifyMethod m) {
  switch (m) {
    case SparsifyMethod::Magnitude:
      return "magnitude";
    case SparsifyMethod::Wanda:
      return "wanda";
    case SparsifyMethod::SparseGpt:
      return "sparsegpt";
  }
  return "?";
}

bool needs_calibration(SparsifyMethod m) { return m != SparsifyMethod::Magnitude; }

void SignificanceMetric::validate() const {
  if (needs_calibration(kind) != calibration.has_value()) {
    throw ConfigError(to_string(kind) + (needs_calibration(kind) ? " requires" : " does not take") +
                      " calibration activations");
  }
  if (kind == SparsifyMethod::SparseGpt && !(damping > 0.0)) {
    throw ConfigError("sparsegpt damping must be positive");
  }
}

DenseMatrix score_magnitude(const DenseMatrix& w) {
  DenseMatrix s = w;
  for (double& v : s.data()) v = std::fabs(v);
  return s;
}

std::vector<double> column_norms(const DenseMatrix& x) {
  std::vector<double> sq(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) sq[c] += row[c] * row[c];
  }
  for (double& v : sq) v = std::sqrt(v);
  return sq;
}

DenseMatrix score_wanda(const DenseMatrix& w, const DenseMatrix& x_calib) {
  if (x_calib.cols() != w.cols()) {
    throw DimensionError("calibration has " + std::to_string(x_calib.cols()) + " features, weights have " +
                         std::to_string(w.cols()) + " inputs");
  }
  const auto norms = column_norms(x_calib);
  DenseMatrix s(w.rows(), w.cols());
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t c = 0; c < w.cols(); ++c) s(r, c) = std::fabs(w(r, c)) * norms[c];
  return s;
}

namespace {

void require_pattern_shape(const DenseMatrix& w, SparsityPattern p) {
  if (w.cols() % static_cast<std::size_t>(p.m()) != 0) {
    throw DimensionError("cols " + std::to_string(w.cols()) + " not divisible by " + std::to_string(p.m()));
  }
}

/// In-block offsets of the n largest scores; stable so lower offsets win ties.
std::vector<std::size_t> top_n(std::span<const double> block_scores, int n) {
  std::vector<std::size_t> order(block_scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return block_scores[a] > block_scores[b]; });
  order.resize(static_cast<std::size_t>(n));
  return order;
}

}  // namespace

DenseMatrix prune_nm(const DenseMatrix& w, const DenseMatrix& scores, SparsityPattern p) {
  if (scores.rows() != w.rows() || scores.cols() != w.cols()) {
    throw DimensionError("score matrix shape does not match weights");
  }
  require_pattern_shape(w, p);
  const std::size_t m = static_cast<std::size_t>(p.m());
  DenseMatrix out(w.rows(), w.cols());
  parallel_for(w.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      auto srow = scores.row(r);
      for (std::size_t b = 0; b < w.cols() / m; ++b) {
        for (std::size_t k : top_n(srow.subspan(b * m, m), p.n())) out(r, b * m + k) = w(r, b * m + k);
      }
    }
  });
  return out;
}

namespace {

/// Lower Cholesky factor of a symmetric positive definite matrix (in place on
/// a copy). Throws NumericalError if a pivot is not positive.
DenseMatrix cholesky_lower(const DenseMatrix& a) {
  const std::size_t n = a.rows();
  DenseMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw NumericalError("Hessian is not positive definite at column " + std::to_string(j));
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

/// (L Lᵀ)⁻¹ from the lower factor L.
DenseMatrix spd_inverse_from_cholesky(const DenseMatrix& l) {
  const std::size_t n = l.rows();
  // Invert L by forward substitution, then H⁻¹ = L⁻ᵀ L⁻¹.
  DenseMatrix linv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    linv(j, j) = 1.0 / l(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s -= l(i, k) * linv(k, j);
      linv(i, j) = s / l(i, i);
    }
  }
  DenseMatrix inv(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t k = i; k < n; ++k) s += linv(k, i) * linv(k, j);
      inv(i, j) = s;
      inv(j, i) = s;
    }
  }
  return inv;
}

}  // namespace

DenseMatrix prune_sparsegpt(const DenseMatrix& w, const DenseMatrix& x_calib, SparsityPattern p, double damping) {
  if (x_calib.cols() != w.cols()) {
    throw DimensionError("calibration has " + std::to_string(x_calib.cols()) + " features, weights have " +
                         std::to_string(w.cols()) + " inputs");
  }
  if (!(damping > 0.0)) throw std::invalid_argument("damping must be positive");
  require_pattern_shape(w, p);
  const std::size_t cols = w.cols();
  const std::size_t m = static_cast<std::size_t>(p.m());

  DenseMatrix hessian = matmul_ref(x_calib.transposed(), x_calib);
  double mean_diag = 0.0;
  for (std::size_t j = 0; j < cols; ++j) mean_diag += hessian(j, j);
  mean_diag /= static_cast<double>(cols);
  // An all-zero calibration still leaves a usable identity-like Hessian.
  const double lambda = damping * (mean_diag > 0.0 ? mean_diag : 1.0);
  for (std::size_t j = 0; j < cols; ++j) hessian(j, j) += lambda;

  // Upper factor U of H⁻¹ = UᵀU: U_jj² is the inverse-Hessian diagonal over the
  // columns not yet processed, and row j of U carries the OBS update.
  const DenseMatrix upper = cholesky_lower(spd_inverse_from_cholesky(cholesky_lower(hessian))).transposed();

  DenseMatrix out = w;
  parallel_for(w.rows(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> saliency(m);
    std::vector<bool> keep(m);
    for (std::size_t r = begin; r < end; ++r) {
      auto row = out.row(r);
      for (std::size_t g = 0; g < cols; g += m) {
        for (std::size_t k = 0; k < m; ++k) {
          const double d = upper(g + k, g + k);
          saliency[k] = row[g + k] * row[g + k] / (d * d);
        }
        std::fill(keep.begin(), keep.end(), false);
        for (std::size_t k : top_n(saliency, p.n())) keep[k] = true;
        for (std::size_t k = 0; k < m; ++k) {
          const std::size_t j = g + k;
          if (keep[k]) continue;
          const double err = row[j] / upper(j, j);
          row[j] = 0.0;
          for (std::size_t t = j + 1; t < cols; ++t) row[t] -= err * upper(j, t);
        }
      }
    }
  });
  // Pruned slots are written as exact zeros and never revisited.
  return out;
}

DenseMatrix sparsify(const DenseMatrix& w, SparsityPattern p, const SignificanceMetric& metric) {
  metric.validate();
  switch (metric.kind) {
    case SparsifyMethod::Magnitude:
      return prune_nm(w, score_magnitude(w), p);
    case SparsifyMethod::Wanda:
      return prune_nm(w, score_wanda(w, *metric.calibration), p);
    case SparsifyMethod::SparseGpt:
      return prune_sparsegpt(w, *metric.calibration, p, metric.damping);
  }
  return w;
}

}  // namespace sdq
