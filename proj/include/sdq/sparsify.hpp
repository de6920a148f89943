// SPDX-License-Identifier: Apache-2.0
//
// Stage 1: induce N:M structured sparsity in a weight matrix (out × in) under
// a significance metric. Calibration activations are samples × in-features.
#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "sdq/tensor.hpp"

namespace sdq {

enum class SparsifyMethod { Magnitude, Wanda, SparseGpt };

SparsifyMethod sparsify_method_from_name(std::string_view name);
std::string to_string(SparsifyMethod m);
bool needs_calibration(SparsifyMethod m);

inline constexpr double kDefaultDamping = 0.01;

/// Pruning method plus the calibration matrix the calibrated methods need.
struct SignificanceMetric {
  SparsifyMethod kind = SparsifyMethod::Magnitude;
  std::optional<DenseMatrix> calibration;
  double damping = kDefaultDamping;

  /// Throws ConfigError when calibration presence does not match the kind.
  void validate() const;
};

DenseMatrix score_magnitude(const DenseMatrix& w);

/// L2 norm of every column of x.
std::vector<double> column_norms(const DenseMatrix& x);

/// |w[i][j]| · ‖x_calib[:, j]‖₂.
DenseMatrix score_wanda(const DenseMatrix& w, const DenseMatrix& x_calib);

/// Keeps the n highest-scoring positions of every m-block (lower index wins
/// ties) and zeroes the rest. Kept values are copied unchanged.
DenseMatrix prune_nm(const DenseMatrix& w, const DenseMatrix& scores, SparsityPattern p);

/// Sequential OBS pruning with error compensation. Columns are visited left to
/// right in groups of m; at the start of each group the n positions with the
/// largest w² / [H_F⁻¹]_jj are kept, where H = XᵀX + λ·mean(diag(XᵀX))·I and F
/// is the set of unprocessed columns. Each pruned weight's error is pushed onto
/// the later columns of its row through the inverse-Hessian Cholesky row.
DenseMatrix prune_sparsegpt(const DenseMatrix& w, const DenseMatrix& x_calib, SparsityPattern p,
                            double damping = kDefaultDamping);

/// Dispatches on `metric.kind`.
DenseMatrix sparsify(const DenseMatrix& w, SparsityPattern p, const SignificanceMetric& metric);

}  // namespace sdq
