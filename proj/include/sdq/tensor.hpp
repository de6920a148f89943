// SPDX-License-Identifier: Apache-2.0
//
// Dense and N:M structured sparse matrices plus the reference GEMM/SpMM used
// to evaluate every compressed configuration. All arithmetic is double
// precision with ascending-k accumulation.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sdq {

/// Row-major real matrix. Values are finite; construction from external data
/// rejects NaN/Inf.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  DenseMatrix transposed() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// N:M constraint: at most n nonzeros in every aligned block of m consecutive
/// elements along a row. m is the S-Vector size.
class SparsityPattern {
 public:
  SparsityPattern(int n, int m);

  /// Parses "N:M".
  static SparsityPattern parse(std::string_view text);
  static SparsityPattern dense(int m) { return {m, m}; }

  int n() const noexcept { return n_; }
  int m() const noexcept { return m_; }
  bool is_dense() const noexcept { return n_ == m_; }
  /// Kept fraction n/m.
  double density() const noexcept { return static_cast<double>(n_) / m_; }
  std::string to_string() const;

  friend bool operator==(const SparsityPattern&, const SparsityPattern&) = default;

 private:
  int n_;
  int m_;
};

struct NmReport {
  bool valid = true;
  /// (row, block) of the first over-full block in row-major order.
  std::optional<std::pair<std::size_t, std::size_t>> first_violation;
};

NmReport validate_nm(const DenseMatrix& w, SparsityPattern p);

/// Block-compressed (ELLPACK-style) N:M matrix. Each block owns n slots; the
/// first `count` slots hold nonzero values with strictly ascending offsets.
class StructuredSparseMatrix {
 public:
  /// Empty 0×0 matrix.
  StructuredSparseMatrix() = default;

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  SparsityPattern pattern() const noexcept { return pattern_; }
  std::size_t blocks_per_row() const noexcept { return cols_ / static_cast<std::size_t>(pattern_.m()); }
  std::size_t nnz() const noexcept;

  std::size_t block_count(std::size_t r, std::size_t b) const { return counts_[slot_block(r, b)]; }
  std::span<const double> block_values(std::size_t r, std::size_t b) const;
  std::span<const std::uint8_t> block_indices(std::size_t r, std::size_t b) const;

  /// rows × (blocks_per_row · n) matrix of the stored slots, zero-padded.
  /// This is the stream a per-vector quantizer sees.
  DenseMatrix packed_values() const;

  /// Same index skeleton with slot values replaced from a packed matrix.
  /// Slots whose new value is exactly zero are dropped.
  StructuredSparseMatrix with_packed_values(const DenseMatrix& packed) const;

  friend StructuredSparseMatrix compress_nm(const DenseMatrix& w, SparsityPattern p);

  friend bool operator==(const StructuredSparseMatrix&, const StructuredSparseMatrix&) = default;

 private:
  StructuredSparseMatrix(std::size_t rows, std::size_t cols, SparsityPattern p);
  std::size_t slot_block(std::size_t r, std::size_t b) const { return r * blocks_per_row() + b; }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  SparsityPattern pattern_{1, 4};
  std::vector<double> values_;
  std::vector<std::uint8_t> indices_;
  std::vector<std::uint8_t> counts_;
};

/// Lossless compression; throws PatternViolation on an over-full block and
/// DimensionError when cols is not a multiple of m.
StructuredSparseMatrix compress_nm(const DenseMatrix& w, SparsityPattern p);
DenseMatrix decompress_nm(const StructuredSparseMatrix& s);

/// O[i][j] = Σ_k a[i][k]·b[k][j], k ascending.
DenseMatrix matmul_ref(const DenseMatrix& a, const DenseMatrix& b);
/// Bit-identical to matmul_ref(decompress_nm(s), b).
DenseMatrix spmm_ref(const StructuredSparseMatrix& s, const DenseMatrix& b);

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b);
double frobenius_norm(const DenseMatrix& a);
/// ‖x − ref‖_F / ‖ref‖_F; 0 when both are zero.
double relative_error(const DenseMatrix& x, const DenseMatrix& ref);

}  // namespace sdq
