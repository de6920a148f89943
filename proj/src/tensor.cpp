// SPDX-License-Identifier: Apache-2.0
#include "sdq/tensor.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <string>

#include "sdq/errors.hpp"
#include "sdq/parallel.hpp"

namespace sdq {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("matrix data length " + std::to_string(data_.size()) + " does not match " +
                         std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw std::invalid_argument("matrix values must be finite");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

SparsityPattern::SparsityPattern(int n, int m) : n_(n), m_(m) {
  if (m != 4 && m != 8 && m != 16) {
    throw std::invalid_argument("S-Vector size must be 4, 8 or 16, got " + std::to_string(m));
  }
  if (n < 1 || n > m) {
    throw std::invalid_argument("pattern " + std::to_string(n) + ":" + std::to_string(m) + " needs 1 <= N <= M");
  }
}

SparsityPattern SparsityPattern::parse(std::string_view text) {
  const auto colon = text.find(':');
  int n = 0;
  int m = 0;
  auto parse_int = [](std::string_view s, int& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
  };
  if (colon == std::string_view::npos || !parse_int(text.substr(0, colon), n) ||
      !parse_int(text.substr(colon + 1), m)) {
    throw std::invalid_argument("expected pattern N:M, got '" + std::string(text) + "'");
  }
  return {n, m};
}

std::string SparsityPattern::to_string() const { return std::to_string(n_) + ":" + std::to_string(m_); }

namespace {

void require_block_aligned(std::size_t cols, SparsityPattern p) {
  if (cols % static_cast<std::size_t>(p.m()) != 0) {
    throw DimensionError("cols " + std::to_string(cols) + " not divisible by S-Vector size " + std::to_string(p.m()));
  }
}

}  // namespace

NmReport validate_nm(const DenseMatrix& w, SparsityPattern p) {
  require_block_aligned(w.cols(), p);
  const std::size_t m = static_cast<std::size_t>(p.m());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    auto row = w.row(r);
    for (std::size_t b = 0; b < w.cols() / m; ++b) {
      int nz = 0;
      for (std::size_t k = 0; k < m; ++k) nz += row[b * m + k] != 0.0;
      if (nz > p.n()) return {false, std::make_pair(r, b)};
    }
  }
  return {};
}

StructuredSparseMatrix::StructuredSparseMatrix(std::size_t rows, std::size_t cols, SparsityPattern p)
    : rows_(rows), cols_(cols), pattern_(p) {
  const std::size_t blocks = rows * blocks_per_row();
  values_.assign(blocks * static_cast<std::size_t>(p.n()), 0.0);
  indices_.assign(blocks * static_cast<std::size_t>(p.n()), 0);
  counts_.assign(blocks, 0);
}

std::size_t StructuredSparseMatrix::nnz() const noexcept {
  std::size_t total = 0;
  for (auto c : counts_) total += c;
  return total;
}

std::span<const double> StructuredSparseMatrix::block_values(std::size_t r, std::size_t b) const {
  const std::size_t blk = slot_block(r, b);
  return {values_.data() + blk * static_cast<std::size_t>(pattern_.n()), counts_[blk]};
}

std::span<const std::uint8_t> StructuredSparseMatrix::block_indices(std::size_t r, std::size_t b) const {
  const std::size_t blk = slot_block(r, b);
  return {indices_.data() + blk * static_cast<std::size_t>(pattern_.n()), counts_[blk]};
}

DenseMatrix StructuredSparseMatrix::packed_values() const {
  const std::size_t n = static_cast<std::size_t>(pattern_.n());
  return DenseMatrix(rows_, blocks_per_row() * n, values_);
}

StructuredSparseMatrix StructuredSparseMatrix::with_packed_values(const DenseMatrix& packed) const {
  const std::size_t n = static_cast<std::size_t>(pattern_.n());
  if (packed.rows() != rows_ || packed.cols() != blocks_per_row() * n) {
    throw DimensionError("packed values shape does not match the sparse skeleton");
  }
  StructuredSparseMatrix out(rows_, cols_, pattern_);
  const auto src = packed.data();
  for (std::size_t blk = 0; blk < counts_.size(); ++blk) {
    std::uint8_t kept = 0;
    for (std::size_t s = 0; s < counts_[blk]; ++s) {
      const double v = src[blk * n + s];
      if (v == 0.0) continue;
      out.values_[blk * n + kept] = v;
      out.indices_[blk * n + kept] = indices_[blk * n + s];
      ++kept;
    }
    out.counts_[blk] = kept;
  }
  return out;
}

StructuredSparseMatrix compress_nm(const DenseMatrix& w, SparsityPattern p) {
  const NmReport report = validate_nm(w, p);
  if (!report.valid) {
    const auto [r, b] = *report.first_violation;
    throw PatternViolation("block (" + std::to_string(r) + ", " + std::to_string(b) + ") exceeds " + p.to_string(), r,
                           b);
  }
  StructuredSparseMatrix s(w.rows(), w.cols(), p);
  const std::size_t m = static_cast<std::size_t>(p.m());
  const std::size_t n = static_cast<std::size_t>(p.n());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    auto row = w.row(r);
    for (std::size_t b = 0; b < s.blocks_per_row(); ++b) {
      const std::size_t blk = s.slot_block(r, b);
      std::uint8_t count = 0;
      for (std::size_t k = 0; k < m; ++k) {
        const double v = row[b * m + k];
        if (v == 0.0) continue;
        s.values_[blk * n + count] = v;
        s.indices_[blk * n + count] = static_cast<std::uint8_t>(k);
        ++count;
      }
      s.counts_[blk] = count;
    }
  }
  return s;
}

DenseMatrix decompress_nm(const StructuredSparseMatrix& s) {
  DenseMatrix w(s.rows(), s.cols());
  const std::size_t m = static_cast<std::size_t>(s.pattern().m());
  for (std::size_t r = 0; r < s.rows(); ++r) {
    for (std::size_t b = 0; b < s.blocks_per_row(); ++b) {
      auto vals = s.block_values(r, b);
      auto idx = s.block_indices(r, b);
      for (std::size_t j = 0; j < vals.size(); ++j) w(r, b * m + idx[j]) = vals[j];
    }
  }
  return w;
}

DenseMatrix matmul_ref(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " times " +
                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  DenseMatrix out(a.rows(), b.cols());
  parallel_for(a.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto o = out.row(i);
      auto ai = a.row(i);
      for (std::size_t k = 0; k < a.cols(); ++k) {
        const double aik = ai[k];
        auto bk = b.row(k);
        for (std::size_t j = 0; j < b.cols(); ++j) o[j] += aik * bk[j];
      }
    }
  });
  return out;
}

DenseMatrix spmm_ref(const StructuredSparseMatrix& s, const DenseMatrix& b) {
  if (s.cols() != b.rows()) {
    throw DimensionError("spmm: sparse cols " + std::to_string(s.cols()) + " != dense rows " +
                         std::to_string(b.rows()));
  }
  DenseMatrix out(s.rows(), b.cols());
  const std::size_t m = static_cast<std::size_t>(s.pattern().m());
  // Blocks are visited left to right and offsets ascend within a block, so k
  // ascends exactly as in matmul_ref; skipped terms are exact zeros.
  parallel_for(s.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto o = out.row(i);
      for (std::size_t blk = 0; blk < s.blocks_per_row(); ++blk) {
        auto vals = s.block_values(i, blk);
        auto idx = s.block_indices(i, blk);
        for (std::size_t t = 0; t < vals.size(); ++t) {
          auto bk = b.row(blk * m + idx[t]);
          const double v = vals[t];
          for (std::size_t j = 0; j < b.cols(); ++j) o[j] += v * bk[j];
        }
      }
    }
  });
  return out;
}

namespace {

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "add");
  DenseMatrix out = a;
  auto o = out.data();
  auto src = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += src[i];
  return out;
}

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "subtract");
  DenseMatrix out = a;
  auto o = out.data();
  auto src = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= src[i];
  return out;
}

double frobenius_norm(const DenseMatrix& a) {
  double sum = 0.0;
  for (double v : a.data()) sum += v * v;
  return std::sqrt(sum);
}

double relative_error(const DenseMatrix& x, const DenseMatrix& ref) {
  const double diff = frobenius_norm(subtract(x, ref));
  const double base = frobenius_norm(ref);
  if (base == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / base;
}

}  // namespace sdq
