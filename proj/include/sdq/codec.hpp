// SPDX-License-Identifier: Apache-2.0
//
// Emulated low-bit number formats and per-vector (VS-Quant style) scaled
// quantization. Everything here is fake quantization: codes are integers,
// decoding returns doubles.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdq/tensor.hpp"

namespace sdq {

enum class FormatKind { SignedInt, Float, UnsignedFloat };

/// Integer codes are the signed integer value. Float codes are the raw bit
/// pattern: [sign | exponent | mantissa], sign bit absent for unsigned floats.
using Code = std::int32_t;

/// Finite-only integer or minifloat encoding.
class NumberFormat {
 public:
  /// Symmetric two's-complement integer, range ±(2^(bits-1) - 1).
  static NumberFormat signed_int(int bits);
  /// Signed minifloat with 1 + exponent_bits + mantissa_bits bits.
  /// `top_code_is_nan` reserves the all-ones exponent+mantissa pattern.
  static NumberFormat signed_float(int exponent_bits, int mantissa_bits, int bias, bool top_code_is_nan);
  static NumberFormat unsigned_float(int exponent_bits, int mantissa_bits, int bias);

  static NumberFormat int4() { return signed_int(4); }
  static NumberFormat int8() { return signed_int(8); }
  /// e2m1, bias 1: {0, 0.5, 1, 1.5, 2, 3, 4, 6} and negatives.
  static NumberFormat fp4() { return signed_float(2, 1, 1, false); }
  /// OCP e4m3: bias 7, max 448, single NaN pattern per sign.
  static NumberFormat fp8_e4m3() { return signed_float(4, 3, 7, true); }
  /// Unsigned e6m2, bias 31.
  static NumberFormat ufp8_e6m2() { return unsigned_float(6, 2, 31); }

  /// Preset lookup: int2..int8, fp4, fp8 / fp8-e4m3, ufp8 / ufp8-e6m2.
  static NumberFormat from_name(std::string_view name);
  /// As from_name, but "none" yields an empty optional.
  static std::optional<NumberFormat> from_optional_name(std::string_view name);

  FormatKind kind() const noexcept { return kind_; }
  int total_bits() const noexcept { return total_bits_; }
  int exponent_bits() const noexcept { return exponent_bits_; }
  int mantissa_bits() const noexcept { return mantissa_bits_; }
  int bias() const noexcept { return bias_; }
  bool is_signed() const noexcept { return kind_ != FormatKind::UnsignedFloat; }
  std::string name() const;

  /// Largest finite magnitude.
  double max_value() const noexcept { return max_value_; }
  Code max_code() const noexcept { return max_code_; }

  friend bool operator==(const NumberFormat&, const NumberFormat&) = default;

 private:
  NumberFormat() = default;
  void finalize();

  FormatKind kind_ = FormatKind::SignedInt;
  int total_bits_ = 0;
  int exponent_bits_ = 0;
  int mantissa_bits_ = 0;
  int bias_ = 0;
  bool top_code_is_nan_ = false;
  double max_value_ = 0.0;
  Code max_code_ = 0;
};

std::string format_name(const std::optional<NumberFormat>& f);

/// Every finite value of the format in ascending order. Signed minifloats list
/// -0 before +0, so fp4 yields 16 entries.
std::vector<double> enumerate_grid(const NumberFormat& f);

double decode(Code code, const NumberFormat& f);
/// Round-to-nearest, ties to even mantissa / even integer, saturating at
/// ±max_value. Results of magnitude zero return the +0 code.
Code round_to_format(double x, const NumberFormat& f);
/// Smallest representable value >= x (x > 0), saturating at max_value.
Code round_up_to_format(double x, const NumberFormat& f);

struct QuantizedVector {
  std::vector<Code> codes;
  /// Effective multiplier applied on decode.
  double scale = 1.0;
  std::optional<Code> scale_code;
  NumberFormat data_format = NumberFormat::int8();
  std::optional<NumberFormat> scale_format;
};

/// max|v| / max_value(data_format); 1 for an all-zero vector.
double compute_scale(std::span<const double> v, const NumberFormat& data_format);

QuantizedVector quantize_vector(std::span<const double> v, const NumberFormat& data_format,
                                const std::optional<NumberFormat>& scale_format);
std::vector<double> dequantize_vector(const QuantizedVector& q);

struct QuantizedTensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t q_vector_size = 0;
  /// Row-major: row r owns vectors [r·cols/qvs, (r+1)·cols/qvs).
  std::vector<QuantizedVector> vectors;
  /// Set when the quantized matrix is the packed value stream of an N:M
  /// tensor; cols then counts stored slots, not original columns.
  std::optional<SparsityPattern> pattern;

  DenseMatrix dequantize() const;
};

/// Tiles each row into Q-Vectors of `qvs` consecutive columns and quantizes
/// each independently. Ragged tiles are rejected with DimensionError.
QuantizedTensor quantize_tensor(const DenseMatrix& w, std::size_t qvs, const NumberFormat& data_format,
                                const std::optional<NumberFormat>& scale_format);

/// quantize_tensor followed by dequantize.
DenseMatrix fake_quantize(const DenseMatrix& w, std::size_t qvs, const NumberFormat& data_format,
                          const std::optional<NumberFormat>& scale_format);

/// Fake-quantizes activations with Q-Vectors running down each column, i.e.
/// along the reduction dimension of W·X. Scales are dynamic (computed per call).
DenseMatrix fake_quantize_columns(const DenseMatrix& x, std::size_t qvs, const NumberFormat& data_format,
                                  const std::optional<NumberFormat>& scale_format);

/// Quantizes the packed slot stream of an N:M tensor.
QuantizedTensor quantize_sparse(const StructuredSparseMatrix& s, std::size_t qvs, const NumberFormat& data_format,
                                const std::optional<NumberFormat>& scale_format);
/// Re-expands a packed quantized tensor through its index skeleton.
StructuredSparseMatrix dequantize_sparse(const QuantizedTensor& q, const StructuredSparseMatrix& skeleton);

}  // namespace sdq
