// SPDX-License-Identifier: Apache-2.0
#include "sdq/codec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sdq/errors.hpp"

namespace sdq {

NumberFormat NumberFormat::signed_int(int bits) {
  if (bits < 2 || bits > 8) throw std::invalid_argument("integer formats take 2..8 bits");
  NumberFormat f;
  f.kind_ = FormatKind::SignedInt;
  f.total_bits_ = bits;
  f.finalize();
  return f;
}

NumberFormat NumberFormat::signed_float(int exponent_bits, int mantissa_bits, int bias, bool top_code_is_nan) {
  if (exponent_bits < 1 || mantissa_bits < 0 || 1 + exponent_bits + mantissa_bits > 16) {
    throw std::invalid_argument("unsupported minifloat layout");
  }
  NumberFormat f;
  f.kind_ = FormatKind::Float;
  f.exponent_bits_ = exponent_bits;
  f.mantissa_bits_ = mantissa_bits;
  f.total_bits_ = 1 + exponent_bits + mantissa_bits;
  f.bias_ = bias;
  f.top_code_is_nan_ = top_code_is_nan;
  f.finalize();
  return f;
}

NumberFormat NumberFormat::unsigned_float(int exponent_bits, int mantissa_bits, int bias) {
  if (exponent_bits < 1 || mantissa_bits < 0 || exponent_bits + mantissa_bits > 16) {
    throw std::invalid_argument("unsupported minifloat layout");
  }
  NumberFormat f;
  f.kind_ = FormatKind::UnsignedFloat;
  f.exponent_bits_ = exponent_bits;
  f.mantissa_bits_ = mantissa_bits;
  f.total_bits_ = exponent_bits + mantissa_bits;
  f.bias_ = bias;
  f.finalize();
  return f;
}

void NumberFormat::finalize() {
  if (kind_ == FormatKind::SignedInt) {
    max_code_ = (Code{1} << (total_bits_ - 1)) - 1;
    max_value_ = static_cast<double>(max_code_);
    return;
  }
  const Code magnitude_codes = Code{1} << (exponent_bits_ + mantissa_bits_);
  max_code_ = magnitude_codes - (top_code_is_nan_ ? 2 : 1);
  max_value_ = decode(max_code_, *this);
}

NumberFormat NumberFormat::from_name(std::string_view name) {
  if (name == "fp4" || name == "fp4-e2m1") return fp4();
  if (name == "fp8" || name == "fp8-e4m3") return fp8_e4m3();
  if (name == "ufp8" || name == "ufp8-e6m2") return ufp8_e6m2();
  if (name.size() == 4 && name.substr(0, 3) == "int" && name[3] >= '2' && name[3] <= '8') {
    return signed_int(name[3] - '0');
  }
  throw std::invalid_argument("unknown number format '" + std::string(name) + "'");
}

std::optional<NumberFormat> NumberFormat::from_optional_name(std::string_view name) {
  if (name == "none") return std::nullopt;
  return from_name(name);
}

std::string NumberFormat::name() const {
  switch (kind_) {
    case FormatKind::SignedInt:
      return "int" + std::to_string(total_bits_);
    case FormatKind::Float:
      if (*this == fp4()) return "fp4";
      if (*this == fp8_e4m3()) return "fp8-e4m3";
      return "fp" + std::to_string(total_bits_) + "-e" + std::to_string(exponent_bits_) + "m" +
             std::to_string(mantissa_bits_);
    case FormatKind::UnsignedFloat:
      return "ufp" + std::to_string(total_bits_) + "-e" + std::to_string(exponent_bits_) + "m" +
             std::to_string(mantissa_bits_);
  }
  return "?";
}

std::string format_name(const std::optional<NumberFormat>& f) { return f ? f->name() : "none"; }

namespace {

Code sign_bit(const NumberFormat& f) { return Code{1} << (f.exponent_bits() + f.mantissa_bits()); }

double decode_float_magnitude(Code mag, const NumberFormat& f) {
  const int m = f.mantissa_bits();
  const Code exponent = mag >> m;
  const Code mantissa = mag & ((Code{1} << m) - 1);
  if (exponent == 0) return std::ldexp(static_cast<double>(mantissa), 1 - f.bias() - m);
  return std::ldexp(static_cast<double>((Code{1} << m) + mantissa), static_cast<int>(exponent) - f.bias() - m);
}

/// Exponent of the binade holding `a`, clamped to the subnormal exponent.
int binade_exponent(double a, const NumberFormat& f) {
  int e = 0;
  std::frexp(a, &e);
  return std::max(e - 1, 1 - f.bias());
}

/// `v` must be an exact non-negative grid magnitude.
Code encode_float_magnitude(double v, const NumberFormat& f) {
  if (v == 0.0) return 0;
  const int m = f.mantissa_bits();
  const int e = binade_exponent(v, f);
  const auto scaled = static_cast<Code>(std::ldexp(v, m - e));
  if (scaled < (Code{1} << m)) return scaled;  // subnormal
  return (static_cast<Code>(e + f.bias()) << m) | (scaled - (Code{1} << m));
}

Code round_float_magnitude(double a, const NumberFormat& f) {
  if (a >= f.max_value()) return f.max_code();
  const int e = binade_exponent(a, f);
  const double quantum = std::ldexp(1.0, e - f.mantissa_bits());
  const double v = std::nearbyint(a / quantum) * quantum;
  if (v >= f.max_value()) return f.max_code();
  return encode_float_magnitude(v, f);
}

}  // namespace

double decode(Code code, const NumberFormat& f) {
  switch (f.kind()) {
    case FormatKind::SignedInt:
      return static_cast<double>(code);
    case FormatKind::UnsignedFloat:
      return decode_float_magnitude(code, f);
    case FormatKind::Float: {
      const double mag = decode_float_magnitude(code & (sign_bit(f) - 1), f);
      return (code & sign_bit(f)) ? -mag : mag;
    }
  }
  return 0.0;
}

Code round_to_format(double x, const NumberFormat& f) {
  switch (f.kind()) {
    case FormatKind::SignedInt: {
      const double lim = f.max_value();
      const double r = std::clamp(std::nearbyint(x), -lim, lim);
      return static_cast<Code>(r);
    }
    case FormatKind::UnsignedFloat:
      return x <= 0.0 ? 0 : round_float_magnitude(x, f);
    case FormatKind::Float: {
      const Code mag = round_float_magnitude(std::fabs(x), f);
      return (x < 0.0 && mag != 0) ? (mag | sign_bit(f)) : mag;
    }
  }
  return 0;
}

Code round_up_to_format(double x, const NumberFormat& f) {
  Code c = round_to_format(x, f);
  if (x > 0.0 && decode(c, f) < x && c != f.max_code()) ++c;
  return c;
}

std::vector<double> enumerate_grid(const NumberFormat& f) {
  std::vector<double> grid;
  if (f.kind() == FormatKind::SignedInt) {
    for (Code c = -f.max_code(); c <= f.max_code(); ++c) grid.push_back(static_cast<double>(c));
    return grid;
  }
  for (Code mag = 0; mag <= f.max_code(); ++mag) {
    const double v = decode(mag, f);
    grid.push_back(v);
    if (f.kind() == FormatKind::Float) grid.push_back(-v);
  }
  std::sort(grid.begin(), grid.end(), [](double a, double b) {
    if (a != b) return a < b;
    return std::signbit(a) && !std::signbit(b);
  });
  return grid;
}

double compute_scale(std::span<const double> v, const NumberFormat& data_format) {
  double max_abs = 0.0;
  for (double x : v) max_abs = std::max(max_abs, std::fabs(x));
  if (max_abs == 0.0) return 1.0;
  return max_abs / data_format.max_value();
}

QuantizedVector quantize_vector(std::span<const double> v, const NumberFormat& data_format,
                                const std::optional<NumberFormat>& scale_format) {
  QuantizedVector q;
  q.data_format = data_format;
  q.scale_format = scale_format;
  q.scale = compute_scale(v, data_format);
  if (scale_format) {
    // Rounding the scale upward keeps max|v| / scale within the data grid.
    q.scale_code = round_up_to_format(q.scale, *scale_format);
    q.scale = decode(*q.scale_code, *scale_format);
  }
  q.codes.reserve(v.size());
  for (double x : v) q.codes.push_back(round_to_format(x / q.scale, data_format));
  return q;
}

std::vector<double> dequantize_vector(const QuantizedVector& q) {
  std::vector<double> out;
  out.reserve(q.codes.size());
  for (Code c : q.codes) out.push_back(decode(c, q.data_format) * q.scale);
  return out;
}

DenseMatrix QuantizedTensor::dequantize() const {
  DenseMatrix out(rows, cols);
  if (q_vector_size == 0) return out;
  auto dst = out.data();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto values = dequantize_vector(vectors[i]);
    std::copy(values.begin(), values.end(), dst.begin() + static_cast<std::ptrdiff_t>(i * q_vector_size));
  }
  return out;
}

QuantizedTensor quantize_tensor(const DenseMatrix& w, std::size_t qvs, const NumberFormat& data_format,
                                const std::optional<NumberFormat>& scale_format) {
  if (qvs == 0 || w.cols() % qvs != 0) {
    throw DimensionError("cols " + std::to_string(w.cols()) + " not divisible by Q-Vector size " + std::to_string(qvs));
  }
  QuantizedTensor q;
  q.rows = w.rows();
  q.cols = w.cols();
  q.q_vector_size = qvs;
  q.vectors.reserve(w.size() / qvs);
  const auto data = w.data();
  for (std::size_t off = 0; off < data.size(); off += qvs) {
    q.vectors.push_back(quantize_vector(data.subspan(off, qvs), data_format, scale_format));
  }
  return q;
}

DenseMatrix fake_quantize(const DenseMatrix& w, std::size_t qvs, const NumberFormat& data_format,
                          const std::optional<NumberFormat>& scale_format) {
  return quantize_tensor(w, qvs, data_format, scale_format).dequantize();
}

DenseMatrix fake_quantize_columns(const DenseMatrix& x, std::size_t qvs, const NumberFormat& data_format,
                                  const std::optional<NumberFormat>& scale_format) {
  return fake_quantize(x.transposed(), qvs, data_format, scale_format).transposed();
}

QuantizedTensor quantize_sparse(const StructuredSparseMatrix& s, std::size_t qvs, const NumberFormat& data_format,
                                const std::optional<NumberFormat>& scale_format) {
  QuantizedTensor q = quantize_tensor(s.packed_values(), qvs, data_format, scale_format);
  q.pattern = s.pattern();
  return q;
}

StructuredSparseMatrix dequantize_sparse(const QuantizedTensor& q, const StructuredSparseMatrix& skeleton) {
  if (!q.pattern || *q.pattern != skeleton.pattern()) {
    throw DimensionError("quantized tensor does not carry the skeleton's sparsity pattern");
  }
  return skeleton.with_packed_values(q.dequantize());
}

}  // namespace sdq
