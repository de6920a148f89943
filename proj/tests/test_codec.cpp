// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "sdq/codec.hpp"
#include "sdq/errors.hpp"

namespace sdq {
namespace {

std::vector<NumberFormat> all_presets() {
  std::vector<NumberFormat> out;
  for (int b = 2; b <= 8; ++b) out.push_back(NumberFormat::signed_int(b));
  out.push_back(NumberFormat::fp4());
  out.push_back(NumberFormat::fp8_e4m3());
  out.push_back(NumberFormat::ufp8_e6m2());
  out.push_back(NumberFormat::signed_float(3, 2, 3, false));
  out.push_back(NumberFormat::signed_float(5, 2, 15, false));
  return out;
}

TEST(NumberFormat, NamesRoundTrip) {
  for (const char* name : {"int2", "int4", "int8", "fp4", "fp8-e4m3", "ufp8-e6m2"}) {
    EXPECT_EQ(NumberFormat::from_name(name).name(), name);
  }
  EXPECT_EQ(NumberFormat::from_name("fp8"), NumberFormat::fp8_e4m3());
  EXPECT_EQ(NumberFormat::from_name("ufp8"), NumberFormat::ufp8_e6m2());
  EXPECT_EQ(NumberFormat::from_name("fp4-e2m1"), NumberFormat::fp4());
  EXPECT_FALSE(NumberFormat::from_optional_name("none").has_value());
  EXPECT_EQ(format_name(std::nullopt), "none");
  EXPECT_THROW(NumberFormat::from_name("int9"), std::invalid_argument);
  EXPECT_THROW(NumberFormat::from_name("bf16"), std::invalid_argument);
}

TEST(EnumerateGrid, Int4IsSymmetricRange) {
  std::vector<double> expect;
  for (int i = -7; i <= 7; ++i) expect.push_back(i);
  EXPECT_EQ(enumerate_grid(NumberFormat::int4()), expect);
}

TEST(EnumerateGrid, Fp4HasSixteenValues) {
  const auto grid = enumerate_grid(NumberFormat::fp4());
  ASSERT_EQ(grid.size(), 16u);
  const std::vector<double> magnitudes{0, 0, 0.5, 0.5, 1, 1, 1.5, 1.5, 2, 2, 3, 3, 4, 4, 6, 6};
  std::vector<double> abs_sorted;
  for (double g : grid) abs_sorted.push_back(std::abs(g));
  std::sort(abs_sorted.begin(), abs_sorted.end());
  EXPECT_EQ(abs_sorted, magnitudes);
  EXPECT_EQ(std::count_if(grid.begin(), grid.end(), [](double g) { return g == 0.0 && std::signbit(g); }), 1);
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
}

TEST(EnumerateGrid, Fp8E4m3MatchesBitPatternOracle) {
  const NumberFormat f = NumberFormat::fp8_e4m3();
  std::vector<double> oracle_grid;
  for (unsigned bits = 0; bits < 256; ++bits) {
    if ((bits & 0x7F) == 0x7F) continue;  // NaN patterns
    oracle_grid.push_back(oracle::minifloat_value(bits, 4, 3, 7, true));
  }
  std::sort(oracle_grid.begin(), oracle_grid.end());
  auto grid = enumerate_grid(f);
  ASSERT_EQ(grid.size(), 254u);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(grid[i], oracle_grid[i]) << i;
  EXPECT_EQ(f.max_value(), 448.0);
  EXPECT_EQ(grid.back(), 448.0);
  std::set<double> magnitudes;
  for (double g : grid) magnitudes.insert(std::abs(g));
  EXPECT_EQ(magnitudes.size(), 127u);
}

TEST(EnumerateGrid, Ufp8E6m2IsUnsignedAndFinite) {
  const NumberFormat f = NumberFormat::ufp8_e6m2();
  const auto grid = enumerate_grid(f);
  ASSERT_EQ(grid.size(), 256u);
  for (unsigned bits = 0; bits < 256; ++bits) {
    EXPECT_EQ(grid[bits], oracle::minifloat_value(bits, 6, 2, 31, false));
  }
  EXPECT_EQ(f.max_value(), std::ldexp(1.75, 32));
  EXPECT_EQ(grid.front(), 0.0);
}

TEST(EnumerateGrid, SignedGridsAreSymmetric) {
  for (const auto& f : all_presets()) {
    if (!f.is_signed()) continue;
    const auto grid = enumerate_grid(f);
    for (double g : grid) {
      EXPECT_TRUE(std::binary_search(grid.begin(), grid.end(), -g)) << f.name() << " " << g;
    }
  }
}

TEST(RoundToFormat, Examples) {
  const NumberFormat fp4 = NumberFormat::fp4();
  EXPECT_EQ(decode(round_to_format(2.7, fp4), fp4), 3.0);
  for (const auto& f : all_presets()) {
    const Code c = round_to_format(0.0, f);
    EXPECT_EQ(decode(c, f), 0.0);
    EXPECT_FALSE(std::signbit(decode(c, f))) << f.name();
    EXPECT_FALSE(std::signbit(decode(round_to_format(-1e-300, f), f))) << f.name();
  }
  EXPECT_EQ(round_to_format(100.0, NumberFormat::int4()), 7);
  EXPECT_EQ(round_to_format(-100.0, NumberFormat::int4()), -7);
}

TEST(RoundToFormat, TiesGoToEven) {
  const NumberFormat i4 = NumberFormat::int4();
  EXPECT_EQ(round_to_format(2.5, i4), 2);
  EXPECT_EQ(round_to_format(3.5, i4), 4);
  EXPECT_EQ(round_to_format(-0.5, i4), 0);
  const NumberFormat fp4 = NumberFormat::fp4();
  EXPECT_EQ(decode(round_to_format(2.5, fp4), fp4), 2.0);   // between 2 (even) and 3
  EXPECT_EQ(decode(round_to_format(5.0, fp4), fp4), 4.0);   // between 4 (even) and 6
  EXPECT_EQ(decode(round_to_format(1.25, fp4), fp4), 1.0);  // between 1 (even) and 1.5
  EXPECT_EQ(decode(round_to_format(0.25, fp4), fp4), 0.0);
}

TEST(RoundToFormat, NearestNeighborOptimalityForEveryFormat) {
  std::mt19937 gen(7);
  for (const auto& f : all_presets()) {
    const auto grid = enumerate_grid(f);
    const double span = f.max_value() * 1.3;
    std::uniform_real_distribution<double> uni(-span, span);
    std::vector<double> probes;
    for (int i = 0; i < 2000; ++i) probes.push_back(uni(gen));
    // Midpoints and grid points themselves are the adversarial cases.
    for (std::size_t i = 0; i + 1 < grid.size() && grid.size() < 600; ++i) {
      probes.push_back(grid[i]);
      probes.push_back(0.5 * (grid[i] + grid[i + 1]));
    }
    for (double x : probes) {
      const double q = decode(round_to_format(x, f), f);
      const double best = oracle::nearest_on_grid(x, grid);
      EXPECT_LE(std::abs(q - x), std::abs(best - x)) << f.name() << " x=" << x;
    }
  }
}

TEST(RoundToFormat, SaturatesAtGridMax) {
  for (const auto& f : all_presets()) {
    EXPECT_EQ(decode(round_to_format(f.max_value() * 4, f), f), f.max_value()) << f.name();
    EXPECT_EQ(round_to_format(f.max_value(), f), f.max_code()) << f.name();
    if (f.is_signed()) {
      EXPECT_EQ(decode(round_to_format(-f.max_value() * 4, f), f), -f.max_value());
    }
  }
  const NumberFormat u = NumberFormat::ufp8_e6m2();
  EXPECT_EQ(decode(round_to_format(-3.0, u), u), 0.0);
}

TEST(RoundUpToFormat, NeverBelowInput) {
  std::mt19937 gen(9);
  std::uniform_real_distribution<double> e(-20, 20);
  for (const auto& f : {NumberFormat::fp8_e4m3(), NumberFormat::ufp8_e6m2(), NumberFormat::int8()}) {
    for (int i = 0; i < 2000; ++i) {
      const double x = std::exp2(e(gen));
      if (x > f.max_value()) continue;
      const double up = decode(round_up_to_format(x, f), f);
      EXPECT_GE(up, x) << f.name();
      const double near = decode(round_to_format(x, f), f);
      EXPECT_TRUE(up == near || up > near) << f.name();
    }
  }
}

TEST(ComputeScale, Examples) {
  const std::vector<double> v{0.5, -6.0, 1.0, 2.0};
  EXPECT_DOUBLE_EQ(compute_scale(v, NumberFormat::int4()), 6.0 / 7.0);
  EXPECT_EQ(compute_scale(std::vector<double>(4, 0.0), NumberFormat::int4()), 1.0);
  EXPECT_EQ(compute_scale(std::vector<double>{-6, 6}, NumberFormat::fp4()), 1.0);
}

TEST(QuantizeVector, Examples) {
  const auto zero = quantize_vector(std::vector<double>(4, 0.0), NumberFormat::fp4(), NumberFormat::fp8_e4m3());
  for (Code c : zero.codes) EXPECT_EQ(decode(c, NumberFormat::fp4()), 0.0);
  EXPECT_EQ(zero.scale, 1.0);
  EXPECT_EQ(dequantize_vector(zero), std::vector<double>(4, 0.0));

  const std::vector<double> v{0.5, -6.0, 1.0, 2.0};
  const auto q = quantize_vector(v, NumberFormat::int4(), std::nullopt);
  EXPECT_EQ(q.codes, (std::vector<Code>{1, -7, 1, 2}));
  const auto d = dequantize_vector(q);
  EXPECT_DOUBLE_EQ(d[0], 6.0 / 7.0);
  EXPECT_DOUBLE_EQ(d[1], -6.0);
  EXPECT_DOUBLE_EQ(d[2], 6.0 / 7.0);
  EXPECT_DOUBLE_EQ(d[3], 12.0 / 7.0);

  const std::vector<double> on_grid{1, -7, 3, 0, 5, 7};
  EXPECT_EQ(dequantize_vector(quantize_vector(on_grid, NumberFormat::int4(), NumberFormat::fp8_e4m3())), on_grid);
}

TEST(QuantizeVector, FakeQuantIsIdempotent) {
  std::mt19937 gen(31);
  std::normal_distribution<double> nd(0.0, 3.0);
  for (const auto& f : all_presets()) {
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> v(16);
      for (double& x : v) x = nd(gen);
      if (!f.is_signed())
        for (double& x : v) x = std::abs(x);
      const auto q1 = quantize_vector(v, f, std::nullopt);
      const auto q2 = quantize_vector(dequantize_vector(q1), f, std::nullopt);
      EXPECT_EQ(q1.codes, q2.codes) << f.name();
    }
  }
}

TEST(QuantizeVector, QuantizedScaleNeverOverflowsGrid) {
  std::mt19937 gen(32);
  std::lognormal_distribution<double> ln(0.0, 4.0);
  for (const auto& data : {NumberFormat::int4(), NumberFormat::fp4(), NumberFormat::int8()}) {
    for (const auto& sf : {NumberFormat::fp8_e4m3(), NumberFormat::ufp8_e6m2()}) {
      for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(16);
        for (double& x : v) x = ln(gen) * ((gen() & 1) ? 1 : -1) * 1e-3;
        const auto q = quantize_vector(v, data, sf);
        ASSERT_TRUE(q.scale_code.has_value());
        EXPECT_EQ(q.scale, decode(*q.scale_code, sf));
        EXPECT_GE(q.scale, compute_scale(v, data));
        for (Code c : q.codes) EXPECT_LE(std::abs(decode(c, data)), data.max_value());
        for (double x : v) EXPECT_LE(std::abs(x) / q.scale, data.max_value() * (1 + 1e-12));
      }
    }
  }
}

TEST(QuantizeTensor, ShapesAndRoundTrip) {
  DenseMatrix on_grid(1, 16);
  for (std::size_t j = 0; j < 16; ++j) on_grid(0, j) = static_cast<double>(j % 15) - 7.0;
  EXPECT_EQ(quantize_tensor(on_grid, 16, NumberFormat::int4(), std::nullopt).dequantize(), on_grid);

  const auto q = quantize_tensor(DenseMatrix(2, 8), 8, NumberFormat::int8(), std::nullopt);
  EXPECT_EQ(q.vectors.size(), 2u);
  EXPECT_THROW(quantize_tensor(DenseMatrix(2, 12), 8, NumberFormat::int8(), std::nullopt), DimensionError);
}

TEST(QuantizeTensor, FinerVectorsFitAtLeastAsWell) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const DenseMatrix w = oracle::random_matrix(4, 64, seed);
    auto mse = [&](std::size_t qvs) {
      const DenseMatrix d = subtract(fake_quantize(w, qvs, NumberFormat::int4(), std::nullopt), w);
      double s = 0;
      for (double v : d.data()) s += v * v;
      return s / static_cast<double>(w.size());
    };
    EXPECT_LE(mse(16), mse(64)) << seed;
  }
}

TEST(QuantizeTensor, ColumnQuantizationRunsAlongRows) {
  const DenseMatrix x = oracle::random_matrix(32, 5, 44);
  const DenseMatrix by_col = fake_quantize_columns(x, 16, NumberFormat::fp4(), std::nullopt);
  EXPECT_EQ(by_col, fake_quantize(x.transposed(), 16, NumberFormat::fp4(), std::nullopt).transposed());
}

TEST(QuantizeSparse, PackedStreamRoundTrip) {
  const DenseMatrix w = oracle::random_nm_matrix(4, 32, 2, 8, 8);
  const auto s = compress_nm(w, {2, 8});
  const auto q = quantize_sparse(s, 8, NumberFormat::fp8_e4m3(), std::nullopt);
  ASSERT_TRUE(q.pattern.has_value());
  EXPECT_EQ(q.cols, 8u);
  const auto back = dequantize_sparse(q, s);
  EXPECT_TRUE(validate_nm(decompress_nm(back), {2, 8}).valid);
  const DenseMatrix expect =
      s.with_packed_values(fake_quantize(s.packed_values(), 8, NumberFormat::fp8_e4m3(), std::nullopt)).packed_values();
  EXPECT_EQ(back.packed_values(), expect);
  EXPECT_THROW(dequantize_sparse(q, compress_nm(w, {4, 8})), DimensionError);
}

}  // namespace
}  // namespace sdq
