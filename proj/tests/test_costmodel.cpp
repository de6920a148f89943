// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "sdq/costmodel.hpp"
#include "sdq/errors.hpp"

namespace sdq {
namespace {

TEST(Throughput, Sparsity) {
  EXPECT_EQ(throughput_sparsity({2, 4}), 2.0);
  EXPECT_EQ(throughput_sparsity({1, 8}), 8.0);
  EXPECT_EQ(throughput_sparsity(SparsityPattern::dense(16)), 1.0);
}

TEST(Throughput, Quant) {
  EXPECT_EQ(throughput_quant(8), 2.0);
  EXPECT_EQ(throughput_quant(4), 4.0);
  EXPECT_EQ(throughput_quant(16), 1.0);
  EXPECT_THROW(throughput_quant(1), std::invalid_argument);
  EXPECT_THROW(throughput_quant(32), std::invalid_argument);
}

TEST(Throughput, DecomposedComposition) {
  const ThroughputBranch a[] = {{{1, 8}, 8}, {{6, 8}, 4}};
  EXPECT_EQ(throughput_sdq(a), 4.0);
  const ThroughputBranch b[] = {{{1, 8}, 8}, {{7, 8}, 4}};
  EXPECT_NEAR(throughput_sdq(b), 32.0 / 9.0, 1e-12);
  EXPECT_EQ(format_throughput(throughput_sdq(b)), "3.6×");
  EXPECT_EQ(format_throughput(4.0), "4.0×");
  const ThroughputBranch dense[] = {{SparsityPattern::dense(8), 16}};
  EXPECT_EQ(throughput_sdq(dense), 1.0);
  const ThroughputBranch mixed[] = {{{1, 8}, 8}, {{2, 4}, 4}};
  EXPECT_THROW(throughput_sdq(mixed), ConfigError);
}

TEST(Throughput, SingleBranchFactors) {
  for (int m : {4, 8, 16}) {
    for (int n = 1; n <= m; ++n) {
      for (int bits : {2, 4, 8, 16}) {
        const ThroughputBranch one[] = {{{n, m}, bits}};
        EXPECT_DOUBLE_EQ(throughput_sdq(one), throughput_sparsity({n, m}) * throughput_quant(bits));
      }
    }
  }
}

TEST(BitsPerWeight, WorkedExamples) {
  const CostReport dense = bits_per_weight(SparsityPattern::dense(4), 4, 16, 4, IndexEncoding::Ellpack);
  EXPECT_EQ(dense.bits_per_weight, 8.0);
  EXPECT_EQ(dense.breakdown.index_bits, 0.0);
  EXPECT_EQ(bits_per_weight({2, 4}, 4, 16, 16, IndexEncoding::Ellpack).breakdown.index_bits, 1.0);
  EXPECT_EQ(bits_per_weight({1, 8}, 4, 16, 16, IndexEncoding::Ellpack).breakdown.index_bits, 0.375);
  EXPECT_EQ(bits_per_weight({1, 8}, 4, 16, 16, IndexEncoding::Bitmask).breakdown.index_bits, 1.0);
  EXPECT_EQ(bits_per_weight({1, 8}, 4, 16, 16, IndexEncoding::None).breakdown.index_bits, 0.0);
  const CostReport sparse = bits_per_weight({2, 4}, 4, 16, 16, IndexEncoding::Ellpack);
  EXPECT_EQ(sparse.breakdown.data_bits, 2.0);
  EXPECT_EQ(sparse.breakdown.scale_bits, 0.5);
  EXPECT_EQ(sparse.bits_per_weight, 3.5);
  EXPECT_EQ(sparse.effective_throughput, 8.0);
}

TEST(BitsPerWeight, ComponentsSumAndMonotone) {
  for (int m : {4, 8, 16}) {
    for (auto enc : {IndexEncoding::Ellpack, IndexEncoding::Bitmask, IndexEncoding::None}) {
      double prev_n = -1;
      for (int n = 1; n <= m; ++n) {
        double prev_d = -1;
        for (int d : {2, 4, 8, 16}) {
          double prev_s = -1;
          for (int s : {0, 8, 16, 32}) {
            const CostReport c = bits_per_weight({n, m}, d, s, 16, enc);
            EXPECT_NO_THROW(c.check_consistency());
            EXPECT_EQ(c.breakdown.total(), c.bits_per_weight);
            EXPECT_GE(c.bits_per_weight, prev_s);
            prev_s = c.bits_per_weight;
          }
          const double at_d = bits_per_weight({n, m}, d, 16, 16, enc).bits_per_weight;
          EXPECT_GE(at_d, prev_d);
          prev_d = at_d;
        }
        // Dense patterns drop the index, so monotonicity in n holds below m.
        if (n < m) {
          const double at_n = bits_per_weight({n, m}, 4, 16, 16, enc).bits_per_weight;
          EXPECT_GE(at_n, prev_n);
          prev_n = at_n;
        }
      }
    }
  }
}

TEST(DecomposedCost, SdqBranches) {
  const BranchSpec branches[] = {{"outliers", {1, 8}, 8, 8}, {"inliers", {6, 8}, 4, 4}};
  const CostReport c = decomposed_cost(branches, 8, 16, IndexEncoding::Ellpack);
  EXPECT_EQ(c.effective_throughput, 4.0);
  ASSERT_EQ(c.branches.size(), 2u);
  EXPECT_EQ(c.branches[0].per_weight.data_bits, 1.0);
  EXPECT_EQ(c.branches[1].per_weight.data_bits, 3.0);
  EXPECT_EQ(c.breakdown.index_bits, 7.0 * 3.0 / 8.0);
  EXPECT_EQ(c.breakdown.scale_bits, 7.0 / 8.0 * 8.0 / 16.0);
  EXPECT_NO_THROW(c.check_consistency());

  const BranchSpec wide_act[] = {{"outliers", {1, 8}, 4, 8}, {"inliers", {6, 8}, 4, 4}};
  EXPECT_EQ(decomposed_cost(wide_act, 8, 16, IndexEncoding::Ellpack).effective_throughput, 4.0);
  const BranchSpec overfull[] = {{"a", {4, 8}, 8, 8}, {"b", {5, 8}, 4, 4}};
  EXPECT_THROW(decomposed_cost(overfull, 8, 16, IndexEncoding::Ellpack), ConfigError);
}

TEST(MetadataFigure, TileArithmetic) {
  const TileBits dense = tile_bits(SparsityPattern::dense(4), 4, 8, 32, IndexEncoding::Ellpack);
  EXPECT_EQ(dense.data, 128);
  EXPECT_EQ(dense.meta_s, 0);
  EXPECT_EQ(dense.meta_q, 8);
  const TileBits half = tile_bits({2, 4}, 4, 32, 16, IndexEncoding::Ellpack);
  EXPECT_EQ(half.data, 64);
  EXPECT_EQ(half.meta_s, 32);
  EXPECT_EQ(half.meta_q, 32);
  EXPECT_DOUBLE_EQ(half.bits_per_weight(), 4.0);
}

TEST(MetadataFigure, DefaultTable) {
  const auto rows = metadata_figure(default_metadata_figure_configs());
  ASSERT_EQ(rows.size(), 8u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.total(), r.data + r.meta_s + r.meta_q);
    EXPECT_EQ(r.tile_elements, 32u);
  }
  // 3:4 sparse carries more bits than dense under 32-bit scales at qvs 16.
  EXPECT_EQ(rows[2].pattern, SparsityPattern(3, 4));
  EXPECT_EQ(rows[3].pattern, SparsityPattern::dense(4));
  EXPECT_GT(rows[2].bits_per_weight(), rows[3].bits_per_weight());
  const std::string csv = to_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "config,data_bits,meta_s_bits,meta_q_bits,bits_per_weight,effective_throughput");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
}

TEST(IndexEncoding, Names) {
  EXPECT_EQ(index_encoding_from_name("bitmask"), IndexEncoding::Bitmask);
  EXPECT_EQ(to_string(IndexEncoding::Ellpack), "ellpack");
  EXPECT_THROW(index_encoding_from_name("csr"), std::invalid_argument);
}

}  // namespace
}  // namespace sdq
