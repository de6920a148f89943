// SPDX-License-Identifier: Apache-2.0
//
// Analytical cost model: effective compute throughput relative to dense fp16
// and average bits per weight including sparsity (Metadata-S) and scale
// factor (Metadata-Q) metadata.
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdq/tensor.hpp"

namespace sdq {

enum class IndexEncoding { Ellpack, Bitmask, None };

IndexEncoding index_encoding_from_name(std::string_view name);
std::string to_string(IndexEncoding e);

/// M / N.
double throughput_sparsity(SparsityPattern p);
/// 16 / bits, for 2 <= bits <= 16.
double throughput_quant(int bits);

struct ThroughputBranch {
  SparsityPattern pattern;
  int bits;
};

/// 1 / Σ_k (N_k / M) · (b_k / 16). Branches must share M.
double throughput_sdq(std::span<const ThroughputBranch> branches);

/// One decimal followed by "×", e.g. 32/9 -> "3.6×".
std::string format_throughput(double x);

/// Bits per element of the original (uncompressed) tensor.
struct BitBreakdown {
  double data_bits = 0.0;
  double index_bits = 0.0;
  double scale_bits = 0.0;
  double total() const { return data_bits + index_bits + scale_bits; }
};

struct BranchCost {
  std::string label;
  SparsityPattern pattern{1, 8};
  int data_bits = 0;
  int compute_bits = 0;
  int scale_bits = 0;
  std::size_t q_vector_size = 0;
  IndexEncoding encoding = IndexEncoding::Ellpack;
  BitBreakdown per_weight;
};

struct CostReport {
  double effective_throughput = 1.0;
  double bits_per_weight = 0.0;
  BitBreakdown breakdown;
  std::vector<BranchCost> branches;

  /// Throws std::logic_error if the breakdown does not sum to bits_per_weight
  /// or the throughput is not positive.
  void check_consistency() const;
};

/// Single-branch cost. Scales are charged per Q-Vector of stored values:
/// data = (N/M)·data_bits, index = (N/M)·log2 M (ellpack) or 1 (bitmask),
/// scale = (N/M)·scale_bits / qvs. Dense patterns never carry index bits.
/// The reported throughput assumes both operands use data_bits.
CostReport bits_per_weight(SparsityPattern p, int data_bits, int scale_bits, std::size_t q_vector_size,
                           IndexEncoding encoding);

struct BranchSpec {
  std::string label;
  SparsityPattern pattern;
  int weight_bits;
  int activation_bits;
};

/// Sums the per-branch bit costs and composes throughput over all branches;
/// each branch computes at max(weight_bits, activation_bits).
CostReport decomposed_cost(std::span<const BranchSpec> branches, int scale_bits, std::size_t q_vector_size,
                           IndexEncoding encoding);

/// Bits for a tile of `tile_elements` original elements. A tile stores whole
/// scale factors: ⌈stored / qvs⌉ of them.
struct TileBits {
  std::string config;
  SparsityPattern pattern{4, 4};
  int data_bits = 0;
  int scale_bits = 0;
  std::size_t q_vector_size = 0;
  std::size_t tile_elements = 0;
  long data = 0;
  long meta_s = 0;
  long meta_q = 0;
  double effective_throughput = 1.0;

  long total() const { return data + meta_s + meta_q; }
  double bits_per_weight() const { return static_cast<double>(total()) / static_cast<double>(tile_elements); }
};

TileBits tile_bits(SparsityPattern p, int data_bits, int scale_bits, std::size_t q_vector_size, IndexEncoding encoding,
                   std::size_t tile_elements = 32);

struct FigureConfig {
  SparsityPattern pattern;
  int data_bits;
  int scale_bits;
  std::size_t q_vector_size;
};

/// 1:4, 2:4, 3:4, dense × {32-bit scale at qvs 16, 8-bit scale at qvs 32},
/// 4-bit data.
std::vector<FigureConfig> default_metadata_figure_configs();

std::vector<TileBits> metadata_figure(std::span<const FigureConfig> configs, std::size_t tile_elements = 32,
                                      IndexEncoding encoding = IndexEncoding::Ellpack);

/// Header: config,data_bits,meta_s_bits,meta_q_bits,bits_per_weight,effective_throughput
std::string to_csv(std::span<const TileBits> rows);

}  // namespace sdq
