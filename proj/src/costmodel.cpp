// SPDX-License-Identifier: Apache-2.0
#include "sdq/costmodel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "sdq/errors.hpp"

namespace sdq {

IndexEncoding index_encoding_from_name(std::string_view name) {
  if (name == "ellpack") return IndexEncoding::Ellpack;
  if (name == "bitmask") return IndexEncoding::Bitmask;
  if (name == "none") return IndexEncoding::None;
  throw std::invalid_argument("unknown index encoding '" + std::string(name) + "'");
}

std::string to_string(IndexEncoding e) {
  switch (e) {
    case IndexEncoding::Ellpack:
      return "ellpack";
    case IndexEncoding::Bitmask:
      return "bitmask";
    case IndexEncoding::None:
      return "none";
  }
  return "?";
}

double throughput_sparsity(SparsityPattern p) { return static_cast<double>(p.m()) / p.n(); }

double throughput_quant(int bits) {
  if (bits < 2 || bits > 16) throw std::invalid_argument("bit width must lie in [2, 16]");
  return 16.0 / bits;
}

double throughput_sdq(std::span<const ThroughputBranch> branches) {
  if (branches.empty()) throw std::invalid_argument("throughput_sdq needs at least one branch");
  double cost = 0.0;
  for (const auto& b : branches) {
    if (b.pattern.m() != branches.front().pattern.m()) {
      throw ConfigError("branches must share the S-Vector size");
    }
    if (b.bits < 2 || b.bits > 16) throw std::invalid_argument("bit width must lie in [2, 16]");
    cost += (static_cast<double>(b.pattern.n()) / b.pattern.m()) * (b.bits / 16.0);
  }
  return 1.0 / cost;
}

std::string format_throughput(double x) { return fmt::format("{:.1f}×", x); }

void CostReport::check_consistency() const {
  if (breakdown.total() != bits_per_weight) throw std::logic_error("cost breakdown does not sum to bits_per_weight");
  if (!(effective_throughput > 0.0)) throw std::logic_error("effective throughput must be positive");
}

namespace {

void require_bits(int data_bits, int scale_bits, std::size_t qvs) {
  if (data_bits < 1 || data_bits > 32) throw std::invalid_argument("data bits must lie in [1, 32]");
  if (scale_bits < 0 || scale_bits > 32) throw std::invalid_argument("scale bits must lie in [0, 32]");
  if (qvs == 0) throw std::invalid_argument("Q-Vector size must be positive");
}

void require_tiling(SparsityPattern p, std::size_t qvs) {
  if (!p.is_dense() && qvs % static_cast<std::size_t>(p.m()) != 0) {
    throw DimensionError("Q-Vector size " + std::to_string(qvs) + " is not a multiple of S-Vector size " +
                         std::to_string(p.m()));
  }
}

double index_bits_per_weight(SparsityPattern p, IndexEncoding e) {
  if (p.is_dense()) return 0.0;
  switch (e) {
    case IndexEncoding::Ellpack:
      return p.density() * std::bit_width(static_cast<unsigned>(p.m()) - 1);
    case IndexEncoding::Bitmask:
      return 1.0;
    case IndexEncoding::None:
      return 0.0;
  }
  return 0.0;
}

}  // namespace

CostReport bits_per_weight(SparsityPattern p, int data_bits, int scale_bits, std::size_t q_vector_size,
                           IndexEncoding encoding) {
  require_bits(data_bits, scale_bits, q_vector_size);
  require_tiling(p, q_vector_size);
  BranchCost branch;
  branch.label = p.to_string();
  branch.pattern = p;
  branch.data_bits = data_bits;
  branch.compute_bits = data_bits;
  branch.scale_bits = scale_bits;
  branch.q_vector_size = q_vector_size;
  branch.encoding = p.is_dense() ? IndexEncoding::None : encoding;
  branch.per_weight.data_bits = p.density() * data_bits;
  branch.per_weight.index_bits = index_bits_per_weight(p, encoding);
  branch.per_weight.scale_bits = p.density() * scale_bits / static_cast<double>(q_vector_size);

  CostReport report;
  report.breakdown = branch.per_weight;
  report.bits_per_weight = report.breakdown.total();
  const ThroughputBranch tb{p, std::clamp(data_bits, 2, 16)};
  report.effective_throughput = throughput_sdq(std::span(&tb, 1));
  report.branches.push_back(branch);
  report.check_consistency();
  return report;
}

CostReport decomposed_cost(std::span<const BranchSpec> branches, int scale_bits, std::size_t q_vector_size,
                           IndexEncoding encoding) {
  if (branches.empty()) throw std::invalid_argument("at least one branch is required");
  CostReport report;
  std::vector<ThroughputBranch> tb;
  int kept = 0;
  for (const auto& spec : branches) {
    CostReport single = bits_per_weight(spec.pattern, spec.weight_bits, scale_bits, q_vector_size, encoding);
    BranchCost branch = single.branches.front();
    branch.label = spec.label;
    branch.compute_bits = std::max(spec.weight_bits, spec.activation_bits);
    report.breakdown.data_bits += branch.per_weight.data_bits;
    report.breakdown.index_bits += branch.per_weight.index_bits;
    report.breakdown.scale_bits += branch.per_weight.scale_bits;
    report.branches.push_back(branch);
    tb.push_back({spec.pattern, branch.compute_bits});
    kept += spec.pattern.n();
  }
  if (kept > branches.front().pattern.m()) {
    throw ConfigError("branches keep more than M values per S-Vector");
  }
  report.bits_per_weight = report.breakdown.total();
  report.effective_throughput = throughput_sdq(tb);
  report.check_consistency();
  return report;
}

TileBits tile_bits(SparsityPattern p, int data_bits, int scale_bits, std::size_t q_vector_size, IndexEncoding encoding,
                   std::size_t tile_elements) {
  require_bits(data_bits, scale_bits, q_vector_size);
  require_tiling(p, q_vector_size);
  if (tile_elements % static_cast<std::size_t>(p.m()) != 0) {
    throw DimensionError("tile size must be a multiple of the S-Vector size");
  }
  const std::size_t vectors = tile_elements / static_cast<std::size_t>(p.m());
  const std::size_t stored = vectors * static_cast<std::size_t>(p.n());
  TileBits t;
  t.pattern = p;
  t.config = (p.is_dense() ? std::string("dense") : p.to_string()) + " int" + std::to_string(data_bits) + " SF" +
             std::to_string(scale_bits) + " Q-VS" + std::to_string(q_vector_size);
  t.data_bits = data_bits;
  t.scale_bits = scale_bits;
  t.q_vector_size = q_vector_size;
  t.tile_elements = tile_elements;
  t.data = static_cast<long>(stored) * data_bits;
  if (!p.is_dense()) {
    switch (encoding) {
      case IndexEncoding::Ellpack:
        t.meta_s = static_cast<long>(stored) * std::bit_width(static_cast<unsigned>(p.m()) - 1);
        break;
      case IndexEncoding::Bitmask:
        t.meta_s = static_cast<long>(tile_elements);
        break;
      case IndexEncoding::None:
        break;
    }
  }
  const std::size_t scales = (stored + q_vector_size - 1) / q_vector_size;
  t.meta_q = static_cast<long>(scales) * scale_bits;
  const ThroughputBranch tb{p, std::clamp(data_bits, 2, 16)};
  t.effective_throughput = throughput_sdq(std::span(&tb, 1));
  return t;
}

std::vector<FigureConfig> default_metadata_figure_configs() {
  std::vector<FigureConfig> configs;
  for (auto [sf, qvs] : {std::pair{32, std::size_t{16}}, std::pair{8, std::size_t{32}}}) {
    for (int n : {1, 2, 3, 4}) configs.push_back({SparsityPattern(n, 4), 4, sf, qvs});
  }
  return configs;
}

std::vector<TileBits> metadata_figure(std::span<const FigureConfig> configs, std::size_t tile_elements,
                                      IndexEncoding encoding) {
  std::vector<TileBits> rows;
  rows.reserve(configs.size());
  for (const auto& c : configs) {
    rows.push_back(tile_bits(c.pattern, c.data_bits, c.scale_bits, c.q_vector_size, encoding, tile_elements));
  }
  return rows;
}

std::string to_csv(std::span<const TileBits> rows) {
  std::string out = "config,data_bits,meta_s_bits,meta_q_bits,bits_per_weight,effective_throughput\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{:.17g},{:.17g}\n", r.config, r.data, r.meta_s, r.meta_q, r.bits_per_weight(),
                       r.effective_throughput);
  }
  return out;
}

}  // namespace sdq
