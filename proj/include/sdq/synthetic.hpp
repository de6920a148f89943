// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "sdq/tensor.hpp"

namespace sdq {

/// Seeded generator with platform-independent transforms on top of
/// std::mt19937_64 (the std:: distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box–Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng, double sigma = 1.0);

struct HeavyTailOptions {
  double outlier_ratio = 0.01;
  double outlier_scale = 10.0;
  double sigma = 1.0;
};

/// Gaussian matrix with ⌈ratio·numel⌉ entries, at distinct uniformly drawn
/// positions, replaced by ±|N(0,1)|·outlier_scale·sigma.
DenseMatrix heavy_tail_matrix(std::size_t rows, std::size_t cols, Rng& rng, const HeavyTailOptions& opts = {});

}  // namespace sdq
