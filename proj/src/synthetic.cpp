// SPDX-License-Identifier: Apache-2.0
#include "sdq/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace sdq {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below needs n > 0");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng, double sigma) {
  DenseMatrix m(rows, cols);
  for (double& v : m.data()) v = sigma * rng.normal();
  return m;
}

DenseMatrix heavy_tail_matrix(std::size_t rows, std::size_t cols, Rng& rng, const HeavyTailOptions& opts) {
  if (!(opts.outlier_ratio >= 0.0 && opts.outlier_ratio <= 1.0)) {
    throw std::invalid_argument("outlier ratio must lie in [0, 1]");
  }
  DenseMatrix m = gaussian_matrix(rows, cols, rng, opts.sigma);
  const std::size_t numel = m.size();
  const auto planted = static_cast<std::size_t>(std::ceil(opts.outlier_ratio * static_cast<double>(numel) - 1e-9));
  // Partial Fisher–Yates: the first `planted` slots are distinct positions.
  std::vector<std::size_t> pos(numel);
  std::iota(pos.begin(), pos.end(), 0);
  auto data = m.data();
  for (std::size_t i = 0; i < planted; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(numel - i));
    std::swap(pos[i], pos[j]);
    const double sign = (rng.next() & 1) ? -1.0 : 1.0;
    data[pos[i]] = sign * std::fabs(rng.normal()) * opts.outlier_scale * opts.sigma;
  }
  return m;
}

}  // namespace sdq
