// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sdq/errors.hpp"
#include "sdq/parallel.hpp"
#include "sdq/sparsify.hpp"

namespace sdq {
namespace {

DenseMatrix output_of(const DenseMatrix& w, const DenseMatrix& x_calib) { return matmul_ref(w, x_calib.transposed()); }

/// Calibration samples with strongly correlated features.
DenseMatrix correlated_calibration(std::size_t samples, std::size_t features, unsigned seed) {
  const DenseMatrix z = oracle::random_matrix(samples, features, seed);
  DenseMatrix mix = oracle::random_matrix(features, features, seed + 1000, 0.3);
  for (std::size_t j = 0; j < features; ++j) mix(j, j) += 1.0;
  return matmul_ref(z, mix);
}

TEST(Scores, Magnitude) {
  EXPECT_EQ(score_magnitude(DenseMatrix(1, 4, {1, -4, 3, 2})), DenseMatrix(1, 4, {1, 4, 3, 2}));
  EXPECT_EQ(score_magnitude(DenseMatrix(3, 4)), DenseMatrix(3, 4));
  const DenseMatrix w = oracle::random_matrix(3, 8, 1);
  DenseMatrix neg = w;
  for (double& v : neg.data()) v = -v;
  EXPECT_EQ(score_magnitude(w), score_magnitude(neg));
}

TEST(Scores, Wanda) {
  const DenseMatrix x(2, 2, {3, 1, 4, 0});  // column norms 5 and 1
  EXPECT_EQ(column_norms(x), (std::vector<double>{5, 1}));
  EXPECT_EQ(score_wanda(DenseMatrix(1, 2, {1, -4}), x), DenseMatrix(1, 2, {5, 4}));

  const DenseMatrix w = oracle::random_matrix(4, 8, 2);
  DenseMatrix ones(9, 8);
  for (double& v : ones.data()) v = 1.0;
  const DenseMatrix s = score_wanda(w, ones);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_DOUBLE_EQ(s.data()[i], 3.0 * std::abs(w.data()[i]));

  DenseMatrix dead = oracle::random_matrix(5, 8, 3);
  for (std::size_t r = 0; r < dead.rows(); ++r) dead(r, 6) = 0.0;
  const DenseMatrix sd = score_wanda(w, dead);
  for (std::size_t r = 0; r < w.rows(); ++r) EXPECT_EQ(sd(r, 6), 0.0);
  EXPECT_THROW(score_wanda(w, DenseMatrix(5, 7)), DimensionError);
}

TEST(PruneNm, Examples) {
  const DenseMatrix w(1, 4, {1, -4, 3, 2});
  EXPECT_EQ(prune_nm(w, score_magnitude(w), {2, 4}), DenseMatrix(1, 4, {0, -4, 3, 0}));
  const DenseMatrix r = oracle::random_matrix(3, 16, 4);
  EXPECT_EQ(prune_nm(r, score_magnitude(r), {8, 8}), r);
  DenseMatrix flat(2, 8);
  for (double& v : flat.data()) v = 1.0;
  EXPECT_EQ(prune_nm(flat, flat, {3, 8}), DenseMatrix(2, 8, {1, 1, 1, 0, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 0}));
}

TEST(PruneNm, GreedyEqualsBruteForceKeepSet) {
  std::mt19937 gen(2024);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> small(0, 3);
  for (int m : {4, 8}) {
    for (int n = 1; n <= m; ++n) {
      for (int trial = 0; trial < 1000; ++trial) {
        const bool with_ties = trial % 2 == 1;
        std::vector<double> w(static_cast<std::size_t>(m));
        std::vector<double> scores(w.size());
        for (std::size_t k = 0; k < w.size(); ++k) {
          w[k] = with_ties ? small(gen) - 1.5 : nd(gen);
          scores[k] = with_ties ? static_cast<double>(small(gen)) : std::abs(nd(gen));
        }
        const DenseMatrix pruned = prune_nm(DenseMatrix(1, w.size(), w), DenseMatrix(1, w.size(), scores), {n, m});
        const auto keep = oracle::brute_force_keep(scores, static_cast<std::size_t>(n));
        std::vector<double> expect(w.size(), 0.0);
        for (std::size_t k : keep) expect[k] = w[k];
        ASSERT_EQ(std::vector<double>(pruned.data().begin(), pruned.data().end()), expect)
            << n << ":" << m << " trial " << trial;
      }
    }
  }
}

TEST(PruneNm, PatternSoundnessAndSupportRestriction) {
  const DenseMatrix w = oracle::random_matrix(16, 64, 5);
  const DenseMatrix x = oracle::random_matrix(32, 64, 6);
  for (int m : {4, 8, 16}) {
    for (int n = 1; n <= m; ++n) {
      for (const DenseMatrix& s : {score_magnitude(w), score_wanda(w, x)}) {
        const DenseMatrix p = prune_nm(w, s, {n, m});
        EXPECT_TRUE(validate_nm(p, {n, m}).valid);
        for (std::size_t i = 0; i < w.size(); ++i) {
          EXPECT_TRUE(p.data()[i] == 0.0 || p.data()[i] == w.data()[i]);
        }
      }
    }
  }
}

TEST(PruneNm, ErrorNeverIncreasesWithN) {
  for (unsigned seed = 0; seed < 5; ++seed) {
    const DenseMatrix w = oracle::random_matrix(32, 64, seed);
    const DenseMatrix x = oracle::random_matrix(48, 64, seed + 50);
    const DenseMatrix ref = output_of(w, x);
    for (int m : {4, 8, 16}) {
      for (const DenseMatrix& s : {score_magnitude(w), score_wanda(w, x)}) {
        double previous = INFINITY;
        for (int n = 1; n <= m; ++n) {
          const double e = relative_error(output_of(prune_nm(w, s, {n, m}), x), ref);
          EXPECT_LE(e, previous) << n << ":" << m << " seed " << seed;
          previous = e;
        }
        EXPECT_EQ(previous, 0.0);
      }
    }
  }
}

TEST(PruneNm, WandaWithConstantCalibrationMatchesMagnitude) {
  const DenseMatrix w = oracle::random_matrix(8, 32, 7);
  DenseMatrix ones(10, 32);
  for (double& v : ones.data()) v = 1.0;
  for (auto p : {SparsityPattern(2, 4), SparsityPattern(1, 8), SparsityPattern(5, 16)}) {
    EXPECT_EQ(sparsify(w, p, {SparsifyMethod::Wanda, ones}), sparsify(w, p, {SparsifyMethod::Magnitude}));
  }
}

TEST(SparseGpt, DiagonalHessianReducesToMagnitude) {
  const DenseMatrix w = oracle::random_matrix(6, 32, 8);
  DenseMatrix x = DenseMatrix::identity(32);
  for (double& v : x.data()) v *= 2.5;
  for (auto p : {SparsityPattern(2, 4), SparsityPattern(3, 8), SparsityPattern(4, 16)}) {
    EXPECT_EQ(prune_sparsegpt(w, x, p), prune_nm(w, score_magnitude(w), p));
  }
}

TEST(SparseGpt, PatternSoundAndOnlyZeroesPrunedPositions) {
  const DenseMatrix w = oracle::random_matrix(12, 64, 9);
  const DenseMatrix x = correlated_calibration(128, 64, 10);
  for (auto p : {SparsityPattern(2, 4), SparsityPattern(1, 8), SparsityPattern(7, 8), SparsityPattern(8, 16)}) {
    const DenseMatrix out = prune_sparsegpt(w, x, p);
    EXPECT_TRUE(validate_nm(out, p).valid);
  }
  EXPECT_EQ(prune_sparsegpt(w, x, {8, 8}), w);
}

TEST(SparseGpt, BeatsMagnitudeOnCalibrationReconstruction) {
  int wins = 0;
  for (unsigned seed = 0; seed < 20; ++seed) {
    const DenseMatrix w = oracle::random_matrix(32, 64, seed);
    const DenseMatrix x = correlated_calibration(256, 64, seed + 77);
    const DenseMatrix ref = output_of(w, x);
    const double obs = relative_error(output_of(prune_sparsegpt(w, x, {2, 4}), x), ref);
    const double mag = relative_error(output_of(prune_nm(w, score_magnitude(w), {2, 4}), x), ref);
    if (obs < mag) ++wins;
  }
  EXPECT_EQ(wins, 20);
}

TEST(SparseGpt, HandlesDegenerateCalibration) {
  const DenseMatrix w = oracle::random_matrix(4, 16, 11);
  const DenseMatrix out = prune_sparsegpt(w, DenseMatrix(8, 16), {2, 4});
  EXPECT_EQ(out, prune_nm(w, score_magnitude(w), {2, 4}));
  EXPECT_THROW(prune_sparsegpt(w, DenseMatrix(8, 12), {2, 4}), DimensionError);
  EXPECT_THROW(prune_sparsegpt(w, DenseMatrix(8, 16), {2, 4}, 0.0), std::invalid_argument);
}

TEST(SparseGpt, IdenticalAcrossThreadCounts) {
  const DenseMatrix w = oracle::random_matrix(40, 64, 12);
  const DenseMatrix x = correlated_calibration(96, 64, 13);
  set_num_threads(1);
  const DenseMatrix ref = prune_sparsegpt(w, x, {3, 8});
  for (unsigned t : {2u, 5u, 16u}) {
    set_num_threads(t);
    EXPECT_EQ(prune_sparsegpt(w, x, {3, 8}), ref);
    EXPECT_EQ(sparsify(w, {3, 8}, {SparsifyMethod::Wanda, x}), prune_nm(w, score_wanda(w, x), {3, 8}));
  }
  set_num_threads(1);
}

TEST(Sparsify, MetricValidation) {
  const DenseMatrix w = oracle::random_matrix(2, 8, 14);
  EXPECT_THROW(sparsify(w, {2, 4}, {SparsifyMethod::Wanda}), ConfigError);
  EXPECT_THROW(sparsify(w, {2, 4}, {SparsifyMethod::SparseGpt}), ConfigError);
  EXPECT_THROW(sparsify(w, {2, 4}, {SparsifyMethod::Magnitude, DenseMatrix(3, 8)}), ConfigError);
  EXPECT_EQ(sparsify_method_from_name("sparsegpt"), SparsifyMethod::SparseGpt);
  EXPECT_EQ(to_string(SparsifyMethod::Wanda), "wanda");
  EXPECT_THROW(sparsify_method_from_name("owl"), std::invalid_argument);
  EXPECT_THROW(sparsify(DenseMatrix(2, 6), {2, 4}, {SparsifyMethod::Magnitude}), DimensionError);
}

}  // namespace
}  // namespace sdq
