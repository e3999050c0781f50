#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

// Sanity checks on the reference implementations themselves.

TEST(Oracles, DenseHarmonicTrivialBox) {
  EXPECT_NEAR(oracle::dense_harmonic_capacity(2, 1), 4.0, 1e-14);
  EXPECT_NEAR(oracle::dense_harmonic_capacity(3, 1), 6.0, 1e-14);
  // The potential solves the discrete Laplace equation at interior points.
  const int M = 3, side = 2 * M + 1;
  auto f = oracle::dense_harmonic_potential_2d(M);
  for (int y = 1; y + 1 < side; ++y) {
    for (int x = 1; x + 1 < side; ++x) {
      if (x == M && y == M) continue;
      const int i = x + side * y;
      EXPECT_NEAR(4 * f[i], f[i - 1] + f[i + 1] + f[i - side] + f[i + side], 1e-12);
    }
  }
}

TEST(Oracles, EnumerationOnTinyGrid) {
  // 2 x 2 square: two routes between opposite corners.
  std::vector<double> w = {1.0, 5.0, 2.0, 0.5};  // (0-1), (2-3), (0-2), (1-3)
  EXPECT_DOUBLE_EQ(oracle::min_path_by_enumeration(2, 2, w, 0, 3), 1.5);
}

TEST(Oracles, ChainGridSearch) {
  EXPECT_NEAR(oracle::grid_search_chain(2, 2.0, 32), 1.0, 1e-14);
  EXPECT_NEAR(oracle::grid_search_chain(1, 3.0, 8), 2.0, 1e-14);
}

TEST(Oracles, GammaTail) {
  EXPECT_NEAR(oracle::gamma_tail(1, 2.0), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(oracle::gamma_tail(4, 6.0), 0.15120388277664784, 1e-14);
  EXPECT_NEAR(oracle::erlang2_tail(1.0, 3.0), oracle::gamma_tail(2, 3.0), 1e-15);
}

TEST(Oracles, RandomWalkReturn) {
  const double p = oracle::srw_return_probability_3d(20'000, 4'000, 11);
  EXPECT_NEAR(p, 0.3405, 0.02);
}

TEST(Oracles, GammaCountsSumToPathLengths) {
  const int n = 4;
  auto counts = oracle::gamma_counts_2d(n);
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  std::uint64_t lengths = 0;
  for (int x = -n; x <= n; ++x)
    for (int y = -n; y <= n; ++y)
      if (std::max(std::abs(x), std::abs(y)) == n) lengths += std::abs(x) + std::abs(y);
  EXPECT_EQ(total, lengths);
}

TEST(Oracles, WeibullSumTail) {
  // r = 1: the sum of three Exp(1) is Gamma(3).
  for (double n : {1.0, 4.0, 10.0}) EXPECT_NEAR(oracle::weibull_sum3_tail(1.0, 1.0, n), oracle::gamma_tail(3, n), 1e-10);
  EXPECT_NEAR(oracle::weibull_sum3_tail(1.0, 0.5, 0.0), 1.0, 1e-12);
}
