#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "occnav/channel_analysis.hpp"

using namespace occnav;

TEST(Mfsk, ZeroSnr) {
  EXPECT_EQ(mfsk_error(2, 0.0), 0.5);
  EXPECT_EQ(mfsk_error(4, 0.0), 0.75);
  EXPECT_EQ(mfsk_error(8, 0.0), 0.875);
  EXPECT_EQ(mfsk_error(16, 0.0), 0.9375);
  EXPECT_NEAR(mfsk_error(64, 0.0), 63.0 / 64.0, 1e-14);
}

TEST(Mfsk, BinaryClosedForm) {
  for (double rho : {0.0, 0.3, 1.0, 4.0, 10.0, 37.0})
    EXPECT_NEAR(mfsk_error(2, rho), 0.5 * std::exp(-rho / 2), 1e-12);
  EXPECT_NEAR(mfsk_error(2, 10.0), 3.3690e-3, 1e-7);
}

TEST(Mfsk, LargeOrderStaysAccurate) {
  // high-precision evaluations of the same sum
  EXPECT_NEAR(mfsk_error(64, 1.0), 0.9008164935725543, 1e-12);
  EXPECT_NEAR(mfsk_error(64, 20.0), 0.0010486273622473728, 1e-15);
  EXPECT_NEAR(mfsk_error(32, 1.0), 0.8489595929009357, 1e-12);
  EXPECT_NEAR(mfsk_error(16, 20.0), 0.0003028625398555273, 1e-15);
}

TEST(Mfsk, VanishesAtHighSnr) {
  for (int m : {2, 4, 8, 16, 64}) EXPECT_LT(mfsk_error(m, 1e4), 1e-12);
}

TEST(Mfsk, Domain) {
  EXPECT_THROW(mfsk_error(1, 1.0), DomainError);
  EXPECT_THROW(mfsk_error(2, -0.1), DomainError);
  EXPECT_THROW(mfsk_bit_error(6, 1.0), DomainError);
  for (int m : {2, 4, 8})
    for (double rho : {0.0, 0.5, 3.0, 30.0}) {
      const double p = mfsk_error(m, rho);
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, (m - 1.0) / m + 1e-15);
    }
}

TEST(Sweep, OrderingAndMonotonicity) {
  const auto pts = ber_sweep({2, 4, 8}, -10, 20, 0.5);
  ASSERT_EQ(pts.size() % 3, 0u);
  for (std::size_t k = 0; k < pts.size(); k += 3) {
    EXPECT_LT(pts[k + 2].p_bit, pts[k + 1].p_bit) << pts[k].snr_db;
    EXPECT_LT(pts[k + 1].p_bit, pts[k].p_bit) << pts[k].snr_db;
    if (k >= 3) {
      for (int j = 0; j < 3; ++j) EXPECT_LE(pts[k + j].p_symbol, pts[k + j - 3].p_symbol);
    }
  }
  const auto zero = ber_sweep({2}, 0, 0, 1);
  EXPECT_EQ(zero.front().rho, 1.0);
  EXPECT_THROW(ber_sweep({}, 0, 1, 1), DomainError);
  EXPECT_THROW(ber_sweep({2}, 0, 1, 0), DomainError);
}

// Noncoherent binary FSK over AWGN: the receiver picks the larger of two
// envelope detector outputs; the signal bin carries amplitude sqrt(2 rho).
TEST(Sweep, MonteCarloBinaryOracle) {
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> g(0.0, 1.0);
  for (double rho : {1.0, 4.0, 10.0}) {
    const int n = 400000;
    const double a = std::sqrt(2.0 * rho);
    int errors = 0;
    for (int k = 0; k < n; ++k) {
      const double s1 = std::hypot(a + g(rng), g(rng));
      const double s0 = std::hypot(g(rng), g(rng));
      errors += s0 > s1;
    }
    const double p = mfsk_error(2, rho);
    const double sigma = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(static_cast<double>(errors) / n, p, 3 * sigma) << "rho " << rho;
  }
}
