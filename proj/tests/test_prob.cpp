#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tmsr/prob.hpp"

namespace tmsr::prob {
namespace {

TEST(MeasuredInterval, Cases) {
  EXPECT_DOUBLE_EQ(measured_interval(0.4, 0.1, 0.3, 3.2), 3.0 + 0.3 - 0.1);
  EXPECT_DOUBLE_EQ(measured_interval(0.3, 0.1, 0.3, 3.6), 3.0 + 0.3 - 0.1);
  EXPECT_DOUBLE_EQ(measured_interval(0.5, 0.1, 0.3, 3.6), 4.0 + 0.3 - 0.1);
}

TEST(MeasuredInterval, Domain) {
  EXPECT_THROW(measured_interval(0.6, 0, 0, 3), std::domain_error);
  EXPECT_THROW(measured_interval(0, -0.1, 0, 3), std::domain_error);
  EXPECT_THROW(measured_interval(0, 0, 0, 0), std::domain_error);
}

TEST(CdfDiff, Examples) {
  EXPECT_DOUBLE_EQ(cdf_diff(0), 0.5);
  EXPECT_DOUBLE_EQ(cdf_diff(0.5), 1.0);
  EXPECT_DOUBLE_EQ(cdf_diff(0.25), 0.875);
  EXPECT_DOUBLE_EQ(cdf_diff(-0.5), 0.0);
}

TEST(CdfDiff, MonteCarlo) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  int hits = 0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) hits += (u(rng) - u(rng) <= 0.25);
  EXPECT_NEAR(hits / double(n), 0.875, 0.003);
}

TEST(FEllCdf, Examples) {
  EXPECT_NEAR(f_ell_cdf(3.2, 3), 0.5, 1e-12);
  EXPECT_NEAR(f_ell_cdf(3.7, 3), 0.3, 1e-12);
  EXPECT_NEAR(f_ell_cdf(3.2, 2.8), 0.18, 1e-12);
  EXPECT_THROW(f_ell_cdf(0, 1), std::domain_error);
}

TEST(FEllCdf, MonotoneWithFullSupport) {
  for (double ell : {3.1, 3.2, 3.5, 3.7, 3.95, 1.6}) {
    const double lo = std::floor(ell) - 0.5;
    EXPECT_NEAR(f_ell_cdf(ell, lo - 1e-9), 0.0, 1e-12);
    EXPECT_NEAR(f_ell_cdf(ell, lo + 2.0), 1.0, 1e-12);
    double prev = 0;
    for (int i = 0; i <= 400; ++i) {
      const double v = f_ell_cdf(ell, lo + i * 0.005);
      EXPECT_GE(v, prev - 1e-15);
      prev = v;
    }
  }
}

TEST(FEllCdf, MatchesSampling) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (double ell : {3.2, 3.7}) {
    for (double x : {2.8, 3.0, 3.3, 4.1}) {
      int hits = 0;
      const int n = 200000;
      for (int i = 0; i < n; ++i) hits += measured_interval(u(rng), u(rng), u(rng), ell) <= x;
      EXPECT_NEAR(hits / double(n), f_ell_cdf(ell, x), 0.005) << ell << " " << x;
    }
  }
}

TEST(PError, ClosedForm) {
  EXPECT_EQ(p_error(0.25), 0.5);
  EXPECT_EQ(p_error(0.5), 0.5);
  EXPECT_EQ(p_error(0.75), 0.25);
  EXPECT_EQ(p_error(1.0), 0.0);
  EXPECT_EQ(p_error(1.5), 0.0);
  EXPECT_THROW(p_error(0), std::domain_error);
  EXPECT_THROW(p_error(-1), std::domain_error);
}

TEST(PError, ContinuousAtBreakpoints) {
  EXPECT_NEAR(p_error(0.5 + 1e-9), 0.5, 1e-8);
  EXPECT_NEAR(p_error(1.0 - 1e-9), 0.0, 1e-8);
}

TEST(PError, EqualsDistributionAtBound) {
  for (std::uint32_t r = 1; r <= 5; ++r) {
    for (double h = 0.05; h < 2.0; h += 0.05) {
      EXPECT_NEAR(p_error(h), f_ell_cdf(r + h, r), 1e-9) << r << " " << h;
    }
  }
}

TEST(McEstimate, Examples) {
  EXPECT_NEAR(mc_estimate(3, 0.25, 1000000, 1), 0.5, 0.005);
  EXPECT_NEAR(mc_estimate(3, 0.75, 1000000, 1), 0.25, 0.005);
  EXPECT_EQ(mc_estimate(3, 1.5, 10000, 1), 0.0);
}

TEST(McEstimate, Deterministic) {
  EXPECT_EQ(mc_estimate(3, 0.6, 300000, 42), mc_estimate(3, 0.6, 300000, 42));
  EXPECT_EQ(mc_estimate(3, 0.6, 300000, 42, 1), mc_estimate(3, 0.6, 300000, 42, 4));
  EXPECT_NE(mc_estimate(3, 0.6, 300000, 42), mc_estimate(3, 0.6, 300000, 43));
}

TEST(McEstimate, FourSigmaGrid) {
  const std::uint64_t n = 100000;
  int points = 0;
  for (std::uint32_t r : {2u, 3u, 5u, 7u}) {
    for (double h : {0.1, 0.4, 0.6, 0.8, 0.95}) {
      const double p = p_error(h);
      const double tol = 4.0 * std::sqrt(p * (1 - p) / n);
      EXPECT_LE(std::abs(mc_estimate(r, h, n, 7 + r) - p), tol + 1e-12) << r << " " << h;
      ++points;
    }
  }
  EXPECT_EQ(points, 20);
}

TEST(McEstimate, Domain) {
  EXPECT_THROW(mc_estimate(3, 0.5, 0, 1), std::domain_error);
  EXPECT_THROW(mc_estimate(3, 0.0, 10, 1), std::domain_error);
}

TEST(Density, SinglePeak) {
  const auto t = density_table(3.2, 400);
  const auto peaks = local_maxima(t);
  ASSERT_EQ(peaks.size(), 1u);
  EXPECT_NEAR(peaks[0].density, 2.0, 0.05);
  EXPECT_NEAR(peaks[0].x, 3.0, 0.01);
  EXPECT_NEAR(total_mass(t), 1.0, 1e-3);
}

TEST(Density, Bactrian) {
  const auto t = density_table(3.7, 400);
  const auto peaks = local_maxima(t);
  ASSERT_EQ(peaks.size(), 2u);
  EXPECT_NEAR(peaks[0].density, 1.2, 0.1);
  EXPECT_NEAR(peaks[1].density, 0.8, 0.1);
  EXPECT_NEAR(total_mass(t), 1.0, 1e-3);
  EXPECT_EQ(t.size(), 401u);
  EXPECT_DOUBLE_EQ(t.front().x, 2.5);
  EXPECT_DOUBLE_EQ(t.back().x, 4.5);
}

TEST(Density, Csv) {
  const std::string csv = density_csv(density_table(3.7, 4));
  EXPECT_EQ(csv.rfind("x,density\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  EXPECT_THROW(density_table(3.7, 1), std::domain_error);
}

TEST(Splitmix, KnownValue) {
  // First output of the reference generator seeded with 0.
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
}

}  // namespace
}  // namespace tmsr::prob
