#include <gtest/gtest.h>

#include <random>

#include "dtud/marginal.hpp"
#include "oracles/monte_carlo.hpp"
#include "oracles/quadrature.hpp"

using namespace dtud;

TEST(Marginal, RelativeDeviationBuildsInterval) {
  const auto m = make_marginal(2.0, 0.1);
  EXPECT_DOUBLE_EQ(m.lower, 1.8);
  EXPECT_DOUBLE_EQ(m.upper, 2.2);
  EXPECT_NEAR(m.sigma, 0.4 / 6.0, 1e-15);
  EXPECT_NEAR(m.sigma, 0.0667, 5e-5);
  EXPECT_NEAR(m.normalizer, 1.0027, 5e-5);
  EXPECT_NEAR(m.normalizer, 1.0 / std::erf(3.0 / std::sqrt(2.0)), 1e-12);
}

TEST(Marginal, ZeroDeviationIsPointMass) {
  const auto m = make_marginal(5.0, 0.0);
  EXPECT_TRUE(m.is_point());
  EXPECT_EQ(mass_on(m, 5.0, 5.0), 1.0);
  EXPECT_EQ(mass_on(m, 4.0, 4.999), 0.0);
  EXPECT_EQ(mass_on(m, 5.0001, 9.0), 0.0);
}

TEST(Marginal, NegativeMeanKeepsOrder) {
  const auto m = make_marginal(-10.0, 0.1);
  EXPECT_DOUBLE_EQ(m.lower, -11.0);
  EXPECT_DOUBLE_EQ(m.upper, -9.0);
  EXPECT_NEAR(mass_on(m, m.lower, m.upper), 1.0, 1e-12);
}

TEST(Marginal, InvalidParameters) {
  EXPECT_THROW(make_marginal(0.0, 0.1), Error);
  EXPECT_THROW(make_marginal(1.0, 1.0), Error);
  EXPECT_THROW(make_marginal(1.0, -0.1), Error);
  EXPECT_NO_THROW(make_marginal(0.0, 0.0));
  try {
    make_marginal(0.0, 0.2);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidParameter);
  }
}

TEST(Marginal, MassOnKnownIntervals) {
  const auto m = make_marginal_on(0.0, 10.0, 5.0);
  EXPECT_NEAR(mass_on(m, 0.0, 10.0), 1.0, 1e-12);
  EXPECT_NEAR(mass_on(m, 0.0, 5.0), 0.5, 1e-12);
  const double q = oracle::integrate([](double x) { return oracle::truncated_gaussian_pdf(x, 0.0, 10.0, 5.0); }, 0.0, 7.0);
  EXPECT_NEAR(mass_on(m, 0.0, 7.0), q, 1e-10);
  EXPECT_NEAR(q, 0.886, 5e-4);
  EXPECT_EQ(mass_on(m, 11.0, 12.0), 0.0);
  EXPECT_EQ(mass_on(m, 7.0, 6.0), 0.0);
  EXPECT_NEAR(mass_on(m, -5.0, 20.0), 1.0, 1e-12);
}

TEST(Marginal, MatchesQuadratureOnRandomIntervals) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double lower = -5 + 10 * u(rng);
    const double upper = lower + 0.1 + 5 * u(rng);
    const double mean = lower + (upper - lower) * u(rng);
    const auto m = make_marginal_on(lower, upper, mean);
    double a = lower + (upper - lower) * u(rng);
    double b = lower + (upper - lower) * u(rng);
    if (a > b) std::swap(a, b);
    const double q = oracle::integrate([&](double x) { return oracle::truncated_gaussian_pdf(x, lower, upper, mean); },
                                       a, b);
    EXPECT_NEAR(mass_on(m, a, b), q, 1e-10);
    EXPECT_NEAR(m.pdf(0.5 * (a + b)), oracle::truncated_gaussian_pdf(0.5 * (a + b), lower, upper, mean), 1e-12);
  }
}

TEST(Marginal, NormalizationAndMonotonicity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> v(-100.0, 100.0);
  std::uniform_real_distribution<double> r(0.01, 0.9);
  for (int i = 0; i < 200; ++i) {
    const auto m = make_marginal(v(rng), r(rng));
    EXPECT_NEAR(mass_on(m, m.lower, m.upper), 1.0, 1e-12);
    double prev = 0.0;
    for (int j = 0; j <= 20; ++j) {
      const double b = m.lower + (m.upper - m.lower) * j / 20.0;
      const double cur = mass_on(m, m.lower, b);
      EXPECT_GE(cur, prev);
      prev = cur;
    }
  }
}

TEST(Marginal, MonteCarloAgreement) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  oracle::TruncatedSampler sampler(17);
  const int draws = 1'000'000;
  for (int c = 0; c < 3; ++c) {
    const auto m = make_marginal(1.0 + 9.0 * u(rng), 0.05 + 0.4 * u(rng));
    double a = m.lower + (m.upper - m.lower) * u(rng);
    double b = m.lower + (m.upper - m.lower) * u(rng);
    if (a > b) std::swap(a, b);
    int hits = 0;
    for (int i = 0; i < draws; ++i) {
      const double x = sampler.draw(m);
      hits += (x >= a && x <= b);
    }
    const double p = mass_on(m, a, b);
    const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / draws);
    EXPECT_NEAR(static_cast<double>(hits) / draws, p, 4 * se) << "case " << c;
  }
}
