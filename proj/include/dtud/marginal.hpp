#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dtud/error.hpp"

namespace dtud {

/// Gaussian density centred on an exact design value and truncated to an
/// interval, rescaled by `normalizer` so the interval carries unit mass.
/// A zero `sigma` marks a point mass at `mean` (a certain value).
struct TruncatedGaussianMarginal {
  double lower = 0.0;
  double upper = 0.0;
  double mean = 0.0;
  double sigma = 0.0;
  double normalizer = 1.0;

  bool is_point() const noexcept { return sigma == 0.0; }

  /// P(X <= x).
  double cdf(double x) const noexcept {
    if (is_point()) return x >= mean ? 1.0 : 0.0;
    if (x <= lower) return 0.0;
    if (x >= upper) return 1.0;
    return std::clamp((std_normal_cdf(z(x)) - std_normal_cdf(z(lower))) * normalizer, 0.0, 1.0);
  }

  /// P(X < x). Differs from cdf only at the atom of a point mass.
  double cdf_below(double x) const noexcept {
    if (is_point()) return x > mean ? 1.0 : 0.0;
    return cdf(x);
  }

  double pdf(double x) const noexcept {
    if (is_point() || x < lower || x > upper) return 0.0;
    const double t = z(x);
    return normalizer * std::exp(-0.5 * t * t) / (sigma * std::sqrt(2.0 * std::numbers::pi));
  }

  static double std_normal_cdf(double t) noexcept {
    return 0.5 * std::erfc(-t / std::numbers::sqrt2);
  }

 private:
  double z(double x) const noexcept { return (x - mean) / sigma; }
};

/// Marginal on [lower, upper] whose interval spans six standard deviations.
inline TruncatedGaussianMarginal make_marginal_on(double lower, double upper, double mean) {
  if (!(std::isfinite(lower) && std::isfinite(upper) && std::isfinite(mean)))
    fail(ErrorKind::InvalidParameter, "marginal bounds must be finite");
  if (lower == upper) {
    if (mean != lower) fail(ErrorKind::InvalidParameter, "point marginal mean must equal its bounds");
    return {lower, upper, mean, 0.0, 1.0};
  }
  if (!(lower < upper)) fail(ErrorKind::InvalidParameter, "marginal requires lower < upper");
  if (mean < lower || mean > upper)
    fail(ErrorKind::InvalidParameter, "marginal mean must lie inside its interval");
  TruncatedGaussianMarginal m{lower, upper, mean, (upper - lower) / 6.0, 1.0};
  const double alpha = (lower - mean) / m.sigma;
  const double beta = (upper - mean) / m.sigma;
  m.normalizer = 1.0 / (TruncatedGaussianMarginal::std_normal_cdf(beta) -
                        TruncatedGaussianMarginal::std_normal_cdf(alpha));
  return m;
}

/// Marginal for an exact value `mean` with interval half-width
/// `relative_deviation * |mean|`. A zero deviation yields a point mass.
inline TruncatedGaussianMarginal make_marginal(double mean, double relative_deviation) {
  if (!std::isfinite(mean)) fail(ErrorKind::InvalidParameter, "marginal mean must be finite");
  if (!(relative_deviation >= 0.0 && relative_deviation < 1.0))
    fail(ErrorKind::InvalidParameter,
         "relative deviation must lie in [0, 1), got " + std::to_string(relative_deviation));
  if (relative_deviation == 0.0) return {mean, mean, mean, 0.0, 1.0};
  const double half_width = relative_deviation * std::abs(mean);
  if (!(half_width > 0.0))
    fail(ErrorKind::InvalidParameter, "zero-width interval: mean 0 cannot carry a relative deviation");
  return make_marginal_on(mean - half_width, mean + half_width, mean);
}

/// Probability of the closed interval [a, b]; zero when it misses the support.
inline double mass_on(const TruncatedGaussianMarginal& m, double a, double b) {
  if (b < a) return 0.0;
  return std::max(0.0, m.cdf(b) - m.cdf_below(a));
}

}  // namespace dtud
