#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "dtud/error.hpp"
#include "dtud/rng.hpp"
#include "dtud/rules.hpp"

namespace dtud {

using SampleMatrix = std::vector<std::vector<double>>;

struct SamplingPlan {
  std::vector<Interval> bounds;
  std::size_t n = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 1) fail(ErrorKind::InvalidParameter, "sample count must be >= 1");
    if (bounds.empty()) fail(ErrorKind::InvalidParameter, "sampling plan has no variables");
    for (const auto& b : bounds)
      if (!(std::isfinite(b.lo) && std::isfinite(b.hi) && b.lo < b.hi))
        fail(ErrorKind::InvalidParameter, "sampling bounds must be finite with lower < upper");
  }
};

/// Latin hypercube sample: per variable, one point in each of n equal strata,
/// uniform inside its stratum, strata assigned by a seeded permutation.
/// Variables are drawn in order, each consuming a shuffle then n uniforms.
inline SampleMatrix lhs(const SamplingPlan& plan) {
  plan.validate();
  const std::size_t n = plan.n;
  SampleMatrix out(n, std::vector<double>(plan.bounds.size()));
  Rng rng(plan.seed);
  std::vector<std::size_t> strata(n);
  for (std::size_t j = 0; j < plan.bounds.size(); ++j) {
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    rng.shuffle(strata.begin(), strata.end());
    const auto [lo, hi] = plan.bounds[j];
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (static_cast<double>(strata[i]) + rng.uniform_open()) / static_cast<double>(n);
      out[i][j] = std::clamp(lo + u * (hi - lo), lo, hi);
    }
  }
  return out;
}

/// Latin hypercube sample inside a rule box. Points that round onto a strict
/// lower bound are moved to the next representable value.
inline SampleMatrix lhs_in_rule(const Rule& rule, std::size_t n, std::uint64_t seed) {
  for (const auto& iv : rule.box)
    if (!(iv.lo < iv.hi)) fail(ErrorKind::InvalidParameter, "rule box is empty");
  auto samples = lhs({rule.box, n, seed});
  for (auto& row : samples)
    for (std::size_t k = 0; k < row.size(); ++k)
      if (k < rule.lo_open.size() && rule.lo_open[k] && row[k] <= rule.box[k].lo)
        row[k] = std::nextafter(rule.box[k].lo, rule.box[k].hi);
  return samples;
}

/// Advisory minimum sample count, three per design variable.
inline std::size_t sample_count_heuristic(std::size_t variables) {
  if (variables < 1) fail(ErrorKind::InvalidParameter, "need at least one design variable");
  return 3 * variables;
}

}  // namespace dtud
