#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "dtud/dtud.hpp"
#include "oracles/monte_carlo.hpp"

namespace support {

inline dtud::Dataset certain_dataset(std::vector<std::string> names, const std::vector<std::vector<double>>& rows,
                                     const std::vector<std::string>& labels) {
  return dtud::make_dataset(std::move(names), rows, labels, 0.0);
}

inline std::vector<std::string> attribute_names(std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back("x" + std::to_string(i + 1));
  return out;
}

struct RandomProblem {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::vector<std::string> label_set;
};

/// Labelled data on a coarse value lattice so that ties and repeated values occur.
inline RandomProblem random_problem(std::mt19937_64& rng, std::size_t max_tuples, std::size_t max_attrs,
                                    double lo = 1.0, double hi = 10.0) {
  std::uniform_int_distribution<std::size_t> n_dist(6, max_tuples);
  std::uniform_int_distribution<std::size_t> k_dist(1, max_attrs);
  std::uniform_int_distribution<int> l_dist(2, 3);
  std::uniform_real_distribution<double> v(lo, hi);
  RandomProblem p;
  const auto n = n_dist(rng);
  const auto k = k_dist(rng);
  const int nl = l_dist(rng);
  const std::vector<std::string> names{"g", "m", "p"};
  p.label_set.assign(names.begin(), names.begin() + nl);
  std::uniform_int_distribution<int> lab(0, nl - 1);
  // Labels follow a noisy rule on the first attribute so trees have structure.
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < k; ++j) row.push_back(std::round(v(rng) * 4.0) / 4.0);
    const int base = static_cast<int>((row[0] - lo) / (hi - lo) * nl);
    const int label = std::uniform_real_distribution<double>(0, 1)(rng) < 0.7 ? std::min(base, nl - 1) : lab(rng);
    p.rows.push_back(row);
    p.labels.push_back(names[label]);
  }
  return p;
}

/// Leaf reached by an exact point.
inline std::size_t leaf_of(const dtud::DtudTree& tree, const std::vector<double>& x) {
  std::size_t node = 0;
  while (!tree.nodes[node].is_leaf()) {
    const auto& s = tree.nodes[node].split();
    node = x[s.attr] <= s.threshold ? s.left : s.right;
  }
  return node;
}

struct MonteCarloLp {
  std::vector<double> mean;
  std::vector<double> se;
};

/// Average leaf distribution of exact points drawn from the tuple's marginals.
inline MonteCarloLp monte_carlo_lp(const dtud::DtudTree& tree, const dtud::UncertainTuple& t, std::size_t draws,
                                   std::uint64_t seed) {
  oracle::TruncatedSampler sampler(seed);
  const std::size_t nl = tree.label_set.size();
  std::vector<double> sum(nl, 0.0), sum2(nl, 0.0);
  std::vector<double> x(t.arity());
  for (std::size_t d = 0; d < draws; ++d) {
    for (std::size_t k = 0; k < t.arity(); ++k) x[k] = sampler.draw(t.marginals[k]);
    const auto& lp = tree.nodes[leaf_of(tree, x)].leaf().lp;
    for (std::size_t i = 0; i < nl; ++i) {
      sum[i] += lp[i];
      sum2[i] += lp[i] * lp[i];
    }
  }
  MonteCarloLp out{std::vector<double>(nl), std::vector<double>(nl)};
  const double n = static_cast<double>(draws);
  for (std::size_t i = 0; i < nl; ++i) {
    out.mean[i] = sum[i] / n;
    const double var = std::max(0.0, sum2[i] / n - out.mean[i] * out.mean[i]);
    out.se[i] = std::sqrt(var / n);
  }
  return out;
}

/// Random uncertain dataset with positive attribute values.
inline dtud::Dataset random_uncertain_dataset(std::mt19937_64& rng, std::size_t n, std::size_t k, double R) {
  std::uniform_real_distribution<double> v(1.0, 10.0);
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  const std::vector<std::string> names{"g", "m", "p"};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < k; ++j) row.push_back(v(rng));
    const double score = row[0] + (k > 1 ? 0.5 * row[1] : 0.0) + std::normal_distribution<double>(0, 1)(rng);
    labels.push_back(score < 5 ? "p" : score < 8 ? "m" : "g");
    rows.push_back(std::move(row));
  }
  return dtud::make_dataset(attribute_names(k), rows, labels, R, names);
}

}  // namespace support
