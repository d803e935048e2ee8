#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "dtud/dataset.hpp"
#include "dtud/error.hpp"
#include "dtud/rng.hpp"

namespace dtud {

/// Gain ratios closer than this are treated as equal so the attribute/threshold
/// tie-break decides, independent of summation order.
inline constexpr double kGainTieTolerance = 1e-12;

struct TreeConfig {
  /// Longest root-to-leaf path, counted in splits.
  int max_layers = 6;
  /// Interior grid points per attribute at each node.
  int n_split_points = 10;
  /// Partitions lighter than this make a candidate inadmissible.
  double min_partition_mass = 1e-6;
  std::uint64_t seed = 0;
  /// Worker threads for candidate scoring; results do not depend on it.
  unsigned threads = 1;

  void validate() const {
    if (max_layers < 1) fail(ErrorKind::InvalidParameter, "max_layers must be >= 1");
    if (n_split_points < 1) fail(ErrorKind::InvalidParameter, "n_split_points must be >= 1");
    if (!(min_partition_mass >= 0.0)) fail(ErrorKind::InvalidParameter, "min_partition_mass must be >= 0");
  }
};

struct SplitCandidate {
  std::size_t attr = 0;
  double value = 0.0;

  friend bool operator==(const SplitCandidate&, const SplitCandidate&) = default;
};

// ---------------------------------------------------------------------------
// Split measures

/// Shannon entropy in bits of unnormalised label masses, with 0 log 0 = 0.
inline double entropy_of_masses(std::span<const double> masses) {
  double total = 0.0;
  for (double m : masses) total += m;
  if (!(total > 0.0)) fail(ErrorKind::UndefinedProbability, "entropy of an empty dataset");
  double h = 0.0;
  for (double m : masses) {
    if (m <= 0.0) continue;
    const double p = m / total;
    h -= p * std::log2(p);
  }
  return std::max(0.0, h);
}

inline double entropy(const Dataset& d) { return entropy_of_masses(label_masses(d)); }

/// Label masses on both sides of a split, accumulated tuple by tuple.
struct SplitMasses {
  std::vector<double> left;
  std::vector<double> right;
  double left_total = 0.0;
  double right_total = 0.0;
};

inline SplitMasses split_masses(const Dataset& d, const SplitCandidate& s) {
  if (s.attr >= d.arity()) fail(ErrorKind::Index, "split attribute " + std::to_string(s.attr) + " out of range");
  SplitMasses out{std::vector<double>(d.label_set.size(), 0.0), std::vector<double>(d.label_set.size(), 0.0)};
  for (const auto& t : d.tuples) {
    if (!t.label) continue;
    const auto [l, r] = split_tp(t, s.attr, s.value);
    out.left[*t.label] += l;
    out.right[*t.label] += r;
    out.left_total += l;
    out.right_total += r;
  }
  return out;
}

struct SplitScore {
  double split_entropy = 0.0;
  double split_info = 0.0;
  double gain_ratio = 0.0;
};

/// All three split measures from precomputed masses; nullopt when a side is
/// lighter than `min_partition_mass` or empty.
inline std::optional<SplitScore> score_masses(const SplitMasses& sm, double parent_entropy,
                                              double min_partition_mass) {
  const double total = sm.left_total + sm.right_total;
  if (!(sm.left_total > 0.0) || !(sm.right_total > 0.0) || sm.left_total < min_partition_mass ||
      sm.right_total < min_partition_mass)
    return std::nullopt;
  const double wl = sm.left_total / total;
  const double wr = sm.right_total / total;
  SplitScore s;
  s.split_entropy = wl * entropy_of_masses(sm.left) + wr * entropy_of_masses(sm.right);
  s.split_info = -(wl * std::log2(wl) + wr * std::log2(wr));
  if (!(s.split_info > 0.0)) return std::nullopt;
  s.gain_ratio = std::max(0.0, (parent_entropy - s.split_entropy) / s.split_info);
  return s;
}

inline SplitScore score_split(const Dataset& d, const SplitCandidate& s, double min_partition_mass = 1e-6) {
  const auto sm = split_masses(d, s);
  const auto score = score_masses(sm, entropy(d), min_partition_mass);
  if (!score)
    fail(ErrorKind::InvalidSplit, "split at " + std::to_string(s.value) + " on attribute " + std::to_string(s.attr) +
                                      " leaves an empty partition");
  return *score;
}

inline double split_entropy(const Dataset& d, const SplitCandidate& s, double min_partition_mass = 1e-6) {
  return score_split(d, s, min_partition_mass).split_entropy;
}

inline double split_info(const Dataset& d, const SplitCandidate& s, double min_partition_mass = 1e-6) {
  return score_split(d, s, min_partition_mass).split_info;
}

inline double gain_ratio(const Dataset& d, const SplitCandidate& s, double min_partition_mass = 1e-6) {
  return score_split(d, s, min_partition_mass).gain_ratio;
}

// ---------------------------------------------------------------------------
// Candidate generation and selection

/// n evenly spaced interior points per attribute over the union of the active
/// boxes of the tuples at this node. Each box is clipped to its marginal's
/// support, so a point-valued attribute contributes only its value.
inline std::vector<SplitCandidate> gen_split_candidates(const Dataset& d, int n) {
  std::vector<SplitCandidate> out;
  if (d.tuples.empty() || n < 1) return out;
  for (std::size_t k = 0; k < d.arity(); ++k) {
    double lo = INFINITY;
    double hi = -INFINITY;
    for (const auto& t : d.tuples) {
      const auto& m = t.marginals[k];
      lo = std::min(lo, std::max(t.active_box[k].lo, m.lower));
      hi = std::max(hi, std::min(t.active_box[k].hi, m.upper));
    }
    if (!(hi > lo)) continue;
    const double step = (hi - lo) / (n + 1);
    for (int i = 1; i <= n; ++i) out.push_back({k, lo + i * step});
  }
  return out;
}

struct ScoredCandidate {
  SplitCandidate candidate;
  SplitScore score;
};

/// Highest gain ratio among admissible candidates; ties go to the lowest
/// attribute, then the lowest threshold.
inline std::optional<ScoredCandidate> best_split(const Dataset& d, std::span<const SplitCandidate> candidates,
                                                 double min_partition_mass = 1e-6, unsigned threads = 1) {
  if (candidates.empty() || !(dataset_mass(d) > 0.0)) return std::nullopt;
  const double parent_entropy = entropy(d);
  std::vector<std::optional<SplitScore>> scores(candidates.size());
  auto score_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      scores[i] = score_masses(split_masses(d, candidates[i]), parent_entropy, min_partition_mass);
  };
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), candidates.size());
  if (workers <= 1 || d.tuples.size() * candidates.size() < 4096) {
    score_range(0, candidates.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (candidates.size() + workers - 1) / workers;
    for (std::size_t b = 0; b < candidates.size(); b += chunk)
      pool.emplace_back(score_range, b, std::min(candidates.size(), b + chunk));
  }

  // Deterministic reduction in (attr, threshold) order.
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (candidates[a].attr != candidates[b].attr) return candidates[a].attr < candidates[b].attr;
    return candidates[a].value < candidates[b].value;
  });
  std::optional<ScoredCandidate> best;
  for (std::size_t i : order) {
    if (!scores[i]) continue;
    if (!best || scores[i]->gain_ratio > best->score.gain_ratio + kGainTieTolerance)
      best = ScoredCandidate{candidates[i], *scores[i]};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Tree

struct SplitNode {
  std::size_t attr = 0;
  double threshold = 0.0;
  std::size_t left = 0;   // x <= threshold
  std::size_t right = 0;  // x > threshold
};

struct LeafNode {
  /// Label probabilities in label_set order.
  std::vector<double> lp;
  double mass = 0.0;
  std::size_t dominant = 0;
};

struct TreeNode {
  std::variant<SplitNode, LeafNode> content;
  std::size_t depth = 0;

  bool is_leaf() const noexcept { return std::holds_alternative<LeafNode>(content); }
  const LeafNode& leaf() const { return std::get<LeafNode>(content); }
  const SplitNode& split() const { return std::get<SplitNode>(content); }
};

/// Index of the largest entry; ties resolve to the lowest index, which is the
/// lexicographically smallest label because label sets are sorted.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

/// Nodes are stored in pre-order with node 0 the root, so leaves appear in
/// left-to-right order when scanning the vector.
struct DtudTree {
  std::vector<std::string> attribute_names;
  std::vector<std::string> label_set;
  TreeConfig config;
  std::vector<TreeNode> nodes;

  const TreeNode& root() const { return nodes.at(0); }

  std::vector<std::size_t> leaf_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].is_leaf()) out.push_back(i);
    return out;
  }

  std::size_t depth() const {
    std::size_t d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
  }
};

inline LeafNode make_leaf(std::vector<double> lp, double mass) {
  LeafNode leaf{std::move(lp), mass, 0};
  leaf.dominant = argmax(leaf.lp);
  return leaf;
}

namespace detail {

inline bool single_label(const Dataset& d) {
  std::optional<std::size_t> seen;
  for (const auto& t : d.tuples) {
    if (!(t.tp > 0.0) || !t.label) continue;
    if (seen && *seen != *t.label) return false;
    seen = t.label;
  }
  return true;
}

inline std::size_t grow(DtudTree& tree, const Dataset& d, std::size_t depth) {
  const std::size_t index = tree.nodes.size();
  tree.nodes.push_back({LeafNode{}, depth});
  const auto& cfg = tree.config;
  auto lp = label_distribution(d);
  const double mass = dataset_mass(d);

  std::optional<ScoredCandidate> best;
  if (!single_label(d) && depth < static_cast<std::size_t>(cfg.max_layers)) {
    const auto candidates = gen_split_candidates(d, cfg.n_split_points);
    best = best_split(d, candidates, cfg.min_partition_mass, cfg.threads);
    if (best && !(best->score.gain_ratio > kGainTieTolerance)) best.reset();
  }
  if (!best) {
    tree.nodes[index].content = make_leaf(std::move(lp), mass);
    return index;
  }

  const auto [attr, threshold] = best->candidate;
  Dataset left = d.empty_like();
  Dataset right = d.empty_like();
  for (const auto& t : d.tuples) {
    auto [l, r] = partition_tuple(t, attr, threshold);
    if (l.tp > 0.0) left.tuples.push_back(std::move(l));
    if (r.tp > 0.0) right.tuples.push_back(std::move(r));
  }

  SplitNode split{attr, threshold, 0, 0};
  // An empty side becomes a leaf carrying the parent's distribution.
  auto child = [&](const Dataset& part) {
    if (part.tuples.empty()) {
      const std::size_t leaf = tree.nodes.size();
      tree.nodes.push_back({make_leaf(lp, 0.0), depth + 1});
      return leaf;
    }
    return grow(tree, part, depth + 1);
  };
  split.left = child(left);
  split.right = child(right);
  tree.nodes[index].content = split;
  return index;
}

}  // namespace detail

/// Recursive binary construction: a node becomes a leaf when its tuples share
/// one label, no candidate is admissible, the best gain ratio is not positive,
/// or the layer cap is reached.
inline DtudTree build_tree(const Dataset& d, const TreeConfig& cfg) {
  cfg.validate();
  if (d.label_set.empty()) fail(ErrorKind::Construction, "dataset has no labels");
  if (d.tuples.empty() || !(dataset_mass(d) > 0.0)) fail(ErrorKind::Construction, "cannot build a tree from an empty dataset");
  for (const auto& t : d.tuples)
    if (!t.label) fail(ErrorKind::Construction, "training tuple " + t.id + " has no label");
  DtudTree tree{d.attribute_names, d.label_set, cfg, {}};
  detail::grow(tree, d, 0);
  return tree;
}

// ---------------------------------------------------------------------------
// Routing and classification

/// Calls `visit(leaf_node_index, mass)` for every leaf that receives a
/// positive share of the tuple's mass.
template <class Visit>
void route(const DtudTree& tree, const UncertainTuple& t, Visit&& visit) {
  if (t.arity() != tree.attribute_names.size())
    fail(ErrorKind::Schema, "tuple " + t.id + " has " + std::to_string(t.arity()) + " attributes, tree expects " +
                                std::to_string(tree.attribute_names.size()));
  auto walk = [&](auto&& self, std::size_t node, const UncertainTuple& frag) -> void {
    const auto& n = tree.nodes[node];
    if (n.is_leaf()) {
      visit(node, frag.tp);
      return;
    }
    const auto& s = n.split();
    auto [l, r] = partition_tuple(frag, s.attr, s.threshold);
    if (l.tp > 0.0) self(self, s.left, l);
    if (r.tp > 0.0) self(self, s.right, r);
  };
  if (t.tp > 0.0) walk(walk, 0, t);
}

/// Label distribution of a tuple: leaf distributions weighted by the share of
/// the tuple's mass that reaches each leaf.
inline std::vector<double> classify(const DtudTree& tree, const UncertainTuple& t) {
  std::vector<double> lp(tree.label_set.size(), 0.0);
  double reached = 0.0;
  route(tree, t, [&](std::size_t leaf, double mass) {
    const auto& dist = tree.nodes[leaf].leaf().lp;
    for (std::size_t i = 0; i < lp.size(); ++i) lp[i] += mass * dist[i];
    reached += mass;
  });
  if (!(t.tp > 0.0) || !(reached > 0.0))
    fail(ErrorKind::UndefinedProbability, "tuple " + t.id + " carries no probability mass");
  for (auto& v : lp) v /= t.tp;
  return lp;
}

inline std::size_t predict(const DtudTree& tree, const UncertainTuple& t) { return argmax(classify(tree, t)); }

/// Share of training mass that lands in a leaf whose dominant label matches
/// the tuple's label, over the number of training tuples.
inline double training_accuracy(const DtudTree& tree, const Dataset& d) {
  if (d.tuples.empty()) return 0.0;
  double correct = 0.0;
  for (const auto& t : d.tuples) {
    route(tree, t, [&](std::size_t leaf, double mass) {
      if (t.label && tree.nodes[leaf].leaf().dominant == *t.label) correct += mass;
    });
  }
  return correct / static_cast<double>(d.tuples.size());
}

/// Fraction of test tuples whose most probable label equals their own.
inline double test_accuracy(const DtudTree& tree, const Dataset& test) {
  if (test.tuples.empty()) return 0.0;
  if (test.label_set != tree.label_set) fail(ErrorKind::Schema, "test labels differ from tree labels");
  std::size_t correct = 0;
  for (const auto& t : test.tuples)
    if (t.label && predict(tree, t) == *t.label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(test.tuples.size());
}

struct CrossValidationResult {
  double mean_accuracy = 0.0;
  std::vector<double> fold_accuracy;
  /// Fold index of every tuple, in dataset order.
  std::vector<std::size_t> assignment;
};

/// Seeded k-fold cross-validation. Fold sizes differ by at most one.
inline CrossValidationResult k_fold_cv(const Dataset& d, std::size_t k, const TreeConfig& cfg) {
  const std::size_t n = d.tuples.size();
  if (k < 2 || k > n)
    fail(ErrorKind::InvalidParameter, "k must lie in [2, " + std::to_string(n) + "], got " + std::to_string(k));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(cfg.seed);
  rng.shuffle(order.begin(), order.end());

  CrossValidationResult result;
  result.assignment.assign(n, 0);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) result.assignment[order[pos++]] = f;
  }

  for (std::size_t f = 0; f < k; ++f) {
    Dataset train = d.empty_like();
    Dataset test = d.empty_like();
    for (std::size_t i = 0; i < n; ++i) (result.assignment[i] == f ? test : train).tuples.push_back(d.tuples[i]);
    train.origin_mass = dataset_mass(train);
    test.origin_mass = dataset_mass(test);
    const auto tree = build_tree(train, cfg);
    result.fold_accuracy.push_back(test_accuracy(tree, test));
  }
  double sum = 0.0;
  for (double a : result.fold_accuracy) sum += a;
  result.mean_accuracy = sum / static_cast<double>(k);
  return result;
}

}  // namespace dtud
