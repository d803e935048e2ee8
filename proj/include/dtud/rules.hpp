#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dtud/dataset.hpp"
#include "dtud/error.hpp"
#include "dtud/labeling.hpp"
#include "dtud/tree.hpp"

namespace dtud {

enum class Relation { LessEqual, Greater };

struct PathStep {
  std::size_t attr = 0;
  Relation relation = Relation::LessEqual;
  double threshold = 0.0;
};

/// Root-to-leaf path of a tree.
struct Branch {
  std::string id;
  /// Position in left-to-right leaf order, 0-based.
  std::size_t ordinal = 0;
  std::size_t leaf_node = 0;
  std::vector<PathStep> path;
  std::vector<double> lp;
  double mass = 0.0;
  std::size_t dominant = 0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Axis-aligned design box. `lo_open[k]` marks a strict lower bound (x > lo)
/// inherited from a `>` test on the path.
struct Rule {
  std::vector<Interval> box;
  std::vector<bool> lo_open;
  std::size_t target = 0;
  double acc = 0.0;
  double ctt = 0.0;

  bool contains(std::span<const double> x) const {
    for (std::size_t k = 0; k < box.size(); ++k) {
      if (x[k] > box[k].hi) return false;
      if (lo_open[k] ? x[k] <= box[k].lo : x[k] < box[k].lo) return false;
    }
    return true;
  }
};

struct PipelineConfig {
  std::vector<Interval> bounds;
  std::string target_label = "g";
  /// Minimum leaf probability of the target label for a branch to qualify.
  double theta = 0.85;
  std::optional<LabelCriteria> criteria;
  int max_layers = 6;

  void validate() const {
    for (const auto& b : bounds)
      if (!(b.lo < b.hi)) fail(ErrorKind::InvalidParameter, "design bounds must satisfy lower < upper");
    if (!(theta > 0.0 && theta <= 1.0)) fail(ErrorKind::InvalidParameter, "theta must lie in (0, 1]");
  }
};

/// One branch per leaf, numbered b1, b2, ... from left to right.
inline std::vector<Branch> enumerate_branches(const DtudTree& tree) {
  if (tree.nodes.empty()) fail(ErrorKind::InvalidParameter, "tree is empty");
  std::vector<Branch> out;
  std::vector<PathStep> path;
  auto walk = [&](auto&& self, std::size_t node) -> void {
    const auto& n = tree.nodes[node];
    if (n.is_leaf()) {
      const auto& leaf = n.leaf();
      Branch b;
      b.ordinal = out.size();
      b.id = "b" + std::to_string(out.size() + 1);
      b.leaf_node = node;
      b.path = path;
      b.lp = leaf.lp;
      b.mass = leaf.mass;
      b.dominant = leaf.dominant;
      out.push_back(std::move(b));
      return;
    }
    const auto& s = n.split();
    path.push_back({s.attr, Relation::LessEqual, s.threshold});
    self(self, s.left);
    path.back().relation = Relation::Greater;
    self(self, s.right);
    path.pop_back();
  };
  walk(walk, 0);
  return out;
}

/// Intersects the path's constraints with the global bounds.
inline Rule branch_to_rule(const Branch& branch, std::span<const Interval> bounds) {
  Rule rule;
  rule.box.assign(bounds.begin(), bounds.end());
  rule.lo_open.assign(bounds.size(), false);
  rule.target = branch.dominant;
  rule.acc = branch.lp.empty() ? 0.0 : branch.lp[branch.dominant];
  for (const auto& step : branch.path) {
    if (step.attr >= rule.box.size())
      fail(ErrorKind::Index, "branch " + branch.id + " tests attribute " + std::to_string(step.attr) +
                                 " beyond the declared bounds");
    auto& iv = rule.box[step.attr];
    if (step.relation == Relation::LessEqual) {
      iv.hi = std::min(iv.hi, step.threshold);
    } else if (step.threshold >= iv.lo) {
      iv.lo = step.threshold;
      rule.lo_open[step.attr] = true;
    }
  }
  for (std::size_t k = 0; k < rule.box.size(); ++k)
    if (!(rule.box[k].lo < rule.box[k].hi))
      fail(ErrorKind::InconsistentBranch, "branch " + branch.id + " leaves an empty interval on attribute " +
                                              std::to_string(k));
  return rule;
}

/// Correct-label mass reaching each leaf over the root mass, indexed by branch ordinal.
inline std::vector<double> branch_ctts(const DtudTree& tree, const std::vector<Branch>& branches,
                                       const Dataset& origin) {
  std::vector<std::size_t> ordinal_of(tree.nodes.size(), 0);
  for (const auto& b : branches) ordinal_of[b.leaf_node] = b.ordinal;
  std::vector<double> correct(branches.size(), 0.0);
  for (const auto& t : origin.tuples) {
    route(tree, t, [&](std::size_t leaf, double mass) {
      if (t.label && tree.nodes[leaf].leaf().dominant == *t.label) correct[ordinal_of[leaf]] += mass;
    });
  }
  const double total = dataset_mass(origin);
  if (!(total > 0.0)) fail(ErrorKind::UndefinedProbability, "origin dataset is empty");
  for (auto& c : correct) c /= total;
  return correct;
}

inline double branch_ctt(const DtudTree& tree, const Branch& branch, const Dataset& origin) {
  double correct = 0.0;
  for (const auto& t : origin.tuples) {
    route(tree, t, [&](std::size_t leaf, double mass) {
      if (leaf == branch.leaf_node && t.label && *t.label == branch.dominant) correct += mass;
    });
  }
  const double total = dataset_mass(origin);
  if (!(total > 0.0)) fail(ErrorKind::UndefinedProbability, "origin dataset is empty");
  return correct / total;
}

/// Number of training tuples with positive mass at each leaf, by branch ordinal.
inline std::vector<std::size_t> branch_tuple_counts(const DtudTree& tree, const std::vector<Branch>& branches,
                                                    const Dataset& origin) {
  std::vector<std::size_t> ordinal_of(tree.nodes.size(), 0);
  for (const auto& b : branches) ordinal_of[b.leaf_node] = b.ordinal;
  std::vector<std::size_t> counts(branches.size(), 0);
  for (const auto& t : origin.tuples) route(tree, t, [&](std::size_t leaf, double) { ++counts[ordinal_of[leaf]]; });
  return counts;
}

struct BranchScore {
  Branch branch;
  double acc = 0.0;
  double ctt = 0.0;
  std::size_t tuples = 0;
  /// Empty when the branch box does not intersect the design bounds.
  std::optional<Rule> rule;
};

/// ACC/CTT table of every branch whose dominant label is `target`.
inline std::vector<BranchScore> branch_table(const DtudTree& tree, const Dataset& origin, std::size_t target,
                                             std::span<const Interval> bounds) {
  const auto branches = enumerate_branches(tree);
  const auto ctts = branch_ctts(tree, branches, origin);
  const auto counts = branch_tuple_counts(tree, branches, origin);
  std::vector<BranchScore> table;
  for (const auto& b : branches) {
    if (b.dominant != target) continue;
    BranchScore s{b, b.lp[b.dominant], ctts[b.ordinal], counts[b.ordinal], std::nullopt};
    try {
      s.rule = branch_to_rule(b, bounds);
      s.rule->ctt = s.ctt;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InconsistentBranch) throw;
    }
    table.push_back(std::move(s));
  }
  return table;
}

/// Among branches labelled `target` with lp(target) >= theta, the one with the
/// largest CTT; ties prefer higher lp(target), then the leftmost branch.
inline const BranchScore& select_branch(std::span<const BranchScore> scored, std::size_t target, double theta) {
  const BranchScore* best = nullptr;
  for (const auto& s : scored) {
    if (s.branch.dominant != target || s.branch.lp[target] < theta) continue;
    if (!best) {
      best = &s;
      continue;
    }
    const double lp = s.branch.lp[target];
    const double best_lp = best->branch.lp[target];
    if (s.ctt != best->ctt ? s.ctt > best->ctt
                           : (lp != best_lp ? lp > best_lp : s.branch.ordinal < best->branch.ordinal))
      best = &s;
  }
  if (!best)
    fail(ErrorKind::Selection, "no branch reaches lp >= " + std::to_string(theta) +
                                   " for the target label; lower the threshold or allow a deeper tree");
  return *best;
}

struct ScreenedDesign {
  std::string id;
  std::vector<double> lp;
  std::size_t rank = 0;
};

inline bool id_less(const std::string& a, const std::string& b) {
  const auto na = csv::parse_double(a);
  const auto nb = csv::parse_double(b);
  if (na && nb && *na != *nb) return *na < *nb;
  return a < b;
}

/// Classifies each design, ranks by lp(target) descending (ties by ascending
/// id) and keeps the first `top_k`.
inline std::vector<ScreenedDesign> screen_designs(const DtudTree& tree, std::span<const UncertainTuple> designs,
                                                  std::size_t target, std::size_t top_k) {
  if (top_k > designs.size())
    fail(ErrorKind::InvalidParameter, "top_k " + std::to_string(top_k) + " exceeds the " +
                                          std::to_string(designs.size()) + " designs");
  if (target >= tree.label_set.size()) fail(ErrorKind::Index, "target label index out of range");
  std::vector<ScreenedDesign> all;
  all.reserve(designs.size());
  for (const auto& d : designs) all.push_back({d.id, classify(tree, d), 0});
  std::stable_sort(all.begin(), all.end(), [&](const ScreenedDesign& a, const ScreenedDesign& b) {
    if (a.lp[target] != b.lp[target]) return a.lp[target] > b.lp[target];
    return id_less(a.id, b.id);
  });
  all.resize(top_k);
  for (std::size_t i = 0; i < all.size(); ++i) all[i].rank = i + 1;
  return all;
}

inline nlohmann::json rules_to_json(const DtudTree& tree, std::span<const BranchScore> table,
                                    const std::string& target, double theta, const std::optional<std::string>& selected) {
  using nlohmann::json;
  json branches = json::array();
  for (const auto& s : table) {
    json entry{{"id", s.branch.id}, {"acc", s.acc}, {"ctt", s.ctt}, {"tuples", s.tuples}};
    if (s.rule) {
      json box = json::object();
      for (std::size_t k = 0; k < s.rule->box.size(); ++k)
        box[tree.attribute_names[k]] = {s.rule->box[k].lo, s.rule->box[k].hi};
      entry["box"] = box;
      json open = json::array();
      for (std::size_t k = 0; k < s.rule->lo_open.size(); ++k)
        if (s.rule->lo_open[k]) open.push_back(tree.attribute_names[k]);
      entry["lower_open"] = open;
    } else {
      entry["box"] = nullptr;
    }
    branches.push_back(entry);
  }
  json out{{"target", target}, {"theta", theta}, {"branches", branches}};
  out["selected"] = selected ? json(*selected) : json(nullptr);
  return out;
}

/// Box of the selected branch from a rules document, in `attribute_names` order.
inline Rule selected_rule_from_json(const nlohmann::json& j, std::span<const std::string> attribute_names) {
  if (!j.contains("selected") || j.at("selected").is_null())
    fail(ErrorKind::Selection, "rules document has no selected branch");
  const auto id = j.at("selected").get<std::string>();
  for (const auto& b : j.at("branches")) {
    if (b.at("id").get<std::string>() != id) continue;
    const auto& box = b.at("box");
    if (box.is_null()) fail(ErrorKind::InconsistentBranch, "selected branch has an empty box");
    Rule rule;
    rule.acc = b.value("acc", 0.0);
    rule.ctt = b.value("ctt", 0.0);
    std::vector<std::string> open;
    if (b.contains("lower_open")) open = b.at("lower_open").get<std::vector<std::string>>();
    for (const auto& name : attribute_names) {
      if (!box.contains(name)) fail(ErrorKind::Schema, "rule box lacks attribute '" + name + "'");
      const auto iv = box.at(name).get<std::vector<double>>();
      if (iv.size() != 2) fail(ErrorKind::Schema, "rule interval for '" + name + "' must have two bounds");
      rule.box.push_back({iv[0], iv[1]});
      rule.lo_open.push_back(std::find(open.begin(), open.end(), name) != open.end());
    }
    return rule;
  }
  fail(ErrorKind::Schema, "selected branch '" + id + "' not listed");
}

}  // namespace dtud
