#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "dtud/dtud.hpp"
#include "support.hpp"

using namespace dtud;

namespace {

// Leak-risk example: low risk iff inlet pressure <= 1 and thickness > 2.
Dataset valve_lattice() {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  for (double pe : {0.5, 1.5})
    for (double tk : {1.5, 2.5})
      for (double de : {10.0, 30.0, 50.0}) {
        rows.push_back({tk, de, pe});
        labels.push_back(pe <= 1.0 && tk > 2.0 ? "LR" : "HR");
      }
  return support::certain_dataset({"Tk", "De", "Pe"}, rows, labels);
}

BranchScore scored(std::size_t ordinal, double lp_target, double ctt) {
  BranchScore s;
  s.branch.ordinal = ordinal;
  s.branch.id = "b" + std::to_string(ordinal + 1);
  s.branch.lp = {lp_target, 1.0 - lp_target};
  s.branch.dominant = lp_target >= 0.5 ? 0 : 1;
  s.acc = std::max(lp_target, 1.0 - lp_target);
  s.ctt = ctt;
  return s;
}

}  // namespace

TEST(Branches, SingleLeaf) {
  const auto d = support::certain_dataset({"x"}, {{1}, {2}}, {"g", "g"});
  const auto tree = build_tree(d, {});
  const auto b = enumerate_branches(tree);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_TRUE(b[0].path.empty());
  EXPECT_EQ(b[0].id, "b1");
  const std::vector<Interval> bounds{{0, 5}};
  const auto rule = branch_to_rule(b[0], bounds);
  EXPECT_EQ(rule.box[0].lo, 0.0);
  EXPECT_EQ(rule.box[0].hi, 5.0);
  EXPECT_NEAR(branch_ctt(tree, b[0], d), 1.0, 1e-15);
}

TEST(Branches, ValveTreeHasThreeBranches) {
  const auto d = valve_lattice();
  TreeConfig cfg;
  cfg.n_split_points = 1;  // midpoints: Tk 2.0, Pe 1.0
  const auto tree = build_tree(d, cfg);
  const auto branches = enumerate_branches(tree);
  ASSERT_EQ(branches.size(), 3u);
  EXPECT_EQ(branches[0].id, "b1");
  EXPECT_EQ(branches[2].id, "b3");
  EXPECT_EQ(branches.size(), tree.leaf_indices().size());

  const auto lr = d.label_index("LR");
  const std::vector<Interval> bounds{{1, 3}, {10, 50}, {0, 2}};
  const auto table = branch_table(tree, d, lr, bounds);
  ASSERT_EQ(table.size(), 1u);
  const auto& rule = *table[0].rule;
  EXPECT_EQ(rule.box[0].lo, 2.0);
  EXPECT_TRUE(rule.lo_open[0]);
  EXPECT_EQ(rule.box[0].hi, 3.0);
  EXPECT_EQ(rule.box[1].lo, 10.0);
  EXPECT_EQ(rule.box[1].hi, 50.0);
  EXPECT_EQ(rule.box[2].lo, 0.0);
  EXPECT_EQ(rule.box[2].hi, 1.0);
  EXPECT_NEAR(table[0].ctt, 3.0 / 12.0, 1e-15);
  EXPECT_EQ(table[0].tuples, 3u);
}

TEST(Rules, TightenUpperBound) {
  Branch b;
  b.id = "b3";
  b.lp = {1.0};
  b.path = {{0, Relation::LessEqual, 1.81}};
  const std::vector<Interval> bounds{{1.5, 2.5}};
  const auto rule = branch_to_rule(b, bounds);
  EXPECT_EQ(rule.box[0].lo, 1.5);
  EXPECT_EQ(rule.box[0].hi, 1.81);
  EXPECT_FALSE(rule.lo_open[0]);
}

TEST(Rules, IntersectBothSides) {
  Branch b;
  b.id = "b1";
  b.lp = {1.0};
  b.path = {{0, Relation::Greater, 3.0}, {0, Relation::LessEqual, 7.0}};
  const std::vector<Interval> bounds{{0, 10}};
  const auto rule = branch_to_rule(b, bounds);
  EXPECT_EQ(rule.box[0].lo, 3.0);
  EXPECT_EQ(rule.box[0].hi, 7.0);
  EXPECT_TRUE(rule.lo_open[0]);
  const std::vector<double> at_lo{3.0}, inside{3.5}, at_hi{7.0};
  EXPECT_FALSE(rule.contains(at_lo));
  EXPECT_TRUE(rule.contains(inside));
  EXPECT_TRUE(rule.contains(at_hi));
}

TEST(Rules, EmptyIntersection) {
  Branch b;
  b.id = "b2";
  b.lp = {1.0};
  b.path = {{0, Relation::Greater, 12.0}};
  const std::vector<Interval> bounds{{0, 10}};
  try {
    branch_to_rule(b, bounds);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InconsistentBranch);
  }
}

TEST(Ctt, CertainTuplesInOneLeaf) {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  for (int i = 0; i < 10; ++i) {
    rows.push_back({static_cast<double>(i)});
    labels.push_back(i < 4 ? "g" : "p");
  }
  const auto d = support::certain_dataset({"x"}, rows, labels);
  const auto tree = build_tree(d, {});
  const auto branches = enumerate_branches(tree);
  ASSERT_EQ(branches.size(), 2u);
  EXPECT_NEAR(branch_ctt(tree, branches[0], d), 0.4, 1e-15);
  EXPECT_NEAR(branch_ctt(tree, branches[1], d), 0.6, 1e-15);
  const auto all = branch_ctts(tree, branches, d);
  EXPECT_EQ(all[0], branch_ctt(tree, branches[0], d));
}

TEST(Ctt, MonteCarloMassRouting) {
  std::mt19937_64 rng(31);
  const auto d = support::random_uncertain_dataset(rng, 40, 2, 0.2);
  const auto tree = build_tree(d, {3, 10, 1e-6, 0, 1});
  const auto branches = enumerate_branches(tree);
  std::vector<double> mc(branches.size(), 0.0), mc2(branches.size(), 0.0);
  std::vector<std::size_t> ordinal_of(tree.nodes.size());
  for (const auto& b : branches) ordinal_of[b.leaf_node] = b.ordinal;
  oracle::TruncatedSampler sampler(5);
  const int draws = 5000;
  for (const auto& t : d.tuples) {
    std::vector<double> hits(branches.size(), 0.0);
    for (int i = 0; i < draws; ++i) {
      std::vector<double> x{sampler.draw(t.marginals[0]), sampler.draw(t.marginals[1])};
      const auto leaf = support::leaf_of(tree, x);
      if (tree.nodes[leaf].leaf().dominant == *t.label) hits[ordinal_of[leaf]] += 1.0;
    }
    for (std::size_t b = 0; b < branches.size(); ++b) {
      const double p = hits[b] / draws;
      mc[b] += p;
      mc2[b] += p * (1 - p) / draws;
    }
  }
  const auto exact = branch_ctts(tree, branches, d);
  const double n = static_cast<double>(d.tuples.size());
  for (std::size_t b = 0; b < branches.size(); ++b)
    EXPECT_NEAR(exact[b], mc[b] / n, 3 * std::sqrt(mc2[b]) / n + 1e-12) << branches[b].id;
}

TEST(Select, PolicyAndErrors) {
  const std::vector<BranchScore> two{scored(0, 0.90, 0.10), scored(1, 0.87, 0.20)};
  EXPECT_EQ(select_branch(two, 0, 0.85).branch.id, "b2");
  const std::vector<BranchScore> one{scored(4, 0.95, 0.05)};
  EXPECT_EQ(select_branch(one, 0, 0.85).branch.id, "b5");
  try {
    select_branch(two, 0, 1.01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Selection);
  }
  // Equal CTT: higher lp wins, then the leftmost branch.
  const std::vector<BranchScore> tie{scored(3, 0.88, 0.2), scored(1, 0.92, 0.2), scored(0, 0.92, 0.2)};
  EXPECT_EQ(select_branch(tie, 0, 0.85).branch.id, "b1");
}

TEST(Select, ExhaustiveScanAndPermutationInvariance) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0, 1);
  for (int c = 0; c < 100; ++c) {
    std::vector<BranchScore> list;
    for (std::size_t i = 0; i < 12; ++i)
      list.push_back(scored(i, 0.5 + 0.5 * std::round(u(rng) * 8) / 8, std::round(u(rng) * 5) / 20));
    // Exhaustive scan with the policy spelled out as a lexicographic key.
    const BranchScore* expect = nullptr;
    for (const auto& s : list) {
      if (s.branch.lp[0] < 0.85) continue;
      auto key = [](const BranchScore& b) {
        return std::make_tuple(b.ctt, b.branch.lp[0], -static_cast<long>(b.branch.ordinal));
      };
      if (!expect || key(s) > key(*expect)) expect = &s;
    }
    if (!expect) {
      EXPECT_THROW(select_branch(list, 0, 0.85), Error);
      continue;
    }
    const auto id = select_branch(list, 0, 0.85).branch.id;
    EXPECT_EQ(id, expect->branch.id);
    for (int p = 0; p < 5; ++p) {
      std::shuffle(list.begin(), list.end(), rng);
      EXPECT_EQ(select_branch(list, 0, 0.85).branch.id, id);
    }
  }
}

TEST(Screen, RanksByTargetThenId) {
  const auto d = support::certain_dataset({"x"}, {{1}, {2}, {3}, {4}}, {"g", "g", "p", "p"});
  const auto tree = build_tree(d, {1, 5, 1e-6, 0, 1});
  std::vector<UncertainTuple> designs;
  const std::vector<double> xs{3.5, 1.2, 1.1, 2.0};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::vector<double> x{xs[i]};
    designs.push_back(make_uncertain_tuple(std::to_string(10 - i), x, 0.0));
  }
  designs.push_back(make_uncertain_tuple("2", {make_marginal_on(1.5, 2.5, 2.0)}));
  const auto ranked = screen_designs(tree, designs, 0, 4);
  ASSERT_EQ(ranked.size(), 4u);
  // Ids 8, 9 and 7 are certain and pure g; ties resolve by ascending id.
  EXPECT_EQ(ranked[0].id, "7");
  EXPECT_EQ(ranked[1].id, "8");
  EXPECT_EQ(ranked[2].id, "9");
  EXPECT_EQ(ranked[3].id, "2");
  EXPECT_NEAR(ranked[3].lp[0], 0.5, 1e-12);
  EXPECT_EQ(ranked[3].rank, 4u);
  EXPECT_THROW(screen_designs(tree, designs, 0, 6), Error);
}

TEST(Screen, TopKAreLargest) {
  std::mt19937_64 rng(51);
  const auto d = support::random_uncertain_dataset(rng, 80, 2, 0.1);
  const auto tree = build_tree(d, {5, 10, 1e-6, 0, 1});
  std::uniform_real_distribution<double> v(1, 10);
  std::vector<UncertainTuple> designs;
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> x{v(rng), v(rng)};
    designs.push_back(make_uncertain_tuple(std::to_string(i + 1), x, 0.1));
  }
  const auto g = d.label_index("g");
  const auto top = screen_designs(tree, designs, g, 10);
  std::vector<double> all;
  for (const auto& t : designs) all.push_back(classify(tree, t)[g]);
  std::sort(all.rbegin(), all.rend());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(top[i].lp[g], all[i]);
}

TEST(Partition, LeafMassAndCoverage) {
  std::mt19937_64 rng(61);
  for (int c = 0; c < 10; ++c) {
    const auto d = support::random_uncertain_dataset(rng, 60, 2, 0.1);
    const auto tree = build_tree(d, {5, 10, 1e-6, 0, 1});
    const auto branches = enumerate_branches(tree);
    double mass = 0.0;
    for (const auto& b : branches) mass += b.mass;
    EXPECT_NEAR(mass, d.origin_mass, 1e-10);
    // Every bounded point belongs to exactly one rule box.
    const std::vector<Interval> bounds{{0.5, 11}, {0.5, 11}};
    std::vector<Rule> rules;
    for (const auto& b : branches) {
      try {
        rules.push_back(branch_to_rule(b, bounds));
      } catch (const Error&) {
      }
    }
    std::uniform_real_distribution<double> v(0.5, 11);
    for (int q = 0; q < 200; ++q) {
      const std::vector<double> x{v(rng), v(rng)};
      int inside = 0;
      for (const auto& r : rules) inside += r.contains(x);
      EXPECT_EQ(inside, 1);
    }
  }
}

TEST(RulesJson, SelectedRuleRoundTrip) {
  const auto d = valve_lattice();
  const auto tree = build_tree(d, {6, 1, 1e-6, 0, 1});
  const auto lr = d.label_index("LR");
  const std::vector<Interval> bounds{{1, 3}, {10, 50}, {0, 2}};
  const auto table = branch_table(tree, d, lr, bounds);
  const auto& chosen = select_branch(table, lr, 0.85);
  const auto j = rules_to_json(tree, table, "LR", 0.85, chosen.branch.id);
  EXPECT_EQ(j.at("selected"), chosen.branch.id);
  const auto rule = selected_rule_from_json(j, tree.attribute_names);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(rule.box[k].lo, chosen.rule->box[k].lo);
    EXPECT_EQ(rule.box[k].hi, chosen.rule->box[k].hi);
    EXPECT_EQ(rule.lo_open[k], chosen.rule->lo_open[k]);
  }
  auto none = rules_to_json(tree, table, "LR", 1.01, std::nullopt);
  EXPECT_THROW(selected_rule_from_json(none, tree.attribute_names), Error);
}
