#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dtud/dataset.hpp"
#include "dtud/doe.hpp"
#include "dtud/labeling.hpp"
#include "dtud/rules.hpp"
#include "dtud/surrogate.hpp"
#include "dtud/tree.hpp"

namespace dtud {

/// Settings of the surrogate-driven design workflow: sample, label, train,
/// select a rule, resample inside it, screen, recombine.
struct DemoSpec {
  std::string name = "demo";
  std::size_t training_samples = 150;
  double uncertainty = 0.1;
  int max_layers = 9;
  int splits = 10;
  double theta = 0.85;
  std::string target = "g";
  std::size_t subspace_samples = 20;
  std::size_t top = 10;
  std::size_t systems = 20;
  std::vector<SurrogateSpec> components;
};

inline DemoSpec demo_spec_from_json(const nlohmann::json& j) {
  DemoSpec s;
  try {
    s.name = j.value("name", s.name);
    s.training_samples = j.value("training_samples", s.training_samples);
    s.uncertainty = j.value("uncertainty", s.uncertainty);
    s.max_layers = j.value("max_layers", s.max_layers);
    s.splits = j.value("splits", s.splits);
    s.theta = j.value("theta", s.theta);
    s.target = j.value("target", s.target);
    s.subspace_samples = j.value("subspace_samples", s.subspace_samples);
    s.top = j.value("top", s.top);
    s.systems = j.value("systems", s.systems);
    for (const auto& c : j.at("components")) s.components.push_back(surrogate_from_json(c));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Schema, std::string("demo spec: ") + e.what());
  }
  if (s.components.empty()) fail(ErrorKind::InvalidParameter, "demo spec lists no components");
  for (const auto& c : s.components)
    if (!c.criteria) fail(ErrorKind::Schema, "component '" + c.name + "' has no labelling criteria");
  if (s.top > s.subspace_samples) fail(ErrorKind::InvalidParameter, "top exceeds subspace sample count");
  return s;
}

/// Independent stream seed for stage `stream` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct ComponentRun {
  std::string name;
  std::vector<std::string> variables;
  SampleMatrix doe;
  std::vector<ResponseRecord> responses;
  std::vector<std::string> labels;
  Dataset data;
  DtudTree tree;
  double training_accuracy = 0.0;
  std::vector<BranchScore> table;
  std::size_t selected = 0;  // index into table
  SampleMatrix subspace;
  std::vector<ResponseRecord> subspace_responses;
  /// All subspace designs ranked by lp(target); the first `top` are kept.
  std::vector<ScreenedDesign> ranked;
  std::size_t target = 0;
  double mean_lp_all = 0.0;
  double mean_lp_top = 0.0;
};

struct SystemDesign {
  std::string id;
  /// Design id chosen from each component's screened list.
  std::vector<std::string> picks;
  double total_mass = 0.0;
};

struct DemoResult {
  std::vector<ComponentRun> components;
  std::vector<SystemDesign> systems;
};

inline ComponentRun run_component(const SurrogateSpec& spec, const DemoSpec& demo, std::uint64_t seed) {
  ComponentRun run;
  run.name = spec.name;
  run.variables = spec.variable_names();
  run.doe = lhs({spec.bounds(), demo.training_samples, derive_seed(seed, 0)});
  for (const auto& x : run.doe) run.responses.push_back(surrogate_respond(x, spec).responses);
  run.labels = apply_labels(run.responses, *spec.criteria);
  run.data = make_dataset(run.variables, run.doe, run.labels, demo.uncertainty, spec.criteria->labels());

  TreeConfig cfg;
  cfg.max_layers = demo.max_layers;
  cfg.n_split_points = demo.splits;
  cfg.seed = seed;
  run.tree = build_tree(run.data, cfg);
  run.training_accuracy = training_accuracy(run.tree, run.data);

  run.target = run.data.label_index(demo.target);
  const auto bounds = spec.bounds();
  run.table = branch_table(run.tree, run.data, run.target, bounds);
  std::vector<BranchScore> eligible;
  for (const auto& s : run.table)
    if (s.rule) eligible.push_back(s);
  const auto& chosen = select_branch(eligible, run.target, demo.theta);
  for (std::size_t i = 0; i < run.table.size(); ++i)
    if (run.table[i].branch.ordinal == chosen.branch.ordinal) run.selected = i;

  run.subspace = lhs_in_rule(*run.table[run.selected].rule, demo.subspace_samples, derive_seed(seed, 1));
  std::vector<UncertainTuple> designs;
  for (std::size_t i = 0; i < run.subspace.size(); ++i) {
    run.subspace_responses.push_back(surrogate_respond(run.subspace[i], spec).responses);
    designs.push_back(make_uncertain_tuple(std::to_string(i + 1), run.subspace[i], demo.uncertainty));
  }
  run.ranked = screen_designs(run.tree, designs, run.target, designs.size());
  for (std::size_t i = 0; i < run.ranked.size(); ++i) {
    run.mean_lp_all += run.ranked[i].lp[run.target];
    if (i < demo.top) run.mean_lp_top += run.ranked[i].lp[run.target];
  }
  run.mean_lp_all /= static_cast<double>(run.ranked.size());
  run.mean_lp_top /= static_cast<double>(std::max<std::size_t>(1, std::min(demo.top, run.ranked.size())));
  return run;
}

/// Runs every component, then builds system designs by drawing one screened
/// design per component uniformly at random.
inline DemoResult run_demo(const DemoSpec& demo, std::uint64_t seed) {
  DemoResult result;
  for (std::size_t c = 0; c < demo.components.size(); ++c)
    result.components.push_back(run_component(demo.components[c], demo, derive_seed(seed, 100 + c)));

  Rng rng(derive_seed(seed, 1000));
  for (std::size_t s = 0; s < demo.systems; ++s) {
    SystemDesign sys;
    sys.id = std::to_string(s + 1) + "'";
    std::vector<double> masses;
    for (const auto& run : result.components) {
      const auto pick = rng.below(std::min(demo.top, run.ranked.size()));
      const auto& design = run.ranked[pick];
      sys.picks.push_back(design.id);
      const auto row = static_cast<std::size_t>(std::stoul(design.id)) - 1;
      const auto& r = run.subspace_responses[row];
      if (r.has(response_names::mass)) masses.push_back(r.at(response_names::mass));
    }
    sys.total_mass = masses.empty() ? 0.0 : total_mass(masses);
    result.systems.push_back(std::move(sys));
  }
  return result;
}

}  // namespace dtud
