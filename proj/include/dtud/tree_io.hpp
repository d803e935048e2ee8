#pragma once

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "dtud/error.hpp"
#include "dtud/tree.hpp"

namespace dtud {

inline nlohmann::json tree_to_json(const DtudTree& tree) {
  using nlohmann::json;
  auto node_json = [&](auto&& self, std::size_t index) -> json {
    const auto& n = tree.nodes.at(index);
    if (n.is_leaf()) {
      json lp = json::object();
      for (std::size_t i = 0; i < tree.label_set.size(); ++i) lp[tree.label_set[i]] = n.leaf().lp[i];
      return {{"kind", "leaf"}, {"lp", lp}, {"mass", n.leaf().mass}};
    }
    const auto& s = n.split();
    return {{"kind", "split"},
            {"attr", s.attr},
            {"threshold", s.threshold},
            {"left", self(self, s.left)},
            {"right", self(self, s.right)}};
  };
  return {{"attributes", tree.attribute_names},
          {"labels", tree.label_set},
          {"config",
           {{"max_layers", tree.config.max_layers},
            {"n_split_points", tree.config.n_split_points},
            {"min_partition_mass", tree.config.min_partition_mass},
            {"seed", tree.config.seed}}},
          {"root", node_json(node_json, 0)}};
}

inline DtudTree tree_from_json(const nlohmann::json& j) {
  DtudTree tree;
  try {
    tree.attribute_names = j.at("attributes").get<std::vector<std::string>>();
    tree.label_set = j.at("labels").get<std::vector<std::string>>();
    if (j.contains("config")) {
      const auto& c = j.at("config");
      tree.config.max_layers = c.value("max_layers", tree.config.max_layers);
      tree.config.n_split_points = c.value("n_split_points", tree.config.n_split_points);
      tree.config.min_partition_mass = c.value("min_partition_mass", tree.config.min_partition_mass);
      tree.config.seed = c.value("seed", tree.config.seed);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Schema, std::string("tree header: ") + e.what());
  }
  if (tree.label_set.empty()) fail(ErrorKind::Schema, "tree has no labels");
  if (!std::is_sorted(tree.label_set.begin(), tree.label_set.end()))
    fail(ErrorKind::Schema, "tree labels must be sorted");

  auto parse = [&](auto&& self, const nlohmann::json& node, std::size_t depth) -> std::size_t {
    const std::size_t index = tree.nodes.size();
    tree.nodes.push_back({LeafNode{}, depth});
    const auto kind = node.at("kind").get<std::string>();
    if (kind == "leaf") {
      std::vector<double> lp(tree.label_set.size(), 0.0);
      for (const auto& [name, value] : node.at("lp").items()) {
        const auto it = std::find(tree.label_set.begin(), tree.label_set.end(), name);
        if (it == tree.label_set.end()) fail(ErrorKind::Schema, "leaf label '" + name + "' not in tree labels");
        lp[static_cast<std::size_t>(it - tree.label_set.begin())] = value.template get<double>();
      }
      tree.nodes[index].content = make_leaf(std::move(lp), node.at("mass").get<double>());
    } else if (kind == "split") {
      SplitNode s;
      s.attr = node.at("attr").get<std::size_t>();
      if (s.attr >= tree.attribute_names.size()) fail(ErrorKind::Schema, "split attribute out of range");
      s.threshold = node.at("threshold").get<double>();
      s.left = self(self, node.at("left"), depth + 1);
      s.right = self(self, node.at("right"), depth + 1);
      tree.nodes[index].content = s;
    } else {
      fail(ErrorKind::Schema, "unknown node kind '" + kind + "'");
    }
    return index;
  };
  try {
    parse(parse, j.at("root"), 0);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Schema, std::string("tree node: ") + e.what());
  }
  return tree;
}

inline DtudTree load_tree(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Ingestion, path + ": cannot open");
  try {
    return tree_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Ingestion, path + ": " + e.what());
  }
}

}  // namespace dtud
