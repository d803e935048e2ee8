#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dtud/error.hpp"
#include "dtud/response.hpp"

namespace dtud {

enum class Comparison { Less, LessEqual, Greater, GreaterEqual };

inline Comparison parse_comparison(const std::string& op) {
  if (op == "<") return Comparison::Less;
  if (op == "<=") return Comparison::LessEqual;
  if (op == ">") return Comparison::Greater;
  if (op == ">=") return Comparison::GreaterEqual;
  fail(ErrorKind::InvalidParameter, "unknown comparison '" + op + "'");
}

inline std::string to_string(Comparison c) {
  switch (c) {
    case Comparison::Less: return "<";
    case Comparison::LessEqual: return "<=";
    case Comparison::Greater: return ">";
    case Comparison::GreaterEqual: return ">=";
  }
  return "?";
}

struct Threshold {
  std::string response;
  Comparison op = Comparison::Less;
  double value = 0.0;

  bool holds(double x) const noexcept {
    switch (op) {
      case Comparison::Less: return x < value;
      case Comparison::LessEqual: return x <= value;
      case Comparison::Greater: return x > value;
      case Comparison::GreaterEqual: return x >= value;
    }
    return false;
  }

  bool bounds_above() const noexcept { return op == Comparison::Less || op == Comparison::LessEqual; }
  bool closed() const noexcept { return op == Comparison::LessEqual || op == Comparison::GreaterEqual; }
};

/// True when no value can satisfy both thresholds.
inline bool disjoint(const Threshold& a, const Threshold& b) {
  if (a.response != b.response || a.bounds_above() == b.bounds_above()) return false;
  const Threshold& upper = a.bounds_above() ? a : b;
  const Threshold& lower = a.bounds_above() ? b : a;
  if (upper.value < lower.value) return true;
  return upper.value == lower.value && !(upper.closed() && lower.closed());
}

/// Three-way labelling: good when every good threshold holds, poor when any
/// poor threshold holds, the fallback label otherwise.
class LabelCriteria {
 public:
  LabelCriteria(std::vector<Threshold> good, std::vector<Threshold> poor, std::string good_label = "g",
                std::string poor_label = "p", std::string fallback_label = "m")
      : good_(std::move(good)),
        poor_(std::move(poor)),
        good_label_(std::move(good_label)),
        poor_label_(std::move(poor_label)),
        fallback_label_(std::move(fallback_label)) {
    if (good_.empty()) fail(ErrorKind::InconsistentCriteria, "criteria need at least one good threshold");
    // Every poor predicate must exclude the good region through some good
    // predicate on the same response, otherwise a record could be both.
    for (const auto& p : poor_) {
      bool excluded = false;
      for (const auto& g : good_) excluded = excluded || disjoint(g, p);
      if (!excluded)
        fail(ErrorKind::InconsistentCriteria, "poor threshold '" + p.response + " " + to_string(p.op) + " " +
                                                  std::to_string(p.value) + "' overlaps the good region");
    }
  }

  const std::vector<Threshold>& good() const noexcept { return good_; }
  const std::vector<Threshold>& poor() const noexcept { return poor_; }
  const std::string& good_label() const noexcept { return good_label_; }
  const std::string& poor_label() const noexcept { return poor_label_; }
  const std::string& fallback_label() const noexcept { return fallback_label_; }

  std::vector<std::string> labels() const { return {good_label_, fallback_label_, poor_label_}; }

  std::string apply(const ResponseRecord& r) const {
    bool is_good = true;
    for (const auto& t : good_) is_good = is_good && t.holds(r.at(t.response));
    bool is_poor = false;
    for (const auto& t : poor_) is_poor = is_poor || t.holds(r.at(t.response));
    if (is_good && is_poor) fail(ErrorKind::InconsistentCriteria, "record satisfies both good and poor criteria");
    if (is_good) return good_label_;
    if (is_poor) return poor_label_;
    return fallback_label_;
  }

  /// `{"good":[{"response":"SEA","op":">=","value":20500}],"poor":[...]}` with
  /// optional `good_label`, `poor_label`, `fallback_label`.
  static LabelCriteria from_json(const nlohmann::json& j) {
    auto read = [](const nlohmann::json& list) {
      std::vector<Threshold> out;
      for (const auto& item : list)
        out.push_back({item.at("response").get<std::string>(), parse_comparison(item.at("op").get<std::string>()),
                       item.at("value").get<double>()});
      return out;
    };
    return LabelCriteria(read(j.at("good")), read(j.value("poor", nlohmann::json::array())),
                         j.value("good_label", std::string("g")), j.value("poor_label", std::string("p")),
                         j.value("fallback_label", std::string("m")));
  }

  nlohmann::json to_json() const {
    auto write = [](const std::vector<Threshold>& list) {
      auto out = nlohmann::json::array();
      for (const auto& t : list) out.push_back({{"response", t.response}, {"op", to_string(t.op)}, {"value", t.value}});
      return out;
    };
    return {{"good", write(good_)},
            {"poor", write(poor_)},
            {"good_label", good_label_},
            {"poor_label", poor_label_},
            {"fallback_label", fallback_label_}};
  }

 private:
  std::vector<Threshold> good_;
  std::vector<Threshold> poor_;
  std::string good_label_;
  std::string poor_label_;
  std::string fallback_label_;
};

inline std::vector<std::string> apply_labels(const std::vector<ResponseRecord>& responses,
                                             const LabelCriteria& criteria) {
  std::vector<std::string> labels;
  labels.reserve(responses.size());
  for (const auto& r : responses) labels.push_back(criteria.apply(r));
  return labels;
}

}  // namespace dtud
