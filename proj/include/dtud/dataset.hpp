#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dtud/csv.hpp"
#include "dtud/error.hpp"
#include "dtud/marginal.hpp"

namespace dtud {

/// One side of an attribute's active region. The lower end is open once the
/// interval has been produced as the right-hand side of a split (x > s).
struct ActiveInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_open = false;
};

inline double mass_in(const TruncatedGaussianMarginal& m, const ActiveInterval& iv) {
  if (iv.hi < iv.lo) return 0.0;
  const double below = iv.lo_open ? m.cdf(iv.lo) : m.cdf_below(iv.lo);
  return std::max(0.0, m.cdf(iv.hi) - below);
}

/// A design sample whose attributes are known only up to a distribution.
/// Fragments produced by splitting keep the original marginals and narrow
/// `active_box`; `tp` is always measured against the original distribution.
struct UncertainTuple {
  std::string id;
  std::vector<TruncatedGaussianMarginal> marginals;
  std::vector<ActiveInterval> active_box;
  /// Mass of each attribute's active interval; tp is their product.
  std::vector<double> attr_mass;
  /// Index into the owning dataset's label set; empty for unlabelled designs.
  std::optional<std::size_t> label;
  double tp = 1.0;

  std::size_t arity() const noexcept { return marginals.size(); }
};

inline double product_with(std::span<const double> masses, std::size_t slot, double replacement) {
  double p = 1.0;
  for (std::size_t j = 0; j < masses.size(); ++j) p *= (j == slot ? replacement : masses[j]);
  return p;
}

inline UncertainTuple make_uncertain_tuple(std::string id, std::vector<TruncatedGaussianMarginal> marginals,
                                 std::optional<std::size_t> label = std::nullopt) {
  UncertainTuple t;
  t.id = std::move(id);
  t.label = label;
  t.active_box.reserve(marginals.size());
  t.attr_mass.reserve(marginals.size());
  for (const auto& m : marginals) {
    t.active_box.push_back({m.lower, m.upper, false});
    t.attr_mass.push_back(mass_in(m, t.active_box.back()));
  }
  t.marginals = std::move(marginals);
  t.tp = product_with(t.attr_mass, t.attr_mass.size(), 0.0);
  return t;
}

/// Tuple built from exact values, each widened by `relative_deviation`.
inline UncertainTuple make_uncertain_tuple(std::string id, std::span<const double> values, double relative_deviation,
                                 std::optional<std::size_t> label = std::nullopt) {
  std::vector<TruncatedGaussianMarginal> marginals;
  marginals.reserve(values.size());
  for (double v : values) marginals.push_back(make_marginal(v, relative_deviation));
  return make_uncertain_tuple(std::move(id), std::move(marginals), label);
}

/// Active intervals on either side of threshold `s`: [a, min(b, s)] and (max(a, s), b].
inline std::pair<ActiveInterval, ActiveInterval> cut_interval(const ActiveInterval& iv, double s) {
  ActiveInterval left{iv.lo, std::min(iv.hi, s), iv.lo_open};
  ActiveInterval right = s >= iv.lo ? ActiveInterval{s, iv.hi, true} : iv;
  return {left, right};
}

/// Tuple probabilities of the two fragments of `t` split at `s` on `attr`,
/// computed exactly as partition_tuple would.
inline std::pair<double, double> split_tp(const UncertainTuple& t, std::size_t attr, double s) {
  const auto [left, right] = cut_interval(t.active_box[attr], s);
  const auto& m = t.marginals[attr];
  return {product_with(t.attr_mass, attr, mass_in(m, left)),
          product_with(t.attr_mass, attr, mass_in(m, right))};
}

/// Splits `t` at `s` on `attr` into the fragment with x <= s and the one with x > s.
inline std::pair<UncertainTuple, UncertainTuple> partition_tuple(const UncertainTuple& t, std::size_t attr,
                                                                 double s) {
  if (attr >= t.arity())
    fail(ErrorKind::Index, "attribute index " + std::to_string(attr) + " out of range for tuple " + t.id);
  const auto [left_iv, right_iv] = cut_interval(t.active_box[attr], s);
  std::pair<UncertainTuple, UncertainTuple> out{t, t};
  auto place = [&](UncertainTuple& frag, const ActiveInterval& iv) {
    frag.active_box[attr] = iv;
    frag.attr_mass[attr] = mass_in(t.marginals[attr], iv);
    frag.tp = product_with(frag.attr_mass, frag.attr_mass.size(), 0.0);
  };
  place(out.first, left_iv);
  place(out.second, right_iv);
  return out;
}

struct Dataset {
  std::vector<std::string> attribute_names;
  /// Sorted lexicographically; tuple labels index into it.
  std::vector<std::string> label_set;
  std::vector<UncertainTuple> tuples;
  /// Mass of the root dataset this one descends from.
  double origin_mass = 0.0;

  std::size_t arity() const noexcept { return attribute_names.size(); }

  std::optional<std::size_t> find_label(std::string_view name) const {
    const auto it = std::lower_bound(label_set.begin(), label_set.end(), name);
    if (it == label_set.end() || *it != name) return std::nullopt;
    return static_cast<std::size_t>(it - label_set.begin());
  }

  std::size_t label_index(std::string_view name) const {
    if (auto idx = find_label(name)) return *idx;
    fail(ErrorKind::Schema, "unknown label '" + std::string(name) + "'");
  }

  /// Same schema, no tuples.
  Dataset empty_like() const {
    Dataset d;
    d.attribute_names = attribute_names;
    d.label_set = label_set;
    d.origin_mass = origin_mass;
    return d;
  }
};

inline double dataset_mass(const Dataset& d) {
  double total = 0.0;
  for (const auto& t : d.tuples) total += t.tp;
  return total;
}

/// Tuple-probability mass per label, in label_set order.
inline std::vector<double> label_masses(const Dataset& d) {
  std::vector<double> masses(d.label_set.size(), 0.0);
  for (const auto& t : d.tuples)
    if (t.label) masses.at(*t.label) += t.tp;
  return masses;
}

inline std::vector<double> label_distribution(const Dataset& d) {
  auto masses = label_masses(d);
  const double total = dataset_mass(d);
  if (!(total > 0.0)) fail(ErrorKind::UndefinedProbability, "label probability of an empty dataset");
  for (auto& m : masses) m /= total;
  return masses;
}

inline double label_probability(const Dataset& d, std::string_view label) {
  const auto idx = d.label_index(label);
  return label_distribution(d)[idx];
}

inline std::vector<std::string> sorted_unique(std::vector<std::string> names) {
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

/// Builds a dataset from exact values. `declared_labels`, when given, is the
/// admissible label set; otherwise the set is taken from `labels`.
inline Dataset make_dataset(std::vector<std::string> attribute_names, std::span<const std::vector<double>> rows,
                            std::span<const std::string> labels, double relative_deviation,
                            std::optional<std::vector<std::string>> declared_labels = std::nullopt) {
  if (rows.size() != labels.size())
    fail(ErrorKind::InvalidParameter, "row and label counts differ");
  Dataset d;
  d.attribute_names = std::move(attribute_names);
  d.label_set = sorted_unique(declared_labels ? *declared_labels
                                              : std::vector<std::string>(labels.begin(), labels.end()));
  d.tuples.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d.arity())
      fail(ErrorKind::Ingestion, "row " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) +
                                     " values, expected " + std::to_string(d.arity()));
    const auto label = d.find_label(labels[i]);
    if (!label) fail(ErrorKind::Ingestion, "row " + std::to_string(i + 1) + ": unknown label '" + labels[i] + "'");
    d.tuples.push_back(make_uncertain_tuple(std::to_string(i + 1), rows[i], relative_deviation, label));
  }
  d.origin_mass = dataset_mass(d);
  return d;
}

/// Raw table of a dataset or design CSV before uncertainty is attached.
struct DesignTable {
  std::vector<std::string> attribute_names;
  std::vector<std::vector<double>> rows;
  /// Empty when the file has no `label` column.
  std::vector<std::string> labels;
};

/// Parses `attr1,...,attrK[,label]`. A trailing `label` column is optional
/// unless `require_label` is set.
inline DesignTable read_design_table(std::istream& in, const std::string& source, bool require_label) {
  const auto lines = csv::read_lines(in);
  if (lines.empty()) fail(ErrorKind::Ingestion, source + ": missing header row");
  auto header = csv::split(lines.front().text);
  const bool has_label = !header.empty() && header.back() == "label";
  if (require_label && !has_label)
    fail(ErrorKind::Ingestion, source + ": missing column 'label' in header");
  if (has_label) header.pop_back();
  if (header.empty()) fail(ErrorKind::Ingestion, source + ": no attribute columns");
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c].empty()) fail(ErrorKind::Ingestion, source + ": empty name for column " + std::to_string(c + 1));

  DesignTable table;
  table.attribute_names = header;
  const std::size_t width = header.size() + (has_label ? 1 : 0);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& line = lines[r];
    const auto fields = csv::split(line.text);
    const auto where = source + ": line " + std::to_string(line.number);
    if (fields.size() != width)
      fail(ErrorKind::Ingestion, where + ": expected " + std::to_string(width) + " columns, found " +
                                     std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
      const auto v = csv::parse_double(fields[c]);
      if (!v || !std::isfinite(*v))
        fail(ErrorKind::Ingestion, where + ", column '" + header[c] + "': malformed value '" + fields[c] + "'");
      row.push_back(*v);
    }
    table.rows.push_back(std::move(row));
    if (has_label) {
      if (fields.back().empty()) fail(ErrorKind::Ingestion, where + ", column 'label': empty label");
      table.labels.push_back(fields.back());
    }
  }
  return table;
}

inline DesignTable read_design_table(const std::string& path, bool require_label) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Ingestion, path + ": cannot open");
  return read_design_table(in, path, require_label);
}

/// Reads a labelled dataset CSV and attaches relative uncertainty `relative_deviation`.
inline Dataset load_dataset(const std::string& path, double relative_deviation,
                            std::optional<std::vector<std::string>> declared_labels = std::nullopt) {
  auto table = read_design_table(path, true);
  if (declared_labels) {
    const auto declared = sorted_unique(*declared_labels);
    for (std::size_t r = 0; r < table.labels.size(); ++r)
      if (!std::binary_search(declared.begin(), declared.end(), table.labels[r]))
        fail(ErrorKind::Ingestion, path + ": data row " + std::to_string(r + 1) + ", column 'label': label '" +
                                       table.labels[r] + "' not in declared label set");
  }
  try {
    return make_dataset(std::move(table.attribute_names), table.rows, table.labels, relative_deviation,
                        std::move(declared_labels));
  } catch (const Error& e) {
    fail(ErrorKind::Ingestion, path + ": " + e.what());
  }
}

}  // namespace dtud
