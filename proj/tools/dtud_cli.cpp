// Command-line front end for the uncertain-data decision tree toolkit.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dtud/dtud.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kInput = 2, kConstruction = 3, kSelection = 4, kNumeric = 5 };

int exit_code_for(dtud::ErrorKind kind) {
  using dtud::ErrorKind;
  switch (kind) {
    case ErrorKind::Ingestion:
    case ErrorKind::Schema:
    case ErrorKind::InvalidParameter:
    case ErrorKind::Index:
      return kInput;
    case ErrorKind::Construction:
    case ErrorKind::InconsistentCriteria:
    case ErrorKind::InconsistentBranch:
      return kConstruction;
    case ErrorKind::Selection:
      return kSelection;
    case ErrorKind::Conditioning:
    case ErrorKind::DegenerateCurve:
    case ErrorKind::UndefinedProbability:
    case ErrorKind::InvalidSplit:
      return kNumeric;
  }
  return kNumeric;
}

std::string one_line(std::string s) {
  for (auto& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

int report(int code, std::string_view kind, const std::string& message) {
  std::cerr << "dtud: error code=" << code << " kind=" << kind << " message=\"" << one_line(message) << "\"\n";
  return code;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) dtud::fail(dtud::ErrorKind::Ingestion, path + ": cannot open");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buffer(1 << 16);
  while (in) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    EVP_DigestUpdate(ctx, buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Writes via a temporary sibling and renames into place.
void write_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) dtud::fail(dtud::ErrorKind::Ingestion, path + ": cannot write");
    out << content;
    if (!out) dtud::fail(dtud::ErrorKind::Ingestion, path + ": write failed");
  }
  fs::rename(tmp, target);
}

std::string fmt(double v) { return dtud::csv::format_double(v); }

/// Provenance for one command invocation; written next to its outputs.
class Manifest {
 public:
  Manifest(std::vector<std::string> argv, const CLI::App& sub) : argv_(std::move(argv)) {
    command_ = sub.get_name();
    for (const auto* opt : sub.get_options()) {
      if (opt->get_name() == "--help" || opt->count() == 0) continue;
      const auto& results = opt->results();
      flags_[opt->get_name()] = results.size() == 1 ? json(results.front()) : json(results);
    }
  }

  void input(const std::string& path) { inputs_[path] = sha256_file(path); }
  void output(const std::string& path) { outputs_.push_back(path); }
  void seed(std::uint64_t s) { seed_ = s; }

  void write(const std::string& path) const {
    json outputs = json::object();
    for (const auto& p : outputs_) outputs[p] = sha256_file(p);
    json j{{"command", command_},
           {"argv", argv_},
           {"flags", flags_},
           {"inputs", inputs_},
           {"outputs", outputs},
           {"tool_version", kToolVersion},
           {"rng", dtud::Rng::algorithm},
           {"timestamp", utc_timestamp()}};
    j["seed"] = seed_ ? json(*seed_) : json(nullptr);
    write_atomic(path, j.dump(2) + "\n");
  }

  /// Writes `<first output>.manifest.json`.
  void write_beside_first_output() const { write(outputs_.front() + ".manifest.json"); }

 private:
  std::vector<std::string> argv_;
  std::string command_;
  json flags_ = json::object();
  json inputs_ = json::object();
  std::vector<std::string> outputs_;
  std::optional<std::uint64_t> seed_;
};

unsigned thread_count() {
  if (const char* env = std::getenv("DTUD_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return 1;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& item : dtud::csv::split(s))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<std::size_t> descending_label_order(const std::vector<std::string>& labels) {
  std::vector<std::size_t> order(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = order.size() - 1 - i;
  return order;
}

std::string lp_header(const std::vector<std::string>& labels) {
  std::string h;
  for (auto i : descending_label_order(labels)) h += ",lp_" + labels[i];
  return h;
}

std::string lp_fields(const std::vector<double>& lp) {
  std::string s;
  const std::vector<std::string> dummy(lp.size());
  for (auto i : descending_label_order(dummy)) s += "," + fmt(lp[i]);
  return s;
}

std::string table_csv(const std::vector<std::string>& names, const dtud::SampleMatrix& rows,
                      const std::vector<std::string>* labels = nullptr) {
  std::ostringstream out;
  for (std::size_t k = 0; k < names.size(); ++k) out << (k ? "," : "") << names[k];
  if (labels) out << ",label";
  out << "\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < rows[r].size(); ++k) out << (k ? "," : "") << fmt(rows[r][k]);
    if (labels) out << "," << (*labels)[r];
    out << "\n";
  }
  return out.str();
}

std::string screen_csv(const std::vector<std::string>& labels, const std::vector<dtud::ScreenedDesign>& ranked) {
  std::ostringstream out;
  out << "id" << lp_header(labels) << ",rank\n";
  for (const auto& d : ranked) out << d.id << lp_fields(d.lp) << "," << d.rank << "\n";
  return out.str();
}

std::optional<std::vector<std::string>> declared_labels(const std::string& list) {
  if (list.empty()) return std::nullopt;
  return split_list(list);
}

/// Reads `name,lower,upper` rows.
std::vector<std::pair<std::string, dtud::Interval>> read_bounds_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) dtud::fail(dtud::ErrorKind::Ingestion, path + ": cannot open");
  const auto lines = dtud::csv::read_lines(in);
  if (lines.empty() || dtud::csv::split(lines.front().text) != std::vector<std::string>{"name", "lower", "upper"})
    dtud::fail(dtud::ErrorKind::Ingestion, path + ": header must be 'name,lower,upper'");
  std::vector<std::pair<std::string, dtud::Interval>> out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto f = dtud::csv::split(lines[r].text);
    const auto lo = f.size() == 3 ? dtud::csv::parse_double(f[1]) : std::nullopt;
    const auto hi = f.size() == 3 ? dtud::csv::parse_double(f[2]) : std::nullopt;
    if (!lo || !hi || !(*lo < *hi))
      dtud::fail(dtud::ErrorKind::Ingestion, path + ": line " + std::to_string(lines[r].number) + ": malformed bound");
    out.push_back({f[0], {*lo, *hi}});
  }
  return out;
}

std::vector<dtud::Interval> bounds_for(const std::vector<std::string>& names,
                                       const std::vector<std::pair<std::string, dtud::Interval>>& declared,
                                       const std::string& source) {
  std::vector<dtud::Interval> out;
  for (const auto& n : names) {
    const auto it = std::find_if(declared.begin(), declared.end(), [&](const auto& p) { return p.first == n; });
    if (it == declared.end()) dtud::fail(dtud::ErrorKind::Ingestion, source + ": no bounds for attribute '" + n + "'");
    out.push_back(it->second);
  }
  return out;
}

/// Extent of the exact values of a dataset file, used when no bounds file is given.
std::vector<dtud::Interval> data_extent(const dtud::DesignTable& table) {
  std::vector<dtud::Interval> out(table.attribute_names.size(), {INFINITY, -INFINITY});
  for (const auto& row : table.rows)
    for (std::size_t k = 0; k < row.size(); ++k) {
      out[k].lo = std::min(out[k].lo, row[k]);
      out[k].hi = std::max(out[k].hi, row[k]);
    }
  return out;
}

std::vector<dtud::UncertainTuple> tuples_from_table(const dtud::DesignTable& table, double uncertainty) {
  std::vector<dtud::UncertainTuple> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    out.push_back(dtud::make_uncertain_tuple(std::to_string(i + 1), table.rows[i], uncertainty));
  return out;
}

void require_schema(const dtud::DtudTree& tree, const std::vector<std::string>& names, const std::string& source) {
  if (names != tree.attribute_names)
    dtud::fail(dtud::ErrorKind::Schema, source + ": columns do not match the tree attributes");
}

struct PointTable {
  std::vector<std::string> ids;
  dtud::Points points;
};

PointTable read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) dtud::fail(dtud::ErrorKind::Ingestion, path + ": cannot open");
  const auto lines = dtud::csv::read_lines(in);
  if (lines.empty() || dtud::csv::split(lines.front().text) != std::vector<std::string>{"id", "x", "y", "z"})
    dtud::fail(dtud::ErrorKind::Ingestion, path + ": header must be 'id,x,y,z'");
  PointTable t;
  t.points.resize(static_cast<Eigen::Index>(lines.size() - 1), 3);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto f = dtud::csv::split(lines[r].text);
    if (f.size() != 4) dtud::fail(dtud::ErrorKind::Ingestion, path + ": line " + std::to_string(lines[r].number) + ": expected 4 columns");
    t.ids.push_back(f[0]);
    for (int c = 0; c < 3; ++c) {
      const auto v = dtud::csv::parse_double(f[static_cast<std::size_t>(c) + 1]);
      if (!v) dtud::fail(dtud::ErrorKind::Ingestion, path + ": line " + std::to_string(lines[r].number) + ": malformed coordinate");
      t.points(static_cast<Eigen::Index>(r - 1), c) = *v;
    }
  }
  return t;
}

// ---------------------------------------------------------------------------

struct Options {
  std::string data, tree, designs, out, labels, label = "g", bounds, rules, surrogate, spec;
  std::string curve, histories, original, displaced, nodes;
  double uncertainty = 0.0;
  int max_layers = 6;
  int splits = 10;
  double min_mass = 1e-6;
  double min_lp = 0.85;
  double regularization = 0.0;
  double mass = 0.0;
  std::size_t top = 10;
  std::size_t n = 20;
  std::size_t k = 5;
  std::uint64_t seed = 0;
};

dtud::TreeConfig tree_config(const Options& o) {
  dtud::TreeConfig cfg;
  cfg.max_layers = o.max_layers;
  cfg.n_split_points = o.splits;
  cfg.min_partition_mass = o.min_mass;
  cfg.seed = o.seed;
  cfg.threads = thread_count();
  return cfg;
}

int cmd_train(const Options& o, Manifest& m) {
  const auto data = dtud::load_dataset(o.data, o.uncertainty, declared_labels(o.labels));
  m.input(o.data);
  m.seed(o.seed);
  dtud::DtudTree tree;
  try {
    tree = dtud::build_tree(data, tree_config(o));
  } catch (const dtud::Error& e) {
    if (e.kind() == dtud::ErrorKind::InvalidParameter) throw;
    throw dtud::Error(dtud::ErrorKind::Construction, o.data + ": " + e.what());
  }
  write_atomic(o.out, dtud::tree_to_json(tree).dump(2) + "\n");
  m.output(o.out);
  m.write_beside_first_output();
  std::cout << "leaves: " << tree.leaf_indices().size() << "\n";
  std::cout << "depth: " << tree.depth() << "\n";
  std::cout << "training accuracy: " << fmt(dtud::training_accuracy(tree, data)) << "\n";
  return kOk;
}

int cmd_rules(const Options& o, Manifest& m) {
  const auto tree = dtud::load_tree(o.tree);
  const auto table = dtud::read_design_table(o.data, true);
  require_schema(tree, table.attribute_names, o.data);
  const auto data = dtud::make_dataset(table.attribute_names, table.rows, table.labels, o.uncertainty, tree.label_set);
  m.input(o.tree);
  m.input(o.data);
  std::vector<dtud::Interval> bounds;
  if (o.bounds.empty()) {
    bounds = data_extent(table);
  } else {
    bounds = bounds_for(tree.attribute_names, read_bounds_csv(o.bounds), o.bounds);
    m.input(o.bounds);
  }
  const auto target = data.label_index(o.label);
  const auto scored = dtud::branch_table(tree, data, target, bounds);
  std::vector<dtud::BranchScore> eligible;
  for (const auto& s : scored)
    if (s.rule) eligible.push_back(s);

  std::optional<std::string> selected;
  std::optional<dtud::Error> selection_error;
  try {
    selected = dtud::select_branch(eligible, target, o.min_lp).branch.id;
  } catch (const dtud::Error& e) {
    if (e.kind() != dtud::ErrorKind::Selection) throw;
    selection_error = e;
  }
  auto doc = dtud::rules_to_json(tree, scored, o.label, o.min_lp, selected);
  doc["attributes"] = tree.attribute_names;
  write_atomic(o.out, doc.dump(2) + "\n");
  m.output(o.out);
  m.write_beside_first_output();

  std::cout << "branch,acc,ctt,tuples\n";
  for (const auto& s : scored) std::cout << s.branch.id << "," << fmt(s.acc) << "," << fmt(s.ctt) << "," << s.tuples << "\n";
  if (selection_error) throw *selection_error;
  std::cout << "selected: " << *selected << "\n";
  return kOk;
}

int cmd_sample(const Options& o, Manifest& m) {
  m.seed(o.seed);
  std::vector<std::string> names;
  dtud::SampleMatrix samples;
  if (!o.rules.empty()) {
    const auto doc = dtud::read_json_file(o.rules);
    m.input(o.rules);
    if (!doc.contains("attributes")) dtud::fail(dtud::ErrorKind::Schema, o.rules + ": missing 'attributes'");
    names = doc.at("attributes").get<std::vector<std::string>>();
    samples = dtud::lhs_in_rule(dtud::selected_rule_from_json(doc, names), o.n, o.seed);
  } else if (!o.bounds.empty()) {
    const auto declared = read_bounds_csv(o.bounds);
    m.input(o.bounds);
    std::vector<dtud::Interval> bounds;
    for (const auto& [name, iv] : declared) {
      names.push_back(name);
      bounds.push_back(iv);
    }
    samples = dtud::lhs({bounds, o.n, o.seed});
  } else {
    dtud::fail(dtud::ErrorKind::InvalidParameter, "sample needs --rules or --bounds");
  }
  write_atomic(o.out, table_csv(names, samples));
  m.output(o.out);
  m.write_beside_first_output();
  std::cout << "samples: " << samples.size() << "\n";
  std::cout << "advisory minimum (3 per variable): " << dtud::sample_count_heuristic(names.size()) << "\n";
  return kOk;
}

int cmd_respond(const Options& o, Manifest& m) {
  const auto spec = dtud::surrogate_from_json(dtud::read_json_file(o.surrogate));
  const auto table = dtud::read_design_table(o.designs, false);
  m.input(o.surrogate);
  m.input(o.designs);
  if (table.attribute_names != spec.variable_names())
    dtud::fail(dtud::ErrorKind::Schema, o.designs + ": columns do not match the surrogate variables");
  if (!spec.criteria) dtud::fail(dtud::ErrorKind::Schema, o.surrogate + ": no labelling criteria");
  std::vector<dtud::ResponseRecord> records;
  for (const auto& row : table.rows) records.push_back(dtud::surrogate_respond(row, spec).responses);
  const auto labels = dtud::apply_labels(records, *spec.criteria);
  write_atomic(o.out, table_csv(table.attribute_names, table.rows, &labels));
  m.output(o.out);
  m.write_beside_first_output();
  std::map<std::string, std::size_t> counts;
  for (const auto& l : labels) ++counts[l];
  for (const auto& [l, c] : counts) std::cout << l << ": " << c << "\n";
  return kOk;
}

int cmd_screen(const Options& o, Manifest& m) {
  const auto tree = dtud::load_tree(o.tree);
  const auto table = dtud::read_design_table(o.designs, false);
  require_schema(tree, table.attribute_names, o.designs);
  m.input(o.tree);
  m.input(o.designs);
  const auto it = std::find(tree.label_set.begin(), tree.label_set.end(), o.label);
  if (it == tree.label_set.end()) dtud::fail(dtud::ErrorKind::InvalidParameter, "label '" + o.label + "' not in tree");
  const auto target = static_cast<std::size_t>(it - tree.label_set.begin());
  const auto designs = tuples_from_table(table, o.uncertainty);
  const auto ranked = dtud::screen_designs(tree, designs, target, o.top);
  write_atomic(o.out, screen_csv(tree.label_set, ranked));
  m.output(o.out);
  m.write_beside_first_output();
  std::cout << "screened: " << ranked.size() << " of " << designs.size() << "\n";
  return kOk;
}

int cmd_classify(const Options& o, Manifest& m) {
  const auto tree = dtud::load_tree(o.tree);
  const auto table = dtud::read_design_table(o.data, false);
  require_schema(tree, table.attribute_names, o.data);
  m.input(o.tree);
  m.input(o.data);
  const auto tuples = tuples_from_table(table, o.uncertainty);
  std::ostringstream out;
  out << "id" << lp_header(tree.label_set) << ",predicted\n";
  std::size_t correct = 0;
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    const auto lp = dtud::classify(tree, tuples[i]);
    const auto predicted = tree.label_set[dtud::argmax(lp)];
    out << tuples[i].id << lp_fields(lp) << "," << predicted << "\n";
    if (!table.labels.empty() && table.labels[i] == predicted) ++correct;
  }
  write_atomic(o.out, out.str());
  m.output(o.out);
  m.write_beside_first_output();
  if (!table.labels.empty() && !tuples.empty())
    std::cout << "test accuracy: " << fmt(static_cast<double>(correct) / static_cast<double>(tuples.size())) << "\n";
  return kOk;
}

int cmd_metrics(const Options& o, Manifest& m) {
  if (o.curve.empty() && o.histories.empty())
    dtud::fail(dtud::ErrorKind::InvalidParameter, "metrics needs --curve and/or --histories");
  json doc = json::object();
  if (!o.curve.empty()) {
    const auto curve = dtud::read_curve_csv(o.curve);
    m.input(o.curve);
    doc["avgstiff_kN_per_m"] = dtud::avgstiff(curve);
    doc["peak_force_kN"] = dtud::peak_force(curve.force());
    doc["energy_J"] = curve.energy_kj() * 1e3;
    if (o.mass != 0.0) doc["SEA_J_per_kg"] = dtud::sea(curve, o.mass);
  }
  if (!o.histories.empty()) {
    const auto h = dtud::read_histories_csv(o.histories);
    m.input(o.histories);
    doc["peak_intrusion_mm"] = dtud::peak_intrusion(h);
  }
  write_atomic(o.out, doc.dump(2) + "\n");
  m.output(o.out);
  m.write_beside_first_output();
  std::cout << doc.dump(2) << "\n";
  return kOk;
}

int cmd_morph(const Options& o, Manifest& m) {
  const auto original = read_points_csv(o.original);
  const auto displaced = read_points_csv(o.displaced);
  const auto nodes = read_points_csv(o.nodes);
  m.input(o.original);
  m.input(o.displaced);
  m.input(o.nodes);
  if (original.ids != displaced.ids)
    dtud::fail(dtud::ErrorKind::Schema, "original and displaced control points must list the same ids in order");
  const auto map = dtud::fit_morph({original.points, displaced.points}, o.regularization);
  const auto moved = dtud::apply_morph(map, nodes.points);
  std::ostringstream out;
  out << "id,x,y,z\n";
  for (Eigen::Index i = 0; i < moved.rows(); ++i)
    out << nodes.ids[static_cast<std::size_t>(i)] << "," << fmt(moved(i, 0)) << "," << fmt(moved(i, 1)) << ","
        << fmt(moved(i, 2)) << "\n";
  write_atomic(o.out, out.str());
  m.output(o.out);
  m.write_beside_first_output();
  std::cout << "nodes: " << moved.rows() << "\n";
  std::cout << "condition estimate: " << fmt(1.0 / map.rcond) << "\n";
  return kOk;
}

int cmd_cv(const Options& o, Manifest& m) {
  const auto data = dtud::load_dataset(o.data, o.uncertainty, declared_labels(o.labels));
  m.input(o.data);
  m.seed(o.seed);
  const auto result = dtud::k_fold_cv(data, o.k, tree_config(o));
  json doc{{"k", o.k},
           {"mean_accuracy", result.mean_accuracy},
           {"fold_accuracy", result.fold_accuracy},
           {"assignment", result.assignment}};
  write_atomic(o.out, doc.dump(2) + "\n");
  m.output(o.out);
  m.write_beside_first_output();
  for (std::size_t f = 0; f < result.fold_accuracy.size(); ++f)
    std::cout << "fold " << f + 1 << ": " << fmt(result.fold_accuracy[f]) << "\n";
  std::cout << "mean accuracy: " << fmt(result.mean_accuracy) << "\n";
  return kOk;
}

int cmd_demo(const Options& o, Manifest& m) {
  const auto spec = dtud::demo_spec_from_json(dtud::read_json_file(o.spec));
  m.input(o.spec);
  m.seed(o.seed);
  const auto result = dtud::run_demo(spec, o.seed);
  const fs::path dir(o.out);
  json summary{{"name", spec.name}, {"seed", o.seed}, {"components", json::array()}};
  for (const auto& run : result.components) {
    const fs::path cdir = dir / run.name;
    std::vector<std::string> response_names;
    for (const auto& [name, _] : run.responses.front().values) response_names.push_back(name);

    std::ostringstream doe;
    for (const auto& v : run.variables) doe << v << ",";
    for (const auto& r : response_names) doe << r << ",";
    doe << "label\n";
    for (std::size_t i = 0; i < run.doe.size(); ++i) {
      for (double x : run.doe[i]) doe << fmt(x) << ",";
      for (const auto& r : response_names) doe << fmt(run.responses[i].at(r)) << ",";
      doe << run.labels[i] << "\n";
    }
    const auto write = [&](const fs::path& p, const std::string& content) {
      write_atomic(p.string(), content);
      m.output(p.string());
    };
    write(cdir / "doe.csv", doe.str());
    write(cdir / "train.csv", table_csv(run.variables, run.doe, &run.labels));
    write(cdir / "tree.json", dtud::tree_to_json(run.tree).dump(2) + "\n");
    auto rules = dtud::rules_to_json(run.tree, run.table, spec.target, spec.theta,
                                     run.table[run.selected].branch.id);
    rules["attributes"] = run.variables;
    write(cdir / "rules.json", rules.dump(2) + "\n");
    write(cdir / "subspace.csv", table_csv(run.variables, run.subspace));
    write(cdir / "screen_all.csv", screen_csv(run.tree.label_set, run.ranked));
    std::vector<dtud::ScreenedDesign> top(run.ranked.begin(),
                                          run.ranked.begin() + static_cast<std::ptrdiff_t>(spec.top));
    write(cdir / "screen.csv", screen_csv(run.tree.label_set, top));

    std::map<std::string, std::size_t> counts;
    for (const auto& l : run.labels) ++counts[l];
    summary["components"].push_back({{"name", run.name},
                                     {"label_counts", counts},
                                     {"leaves", run.tree.leaf_indices().size()},
                                     {"depth", run.tree.depth()},
                                     {"training_accuracy", run.training_accuracy},
                                     {"selected", run.table[run.selected].branch.id},
                                     {"selected_acc", run.table[run.selected].acc},
                                     {"selected_ctt", run.table[run.selected].ctt},
                                     {"mean_lp_all", run.mean_lp_all},
                                     {"mean_lp_top", run.mean_lp_top}});
    std::cout << run.name << ": " << run.tree.leaf_indices().size() << " leaves, training accuracy "
              << fmt(run.training_accuracy) << ", selected " << run.table[run.selected].branch.id << " (acc "
              << fmt(run.table[run.selected].acc) << ", ctt " << fmt(run.table[run.selected].ctt)
              << "), mean lp(" << spec.target << ") all " << fmt(run.mean_lp_all) << " top " << fmt(run.mean_lp_top)
              << "\n";
  }
  std::ostringstream systems;
  systems << "id";
  for (const auto& run : result.components) systems << "," << run.name;
  systems << ",total_mass\n";
  for (const auto& s : result.systems) {
    systems << s.id;
    for (const auto& p : s.picks) systems << "," << p;
    systems << "," << fmt(s.total_mass) << "\n";
  }
  write_atomic((dir / "systems.csv").string(), systems.str());
  m.output((dir / "systems.csv").string());
  write_atomic((dir / "summary.json").string(), summary.dump(2) + "\n");
  m.output((dir / "summary.json").string());
  m.write((dir / "manifest.json").string());
  std::cout << "system designs: " << result.systems.size() << "\n";
  return kOk;
}

int run(std::vector<std::string> args);

int cmd_replay(const std::string& manifest_path) {
  const auto doc = dtud::read_json_file(manifest_path);
  const auto argv = doc.at("argv").get<std::vector<std::string>>();
  if (argv.size() >= 2 && argv[1] == "replay") dtud::fail(dtud::ErrorKind::InvalidParameter, "cannot replay a replay");
  const int code = run(argv);
  if (code != kOk) return code;
  for (const auto& [path, digest] : doc.at("outputs").items()) {
    if (sha256_file(path) != digest.get<std::string>())
      return report(kNumeric, "replay-mismatch", path + " differs from the recorded output");
  }
  std::cout << "replay reproduced " << doc.at("outputs").size() << " outputs\n";
  return kOk;
}

int run(std::vector<std::string> args) {
  CLI::App app{"Decision trees for uncertain design data"};
  app.require_subcommand(1);
  Options o;

  auto add_uncertainty = [&](CLI::App* c) {
    c->add_option("--uncertainty", o.uncertainty, "Relative half-width R of each attribute interval")
        ->check(CLI::Range(0.0, 0.999999));
  };
  auto add_tree_shape = [&](CLI::App* c) {
    c->add_option("--max-layers", o.max_layers, "Maximum number of split layers")->check(CLI::PositiveNumber);
    c->add_option("--splits", o.splits, "Candidate split points per attribute")->check(CLI::PositiveNumber);
    c->add_option("--min-mass", o.min_mass, "Minimum partition mass for an admissible split");
    c->add_option("--labels", o.labels, "Comma-separated admissible label set");
  };

  auto* train = app.add_subcommand("train", "Build a tree from a labelled dataset");
  train->add_option("--data", o.data)->required();
  add_uncertainty(train);
  add_tree_shape(train);
  train->add_option("--seed", o.seed);
  train->add_option("--out", o.out)->required();

  auto* rules = app.add_subcommand("rules", "Score target-label branches and select a design rule");
  rules->add_option("--tree", o.tree)->required();
  rules->add_option("--data", o.data)->required();
  add_uncertainty(rules);
  rules->add_option("--label", o.label);
  rules->add_option("--min-lp", o.min_lp, "Minimum lp(label) of a qualifying branch");
  rules->add_option("--bounds", o.bounds, "CSV name,lower,upper; defaults to the data extent");
  rules->add_option("--out", o.out)->required();

  auto* sample = app.add_subcommand("sample", "Latin hypercube sample over bounds or a selected rule");
  sample->add_option("--rules", o.rules);
  sample->add_option("--bounds", o.bounds);
  sample->add_option("--n", o.n)->check(CLI::PositiveNumber);
  sample->add_option("--seed", o.seed);
  sample->add_option("--out", o.out)->required();

  auto* respond = app.add_subcommand("respond", "Evaluate and label designs with a surrogate");
  respond->add_option("--surrogate", o.surrogate)->required();
  respond->add_option("--designs", o.designs)->required();
  respond->add_option("--out", o.out)->required();

  auto* screen = app.add_subcommand("screen", "Rank designs by predicted label probability");
  screen->add_option("--tree", o.tree)->required();
  screen->add_option("--designs", o.designs)->required();
  add_uncertainty(screen);
  screen->add_option("--label", o.label);
  screen->add_option("--top", o.top);
  screen->add_option("--out", o.out)->required();

  auto* classify = app.add_subcommand("classify", "Label distributions for uncertain designs");
  classify->add_option("--tree", o.tree)->required();
  classify->add_option("--data", o.data)->required();
  add_uncertainty(classify);
  classify->add_option("--out", o.out)->required();

  auto* metrics = app.add_subcommand("metrics", "Crashworthiness metrics from curves and histories");
  metrics->add_option("--curve", o.curve, "CSV u_m,F_kN");
  metrics->add_option("--mass", o.mass, "Component mass in kg for SEA");
  metrics->add_option("--histories", o.histories, "CSV t_s,s1_mm,s2_mm,s3_mm,s4_mm");
  metrics->add_option("--out", o.out)->required();

  auto* morph = app.add_subcommand("morph", "Thin-plate RBF morphing of a node cloud");
  morph->add_option("--original", o.original)->required();
  morph->add_option("--displaced", o.displaced)->required();
  morph->add_option("--nodes", o.nodes)->required();
  morph->add_option("--regularization", o.regularization);
  morph->add_option("--out", o.out)->required();

  auto* cv = app.add_subcommand("cv", "k-fold cross-validation");
  cv->add_option("--data", o.data)->required();
  add_uncertainty(cv);
  add_tree_shape(cv);
  cv->add_option("--k", o.k);
  cv->add_option("--seed", o.seed);
  cv->add_option("--out", o.out)->required();

  auto* demo = app.add_subcommand("demo", "End-to-end surrogate design workflow");
  demo->add_option("--spec", o.spec)->required();
  demo->add_option("--seed", o.seed);
  demo->add_option("--out", o.out)->required();

  std::string manifest_path;
  auto* replay = app.add_subcommand("replay", "Re-run a command from its manifest and verify outputs");
  replay->add_option("manifest", manifest_path)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(kInput, "usage", e.what());
  }

  try {
    if (replay->parsed()) return cmd_replay(manifest_path);
    CLI::App* sub = app.get_subcommands().front();
    Manifest manifest(args, *sub);
    if (train->parsed()) return cmd_train(o, manifest);
    if (rules->parsed()) return cmd_rules(o, manifest);
    if (sample->parsed()) return cmd_sample(o, manifest);
    if (respond->parsed()) return cmd_respond(o, manifest);
    if (screen->parsed()) return cmd_screen(o, manifest);
    if (classify->parsed()) return cmd_classify(o, manifest);
    if (metrics->parsed()) return cmd_metrics(o, manifest);
    if (morph->parsed()) return cmd_morph(o, manifest);
    if (cv->parsed()) return cmd_cv(o, manifest);
    if (demo->parsed()) return cmd_demo(o, manifest);
  } catch (const dtud::Error& e) {
    return report(exit_code_for(e.kind()), dtud::to_string(e.kind()), e.what());
  } catch (const fs::filesystem_error& e) {
    return report(kInput, "io", e.what());
  } catch (const nlohmann::json::exception& e) {
    return report(kInput, "schema", e.what());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }
