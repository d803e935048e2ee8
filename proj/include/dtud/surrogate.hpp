#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dtud/error.hpp"
#include "dtud/labeling.hpp"
#include "dtud/response.hpp"
#include "dtud/rules.hpp"

namespace dtud {

struct SurrogateVariable {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
};

/// value = base + sum_i linear_i d_i + quadratic_i d_i^2 + sum_(i,j) c_ij d_i d_j,
/// with d_i = x_i - optimum_i.
struct PolynomialResponse {
  std::string name;
  double base = 0.0;
  std::vector<double> optimum;
  std::vector<double> linear;
  std::vector<double> quadratic;
  struct Interaction {
    std::size_t a = 0;
    std::size_t b = 0;
    double coef = 0.0;
  };
  std::vector<Interaction> interactions;

  double evaluate(std::span<const double> x) const {
    double v = base;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - optimum[i];
      v += linear[i] * d + quadratic[i] * d * d;
    }
    for (const auto& t : interactions) v += t.coef * (x[t.a] - optimum[t.a]) * (x[t.b] - optimum[t.b]);
    return v;
  }
};

/// Synthetic crush curve on a uniform deflection grid:
///   F(u) = F_mean (1 - exp(-u / (rise d))) (1 + ripple sin(2 pi cycles u / d)).
struct CurveTemplate {
  std::string name;
  std::string mean_force;  // response giving F_mean in kN
  std::string deflection;  // response giving d in m
  double rise = 0.05;
  double ripple = 0.1;
  double cycles = 4.0;
  std::size_t samples = 201;

  ForceDeflectionCurve generate(double mean_force_kn, double deflection_m) const {
    if (!(deflection_m > 0.0)) fail(ErrorKind::DegenerateCurve, "curve '" + name + "' has zero deflection");
    std::vector<double> u(samples), f(samples);
    for (std::size_t i = 0; i < samples; ++i) {
      u[i] = deflection_m * static_cast<double>(i) / static_cast<double>(samples - 1);
      f[i] = mean_force_kn * (1.0 - std::exp(-u[i] / (rise * deflection_m))) *
             (1.0 + ripple * std::sin(2.0 * std::numbers::pi * cycles * u[i] / deflection_m));
    }
    u.front() = 0.0;
    return ForceDeflectionCurve(std::move(u), std::move(f));
  }
};

/// Response computed from a generated curve by one of the metric operations.
struct DerivedResponse {
  enum class Kind { Sea, Avgstiff, PeakForce };
  std::string name;
  Kind kind = Kind::Sea;
  std::string curve;
  std::string mass;  // response name, Sea only
};

struct SurrogateSpec {
  std::string name;
  int version = 1;
  std::vector<SurrogateVariable> variables;
  std::vector<PolynomialResponse> responses;
  std::vector<CurveTemplate> curves;
  std::vector<DerivedResponse> derived;
  std::optional<LabelCriteria> criteria;
  /// Names of responses copied into the ResponseRecord; all when empty.
  std::vector<std::string> outputs;

  std::vector<Interval> bounds() const {
    std::vector<Interval> out;
    for (const auto& v : variables) out.push_back({v.lower, v.upper});
    return out;
  }

  std::vector<std::string> variable_names() const {
    std::vector<std::string> out;
    for (const auto& v : variables) out.push_back(v.name);
    return out;
  }
};

struct SurrogateResult {
  ResponseRecord responses;
  std::map<std::string, ForceDeflectionCurve> curves;
};

inline SurrogateResult surrogate_respond(std::span<const double> x, const SurrogateSpec& spec) {
  if (x.size() != spec.variables.size())
    fail(ErrorKind::InvalidParameter, "design has " + std::to_string(x.size()) + " values, surrogate '" + spec.name +
                                          "' expects " + std::to_string(spec.variables.size()));
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] >= spec.variables[i].lower && x[i] <= spec.variables[i].upper))
      fail(ErrorKind::InvalidParameter, "variable '" + spec.variables[i].name + "' = " + std::to_string(x[i]) +
                                            " outside its bounds");
  std::map<std::string, double> values;
  for (const auto& r : spec.responses) values[r.name] = r.evaluate(x);

  SurrogateResult result;
  auto lookup = [&](const std::string& name) {
    const auto it = values.find(name);
    if (it == values.end()) fail(ErrorKind::Schema, "surrogate response '" + name + "' is not defined");
    return it->second;
  };
  for (const auto& c : spec.curves) result.curves.emplace(c.name, c.generate(lookup(c.mean_force), lookup(c.deflection)));
  for (const auto& d : spec.derived) {
    const auto it = result.curves.find(d.curve);
    if (it == result.curves.end()) fail(ErrorKind::Schema, "derived response uses unknown curve '" + d.curve + "'");
    switch (d.kind) {
      case DerivedResponse::Kind::Sea: values[d.name] = sea(it->second, lookup(d.mass)); break;
      case DerivedResponse::Kind::Avgstiff: values[d.name] = avgstiff(it->second); break;
      case DerivedResponse::Kind::PeakForce: values[d.name] = peak_force(it->second.force()); break;
    }
  }
  for (const auto& [name, value] : values)
    if (spec.outputs.empty() || std::find(spec.outputs.begin(), spec.outputs.end(), name) != spec.outputs.end())
      result.responses.set(name, value);
  return result;
}

inline SurrogateSpec surrogate_from_json(const nlohmann::json& j) {
  SurrogateSpec spec;
  try {
    spec.name = j.value("name", std::string("surrogate"));
    spec.version = j.value("version", 1);
    for (const auto& v : j.at("variables")) {
      SurrogateVariable var{v.at("name").get<std::string>(), v.at("lower").get<double>(), v.at("upper").get<double>()};
      if (!(var.lower < var.upper)) fail(ErrorKind::InvalidParameter, "variable '" + var.name + "' has empty bounds");
      spec.variables.push_back(var);
    }
    const auto names = spec.variable_names();
    auto index_of = [&](const std::string& name) {
      const auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end()) fail(ErrorKind::Schema, "unknown surrogate variable '" + name + "'");
      return static_cast<std::size_t>(it - names.begin());
    };
    auto per_variable = [&](const nlohmann::json& r, const char* key, std::vector<double> fallback) {
      if (r.contains(key))
        for (const auto& [name, value] : r.at(key).items()) fallback[index_of(name)] = value.template get<double>();
      return fallback;
    };
    std::vector<double> centres;
    for (const auto& v : spec.variables) centres.push_back(0.5 * (v.lower + v.upper));
    const std::vector<double> zeros(names.size(), 0.0);
    for (const auto& r : j.at("responses")) {
      PolynomialResponse p;
      p.name = r.at("name").get<std::string>();
      p.base = r.value("base", 0.0);
      p.optimum = per_variable(r, "optimum", centres);
      p.linear = per_variable(r, "linear", zeros);
      p.quadratic = per_variable(r, "quadratic", zeros);
      for (const auto& t : r.value("interactions", nlohmann::json::array()))
        p.interactions.push_back({index_of(t.at("a").get<std::string>()), index_of(t.at("b").get<std::string>()),
                                  t.at("coef").get<double>()});
      spec.responses.push_back(std::move(p));
    }
    for (const auto& c : j.value("curves", nlohmann::json::array())) {
      CurveTemplate t;
      t.name = c.at("name").get<std::string>();
      t.mean_force = c.at("mean_force").get<std::string>();
      t.deflection = c.at("deflection").get<std::string>();
      t.rise = c.value("rise", t.rise);
      t.ripple = c.value("ripple", t.ripple);
      t.cycles = c.value("cycles", t.cycles);
      t.samples = c.value("samples", t.samples);
      if (t.samples < 2 || !(t.rise > 0.0)) fail(ErrorKind::InvalidParameter, "curve '" + t.name + "' is malformed");
      spec.curves.push_back(t);
    }
    for (const auto& d : j.value("derived", nlohmann::json::array())) {
      DerivedResponse r;
      r.name = d.at("name").get<std::string>();
      const auto kind = d.at("kind").get<std::string>();
      if (kind == "sea") r.kind = DerivedResponse::Kind::Sea;
      else if (kind == "avgstiff") r.kind = DerivedResponse::Kind::Avgstiff;
      else if (kind == "peak_force") r.kind = DerivedResponse::Kind::PeakForce;
      else fail(ErrorKind::Schema, "unknown derived response kind '" + kind + "'");
      r.curve = d.at("curve").get<std::string>();
      r.mass = d.value("mass", std::string(response_names::mass));
      spec.derived.push_back(r);
    }
    if (j.contains("criteria")) spec.criteria = LabelCriteria::from_json(j.at("criteria"));
    spec.outputs = j.value("outputs", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Schema, "surrogate '" + spec.name + "': " + e.what());
  }
  return spec;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Ingestion, path + ": cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Ingestion, path + ": " + e.what());
  }
}

}  // namespace dtud
