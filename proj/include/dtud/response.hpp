#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dtud/csv.hpp"
#include "dtud/error.hpp"

namespace dtud {

// Units: deflection m, force kN, intrusion mm, mass kg, energy J, time s.

namespace response_names {
inline constexpr const char* peak_force = "F_p";
inline constexpr const char* peak_intrusion = "S_p";
inline constexpr const char* mass = "M";
inline constexpr const char* sea = "SEA";
inline constexpr const char* avgstiff = "avgstiff";
}  // namespace response_names

/// Objective values of one design, keyed by response name.
struct ResponseRecord {
  std::map<std::string, double> values;

  bool has(const std::string& name) const { return values.contains(name); }

  double at(const std::string& name) const {
    const auto it = values.find(name);
    if (it == values.end()) fail(ErrorKind::Schema, "response '" + name + "' missing from record");
    return it->second;
  }

  void set(const std::string& name, double value) {
    if (!std::isfinite(value)) fail(ErrorKind::InvalidParameter, "response '" + name + "' is not finite");
    if (name == response_names::mass && !(value > 0.0))
      fail(ErrorKind::InvalidParameter, "mass must be positive");
    values[name] = value;
  }
};

/// Force against crush deflection, starting at zero deflection.
class ForceDeflectionCurve {
 public:
  ForceDeflectionCurve(std::vector<double> deflection_m, std::vector<double> force_kn)
      : u_(std::move(deflection_m)), f_(std::move(force_kn)) {
    if (u_.size() != f_.size()) fail(ErrorKind::InvalidParameter, "curve columns differ in length");
    if (u_.size() < 2) fail(ErrorKind::InvalidParameter, "curve needs at least two samples");
    if (u_.front() != 0.0) fail(ErrorKind::InvalidParameter, "curve must start at zero deflection");
    for (std::size_t i = 1; i < u_.size(); ++i)
      if (!(u_[i] > u_[i - 1])) fail(ErrorKind::InvalidParameter, "curve deflection must strictly increase");
    for (double f : f_)
      if (!std::isfinite(f)) fail(ErrorKind::InvalidParameter, "curve force must be finite");
  }

  std::span<const double> deflection() const noexcept { return u_; }
  std::span<const double> force() const noexcept { return f_; }
  double final_deflection() const noexcept { return u_.back(); }

  /// Trapezoidal integral of F du, in kN·m (= kJ).
  double energy_kj() const noexcept {
    double e = 0.0;
    for (std::size_t i = 1; i < u_.size(); ++i) e += 0.5 * (f_[i] + f_[i - 1]) * (u_[i] - u_[i - 1]);
    return e;
  }

 private:
  std::vector<double> u_;
  std::vector<double> f_;
};

/// Intrusion of four firewall markers sampled on a shared time grid.
struct IntrusionHistories {
  std::vector<double> time_s;
  std::array<std::vector<double>, 4> markers_mm;

  void validate() const {
    if (time_s.empty()) fail(ErrorKind::InvalidParameter, "intrusion histories are empty");
    for (std::size_t k = 1; k < time_s.size(); ++k)
      if (!(time_s[k] > time_s[k - 1])) fail(ErrorKind::InvalidParameter, "time grid must strictly increase");
    for (const auto& s : markers_mm)
      if (s.size() != time_s.size()) fail(ErrorKind::InvalidParameter, "marker signal length differs from time grid");
  }
};

/// Mean crush force over final deflection, divided by final deflection (kN/m).
inline double avgstiff(const ForceDeflectionCurve& curve) {
  const double d = curve.final_deflection();
  if (!(d > 0.0)) fail(ErrorKind::DegenerateCurve, "final deflection is zero");
  return curve.energy_kj() / (d * d);
}

inline double peak_force(std::span<const double> force) {
  if (force.empty()) fail(ErrorKind::InvalidParameter, "peak force of an empty history");
  return *std::max_element(force.begin(), force.end());
}

/// Largest value over time of the four-marker average.
inline double peak_intrusion(const IntrusionHistories& h) {
  h.validate();
  double peak = -INFINITY;
  for (std::size_t k = 0; k < h.time_s.size(); ++k) {
    const double avg =
        (h.markers_mm[0][k] + h.markers_mm[1][k] + h.markers_mm[2][k] + h.markers_mm[3][k]) / 4.0;
    peak = std::max(peak, avg);
  }
  return peak;
}

inline double total_mass(std::span<const double> component_masses) {
  if (component_masses.empty()) fail(ErrorKind::InvalidParameter, "total mass of no components");
  double m = 0.0;
  for (double x : component_masses) m += x;
  return m;
}

/// Absorbed energy per unit mass, J/kg.
inline double sea(const ForceDeflectionCurve& curve, double mass_kg) {
  if (!(mass_kg > 0.0)) fail(ErrorKind::InvalidParameter, "SEA needs a positive mass");
  return curve.energy_kj() * 1e3 / mass_kg;
}

/// Reads `u_m,F_kN`.
inline ForceDeflectionCurve read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Ingestion, path + ": cannot open");
  const auto lines = csv::read_lines(in);
  if (lines.empty() || csv::split(lines.front().text) != std::vector<std::string>{"u_m", "F_kN"})
    fail(ErrorKind::Ingestion, path + ": header must be 'u_m,F_kN'");
  std::vector<double> u, f;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = csv::split(lines[r].text);
    const auto a = fields.size() == 2 ? csv::parse_double(fields[0]) : std::nullopt;
    const auto b = fields.size() == 2 ? csv::parse_double(fields[1]) : std::nullopt;
    if (!a || !b) fail(ErrorKind::Ingestion, path + ": line " + std::to_string(lines[r].number) + ": malformed row");
    u.push_back(*a);
    f.push_back(*b);
  }
  try {
    return ForceDeflectionCurve(std::move(u), std::move(f));
  } catch (const Error& e) {
    fail(ErrorKind::Ingestion, path + ": " + e.what());
  }
}

/// Reads `t_s,s1_mm,s2_mm,s3_mm,s4_mm`.
inline IntrusionHistories read_histories_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Ingestion, path + ": cannot open");
  const auto lines = csv::read_lines(in);
  const std::vector<std::string> header{"t_s", "s1_mm", "s2_mm", "s3_mm", "s4_mm"};
  if (lines.empty() || csv::split(lines.front().text) != header)
    fail(ErrorKind::Ingestion, path + ": header must be 't_s,s1_mm,s2_mm,s3_mm,s4_mm'");
  IntrusionHistories h;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = csv::split(lines[r].text);
    if (fields.size() != 5) fail(ErrorKind::Ingestion, path + ": line " + std::to_string(lines[r].number) + ": expected 5 columns");
    std::array<double, 5> v{};
    for (std::size_t c = 0; c < 5; ++c) {
      const auto x = csv::parse_double(fields[c]);
      if (!x) fail(ErrorKind::Ingestion, path + ": line " + std::to_string(lines[r].number) + ", column '" + header[c] + "': malformed value");
      v[c] = *x;
    }
    h.time_s.push_back(v[0]);
    for (std::size_t m = 0; m < 4; ++m) h.markers_mm[m].push_back(v[m + 1]);
  }
  try {
    h.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Ingestion, path + ": " + e.what());
  }
  return h;
}

}  // namespace dtud
