#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlstack/errors.hpp"

namespace nlstack {

/// Crystal point group of the second-order response.
enum class PointGroup { D3h, C2 };

inline const char* to_string(PointGroup g) { return g == PointGroup::D3h ? "D3h" : "C2"; }

/// Contracted 3x6 second-order susceptibility matrix in crystal axes, plus the
/// in-plane orientation of the crystal. `orientation_deg` is the lab angle of
/// the axis of maximal co-polarized response (an armchair axis for D3h, the
/// polar b-axis for C2).
///
/// Axis conventions of the stored matrix:
///   D3h: rows (x, y) in-plane, row 3 out-of-plane; nonzero d22 = -d21 = -d16.
///   C2:  row 1 (a) out-of-plane, rows 2..3 (b, c) in-plane; zero pattern
///        with ties d14 = d25 = d36, d21 = d34, d16 = d23.
struct Chi2Tensor {
  std::array<std::array<double, 6>, 3> d{};
  PointGroup symmetry = PointGroup::D3h;
  double orientation_deg = 0.0;
};

namespace detail {

struct TieGroup {
  std::array<const char*, 3> members;
  std::size_t count;
};

inline const std::array<std::pair<const char*, std::pair<int, int>>, 8>&
c2_entry_slots() {
  // name -> (row, column), zero-based, for the C2 zero pattern
  static const std::array<std::pair<const char*, std::pair<int, int>>, 8> slots = {{
      {"d14", {0, 3}},
      {"d16", {0, 5}},
      {"d21", {1, 0}},
      {"d22", {1, 1}},
      {"d23", {1, 2}},
      {"d25", {1, 4}},
      {"d34", {2, 3}},
      {"d36", {2, 5}},
  }};
  return slots;
}

}  // namespace detail

/// Build a constraint-complete tensor from the coefficients of the chosen
/// symmetry class; entries tied by symmetry are filled from the given ones and
/// contradictory assignments are rejected.
///
/// Accepted keys: D3h: "chi0" (or equivalently "d22").
///                C2:  d14, d16, d21, d22, d23, d25, d34, d36.
inline Chi2Tensor make_tensor(PointGroup symmetry,
                              const std::map<std::string, double>& coefficients,
                              double orientation_deg = 0.0) {
  Chi2Tensor t;
  t.symmetry = symmetry;
  t.orientation_deg = orientation_deg;

  if (symmetry == PointGroup::D3h) {
    double chi0 = 0.0;
    bool have = false;
    for (const auto& [key, value] : coefficients) {
      if (key != "chi0" && key != "d22")
        throw ValidationError("D3h tensor: unknown coefficient '" + key + "'");
      if (have && value != chi0)
        throw ValidationError("D3h tensor: contradictory values for chi0/d22");
      chi0 = value;
      have = true;
    }
    if (!have) throw ValidationError("D3h tensor: chi0 required");
    t.d[1][1] = chi0;   // d22
    t.d[1][0] = -chi0;  // d21
    t.d[0][5] = -chi0;  // d16
    return t;
  }

  // C2: resolve tie groups {d14,d25,d36}, {d21,d34}, {d16,d23}; d22 free.
  static const std::vector<std::vector<std::string>> ties = {
      {"d14", "d25", "d36"}, {"d21", "d34"}, {"d16", "d23"}, {"d22"}};
  std::map<std::string, double> resolved;
  for (const auto& [key, value] : coefficients) {
    bool known = false;
    for (const auto& [name, slot] : detail::c2_entry_slots())
      if (key == name) known = true;
    if (!known) throw ValidationError("C2 tensor: unknown coefficient '" + key + "'");
  }
  for (const auto& group : ties) {
    bool have = false;
    double value = 0.0;
    for (const auto& member : group) {
      auto it = coefficients.find(member);
      if (it == coefficients.end()) continue;
      if (have && it->second != value)
        throw ValidationError("C2 tensor: contradictory tied coefficients (" +
                              group.front() + " group)");
      value = it->second;
      have = true;
    }
    if (have)
      for (const auto& member : group) resolved[member] = value;
  }
  for (const auto& [name, slot] : detail::c2_entry_slots()) {
    auto it = resolved.find(name);
    if (it != resolved.end()) t.d[slot.first][slot.second] = it->second;
  }
  return t;
}

enum class Analyzer { co_polarized, cross_polarized, unanalyzed };

inline const char* to_string(Analyzer a) {
  switch (a) {
    case Analyzer::co_polarized: return "co_polarized";
    case Analyzer::cross_polarized: return "cross_polarized";
    default: return "unanalyzed";
  }
}

struct PolarPattern {
  std::vector<double> angles_deg;
  std::vector<double> intensity;
  Analyzer analyzer = Analyzer::co_polarized;
};

namespace detail {

inline std::array<double, 6> voigt_products(double e1, double e2, double e3) {
  return {e1 * e1, e2 * e2, e3 * e3, 2.0 * e2 * e3, 2.0 * e1 * e3, 2.0 * e1 * e2};
}

/// In-plane second-harmonic polarization (lab frame) for a unit pump at lab
/// angle theta. Out-of-plane components do not radiate at normal incidence
/// and are dropped.
inline std::array<double, 2> inplane_polarization(const Chi2Tensor& t,
                                                  double theta_deg) {
  const double deg = std::numbers::pi / 180.0;
  // Lab angle of the crystal's first in-plane axis, chosen so the principal
  // axis (y for D3h, b for C2) sits at orientation_deg.
  const double principal_offset = (t.symmetry == PointGroup::D3h) ? 90.0 : 0.0;
  const double phi = (t.orientation_deg - principal_offset) * deg;
  const double rel = theta_deg * deg - phi;
  const double c = std::cos(rel), s = std::sin(rel);

  std::array<double, 6> ee{};
  int row_u, row_v;  // crystal rows mapping to the two in-plane directions
  if (t.symmetry == PointGroup::D3h) {
    ee = voigt_products(c, s, 0.0);
    row_u = 0;
    row_v = 1;
  } else {
    ee = voigt_products(0.0, c, s);
    row_u = 1;
    row_v = 2;
  }
  double pu = 0.0, pv = 0.0;
  for (int j = 0; j < 6; ++j) {
    pu += t.d[row_u][j] * ee[j];
    pv += t.d[row_v][j] * ee[j];
  }
  const double cp = std::cos(phi), sp = std::sin(phi);
  return {pu * cp - pv * sp, pu * sp + pv * cp};
}

inline double analyzed_intensity(const std::array<double, 2>& p, double theta_deg,
                                 Analyzer analyzer) {
  const double th = theta_deg * std::numbers::pi / 180.0;
  switch (analyzer) {
    case Analyzer::co_polarized: {
      const double a = p[0] * std::cos(th) + p[1] * std::sin(th);
      return a * a;
    }
    case Analyzer::cross_polarized: {
      const double a = -p[0] * std::sin(th) + p[1] * std::cos(th);
      return a * a;
    }
    default:
      return p[0] * p[0] + p[1] * p[1];
  }
}

}  // namespace detail

inline PolarPattern polar_pattern(const Chi2Tensor& tensor, Analyzer analyzer,
                                  std::span<const double> angle_grid_deg) {
  PolarPattern pat;
  pat.analyzer = analyzer;
  pat.angles_deg.assign(angle_grid_deg.begin(), angle_grid_deg.end());
  pat.intensity.reserve(angle_grid_deg.size());
  for (double theta : angle_grid_deg) {
    const auto p = detail::inplane_polarization(tensor, theta);
    pat.intensity.push_back(detail::analyzed_intensity(p, theta, analyzer));
  }
  return pat;
}

/// Uniform angle grid covering [0, 360) with the given step.
inline std::vector<double> angle_grid(double step_deg = 1.0) {
  std::vector<double> grid;
  for (double a = 0.0; a < 360.0 - 1e-9; a += step_deg) grid.push_back(a);
  return grid;
}

/// D3h pattern under a phenomenological uniaxial photoelastic perturbation:
/// strain of dimensionless magnitude s along lab angle psi adds a polar
/// response  chi0 * s * cos^2(theta - psi)  directed along the strain axis,
/// leaving the 180-degree lobe pairing intact while making adjacent lobes
/// unequal. Reduces exactly to the unstrained pattern at s = 0.
inline PolarPattern strained_d3h_pattern(double chi0, double theta0_deg,
                                         double strain_magnitude,
                                         double strain_angle_deg,
                                         std::span<const double> angle_grid_deg,
                                         Analyzer analyzer = Analyzer::co_polarized) {
  if (strain_magnitude < 0.0)
    throw ValidationError("strain_magnitude must be >= 0");
  const Chi2Tensor base = make_tensor(PointGroup::D3h, {{"chi0", chi0}}, theta0_deg);
  const double deg = std::numbers::pi / 180.0;
  const double ux = std::cos(strain_angle_deg * deg);
  const double uy = std::sin(strain_angle_deg * deg);

  PolarPattern pat;
  pat.analyzer = analyzer;
  pat.angles_deg.assign(angle_grid_deg.begin(), angle_grid_deg.end());
  pat.intensity.reserve(angle_grid_deg.size());
  for (double theta : angle_grid_deg) {
    auto p = detail::inplane_polarization(base, theta);
    const double along = std::cos((theta - strain_angle_deg) * deg);
    const double strain_term = chi0 * strain_magnitude * along * along;
    p[0] += strain_term * ux;
    p[1] += strain_term * uy;
    pat.intensity.push_back(detail::analyzed_intensity(p, theta, analyzer));
  }
  return pat;
}

/// CSV export: theta_deg,intensity (after '#' metadata comments).
inline void write_pattern_csv(std::ostream& out, const PolarPattern& p,
                              std::span<const std::string> meta = {}) {
  for (const auto& line : meta) out << "# " << line << "\n";
  out << "theta_deg,intensity\n";
  char buf[96];
  for (std::size_t i = 0; i < p.angles_deg.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", p.angles_deg[i], p.intensity[i]);
    out << buf;
  }
}

}  // namespace nlstack
