#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlstack/errors.hpp"
#include "nlstack/linear_tmm.hpp"
#include "nlstack/materials.hpp"
#include "nlstack/stack.hpp"

namespace nlstack {

// Sheet-source treatment of harmonic generation in a stratified stack under
// the undepleted-pump approximation: every monolayer of a nonlinear layer
// carries a polarization sheet driven by the pump field (and its gradient),
// and each sheet radiates equal up/down waves at the output wavelength that
// then propagate through the stack's linear response. Phase relationships
// between pump, sources and radiated waves are carried exactly.

/// One nonlinear polarization sheet. Monolayer sheets populate the dipolar
/// and quadrupolar amplitudes; twist-interface sheets only the interface one.
struct SourceSheet {
  double z_nm = 0.0;
  std::size_t region = 0;  // region index in the linear solution (layer = index+1)
  cdouble amp_dipolar = 0.0;
  cdouble amp_quadrupolar = 0.0;
  cdouble amp_interface = 0.0;

  cdouble total() const { return amp_dipolar + amp_quadrupolar + amp_interface; }
};

/// Callable giving the driving field at a depth; defaults to the linear
/// solution, replaceable by tests with closed-form fields.
using FieldSampler = std::function<FieldSample(double z_nm)>;

namespace detail {

inline std::vector<SourceSheet> build_sheets_from_fields(const LayerStack& stack,
                                                         const FieldSampler& field1,
                                                         const FieldSampler& field2) {
  std::vector<SourceSheet> sheets;
  double z_top = 0.0;
  for (std::size_t li = 0; li < stack.layers.size(); ++li) {
    const Layer& layer = stack.layers[li];
    if (!layer.nonlinear) {
      z_top += layer.thickness_nm;
      continue;
    }
    const NonlinearSpec& nl = *layer.nonlinear;
    const double chi_q_eff = nl.chi_q_ratio * nl.chi_d * nl.monolayer_thickness_nm;
    const std::vector<double> centers = monolayer_positions(layer, z_top);
    for (int m = 1; m <= nl.monolayer_count; ++m) {
      const double z = centers[m - 1];
      const FieldSample f1 = field1(z);
      const FieldSample f2 = field2(z);
      const double sign =
          (nl.symmetry == Symmetry::D3h_AA_prime && (m % 2 == 1)) ? -1.0 : 1.0;
      SourceSheet s;
      s.z_nm = z;
      s.region = li + 1;
      s.amp_dipolar = sign * nl.chi_d * f1.E * f2.E;
      s.amp_quadrupolar = chi_q_eff * 0.5 * (f1.E * f2.dEdz + f2.E * f1.dEdz);
      sheets.push_back(s);
    }
    for (const TwistInterface& tw : nl.twist_interfaces) {
      const double z = z_top + tw.monolayer_index * nl.monolayer_thickness_nm;
      const FieldSample f1 = field1(z);
      const FieldSample f2 = field2(z);
      SourceSheet s;
      s.z_nm = z;
      s.region = li + 1;
      s.amp_interface = tw.chi_int * f1.E * f2.E;
      sheets.push_back(s);
    }
    z_top += layer.thickness_nm;
  }
  if (sheets.empty())
    throw ValidationError("stack has no nonlinear layer");
  return sheets;
}

}  // namespace detail

/// Sheets driving second-harmonic radiation for a pump at `pump_nm`. The pump
/// field defaults to the linear solution of the stack; `prescribed` overrides
/// it (the stack geometry still defines the sheet positions).
inline std::vector<SourceSheet> build_source_sheets(
    const LayerStack& stack, const MaterialLibrary& lib, double pump_nm,
    const std::optional<FieldSampler>& prescribed = std::nullopt) {
  if (prescribed)
    return detail::build_sheets_from_fields(stack, *prescribed, *prescribed);
  const LayerCoefficients coeffs = solve_linear(stack, lib, pump_nm);
  FieldSampler sampler = [&coeffs](double z) { return coeffs.field_at(z); };
  return detail::build_sheets_from_fields(stack, sampler, sampler);
}

/// Linear response seen by a sheet inside one region: partial reflections of
/// the structure above/below and the transmission up into the ambient.
struct SheetEnvironment {
  cdouble q;               // wavevector in the host region at the output wavelength
  double dist_above = 0.0;  // sheet depth below the region's top face
  double dist_below = 0.0;  // region's bottom face depth minus sheet depth
  cdouble r_up = 0.0;      // reflection off the structure above (top-face reference)
  cdouble r_down = 0.0;    // reflection off the structure below (bottom-face reference)
  cdouble t_up = 1.0;      // transmission of an up-going top-face wave into the ambient
};

/// Reflected-side amplitude radiated by one sheet of emission amplitude
/// `source_amp`, summing every internal round trip of its host region.
inline cdouble radiate_sheet(const SheetEnvironment& env, cdouble source_amp) {
  const cdouble i(0.0, 1.0);
  const cdouble up_phase = std::exp(i * env.q * env.dist_above);
  const cdouble down_phase = std::exp(i * env.q * env.dist_below);
  const cdouble round_trip =
      env.r_up * env.r_down *
      std::exp(i * env.q * (2.0 * (env.dist_above + env.dist_below)));
  const cdouble up_at_sheet =
      source_amp * (1.0 + env.r_down * down_phase * down_phase) / (1.0 - round_trip);
  return env.t_up * up_phase * up_at_sheet;
}

namespace detail {

/// Per-region radiation environments of a stack at one output wavelength.
class RadiationContext {
 public:
  RadiationContext(const LayerStack& stack, const MaterialLibrary& lib,
                   double wavelength_nm)
      : wavelength_nm_(wavelength_nm) {
    const std::size_t n_layers = stack.layers.size();
    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<cdouble> index(n_layers + 2);
    index[0] = lib.index_at(stack.ambient, wavelength_nm);
    for (std::size_t j = 0; j < n_layers; ++j)
      index[j + 1] = lib.index_at(stack.layers[j].material, wavelength_nm);
    index[n_layers + 1] = lib.index_at(stack.substrate, wavelength_nm);

    q_.resize(n_layers + 2);
    for (std::size_t j = 0; j < q_.size(); ++j) q_[j] = two_pi * index[j] / wavelength_nm;

    thickness_.assign(n_layers + 2, 0.0);
    boundaries_.assign(n_layers + 1, 0.0);
    for (std::size_t j = 0; j < n_layers; ++j) {
      thickness_[j + 1] = stack.layers[j].thickness_nm;
      boundaries_[j + 1] = boundaries_[j] + stack.layers[j].thickness_nm;
    }

    auto fresnel_r = [&](std::size_t from, std::size_t to) {
      return (index[from] - index[to]) / (index[from] + index[to]);
    };
    auto fresnel_t = [&](std::size_t from, std::size_t to) {
      return 2.0 * index[from] / (index[from] + index[to]);
    };
    const cdouble i(0.0, 1.0);

    // Reflection looking down from region j, referenced at its bottom face.
    r_down_.assign(n_layers + 2, cdouble(0.0));
    for (std::size_t j = n_layers + 1; j-- > 0;) {
      cdouble below = 0.0;
      if (j + 1 <= n_layers)
        below = r_down_[j + 1] * std::exp(2.0 * i * q_[j + 1] * thickness_[j + 1]);
      const cdouble r_if = fresnel_r(j, j + 1);
      r_down_[j] = (r_if + below) / (1.0 + r_if * below);
    }

    // Reflection looking up from region j, referenced at its top face.
    r_up_.assign(n_layers + 2, cdouble(0.0));
    for (std::size_t j = 1; j <= n_layers + 1; ++j) {
      cdouble above = 0.0;
      if (j - 1 >= 1)
        above = r_up_[j - 1] * std::exp(2.0 * i * q_[j - 1] * thickness_[j - 1]);
      const cdouble r_if = fresnel_r(j, j - 1);
      r_up_[j] = (r_if + above) / (1.0 + r_if * above);
    }

    // Transmission of an up-going wave at the top face of region j into the
    // outgoing ambient wave (referenced at the stack top, z = 0).
    t_up_.assign(n_layers + 2, cdouble(1.0));
    for (std::size_t j = 1; j <= n_layers + 1; ++j) {
      if (j == 1) {
        t_up_[j] = fresnel_t(j, j - 1);
        continue;
      }
      const cdouble phase = std::exp(i * q_[j - 1] * thickness_[j - 1]);
      const cdouble denom =
          1.0 - fresnel_r(j - 1, j) * r_up_[j - 1] * phase * phase;
      t_up_[j] = t_up_[j - 1] * fresnel_t(j, j - 1) * phase / denom;
    }

    index_ = std::move(index);
  }

  SheetEnvironment environment(std::size_t region, double z_nm) const {
    SheetEnvironment env;
    env.q = q_[region];
    env.dist_above = z_nm - boundaries_[region - 1];
    env.dist_below = boundaries_[region] - z_nm;
    env.r_up = r_up_[region];
    env.r_down = r_down_[region];
    env.t_up = t_up_[region];
    return env;
  }

  /// Free-space emission amplitude of a polarization sheet in its host medium.
  cdouble emission(std::size_t region, cdouble polarization) const {
    const cdouble i(0.0, 1.0);
    return i * std::numbers::pi / (wavelength_nm_ * index_[region]) * polarization;
  }

 private:
  double wavelength_nm_;
  std::vector<cdouble> index_, q_, r_up_, r_down_, t_up_;
  std::vector<double> thickness_, boundaries_;
};

struct RadiatedAmplitudes {
  cdouble dipolar = 0.0;
  cdouble quadrupolar = 0.0;
  cdouble interface = 0.0;
  cdouble total() const { return dipolar + quadrupolar + interface; }
};

inline RadiatedAmplitudes radiate_by_class(const LayerStack& stack,
                                           const MaterialLibrary& lib,
                                           const std::vector<SourceSheet>& sheets,
                                           double out_nm) {
  const RadiationContext ctx(stack, lib, out_nm);
  RadiatedAmplitudes out;
  for (const SourceSheet& s : sheets) {
    const SheetEnvironment env = ctx.environment(s.region, s.z_nm);
    out.dipolar += radiate_sheet(env, ctx.emission(s.region, s.amp_dipolar));
    out.quadrupolar += radiate_sheet(env, ctx.emission(s.region, s.amp_quadrupolar));
    out.interface += radiate_sheet(env, ctx.emission(s.region, s.amp_interface));
  }
  return out;
}

}  // namespace detail

/// Coherent reflected-side amplitude radiated by `sheets` at `out_nm`.
inline cdouble radiate(const LayerStack& stack, const MaterialLibrary& lib,
                       const std::vector<SourceSheet>& sheets, double out_nm) {
  return detail::radiate_by_class(stack, lib, sheets, out_nm).total();
}

struct ShgResult {
  double wavelength_pump_nm = 0.0;
  double wavelength_sh_nm = 0.0;
  cdouble amp_total, amp_dip, amp_quad, amp_int;
  double intensity_total = 0.0;
  double intensity_dip = 0.0;
  double intensity_quad = 0.0;
  double intensity_int = 0.0;
};

struct SfgResult {
  double wavelength_1_nm = 0.0;
  double wavelength_2_nm = 0.0;
  double wavelength_out_nm = 0.0;
  cdouble amp_total;
  double intensity = 0.0;
};

namespace detail {

inline RadiatedAmplitudes sfg_amplitudes(const LayerStack& stack,
                                         const MaterialLibrary& lib, double lambda1_nm,
                                         double lambda2_nm, double out_nm) {
  const LayerCoefficients c1 = solve_linear(stack, lib, lambda1_nm);
  const LayerCoefficients c2 = solve_linear(stack, lib, lambda2_nm);
  const FieldSampler f1 = [&c1](double z) { return c1.field_at(z); };
  const FieldSampler f2 = [&c2](double z) { return c2.field_at(z); };
  const std::vector<SourceSheet> sheets = build_sheets_from_fields(stack, f1, f2);
  return radiate_by_class(stack, lib, sheets, out_nm);
}

}  // namespace detail

/// Second-harmonic response for a unit-amplitude pump, with the dipolar /
/// quadrupolar / twist-interface breakdown. Arbitrary units; compare
/// configurations through ratios only.
inline ShgResult shg_intensity(const LayerStack& stack, const MaterialLibrary& lib,
                               double pump_nm) {
  const double out_nm = pump_nm / 2.0;
  const auto amps = detail::sfg_amplitudes(stack, lib, pump_nm, pump_nm, out_nm);
  ShgResult r;
  r.wavelength_pump_nm = pump_nm;
  r.wavelength_sh_nm = out_nm;
  r.amp_dip = amps.dipolar;
  r.amp_quad = amps.quadrupolar;
  r.amp_int = amps.interface;
  r.amp_total = r.amp_dip + r.amp_quad + r.amp_int;
  r.intensity_dip = std::norm(r.amp_dip);
  r.intensity_quad = std::norm(r.amp_quad);
  r.intensity_int = std::norm(r.amp_int);
  r.intensity_total = std::norm(r.amp_total);
  return r;
}

/// Sum-frequency response of two unit-amplitude pumps; symmetric under
/// swapping the inputs, degenerate case identical to shg_intensity.
inline SfgResult sfg_intensity(const LayerStack& stack, const MaterialLibrary& lib,
                               double lambda1_nm, double lambda2_nm) {
  SfgResult r;
  r.wavelength_1_nm = lambda1_nm;
  r.wavelength_2_nm = lambda2_nm;
  r.wavelength_out_nm = 1.0 / (1.0 / lambda1_nm + 1.0 / lambda2_nm);
  const auto amps =
      detail::sfg_amplitudes(stack, lib, lambda1_nm, lambda2_nm, r.wavelength_out_nm);
  r.amp_total = amps.total();
  r.intensity = std::norm(r.amp_total);
  return r;
}

inline nlohmann::json to_json(const ShgResult& r) {
  return {
      {"wavelength_pump_nm", r.wavelength_pump_nm},
      {"wavelength_sh_nm", r.wavelength_sh_nm},
      {"amp_total", {r.amp_total.real(), r.amp_total.imag()}},
      {"amp_dip", {r.amp_dip.real(), r.amp_dip.imag()}},
      {"amp_quad", {r.amp_quad.real(), r.amp_quad.imag()}},
      {"amp_int", {r.amp_int.real(), r.amp_int.imag()}},
      {"intensity_total", r.intensity_total},
      {"intensity_dip", r.intensity_dip},
      {"intensity_quad", r.intensity_quad},
      {"intensity_int", r.intensity_int},
  };
}

inline nlohmann::json to_json(const SfgResult& r) {
  return {
      {"wavelength_1_nm", r.wavelength_1_nm},
      {"wavelength_2_nm", r.wavelength_2_nm},
      {"wavelength_out_nm", r.wavelength_out_nm},
      {"amp_total", {r.amp_total.real(), r.amp_total.imag()}},
      {"intensity", r.intensity},
  };
}

}  // namespace nlstack
