#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "nlstack/errors.hpp"
#include "nlstack/materials.hpp"
#include "nlstack/stack.hpp"

namespace nlstack {

// Scalar plane waves at normal incidence, time convention e^{-i w t}:
// absorbing media have Im(q) >= 0 and forward waves decay as e^{-Im(q) z}.
// Depth z increases from the ambient (z <= 0) through the layers into the
// substrate; the top of the first layer sits at z = 0.

using cdouble = std::complex<double>;

struct FieldSample {
  cdouble E;
  cdouble dEdz;  // per nm
};

namespace detail {

struct RegionWave {
  cdouble e_fwd;  // amplitude of e^{+iq(z - z_ref)}
  cdouble e_bwd;  // amplitude of e^{-iq(z - z_ref)}
  cdouble q;      // 2*pi*n_complex / lambda, 1/nm
  double z_ref;   // ambient: 0 (its bottom); layers/substrate: top face
};

}  // namespace detail

/// Per-region wave coefficients of the linear solution at one wavelength,
/// normalized to unit incident amplitude in the ambient.
class LayerCoefficients {
 public:
  LayerCoefficients(double wavelength_nm, std::vector<detail::RegionWave> regions,
                    std::vector<double> boundaries)
      : wavelength_nm_(wavelength_nm),
        regions_(std::move(regions)),
        boundaries_(std::move(boundaries)) {}

  double wavelength_nm() const { return wavelength_nm_; }

  /// Region count = layers + 2; index 0 is the ambient, the last the substrate.
  std::size_t region_count() const { return regions_.size(); }
  const detail::RegionWave& region(std::size_t i) const { return regions_[i]; }

  /// Interface depths, boundaries()[0] = 0 (stack top) .. back() = stack bottom.
  const std::vector<double>& boundaries() const { return boundaries_; }

  cdouble reflection() const { return regions_.front().e_bwd; }
  cdouble transmission() const { return regions_.back().e_fwd; }

  std::size_t region_at(double z) const {
    if (z < boundaries_.front()) return 0;
    if (z >= boundaries_.back()) return regions_.size() - 1;
    // layer j (1-based) spans [boundaries[j-1], boundaries[j])
    std::size_t lo = 0, hi = boundaries_.size() - 1;
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      (z < boundaries_[mid] ? hi : lo) = mid;
    }
    return lo + 1;
  }

  /// Analytic field and gradient at depth z (no finite differences). Supported
  /// for z within ten wavelengths of the stack; evanescent tails beyond that
  /// are rejected rather than extrapolated.
  FieldSample field_at(double z) const {
    const double margin = 10.0 * wavelength_nm_;
    if (!std::isfinite(z) || z < boundaries_.front() - margin ||
        z > boundaries_.back() + margin)
      throw RangeError("depth " + std::to_string(z) +
                       " nm outside the supported profile range");
    const detail::RegionWave& w = regions_[region_at(z)];
    const cdouble up = std::exp(cdouble(0, 1) * w.q * (z - w.z_ref));
    const cdouble dn = 1.0 / up;
    FieldSample s;
    s.E = w.e_fwd * up + w.e_bwd * dn;
    s.dEdz = cdouble(0, 1) * w.q * (w.e_fwd * up - w.e_bwd * dn);
    return s;
  }

 private:
  double wavelength_nm_;
  std::vector<detail::RegionWave> regions_;
  std::vector<double> boundaries_;
};

/// Solve the stratified linear problem at normal incidence. Marches interface
/// and propagation relations up from the substrate, then normalizes to unit
/// incident amplitude.
inline LayerCoefficients solve_linear(const LayerStack& stack, const MaterialLibrary& lib,
                                      double wavelength_nm) {
  if (!(wavelength_nm > 0.0) || !std::isfinite(wavelength_nm))
    throw ValidationError("wavelength must be positive and finite");
  validate_stack(stack, lib);

  const std::size_t n_layers = stack.layers.size();
  const double two_pi = 2.0 * std::numbers::pi;

  std::vector<cdouble> index(n_layers + 2);
  index[0] = lib.index_at(stack.ambient, wavelength_nm);
  for (std::size_t j = 0; j < n_layers; ++j)
    index[j + 1] = lib.index_at(stack.layers[j].material, wavelength_nm);
  index[n_layers + 1] = lib.index_at(stack.substrate, wavelength_nm);

  std::vector<double> boundaries(n_layers + 1);
  boundaries[0] = 0.0;
  for (std::size_t j = 0; j < n_layers; ++j)
    boundaries[j + 1] = boundaries[j] + stack.layers[j].thickness_nm;

  std::vector<detail::RegionWave> regions(n_layers + 2);
  for (std::size_t j = 0; j < regions.size(); ++j) {
    regions[j].q = two_pi * index[j] / wavelength_nm;
    regions[j].z_ref = (j == 0) ? 0.0 : boundaries[j - 1];
  }

  // Amplitudes at the top of the current region, marching upward. The
  // substrate carries only the transmitted wave.
  cdouble u = 1.0, v = 0.0;
  regions[n_layers + 1].e_fwd = u;
  regions[n_layers + 1].e_bwd = v;
  for (std::size_t j = n_layers + 1; j-- > 0;) {
    const cdouble na = index[j], nb = index[j + 1];
    const cdouble ua = ((na + nb) * u + (na - nb) * v) / (2.0 * na);
    const cdouble va = ((na - nb) * u + (na + nb) * v) / (2.0 * na);
    if (j >= 1) {
      // (ua, va) hold at the bottom face; re-reference to the layer top.
      const cdouble q = regions[j].q;
      const double d = stack.layers[j - 1].thickness_nm;
      const cdouble phase = std::exp(cdouble(0, 1) * q * d);
      u = ua / phase;
      v = va * phase;
    } else {
      u = ua;
      v = va;
    }
    regions[j].e_fwd = u;
    regions[j].e_bwd = v;
  }

  // Normalize to unit incident amplitude.
  const cdouble norm = regions[0].e_fwd;
  for (auto& w : regions) {
    w.e_fwd /= norm;
    w.e_bwd /= norm;
  }
  return LayerCoefficients(wavelength_nm, std::move(regions), std::move(boundaries));
}

/// Field and analytic gradient sampled on a caller-supplied depth grid.
struct FieldProfile {
  double wavelength_nm = 0.0;
  std::vector<double> z_nm;
  std::vector<cdouble> E;
  std::vector<cdouble> dEdz;
};

inline FieldProfile field_profile(const LayerCoefficients& coeffs,
                                  std::span<const double> z_grid) {
  FieldProfile p;
  p.wavelength_nm = coeffs.wavelength_nm();
  p.z_nm.assign(z_grid.begin(), z_grid.end());
  p.E.reserve(z_grid.size());
  p.dEdz.reserve(z_grid.size());
  for (double z : z_grid) {
    FieldSample s = coeffs.field_at(z);
    p.E.push_back(s.E);
    p.dEdz.push_back(s.dEdz);
  }
  return p;
}

struct StackResponse {
  cdouble r;
  cdouble t;
  double R = 0.0;
  double T = 0.0;
  double A = 0.0;
};

inline StackResponse reflectance(const LayerStack& stack, const MaterialLibrary& lib,
                                 double wavelength_nm) {
  const LayerCoefficients coeffs = solve_linear(stack, lib, wavelength_nm);
  StackResponse resp;
  resp.r = coeffs.reflection();
  resp.t = coeffs.transmission();
  resp.R = std::norm(resp.r);
  const double n_amb = lib.index_at(stack.ambient, wavelength_nm).real();
  const double n_sub = lib.index_at(stack.substrate, wavelength_nm).real();
  resp.T = n_sub / n_amb * std::norm(resp.t);
  resp.A = 1.0 - resp.R - resp.T;
  return resp;
}

/// CSV export: z_nm,Re_E,Im_E,Re_dEdz,Im_dEdz (after '#' metadata comments).
inline void write_profile_csv(std::ostream& out, const FieldProfile& p,
                              std::span<const std::string> meta = {}) {
  for (const auto& line : meta) out << "# " << line << "\n";
  out << "z_nm,Re_E,Im_E,Re_dEdz,Im_dEdz\n";
  char buf[192];
  for (std::size_t i = 0; i < p.z_nm.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g\n", p.z_nm[i],
                  p.E[i].real(), p.E[i].imag(), p.dEdz[i].real(), p.dEdz[i].imag());
    out << buf;
  }
}

}  // namespace nlstack
