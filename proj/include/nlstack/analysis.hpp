#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlstack/errors.hpp"
#include "nlstack/polarization.hpp"

namespace nlstack {

struct Spectrum {
  std::vector<double> wavelength_nm;
  std::vector<double> counts;
};

namespace detail {

/// Damped (Levenberg-style) least squares with analytic Jacobians, bounded
/// iterations; the objective never increases between accepted steps.
/// `eval(params, residuals, jacobian)` fills r_i = model_i - data_i and
/// J[i][p] = d r_i / d p. Returns the final sum of squares.
template <std::size_t NP>
inline double levenberg_fit(
    const std::function<void(const std::array<double, NP>&, std::vector<double>&,
                             std::vector<std::array<double, NP>>&)>& eval,
    std::array<double, NP>& params, std::size_t n_residuals, int max_iter = 200,
    bool* converged_out = nullptr) {
  std::vector<double> r(n_residuals);
  std::vector<std::array<double, NP>> J(n_residuals);
  auto chi2_of = [&](const std::array<double, NP>& p) {
    eval(p, r, J);
    double s = 0.0;
    for (double v : r) s += v * v;
    return s;
  };

  double chi2 = chi2_of(params);
  double lambda = 1e-3;
  bool converged = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    // Normal equations from the residuals/Jacobian of the current point.
    eval(params, r, J);
    std::array<std::array<double, NP>, NP> A{};
    std::array<double, NP> g{};
    for (std::size_t i = 0; i < n_residuals; ++i) {
      for (std::size_t a = 0; a < NP; ++a) {
        g[a] += J[i][a] * r[i];
        for (std::size_t b = 0; b < NP; ++b) A[a][b] += J[i][a] * J[i][b];
      }
    }
    double gnorm = 0.0;
    for (double v : g) gnorm = std::max(gnorm, std::abs(v));
    if (gnorm < 1e-14 * (1.0 + chi2)) {
      converged = true;
      break;
    }

    bool stepped = false;
    for (int attempt = 0; attempt < 24 && !stepped; ++attempt) {
      auto M = A;
      for (std::size_t a = 0; a < NP; ++a) M[a][a] += lambda * (A[a][a] > 0 ? A[a][a] : 1.0);
      // Solve M * delta = -g by Gaussian elimination with partial pivoting.
      std::array<double, NP> rhs;
      for (std::size_t a = 0; a < NP; ++a) rhs[a] = -g[a];
      std::array<std::array<double, NP>, NP> m = M;
      bool singular = false;
      for (std::size_t col = 0; col < NP && !singular; ++col) {
        std::size_t piv = col;
        for (std::size_t row = col + 1; row < NP; ++row)
          if (std::abs(m[row][col]) > std::abs(m[piv][col])) piv = row;
        if (std::abs(m[piv][col]) < 1e-300) {
          singular = true;
          break;
        }
        std::swap(m[col], m[piv]);
        std::swap(rhs[col], rhs[piv]);
        for (std::size_t row = col + 1; row < NP; ++row) {
          const double f = m[row][col] / m[col][col];
          for (std::size_t k = col; k < NP; ++k) m[row][k] -= f * m[col][k];
          rhs[row] -= f * rhs[col];
        }
      }
      if (singular) {
        lambda *= 10.0;
        continue;
      }
      std::array<double, NP> delta{};
      for (std::size_t row = NP; row-- > 0;) {
        double v = rhs[row];
        for (std::size_t k = row + 1; k < NP; ++k) v -= m[row][k] * delta[k];
        delta[row] = v / m[row][row];
      }
      auto trial = params;
      for (std::size_t a = 0; a < NP; ++a) trial[a] += delta[a];
      const double trial_chi2 = chi2_of(trial);
      if (trial_chi2 <= chi2) {
        double step = 0.0;
        for (std::size_t a = 0; a < NP; ++a)
          step = std::max(step, std::abs(delta[a]) / (1.0 + std::abs(params[a])));
        params = trial;
        const double improvement = chi2 - trial_chi2;
        chi2 = trial_chi2;
        lambda = std::max(lambda * 0.3, 1e-12);
        if (step < 1e-13 || improvement <= 1e-15 * (1.0 + chi2)) {
          converged = true;
        }
        stepped = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!stepped || converged) {
      converged = converged || !stepped;
      break;
    }
  }
  if (converged_out) *converged_out = converged;
  // Refresh residuals for the caller's bookkeeping.
  chi2 = chi2_of(params);
  return chi2;
}

}  // namespace detail

struct LorentzFit {
  double center_nm = 0.0;
  double fwhm_nm = 0.0;
  double amplitude = 0.0;
  double offset = 0.0;
  double residual_rms = 0.0;
};

/// Least-squares Lorentzian fit, offset + A*(G/2)^2 / ((x-x0)^2 + (G/2)^2),
/// run directly on the raw counts with no baseline pre-subtraction.
inline LorentzFit lorentz_fit(const Spectrum& spec,
                              const std::optional<LorentzFit>& initial_guess = std::nullopt) {
  const std::size_t n = spec.wavelength_nm.size();
  if (n != spec.counts.size())
    throw ValidationError("lorentz_fit: grid/counts size mismatch");
  if (n < 5) throw ValidationError("lorentz_fit: need at least 5 points");
  for (std::size_t i = 1; i < n; ++i)
    if (!(spec.wavelength_nm[i] > spec.wavelength_nm[i - 1]))
      throw ValidationError("lorentz_fit: wavelengths must be strictly increasing");

  const double cmin = *std::min_element(spec.counts.begin(), spec.counts.end());
  const double cmax = *std::max_element(spec.counts.begin(), spec.counts.end());
  if (cmax == cmin) throw FitError("lorentz_fit: constant spectrum");

  std::array<double, 4> p;  // x0, gamma, amplitude, offset
  if (initial_guess) {
    p = {initial_guess->center_nm, initial_guess->fwhm_nm, initial_guess->amplitude,
         initial_guess->offset};
  } else {
    const std::size_t imax = static_cast<std::size_t>(
        std::max_element(spec.counts.begin(), spec.counts.end()) - spec.counts.begin());
    const double half = cmin + 0.5 * (cmax - cmin);
    double left = spec.wavelength_nm.front(), right = spec.wavelength_nm.back();
    for (std::size_t i = imax; i-- > 0;)
      if (spec.counts[i] < half) {
        left = spec.wavelength_nm[i];
        break;
      }
    for (std::size_t i = imax + 1; i < n; ++i)
      if (spec.counts[i] < half) {
        right = spec.wavelength_nm[i];
        break;
      }
    double width = right - left;
    if (!(width > 0.0))
      width = (spec.wavelength_nm.back() - spec.wavelength_nm.front()) / 4.0;
    p = {spec.wavelength_nm[imax], width, cmax - cmin, cmin};
  }

  auto eval = [&spec, n](const std::array<double, 4>& q, std::vector<double>& r,
                         std::vector<std::array<double, 4>>& J) {
    const double x0 = q[0], g = q[1] / 2.0, A = q[2], off = q[3];
    const double g2 = g * g;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = spec.wavelength_nm[i] - x0;
      const double D = dx * dx + g2;
      const double shape = g2 / D;
      r[i] = off + A * shape - spec.counts[i];
      J[i][0] = A * g2 * 2.0 * dx / (D * D);
      J[i][1] = A * dx * dx / (D * D) * g;  // d/dGamma = d/dg * 1/2, g2' = g
      J[i][2] = shape;
      J[i][3] = 1.0;
    }
  };

  std::array<double, 4> params = p;
  bool converged = false;
  const double chi2 = detail::levenberg_fit<4>(eval, params, n, 200, &converged);
  if (!converged) throw FitError("lorentz_fit: no convergence after bounded iterations");

  LorentzFit fit;
  fit.center_nm = params[0];
  fit.fwhm_nm = std::abs(params[1]);  // Gamma enters squared; sign is a gauge
  fit.amplitude = params[2];
  fit.offset = params[3];
  fit.residual_rms = std::sqrt(chi2 / static_cast<double>(n));
  if (!(fit.fwhm_nm > 0.0)) throw FitError("lorentz_fit: degenerate width");
  return fit;
}

struct EnhancementStats {
  std::vector<double> pair_angles_deg;  // angle of each on-structure maximum
  std::vector<double> ratios;
  double mean = 0.0;
  double stddev = 0.0;  // unbiased
};

namespace detail {

struct CircularPeak {
  std::size_t index;
  double angle_deg;
  double height;
  double prominence;
};

inline std::vector<CircularPeak> circular_peaks(const std::vector<double>& angles,
                                                const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<CircularPeak> peaks;
  const double global_min = *std::min_element(v.begin(), v.end());
  for (std::size_t i = 0; i < n; ++i) {
    const double prev = v[(i + n - 1) % n];
    const double next = v[(i + 1) % n];
    if (!(v[i] > prev && v[i] > next)) continue;
    // circular prominence: min barrier toward the nearest higher sample per side
    double left_min = v[i], right_min = v[i];
    bool left_higher = false, right_higher = false;
    for (std::size_t step = 1; step < n; ++step) {
      const double x = v[(i + n - step) % n];
      if (x > v[i]) {
        left_higher = true;
        break;
      }
      left_min = std::min(left_min, x);
    }
    for (std::size_t step = 1; step < n; ++step) {
      const double x = v[(i + step) % n];
      if (x > v[i]) {
        right_higher = true;
        break;
      }
      right_min = std::min(right_min, x);
    }
    double prom;
    if (!left_higher && !right_higher)
      prom = v[i] - global_min;  // global maximum
    else
      prom = v[i] - std::max(left_min, right_min);
    peaks.push_back({i, angles[i], v[i], prom});
  }
  return peaks;
}

inline double circular_angle_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

}  // namespace detail

inline constexpr double kMaximaPairingToleranceDeg = 15.0;

/// Ratio of the six dominant polar maxima of the on-structure pattern to the
/// matching maxima (nearest angle) of the off-structure pattern.
inline EnhancementStats six_maxima_stats(const PolarPattern& on, const PolarPattern& off) {
  if (on.angles_deg != off.angles_deg)
    throw ValidationError("six_maxima_stats: datasets must share the angle grid");
  if (on.angles_deg.size() < 12)
    throw ValidationError("six_maxima_stats: angle grid too coarse");

  auto top6 = [](const PolarPattern& p) {
    auto peaks = detail::circular_peaks(p.angles_deg, p.intensity);
    if (peaks.size() < 6)
      throw ValidationError("six_maxima_stats: fewer than 6 maxima");
    std::sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) {
      if (a.prominence != b.prominence) return a.prominence > b.prominence;
      return a.angle_deg < b.angle_deg;
    });
    peaks.resize(6);
    std::sort(peaks.begin(), peaks.end(),
              [](const auto& a, const auto& b) { return a.angle_deg < b.angle_deg; });
    return peaks;
  };
  const auto on_peaks = top6(on);
  const auto off_peaks = top6(off);

  EnhancementStats stats;
  for (const auto& peak : on_peaks) {
    const detail::CircularPeak* best = nullptr;
    double best_d = 1e300;
    for (const auto& cand : off_peaks) {
      const double d = detail::circular_angle_distance(peak.angle_deg, cand.angle_deg);
      if (d < best_d) {
        best_d = d;
        best = &cand;
      }
    }
    if (!best || best_d > kMaximaPairingToleranceDeg)
      throw ValidationError("six_maxima_stats: unpaired maximum at " +
                            std::to_string(peak.angle_deg) + " deg");
    if (!(best->height > 0.0))
      throw ValidationError("six_maxima_stats: off-structure maximum is zero");
    stats.pair_angles_deg.push_back(peak.angle_deg);
    stats.ratios.push_back(peak.height / best->height);
  }
  double sum = 0.0;
  for (double r : stats.ratios) sum += r;
  stats.mean = sum / static_cast<double>(stats.ratios.size());
  double ss = 0.0;
  for (double r : stats.ratios) ss += (r - stats.mean) * (r - stats.mean);
  stats.stddev = std::sqrt(ss / static_cast<double>(stats.ratios.size() - 1));
  return stats;
}

enum class PolarFitModel { d3h, strained_d3h, c2 };

inline const char* to_string(PolarFitModel m) {
  switch (m) {
    case PolarFitModel::d3h: return "d3h";
    case PolarFitModel::strained_d3h: return "strained_d3h";
    default: return "c2";
  }
}

struct PolarFitResult {
  PolarFitModel model = PolarFitModel::d3h;
  double chi0 = 0.0;
  double theta0_deg = 0.0;
  double strain_magnitude = 0.0;   // strained_d3h only
  double strain_angle_deg = 0.0;   // strained_d3h only
  double d22 = 0.0;                // c2 only
  double d23_over_d22 = 0.0;       // c2 only
  double residual_rms = 0.0;
  bool period_mismatch = false;
};

namespace detail {

/// Fraction of the data's AC power sitting in angular harmonics that are not
/// multiples of six (60-degree-periodic data has essentially none).
inline double non_sixfold_power_fraction(const std::vector<double>& angles_deg,
                                         const std::vector<double>& v) {
  const std::size_t n = v.size();
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  auto harmonic_power = [&](int k) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ang = k * angles_deg[i] * std::numbers::pi / 180.0;
      re += (v[i] - mean) * std::cos(ang);
      im += (v[i] - mean) * std::sin(ang);
    }
    return (re * re + im * im) / static_cast<double>(n);
  };
  const double p2 = harmonic_power(2), p4 = harmonic_power(4), p6 = harmonic_power(6);
  const double total = p2 + p4 + p6;
  return total > 0.0 ? (p2 + p4) / total : 0.0;
}

}  // namespace detail

/// Least-squares fit of a co-polarized polar pattern model. Fitting a model
/// whose angular period disagrees with the data's sets `period_mismatch`.
inline PolarFitResult polar_fit(const PolarPattern& data, PolarFitModel model) {
  const std::size_t n = data.angles_deg.size();
  if (n < 12) throw ValidationError("polar_fit: need at least 12 angular samples");
  const auto [amin, amax] =
      std::minmax_element(data.angles_deg.begin(), data.angles_deg.end());
  if (*amax - *amin < 180.0)
    throw ValidationError("polar_fit: samples must span at least 180 degrees");

  const double deg = std::numbers::pi / 180.0;
  const std::size_t imax = static_cast<std::size_t>(
      std::max_element(data.intensity.begin(), data.intensity.end()) -
      data.intensity.begin());
  const double peak = data.intensity[imax];
  const double theta_peak = data.angles_deg[imax];
  const double amp0 = std::sqrt(std::max(peak, 1e-300));

  PolarFitResult result;
  result.model = model;
  const double nonsix = detail::non_sixfold_power_fraction(data.angles_deg, data.intensity);
  if (model == PolarFitModel::c2 && nonsix < 0.01) result.period_mismatch = true;
  if (model == PolarFitModel::d3h && nonsix > 0.5) result.period_mismatch = true;

  bool converged = false;
  double chi2 = 0.0;

  if (model == PolarFitModel::d3h) {
    std::array<double, 2> p{amp0, theta_peak};
    auto eval = [&](const std::array<double, 2>& q, std::vector<double>& r,
                    std::vector<std::array<double, 2>>& J) {
      for (std::size_t i = 0; i < n; ++i) {
        const double delta = (data.angles_deg[i] - q[1]) * deg;
        const double c = std::cos(3.0 * delta);
        r[i] = q[0] * q[0] * c * c - data.intensity[i];
        J[i][0] = 2.0 * q[0] * c * c;
        J[i][1] = q[0] * q[0] * 2.0 * c * std::sin(3.0 * delta) * 3.0 * deg;
      }
    };
    chi2 = detail::levenberg_fit<2>(eval, p, n, 200, &converged);
    result.chi0 = std::abs(p[0]);
    result.theta0_deg = p[1];
  } else if (model == PolarFitModel::strained_d3h) {
    // Start from the plain d3h solution so the generalized model can only
    // improve on it; a few strain starts catch the asymmetric cases.
    PolarFitResult base;
    try {
      base = polar_fit(data, PolarFitModel::d3h);
    } catch (const FitError&) {
      base.chi0 = amp0;
      base.theta0_deg = theta_peak;
    }
    auto eval = [&](const std::array<double, 4>& q, std::vector<double>& r,
                    std::vector<std::array<double, 4>>& J) {
      for (std::size_t i = 0; i < n; ++i) {
        const double th = data.angles_deg[i];
        const double delta = (th - q[1]) * deg;
        const double rel = (th - q[3]) * deg;
        const double c3 = std::cos(3.0 * delta);
        const double cs = std::cos(rel);
        const double amp = c3 + q[2] * cs * cs * cs;
        r[i] = q[0] * q[0] * amp * amp - data.intensity[i];
        J[i][0] = 2.0 * q[0] * amp * amp;
        const double damp_dtheta0 = 3.0 * std::sin(3.0 * delta) * deg;
        J[i][1] = q[0] * q[0] * 2.0 * amp * damp_dtheta0;
        J[i][2] = q[0] * q[0] * 2.0 * amp * cs * cs * cs;
        J[i][3] = q[0] * q[0] * 2.0 * amp * q[2] * 3.0 * cs * cs * std::sin(rel) * deg;
      }
    };
    double best_chi2 = 1e300;
    std::array<double, 4> best{base.chi0, base.theta0_deg, 0.0, 0.0};
    for (const double s0 : {0.0, 0.2}) {
      for (const double psi0 : {0.0, 40.0, 80.0, 120.0}) {
        std::array<double, 4> p{base.chi0, base.theta0_deg, s0, psi0};
        bool ok = false;
        const double c = detail::levenberg_fit<4>(eval, p, n, 300, &ok);
        if (c < best_chi2) {
          best_chi2 = c;
          best = p;
          converged = ok;
        }
        if (s0 == 0.0) break;  // psi is a gauge direction at zero strain
      }
    }
    chi2 = best_chi2;
    result.chi0 = std::abs(best[0]);
    result.theta0_deg = best[1];
    result.strain_magnitude = best[2];
    result.strain_angle_deg = best[3];
    if (result.strain_magnitude < 0.0) {
      // cos^3 flips sign under psi -> psi + 180, absorb the sign there
      result.strain_magnitude = -result.strain_magnitude;
      result.strain_angle_deg += 180.0;
    }
  } else {
    std::array<double, 3> p{amp0, theta_peak, 0.1};
    auto eval = [&](const std::array<double, 3>& q, std::vector<double>& r,
                    std::vector<std::array<double, 3>>& J) {
      for (std::size_t i = 0; i < n; ++i) {
        const double delta = (data.angles_deg[i] - q[1]) * deg;
        const double c = std::cos(delta), s = std::sin(delta);
        const double shape = (c * c + q[2] * s * s) * c;
        r[i] = q[0] * q[0] * shape * shape - data.intensity[i];
        J[i][0] = 2.0 * q[0] * shape * shape;
        const double dshape_ddelta =
            (-2.0 * c * s + q[2] * 2.0 * s * c) * c - (c * c + q[2] * s * s) * s;
        J[i][1] = q[0] * q[0] * 2.0 * shape * dshape_ddelta * (-deg);
        J[i][2] = q[0] * q[0] * 2.0 * shape * (s * s * c);
      }
    };
    chi2 = detail::levenberg_fit<3>(eval, p, n, 300, &converged);
    result.d22 = std::abs(p[0]);
    result.theta0_deg = p[1];
    result.d23_over_d22 = p[2];
  }

  if (!converged) throw FitError("polar_fit: no convergence after bounded iterations");
  result.residual_rms = std::sqrt(chi2 / static_cast<double>(n));
  return result;
}

}  // namespace nlstack
