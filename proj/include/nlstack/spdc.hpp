#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlstack/errors.hpp"
#include "nlstack/nonlinear_tmm.hpp"

namespace nlstack {

// Photon-pair statistics: spectral pair rates through the SFG correspondence,
// a Monte-Carlo time-tagger emulation, and the estimators used on its output.
// All samplers are hand-rolled on top of mt19937_64 so a fixed seed gives
// bit-identical tag streams on any platform.

/// Relative pair-generation rate at one signal wavelength; the idler closes
/// energy conservation with the pump (1/l_p = 1/l_s + 1/l_i).
struct SpdcSpectralPoint {
  double signal_nm = 0.0;
  double idler_nm = 0.0;
  double rate = 0.0;  // arbitrary units
  bool valid = false; // false when the idler leaves the tabulated index data
};

inline std::vector<SpdcSpectralPoint> spdc_spectral_rate(
    const LayerStack& stack, const MaterialLibrary& lib, double pump_nm,
    std::span<const double> signal_grid_nm) {
  std::vector<SpdcSpectralPoint> out;
  out.reserve(signal_grid_nm.size());
  for (double ls : signal_grid_nm) {
    SpdcSpectralPoint p;
    p.signal_nm = ls;
    const double inv_idler = 1.0 / pump_nm - 1.0 / ls;
    if (inv_idler <= 0.0) {
      out.push_back(p);  // signal at or above the pump energy: no idler
      continue;
    }
    p.idler_nm = 1.0 / inv_idler;
    try {
      p.rate = sfg_intensity(stack, lib, ls, p.idler_nm).intensity;
      p.valid = true;
    } catch (const RangeError&) {
      p.valid = false;  // flagged, not dropped
    }
    out.push_back(p);
  }
  return out;
}

/// Trapezoidal integral of the valid points inside a detection band;
/// monotone non-decreasing as the band widens.
inline double band_rate(std::span<const SpdcSpectralPoint> points, double lo_nm,
                        double hi_nm) {
  double total = 0.0;
  const SpdcSpectralPoint* prev = nullptr;
  for (const auto& p : points) {
    if (!p.valid || p.signal_nm < lo_nm || p.signal_nm > hi_nm) {
      prev = nullptr;
      continue;
    }
    if (prev)
      total += 0.5 * (prev->rate + p.rate) * (p.signal_nm - prev->signal_nm);
    prev = &p;
  }
  return total;
}

/// Parameters of the emulated pair source and detection chain. Rates are
/// detected rates (arbitrary calibration); defaults give CAR of about 8 at
/// 0.25 mW with 5000 ps bins.
struct PairSourceModel {
  double pair_rate_per_mw = 90.0;               // correlated pairs, /s/mW
  std::array<double, 2> singles_background_per_mw = {1.0e5, 1.0e5};  // /s/mW
  std::array<double, 2> dark_rate = {50.0, 50.0};                    // /s
  double jitter_sigma_ps = 350.0;
  double pump_power_mw = 0.25;
  double duration_s = 100.0;
  std::uint64_t seed = 12345;
};

struct TagStream {
  int channel = 1;
  std::vector<std::int64_t> timestamps_ps;
};

namespace detail {

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double exponential(std::mt19937_64& rng, double rate) {
  return -std::log(1.0 - uniform01(rng)) / rate;
}

inline double normal(std::mt19937_64& rng, double sigma) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return sigma * std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

/// Homogeneous Poisson arrival times on [0, duration) in seconds.
inline std::vector<double> poisson_times(std::mt19937_64& rng, double rate,
                                         double duration) {
  std::vector<double> times;
  if (rate <= 0.0) return times;
  double t = exponential(rng, rate);
  while (t < duration) {
    times.push_back(t);
    t += exponential(rng, rate);
  }
  return times;
}

inline void finalize_stream(std::vector<std::int64_t>& ts) {
  std::sort(ts.begin(), ts.end());
  // Enforce strictly increasing stamps; 1 ps nudges are far below bin widths.
  for (std::size_t i = 1; i < ts.size(); ++i)
    if (ts[i] <= ts[i - 1]) ts[i] = ts[i - 1] + 1;
}

}  // namespace detail

/// Draw one realization of the pair source: correlated pairs as a Poisson
/// process (one jittered tag per channel each) plus independent uncorrelated
/// background and dark counts. Bit-reproducible for a fixed seed.
inline std::pair<TagStream, TagStream> simulate_tags(const PairSourceModel& model) {
  if (!(model.duration_s > 0.0)) throw ValidationError("duration must be > 0");
  if (model.pair_rate_per_mw < 0.0 || model.pump_power_mw < 0.0 ||
      model.jitter_sigma_ps < 0.0)
    throw ValidationError("rates, power and jitter must be >= 0");
  for (int c = 0; c < 2; ++c)
    if (model.singles_background_per_mw[c] < 0.0 || model.dark_rate[c] < 0.0)
      throw ValidationError("background and dark rates must be >= 0");

  std::mt19937_64 rng(model.seed);
  constexpr double ps_per_s = 1e12;

  TagStream ch1{1, {}}, ch2{2, {}};
  const double pair_rate = model.pair_rate_per_mw * model.pump_power_mw;
  for (double t : detail::poisson_times(rng, pair_rate, model.duration_s)) {
    const double j1 = detail::normal(rng, model.jitter_sigma_ps);
    const double j2 = detail::normal(rng, model.jitter_sigma_ps);
    ch1.timestamps_ps.push_back(static_cast<std::int64_t>(std::llround(t * ps_per_s + j1)));
    ch2.timestamps_ps.push_back(static_cast<std::int64_t>(std::llround(t * ps_per_s + j2)));
  }
  for (int c = 0; c < 2; ++c) {
    const double rate = model.singles_background_per_mw[c] * model.pump_power_mw +
                        model.dark_rate[c];
    auto& ts = (c == 0 ? ch1 : ch2).timestamps_ps;
    for (double t : detail::poisson_times(rng, rate, model.duration_s))
      ts.push_back(static_cast<std::int64_t>(std::llround(t * ps_per_s)));
  }
  detail::finalize_stream(ch1.timestamps_ps);
  detail::finalize_stream(ch2.timestamps_ps);
  return {std::move(ch1), std::move(ch2)};
}

/// Binned delay histogram of tag pairs (t2 - t1), zero-delay bin centered.
struct CoincidenceHistogram {
  std::int64_t bin_width_ps = 5000;
  int half_window_bins = 50;             // bins run -half..+half inclusive
  std::vector<std::int64_t> counts;      // size 2*half_window_bins + 1
  double total_time_s = 0.0;

  int bin_count() const { return 2 * half_window_bins + 1; }
  std::int64_t delay_of_bin(int index) const {
    return (static_cast<std::int64_t>(index) - half_window_bins) * bin_width_ps;
  }
  std::int64_t peak_counts() const { return counts[static_cast<std::size_t>(half_window_bins)]; }
};

namespace detail {

inline void check_sorted(const TagStream& s) {
  for (std::size_t i = 1; i < s.timestamps_ps.size(); ++i)
    if (s.timestamps_ps[i] <= s.timestamps_ps[i - 1])
      throw ValidationError("tag stream not strictly increasing");
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if (a % b != 0 && (a < 0) != (b < 0)) --q;
  return q;
}

}  // namespace detail

/// Sweep-window pair counting, equal by construction to the all-pairs count
/// restricted to the delay window.
inline CoincidenceHistogram coincidence_histogram(const TagStream& tags1,
                                                  const TagStream& tags2,
                                                  std::int64_t bin_width_ps = 5000,
                                                  int half_window_bins = 50,
                                                  double total_time_s = 0.0) {
  if (bin_width_ps <= 0) throw ValidationError("bin width must be > 0");
  if (half_window_bins < 1) throw ValidationError("need at least 3 bins");
  detail::check_sorted(tags1);
  detail::check_sorted(tags2);

  CoincidenceHistogram hist;
  hist.bin_width_ps = bin_width_ps;
  hist.half_window_bins = half_window_bins;
  hist.counts.assign(static_cast<std::size_t>(hist.bin_count()), 0);

  const std::int64_t half_span = half_window_bins * bin_width_ps + bin_width_ps / 2;
  const auto& t1 = tags1.timestamps_ps;
  const auto& t2 = tags2.timestamps_ps;
  std::size_t lo = 0;
  for (const std::int64_t a : t1) {
    while (lo < t2.size() && t2[lo] < a - half_span) ++lo;
    for (std::size_t j = lo; j < t2.size() && t2[j] < a + half_span; ++j) {
      const std::int64_t delay = t2[j] - a;
      const std::int64_t bin =
          detail::floor_div(delay + bin_width_ps / 2, bin_width_ps);
      if (bin >= -half_window_bins && bin <= half_window_bins)
        ++hist.counts[static_cast<std::size_t>(bin + half_window_bins)];
    }
  }

  if (total_time_s > 0.0) {
    hist.total_time_s = total_time_s;
  } else if (!t1.empty() && !t2.empty()) {
    const double lo_ts = static_cast<double>(std::min(t1.front(), t2.front()));
    const double hi_ts = static_cast<double>(std::max(t1.back(), t2.back()));
    hist.total_time_s = (hi_ts - lo_ts) / 1e12;
  }
  return hist;
}

struct CarEstimate {
  std::int64_t peak_counts = 0;
  double accidental_mean = 0.0;
  double accidental_std = 0.0;  // unbiased
  double car = 0.0;
  double car_uncertainty = 0.0;  // Poisson propagation
};

/// Coincidence-to-accidental ratio: central bin over the mean of the off-peak
/// bins, excluding `exclude_bins_around_peak` bins on each side of the peak.
inline CarEstimate car(const CoincidenceHistogram& hist, int exclude_bins_around_peak = 1) {
  if (exclude_bins_around_peak < 0)
    throw ValidationError("exclude_bins_around_peak must be >= 0");
  std::vector<double> accidentals;
  for (int b = -hist.half_window_bins; b <= hist.half_window_bins; ++b) {
    if (std::abs(b) <= exclude_bins_around_peak) continue;
    accidentals.push_back(
        static_cast<double>(hist.counts[static_cast<std::size_t>(b + hist.half_window_bins)]));
  }
  if (accidentals.size() < 10)
    throw ValidationError("need at least 10 accidental bins after exclusion");

  CarEstimate est;
  est.peak_counts = hist.peak_counts();
  double sum = 0.0;
  for (double a : accidentals) sum += a;
  est.accidental_mean = sum / static_cast<double>(accidentals.size());
  double ss = 0.0;
  for (double a : accidentals) ss += (a - est.accidental_mean) * (a - est.accidental_mean);
  est.accidental_std = std::sqrt(ss / static_cast<double>(accidentals.size() - 1));
  if (est.accidental_mean <= 0.0)
    throw UndefinedStatError("CAR undefined: accidental mean is zero");
  est.car = static_cast<double>(est.peak_counts) / est.accidental_mean;
  const double n = static_cast<double>(accidentals.size());
  est.car_uncertainty =
      std::sqrt(static_cast<double>(est.peak_counts) / (est.accidental_mean * est.accidental_mean) +
                static_cast<double>(est.peak_counts) * static_cast<double>(est.peak_counts) /
                    (n * est.accidental_mean * est.accidental_mean * est.accidental_mean));
  return est;
}

struct PowerScanPoint {
  double power_mw = 0.0;
  double coincidence_rate_hz = 0.0;  // zero-delay bin counts per second
  CarEstimate car_estimate;
};

struct PowerScanResult {
  std::vector<PowerScanPoint> points;
  double rate_slope_hz_per_mw = 0.0;
  double rate_intercept_hz = 0.0;
  double rate_r2 = 0.0;
  double car_inverse_constant = 0.0;  // c in CAR ~ c / P
};

/// Simulate -> histogram -> CAR at each pump power; fits the linear rate law
/// and the inverse CAR law. Each power uses a seed offset for independence.
inline PowerScanResult power_scan(const PairSourceModel& model_template,
                                  std::span<const double> powers_mw,
                                  std::int64_t bin_width_ps = 5000,
                                  int half_window_bins = 50,
                                  int exclude_bins_around_peak = 1) {
  if (powers_mw.empty()) throw ValidationError("power_scan: no powers given");
  PowerScanResult result;
  for (std::size_t i = 0; i < powers_mw.size(); ++i) {
    if (!(powers_mw[i] > 0.0)) throw ValidationError("powers must be > 0");
    PairSourceModel m = model_template;
    m.pump_power_mw = powers_mw[i];
    m.seed = model_template.seed + i;
    auto [t1, t2] = simulate_tags(m);
    const CoincidenceHistogram hist =
        coincidence_histogram(t1, t2, bin_width_ps, half_window_bins, m.duration_s);
    PowerScanPoint p;
    p.power_mw = m.pump_power_mw;
    p.coincidence_rate_hz = static_cast<double>(hist.peak_counts()) / m.duration_s;
    p.car_estimate = car(hist, exclude_bins_around_peak);
    result.points.push_back(p);
  }

  // Least-squares rate = a + b * power.
  const double n = static_cast<double>(result.points.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& p : result.points) {
    sx += p.power_mw;
    sy += p.coincidence_rate_hz;
    sxx += p.power_mw * p.power_mw;
    sxy += p.power_mw * p.coincidence_rate_hz;
    syy += p.coincidence_rate_hz * p.coincidence_rate_hz;
  }
  const double denom = n * sxx - sx * sx;
  if (denom != 0.0) {
    result.rate_slope_hz_per_mw = (n * sxy - sx * sy) / denom;
    result.rate_intercept_hz = (sy - result.rate_slope_hz_per_mw * sx) / n;
    double ss_res = 0.0;
    for (const auto& p : result.points) {
      const double fit = result.rate_intercept_hz + result.rate_slope_hz_per_mw * p.power_mw;
      ss_res += (p.coincidence_rate_hz - fit) * (p.coincidence_rate_hz - fit);
    }
    const double ss_tot = syy - sy * sy / n;
    result.rate_r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  }

  // Least-squares CAR = c / power.
  double num = 0.0, den = 0.0;
  for (const auto& p : result.points) {
    num += p.car_estimate.car / p.power_mw;
    den += 1.0 / (p.power_mw * p.power_mw);
  }
  result.car_inverse_constant = den > 0.0 ? num / den : 0.0;
  return result;
}

/// Signal-to-noise lower bounds on the enhancement factor:
/// (C_on - mean(A_on)) / std(A_on) and (C_on - mean(A_on)) / std(A_off),
/// with unbiased sample standard deviations.
inline std::pair<double, double> enhancement_lower_bound(double c_on,
                                                         std::span<const double> acc_on,
                                                         std::span<const double> acc_off) {
  auto mean_std = [](std::span<const double> xs, const char* which) {
    if (xs.size() < 2)
      throw ValidationError(std::string("enhancement_lower_bound: need >= 2 '") + which +
                            "' samples");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    if (sd == 0.0)
      throw UndefinedStatError(std::string("enhancement_lower_bound: zero spread in '") +
                               which + "' samples");
    return std::pair<double, double>{mean, sd};
  };
  const auto [mean_on, std_on] = mean_std(acc_on, "on");
  const auto [mean_off, std_off] = mean_std(acc_off, "off");
  (void)mean_off;
  const double excess = c_on - mean_on;
  return {excess / std_on, excess / std_off};
}

// ---- simple text/CSV IO ----------------------------------------------------

/// One integer picosecond timestamp per line; '#' comment lines allowed.
inline void write_tag_stream(std::ostream& out, const TagStream& s,
                             std::span<const std::string> meta = {}) {
  for (const auto& line : meta) out << "# " << line << "\n";
  for (const std::int64_t t : s.timestamps_ps) out << t << "\n";
}

inline TagStream read_tag_stream(std::istream& in, int channel = 1) {
  TagStream s;
  s.channel = channel;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(line, &pos);
      if (pos != line.size()) throw std::invalid_argument("trailing");
      s.timestamps_ps.push_back(v);
    } catch (const std::exception&) {
      throw ParseError("tag stream line " + std::to_string(line_no) + ": bad timestamp '" +
                       line + "'");
    }
  }
  detail::check_sorted(s);
  return s;
}

/// CSV export: delay_ps,counts (after '#' metadata comments).
inline void write_histogram_csv(std::ostream& out, const CoincidenceHistogram& hist,
                                std::span<const std::string> meta = {}) {
  for (const auto& line : meta) out << "# " << line << "\n";
  out << "delay_ps,counts\n";
  for (int b = 0; b < hist.bin_count(); ++b)
    out << hist.delay_of_bin(b) << ',' << hist.counts[static_cast<std::size_t>(b)] << "\n";
}

}  // namespace nlstack
