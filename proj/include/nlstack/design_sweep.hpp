#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nlstack/errors.hpp"
#include "nlstack/nonlinear_tmm.hpp"
#include "nlstack/stack.hpp"
#include "nlstack/version.hpp"

namespace nlstack {

enum class SweepAxis { hbn_thickness, sio2_thickness, pump_wavelength };

inline const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::hbn_thickness: return "hbn_thickness_nm";
    case SweepAxis::sio2_thickness: return "sio2_thickness_nm";
    default: return "pump_wavelength_nm";
  }
}

enum class Parity { any, odd, even };

inline const char* to_string(Parity p) {
  switch (p) {
    case Parity::odd: return "odd";
    case Parity::even: return "even";
    default: return "any";
  }
}

/// Stack template evaluated across a sweep. The swept thickness axes address
/// the first nonlinear layer (hbn_thickness) and the first SiO2 layer
/// (sio2_thickness); `parity` constrains the re-derived monolayer count.
struct SweepTemplate {
  LayerStack stack;
  double pump_nm = 890.0;
  Parity parity = Parity::any;
};

struct AxisDef {
  std::string name;
  std::string unit = "nm";
  std::vector<double> values;
};

struct SweepResult {
  std::vector<AxisDef> axes;            // 1 or 2 axes
  std::vector<double> intensity;        // row-major over the axis grids
  std::vector<std::uint8_t> flags;      // nonzero marks invalid points (ratio maps)
  nlohmann::json metadata;

  std::size_t size() const { return intensity.size(); }
  std::size_t rows() const { return axes.front().values.size(); }
  std::size_t cols() const { return axes.size() == 2 ? axes[1].values.size() : 1; }
  double at(std::size_t i, std::size_t j = 0) const { return intensity[i * cols() + j]; }
};

/// Nearest monolayer count for a target thickness under a parity constraint.
inline int monolayer_count_for(double thickness_nm, double monolayer_nm, Parity parity) {
  const double x = thickness_nm / monolayer_nm;
  int n = static_cast<int>(std::lround(x));
  if (n < 1) n = 1;
  const bool want_odd = parity == Parity::odd;
  if (parity != Parity::any && (n % 2 != 0) != want_odd) {
    const int lo = n - 1, hi = n + 1;
    if (lo >= 1 && std::abs(lo - x) <= std::abs(hi - x))
      n = lo;
    else
      n = hi;
  }
  if (parity == Parity::odd && n < 1) n = 1;
  if (parity == Parity::even && n < 2) n = 2;
  return n;
}

namespace detail {

inline std::optional<std::size_t> first_nonlinear_layer(const LayerStack& stack) {
  for (std::size_t i = 0; i < stack.layers.size(); ++i)
    if (stack.layers[i].nonlinear) return i;
  return std::nullopt;
}

inline std::optional<std::size_t> first_layer_of(const LayerStack& stack,
                                                 const std::string& material) {
  for (std::size_t i = 0; i < stack.layers.size(); ++i)
    if (stack.layers[i].material == material) return i;
  return std::nullopt;
}

/// Stack and pump for one grid point.
inline std::pair<LayerStack, double> apply_axis(const SweepTemplate& tpl, SweepAxis axis,
                                                double value) {
  LayerStack stack = tpl.stack;
  double pump = tpl.pump_nm;
  switch (axis) {
    case SweepAxis::hbn_thickness: {
      auto li = first_nonlinear_layer(stack);
      if (!li) break;  // nothing to resize; evaluates to zero intensity
      Layer& layer = stack.layers[*li];
      NonlinearSpec& nl = *layer.nonlinear;
      nl.monolayer_count =
          monolayer_count_for(value, nl.monolayer_thickness_nm, tpl.parity);
      layer.thickness_nm = nl.monolayer_count * nl.monolayer_thickness_nm;
      break;
    }
    case SweepAxis::sio2_thickness: {
      auto li = first_layer_of(stack, "SiO2");
      if (!li)
        throw ValidationError("sweep template has no SiO2 layer to resize");
      if (value <= 0.0)
        stack.layers.erase(stack.layers.begin() + static_cast<std::ptrdiff_t>(*li));
      else
        stack.layers[*li].thickness_nm = value;
      break;
    }
    case SweepAxis::pump_wavelength:
      pump = value;
      break;
  }
  return {std::move(stack), pump};
}

inline void check_grid(const std::vector<double>& grid, const char* what) {
  if (grid.empty()) throw ValidationError(std::string(what) + ": empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw ValidationError(std::string(what) + ": grid values must be strictly increasing");
}

template <typename Fn>
inline void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  if (jobs <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const unsigned workers =
      std::min<unsigned>(static_cast<unsigned>(jobs), std::thread::hardware_concurrency()
                                                          ? std::thread::hardware_concurrency()
                                                          : 2u);
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

inline nlohmann::json sweep_metadata(const SweepTemplate& tpl) {
  return {{"tool", "nlstack"},
          {"version", kVersion},
          {"pump_nm", tpl.pump_nm},
          {"parity", to_string(tpl.parity)},
          {"stack", stack_to_json(tpl.stack)}};
}

}  // namespace detail

/// One-dimensional sweep of the total SH intensity. Templates without a
/// nonlinear layer evaluate to zero everywhere.
inline SweepResult sweep_1d(const SweepTemplate& tpl, const MaterialLibrary& lib,
                            SweepAxis axis, std::vector<double> grid, int jobs = 1) {
  detail::check_grid(grid, "sweep_1d");
  SweepResult result;
  result.axes = {AxisDef{to_string(axis), "nm", grid}};
  result.intensity.assign(grid.size(), 0.0);
  detail::parallel_for(grid.size(), jobs, [&](std::size_t i) {
    auto [stack, pump] = detail::apply_axis(tpl, axis, grid[i]);
    if (!stack.has_nonlinear_layer()) {
      result.intensity[i] = 0.0;
      return;
    }
    result.intensity[i] = shg_intensity(stack, lib, pump).intensity_total;
  });
  result.metadata = detail::sweep_metadata(tpl);
  result.metadata["axis"] = to_string(axis);
  return result;
}

/// Cartesian two-axis sweep; rows follow axis_a, columns axis_b. Points are
/// independent and results do not depend on the parallel schedule.
inline SweepResult sweep_2d(const SweepTemplate& tpl, const MaterialLibrary& lib,
                            SweepAxis axis_a, std::vector<double> grid_a,
                            SweepAxis axis_b, std::vector<double> grid_b, int jobs = 1) {
  detail::check_grid(grid_a, "sweep_2d axis a");
  detail::check_grid(grid_b, "sweep_2d axis b");
  if (axis_a == axis_b) throw ValidationError("sweep_2d: axes must differ");
  SweepResult result;
  result.axes = {AxisDef{to_string(axis_a), "nm", grid_a},
                 AxisDef{to_string(axis_b), "nm", grid_b}};
  const std::size_t nb = grid_b.size();
  result.intensity.assign(grid_a.size() * nb, 0.0);
  detail::parallel_for(result.intensity.size(), jobs, [&](std::size_t idx) {
    const std::size_t ia = idx / nb, ib = idx % nb;
    auto [stack1, pump1] = detail::apply_axis(tpl, axis_a, grid_a[ia]);
    SweepTemplate point_tpl{std::move(stack1), pump1, tpl.parity};
    auto [stack, pump] = detail::apply_axis(point_tpl, axis_b, grid_b[ib]);
    if (!stack.has_nonlinear_layer()) {
      result.intensity[idx] = 0.0;
      return;
    }
    result.intensity[idx] = shg_intensity(stack, lib, pump).intensity_total;
  });
  result.metadata = detail::sweep_metadata(tpl);
  result.metadata["axis_a"] = to_string(axis_a);
  result.metadata["axis_b"] = to_string(axis_b);
  return result;
}

/// Pointwise ratio of two sweeps over identical grids. Points with a
/// non-positive denominator are flagged instead of propagating infinities.
inline SweepResult enhancement_map(const SweepResult& numerator,
                                   const SweepResult& denominator) {
  if (numerator.axes.size() != denominator.axes.size())
    throw ValidationError("enhancement_map: axis count mismatch");
  for (std::size_t a = 0; a < numerator.axes.size(); ++a) {
    if (numerator.axes[a].name != denominator.axes[a].name ||
        numerator.axes[a].values != denominator.axes[a].values)
      throw ValidationError("enhancement_map: grids differ");
  }
  SweepResult out;
  out.axes = numerator.axes;
  out.intensity.resize(numerator.intensity.size());
  out.flags.assign(numerator.intensity.size(), 0);
  for (std::size_t i = 0; i < out.intensity.size(); ++i) {
    if (denominator.intensity[i] > 0.0) {
      out.intensity[i] = numerator.intensity[i] / denominator.intensity[i];
    } else {
      out.intensity[i] = 0.0;
      out.flags[i] = 1;
    }
  }
  out.metadata = {{"tool", "nlstack"},
                  {"version", kVersion},
                  {"kind", "enhancement_map"},
                  {"numerator", numerator.metadata},
                  {"denominator", denominator.metadata}};
  return out;
}

/// A located sweep maximum; `refined_location` applies a per-axis parabolic
/// fit around the grid point (skipped on clamped boundary axes).
struct Optimum {
  std::vector<double> location;
  std::vector<double> refined_location;
  double value = 0.0;
  bool is_boundary = false;
};

namespace detail {

inline double parabolic_vertex(double xm, double x0, double xp, double vm, double v0,
                               double vp) {
  const double denom = vm - 2.0 * v0 + vp;
  if (denom >= 0.0) return x0;  // not a concave triple; keep the grid point
  // Lagrange fit on three points (uniform or not)
  const double a = ((vp - v0) / (xp - x0) - (v0 - vm) / (x0 - xm)) / (xp - xm);
  const double b = (vp - v0) / (xp - x0) - a * (xp + x0);
  if (a >= 0.0) return x0;
  double vx = -b / (2.0 * a);
  return std::clamp(vx, xm, xp);
}

/// 1D prominence: height minus the higher of the two minima between the peak
/// and the nearest higher samples (or the grid ends). A side with no samples
/// at all (peak on the boundary) does not contribute a base.
inline double prominence_1d(const std::vector<double>& v, std::size_t i) {
  const double h = v[i];
  double base = -std::numeric_limits<double>::infinity();
  if (i > 0) {
    double min_seen = h;
    for (std::size_t j = i; j-- > 0;) {
      min_seen = std::min(min_seen, v[j]);
      if (v[j] > h) break;
    }
    base = std::max(base, min_seen);
  }
  if (i + 1 < v.size()) {
    double min_seen = h;
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      min_seen = std::min(min_seen, v[j]);
      if (v[j] > h) break;
    }
    base = std::max(base, min_seen);
  }
  if (!std::isfinite(base)) return 0.0;  // single-point grid
  return h - base;
}

/// Widest-path saddle between a 2D grid peak and any strictly higher cell
/// (8-connected); prominence = height - saddle, or height - global minimum
/// for the global maximum.
inline double prominence_2d(const SweepResult& s, std::size_t ia, std::size_t ib) {
  const std::size_t rows = s.rows(), cols = s.cols();
  const double h = s.at(ia, ib);
  std::priority_queue<std::pair<double, std::size_t>> frontier;  // (bottleneck, idx)
  std::vector<double> best(rows * cols, -1.0);
  const auto idx0 = ia * cols + ib;
  frontier.push({h, idx0});
  best[idx0] = h;
  double global_min = h;
  while (!frontier.empty()) {
    auto [bottleneck, idx] = frontier.top();
    frontier.pop();
    if (bottleneck < best[idx]) continue;
    const std::size_t r = idx / cols, c = idx % cols;
    if (s.intensity[idx] > h) return h - bottleneck;
    global_min = std::min(global_min, s.intensity[idx]);
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const long nr = static_cast<long>(r) + dr, nc = static_cast<long>(c) + dc;
        if (nr < 0 || nc < 0 || nr >= static_cast<long>(rows) ||
            nc >= static_cast<long>(cols))
          continue;
        const std::size_t nidx = static_cast<std::size_t>(nr) * cols +
                                 static_cast<std::size_t>(nc);
        const double nb = std::min(bottleneck, s.intensity[nidx]);
        if (nb > best[nidx]) {
          best[nidx] = nb;
          frontier.push({nb, nidx});
        }
      }
    }
  }
  // No higher cell anywhere: this is the global maximum.
  double mn = s.intensity[0];
  for (double x : s.intensity) mn = std::min(mn, x);
  return h - mn;
}

}  // namespace detail

/// Local maxima of a sweep above a prominence threshold given as a fraction of
/// the global maximum. Boundary maxima are returned flagged, not refined along
/// the clamped axis. Results are sorted by axis value (first axis, then second).
inline std::vector<Optimum> find_optima(const SweepResult& sweep,
                                        double min_prominence = 0.05) {
  if (sweep.intensity.empty()) throw ValidationError("find_optima: empty sweep");
  if (min_prominence < 0.0)
    throw ValidationError("find_optima: min_prominence must be >= 0");
  const double global_max = *std::max_element(sweep.intensity.begin(), sweep.intensity.end());
  const double threshold = min_prominence * global_max;
  std::vector<Optimum> out;

  if (sweep.axes.size() == 1) {
    const auto& x = sweep.axes[0].values;
    const auto& v = sweep.intensity;
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
      const bool at_left = (i == 0), at_right = (i + 1 == n);
      const bool higher_left = !at_left && v[i - 1] >= v[i];
      const bool higher_right = !at_right && v[i + 1] >= v[i];
      if (higher_left || higher_right) continue;
      if (at_left && at_right) continue;
      const double prom = detail::prominence_1d(v, i);
      if (prom <= 0.0 || prom < threshold) continue;
      Optimum opt;
      opt.location = {x[i]};
      opt.value = v[i];
      opt.is_boundary = at_left || at_right;
      opt.refined_location = opt.location;
      if (!opt.is_boundary)
        opt.refined_location = {detail::parabolic_vertex(x[i - 1], x[i], x[i + 1],
                                                         v[i - 1], v[i], v[i + 1])};
      out.push_back(std::move(opt));
    }
  } else {
    const auto& xa = sweep.axes[0].values;
    const auto& xb = sweep.axes[1].values;
    const std::size_t rows = sweep.rows(), cols = sweep.cols();
    for (std::size_t ia = 0; ia < rows; ++ia) {
      for (std::size_t ib = 0; ib < cols; ++ib) {
        const double h = sweep.at(ia, ib);
        bool is_max = true;
        bool on_edge = (ia == 0 || ib == 0 || ia + 1 == rows || ib + 1 == cols);
        for (int dr = -1; dr <= 1 && is_max; ++dr)
          for (int dc = -1; dc <= 1 && is_max; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const long nr = static_cast<long>(ia) + dr, nc = static_cast<long>(ib) + dc;
            if (nr < 0 || nc < 0 || nr >= static_cast<long>(rows) ||
                nc >= static_cast<long>(cols))
              continue;
            if (sweep.at(static_cast<std::size_t>(nr), static_cast<std::size_t>(nc)) >= h)
              is_max = false;
          }
        if (!is_max) continue;
        const double prom = detail::prominence_2d(sweep, ia, ib);
        if (prom <= 0.0 || prom < threshold) continue;
        Optimum opt;
        opt.location = {xa[ia], xb[ib]};
        opt.refined_location = opt.location;
        opt.value = h;
        opt.is_boundary = on_edge;
        if (ia > 0 && ia + 1 < rows)
          opt.refined_location[0] = detail::parabolic_vertex(
              xa[ia - 1], xa[ia], xa[ia + 1], sweep.at(ia - 1, ib), h, sweep.at(ia + 1, ib));
        if (ib > 0 && ib + 1 < cols)
          opt.refined_location[1] = detail::parabolic_vertex(
              xb[ib - 1], xb[ib], xb[ib + 1], sweep.at(ia, ib - 1), h, sweep.at(ia, ib + 1));
        out.push_back(std::move(opt));
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Optimum& a, const Optimum& b) {
    return a.location < b.location;
  });
  return out;
}

/// CSV export, one row per grid point (after '#' metadata comments). Ratio
/// maps with flags gain a trailing `flagged` column.
inline void write_sweep_csv(std::ostream& out, const SweepResult& s,
                            std::span<const std::string> meta = {}) {
  for (const auto& line : meta) out << "# " << line << "\n";
  const bool with_flags = !s.flags.empty();
  if (s.axes.size() == 1) {
    out << s.axes[0].name << ",intensity" << (with_flags ? ",flagged" : "") << "\n";
    char buf[128];
    for (std::size_t i = 0; i < s.intensity.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g", s.axes[0].values[i], s.intensity[i]);
      out << buf;
      if (with_flags) out << ',' << int(s.flags[i]);
      out << "\n";
    }
  } else {
    out << s.axes[0].name << ',' << s.axes[1].name << ",intensity"
        << (with_flags ? ",flagged" : "") << "\n";
    char buf[160];
    const std::size_t cols = s.cols();
    for (std::size_t i = 0; i < s.intensity.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g", s.axes[0].values[i / cols],
                    s.axes[1].values[i % cols], s.intensity[i]);
      out << buf;
      if (with_flags) out << ',' << int(s.flags[i]);
      out << "\n";
    }
  }
}

}  // namespace nlstack
