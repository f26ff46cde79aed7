#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlstack/analysis.hpp"
#include "nlstack/csv.hpp"
#include "nlstack/design_sweep.hpp"
#include "nlstack/errors.hpp"
#include "nlstack/linear_tmm.hpp"
#include "nlstack/materials.hpp"
#include "nlstack/nonlinear_tmm.hpp"
#include "nlstack/polarization.hpp"
#include "nlstack/spdc.hpp"
#include "nlstack/stack.hpp"
#include "nlstack/version.hpp"

namespace nlstack {

/// Parsed command line of the `nlstack` tool. The fields used depend on the
/// command; `run` validates what it needs. Keeping this a plain struct lets
/// tests drive every command without spawning a process.
struct RunConfig {
  std::string command;     // simulate | sweep | polar | spdc | fit | materials
  std::string subcommand;  // spdc: tags|histogram|car|power-scan|spectral-rate
                           // materials: list|show|export

  std::string stack_path;
  std::string input_path;    // fit --in, spdc --ch1
  std::string input_path2;   // spdc --ch2
  std::string output_path;   // --out ("" = stdout for JSON outputs)
  std::string output_path2;  // spdc tags --out-ch2

  double pump_nm = 890.0;
  double sfg_nm_1 = 0.0, sfg_nm_2 = 0.0;  // both set: simulate reports SFG

  bool field_profile = false;
  double z_start_nm = 0.0, z_stop_nm = 0.0, z_step_nm = 1.0;
  bool want_reflectance = false;

  std::string axis_spec;   // name:start:stop:step, name in hbn|sio2|pump
  std::string axis2_spec;  // optional second axis
  std::string parity = "any";
  int jobs = 1;
  bool locate_optima = false;
  double min_prominence = 0.05;
  std::string enhance_against;  // second stack template: emit the ratio map

  std::string symmetry = "d3h";
  double chi0 = 1.0;
  double d22 = 1.0;
  std::optional<double> d23;
  double theta0_deg = 0.0;
  std::string analyzer = "co";
  double strain = 0.0;
  double strain_angle_deg = 0.0;
  double angle_step_deg = 1.0;

  PairSourceModel model;
  std::string powers_csv = "0.15,0.2,0.25,0.3,0.35";
  std::int64_t bin_width_ps = 5000;
  int half_window_bins = 50;
  int exclude_bins = 1;
  std::string signal_spec;  // start:stop:step for spectral-rate

  std::string fit_model = "lorentz";

  std::string material_name;
  double at_nm = 0.0;
  std::string export_dir;
};

namespace cli_detail {

inline std::string config_echo(const RunConfig& c) {
  std::ostringstream os;
  os << c.command;
  if (!c.subcommand.empty()) os << ' ' << c.subcommand;
  if (!c.stack_path.empty()) os << " --stack " << c.stack_path;
  if (c.command == "simulate" || c.command == "sweep" ||
      (c.command == "spdc" && c.subcommand == "spectral-rate"))
    os << " --pump-nm " << c.pump_nm;
  if (!c.axis_spec.empty()) os << " --axis " << c.axis_spec;
  if (!c.axis2_spec.empty()) os << " --axis2 " << c.axis2_spec;
  if (c.command == "sweep") os << " --parity " << c.parity;
  if (c.command == "spdc" && c.subcommand != "spectral-rate")
    os << " --seed " << c.model.seed;
  return os.str();
}

inline std::vector<std::string> meta_lines(const RunConfig& c) {
  return {std::string("nlstack ") + kVersion, "command: " + config_echo(c)};
}

inline nlohmann::json meta_json(const RunConfig& c) {
  return {{"tool", "nlstack"}, {"version", kVersion}, {"command", config_echo(c)}};
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  return out;
}

/// "start:stop:step" -> inclusive grid.
inline std::vector<double> parse_grid(const std::string& spec) {
  double start = 0, stop = 0, step = 0;
  char c1 = 0, c2 = 0;
  std::istringstream ss(spec);
  if (!(ss >> start >> c1 >> stop >> c2 >> step) || c1 != ':' || c2 != ':' ||
      !(step > 0.0) || stop < start)
    throw ValidationError("bad grid spec '" + spec + "' (want start:stop:step)");
  std::vector<double> grid;
  for (double v = start; v <= stop + 1e-9 * step; v += step) grid.push_back(v);
  return grid;
}

struct AxisSpec {
  SweepAxis axis;
  std::vector<double> grid;
};

inline AxisSpec parse_axis(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw ValidationError("bad axis spec '" + spec + "' (want name:start:stop:step)");
  const std::string name = spec.substr(0, colon);
  AxisSpec out;
  if (name == "hbn" || name == "hbn_thickness")
    out.axis = SweepAxis::hbn_thickness;
  else if (name == "sio2" || name == "sio2_thickness")
    out.axis = SweepAxis::sio2_thickness;
  else if (name == "pump" || name == "pump_wavelength")
    out.axis = SweepAxis::pump_wavelength;
  else
    throw ValidationError("unknown sweep axis '" + name + "'");
  out.grid = parse_grid(spec.substr(colon + 1));
  return out;
}

inline Parity parse_parity(const std::string& s) {
  if (s == "any") return Parity::any;
  if (s == "odd") return Parity::odd;
  if (s == "even") return Parity::even;
  throw ValidationError("parity must be odd, even or any");
}

inline std::vector<double> parse_csv_numbers(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (field.empty()) continue;
    out.push_back(std::stod(field));
  }
  if (out.empty()) throw ValidationError("no numbers in '" + s + "'");
  return out;
}

inline void emit_json(const RunConfig& cfg, const nlohmann::json& body, std::ostream& out) {
  nlohmann::json doc = body;
  doc["meta"] = meta_json(cfg);
  if (cfg.output_path.empty()) {
    out << doc.dump(2) << "\n";
  } else {
    auto f = open_output(cfg.output_path);
    f << doc.dump(2) << "\n";
  }
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  if (cfg.stack_path.empty()) throw ValidationError("simulate: --stack required");
  const MaterialLibrary lib = MaterialLibrary::load_default();
  const LayerStack stack = parse_stack_text(read_file(cfg.stack_path), lib);

  if (cfg.field_profile) {
    if (!(cfg.z_step_nm > 0.0) || cfg.z_stop_nm < cfg.z_start_nm)
      throw ValidationError("simulate: bad field profile z range");
    if (!(cfg.pump_nm > 0.0)) throw ValidationError("pump wavelength must be > 0");
    const LayerCoefficients coeffs = solve_linear(stack, lib, cfg.pump_nm);
    std::vector<double> grid;
    for (double z = cfg.z_start_nm; z <= cfg.z_stop_nm + 1e-9; z += cfg.z_step_nm)
      grid.push_back(z);
    const FieldProfile profile = field_profile(coeffs, grid);
    auto meta = meta_lines(cfg);
    if (cfg.output_path.empty()) {
      write_profile_csv(out, profile, meta);
    } else {
      auto f = open_output(cfg.output_path);
      write_profile_csv(f, profile, meta);
    }
    return 0;
  }

  nlohmann::json body;
  if (cfg.sfg_nm_1 > 0.0 && cfg.sfg_nm_2 > 0.0) {
    body = to_json(sfg_intensity(stack, lib, cfg.sfg_nm_1, cfg.sfg_nm_2));
  } else {
    if (!(cfg.pump_nm > 0.0)) throw ValidationError("pump wavelength must be > 0");
    body = to_json(shg_intensity(stack, lib, cfg.pump_nm));
  }
  if (cfg.want_reflectance) {
    const StackResponse resp = reflectance(stack, lib, cfg.pump_nm);
    body["reflectance"] = {{"R", resp.R}, {"T", resp.T}, {"A", resp.A}};
  }
  emit_json(cfg, body, out);
  return 0;
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  if (cfg.stack_path.empty()) throw ValidationError("sweep: --stack required");
  if (cfg.axis_spec.empty()) throw ValidationError("sweep: --axis required");
  if (cfg.output_path.empty()) throw ValidationError("sweep: --out required");
  if (!(cfg.pump_nm > 0.0)) throw ValidationError("pump wavelength must be > 0");
  const MaterialLibrary lib = MaterialLibrary::load_default();
  SweepTemplate tpl;
  tpl.stack = parse_stack_text(read_file(cfg.stack_path), lib);
  tpl.pump_nm = cfg.pump_nm;
  tpl.parity = parse_parity(cfg.parity);

  const AxisSpec a = parse_axis(cfg.axis_spec);
  auto run_sweep = [&](const SweepTemplate& t) {
    if (cfg.axis2_spec.empty()) return sweep_1d(t, lib, a.axis, a.grid, cfg.jobs);
    const AxisSpec b = parse_axis(cfg.axis2_spec);
    return sweep_2d(t, lib, a.axis, a.grid, b.axis, b.grid, cfg.jobs);
  };
  SweepResult result = run_sweep(tpl);
  if (!cfg.enhance_against.empty()) {
    SweepTemplate reference = tpl;
    reference.stack = parse_stack_text(read_file(cfg.enhance_against), lib);
    result = enhancement_map(result, run_sweep(reference));
  }

  {
    auto f = open_output(cfg.output_path);
    write_sweep_csv(f, result, meta_lines(cfg));
  }
  {
    nlohmann::json side = result.metadata;
    side["meta"] = meta_json(cfg);
    auto f = open_output(cfg.output_path + ".meta.json");
    f << side.dump(2) << "\n";
  }
  if (cfg.locate_optima) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Optimum& o : find_optima(result, cfg.min_prominence)) {
      arr.push_back({{"location", o.location},
                     {"refined_location", o.refined_location},
                     {"value", o.value},
                     {"is_boundary", o.is_boundary}});
    }
    nlohmann::json doc{{"optima", arr}, {"meta", meta_json(cfg)}};
    out << doc.dump(2) << "\n";
  }
  return 0;
}

inline int cmd_polar(const RunConfig& cfg, std::ostream& out) {
  if (cfg.output_path.empty()) throw ValidationError("polar: --out required");
  Analyzer analyzer;
  if (cfg.analyzer == "co")
    analyzer = Analyzer::co_polarized;
  else if (cfg.analyzer == "cross")
    analyzer = Analyzer::cross_polarized;
  else if (cfg.analyzer == "none")
    analyzer = Analyzer::unanalyzed;
  else
    throw ValidationError("analyzer must be co, cross or none");
  const std::vector<double> grid = angle_grid(cfg.angle_step_deg);

  PolarPattern pattern;
  if (cfg.symmetry == "d3h") {
    if (cfg.strain > 0.0) {
      pattern = strained_d3h_pattern(cfg.chi0, cfg.theta0_deg, cfg.strain,
                                     cfg.strain_angle_deg, grid, analyzer);
    } else {
      const Chi2Tensor t =
          make_tensor(PointGroup::D3h, {{"chi0", cfg.chi0}}, cfg.theta0_deg);
      pattern = polar_pattern(t, analyzer, grid);
    }
  } else if (cfg.symmetry == "c2") {
    const double d23 = cfg.d23.value_or(0.1 * cfg.d22);
    const Chi2Tensor t =
        make_tensor(PointGroup::C2, {{"d22", cfg.d22}, {"d23", d23}}, cfg.theta0_deg);
    pattern = polar_pattern(t, analyzer, grid);
  } else {
    throw ValidationError("symmetry must be d3h or c2");
  }
  auto f = open_output(cfg.output_path);
  write_pattern_csv(f, pattern, meta_lines(cfg));
  (void)out;
  return 0;
}

inline int cmd_spdc(const RunConfig& cfg, std::ostream& out) {
  if (cfg.subcommand == "tags") {
    if (cfg.output_path.empty() || cfg.output_path2.empty())
      throw ValidationError("spdc tags: --out-ch1 and --out-ch2 required");
    auto [t1, t2] = simulate_tags(cfg.model);
    auto meta = meta_lines(cfg);
    auto f1 = open_output(cfg.output_path);
    write_tag_stream(f1, t1, meta);
    auto f2 = open_output(cfg.output_path2);
    write_tag_stream(f2, t2, meta);
    return 0;
  }
  if (cfg.subcommand == "histogram" || cfg.subcommand == "car") {
    if (cfg.input_path.empty() || cfg.input_path2.empty())
      throw ValidationError("spdc " + cfg.subcommand + ": --ch1 and --ch2 required");
    std::ifstream in1(cfg.input_path), in2(cfg.input_path2);
    if (!in1) throw ValidationError("cannot open '" + cfg.input_path + "'");
    if (!in2) throw ValidationError("cannot open '" + cfg.input_path2 + "'");
    const TagStream t1 = read_tag_stream(in1, 1);
    const TagStream t2 = read_tag_stream(in2, 2);
    const CoincidenceHistogram hist =
        coincidence_histogram(t1, t2, cfg.bin_width_ps, cfg.half_window_bins);
    if (cfg.subcommand == "histogram") {
      if (cfg.output_path.empty()) {
        write_histogram_csv(out, hist, meta_lines(cfg));
      } else {
        auto f = open_output(cfg.output_path);
        write_histogram_csv(f, hist, meta_lines(cfg));
      }
      return 0;
    }
    const CarEstimate est = car(hist, cfg.exclude_bins);
    emit_json(cfg,
              {{"peak_counts", est.peak_counts},
               {"accidental_mean", est.accidental_mean},
               {"accidental_std", est.accidental_std},
               {"car", est.car},
               {"car_uncertainty", est.car_uncertainty}},
              out);
    return 0;
  }
  if (cfg.subcommand == "power-scan") {
    const std::vector<double> powers = parse_csv_numbers(cfg.powers_csv);
    const PowerScanResult scan = power_scan(cfg.model, powers, cfg.bin_width_ps,
                                            cfg.half_window_bins, cfg.exclude_bins);
    if (!cfg.output_path.empty()) {
      auto f = open_output(cfg.output_path);
      for (const auto& line : meta_lines(cfg)) f << "# " << line << "\n";
      f << "power_mw,coincidence_rate_hz,car,car_uncertainty\n";
      char buf[160];
      for (const auto& p : scan.points) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g\n", p.power_mw,
                      p.coincidence_rate_hz, p.car_estimate.car,
                      p.car_estimate.car_uncertainty);
        f << buf;
      }
    }
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : scan.points)
      points.push_back({{"power_mw", p.power_mw},
                        {"coincidence_rate_hz", p.coincidence_rate_hz},
                        {"car", p.car_estimate.car}});
    RunConfig stdout_cfg = cfg;
    stdout_cfg.output_path.clear();
    emit_json(stdout_cfg,
              {{"points", points},
               {"rate_slope_hz_per_mw", scan.rate_slope_hz_per_mw},
               {"rate_intercept_hz", scan.rate_intercept_hz},
               {"rate_r2", scan.rate_r2},
               {"car_inverse_constant", scan.car_inverse_constant}},
              out);
    return 0;
  }
  if (cfg.subcommand == "spectral-rate") {
    if (cfg.stack_path.empty()) throw ValidationError("spdc spectral-rate: --stack required");
    if (cfg.signal_spec.empty())
      throw ValidationError("spdc spectral-rate: --signal start:stop:step required");
    if (cfg.output_path.empty()) throw ValidationError("spdc spectral-rate: --out required");
    const MaterialLibrary lib = MaterialLibrary::load_default();
    const LayerStack stack = parse_stack_text(read_file(cfg.stack_path), lib);
    const std::vector<double> grid = parse_grid(cfg.signal_spec);
    const auto points = spdc_spectral_rate(stack, lib, cfg.pump_nm, grid);
    auto f = open_output(cfg.output_path);
    for (const auto& line : meta_lines(cfg)) f << "# " << line << "\n";
    f << "signal_nm,idler_nm,rate,valid\n";
    char buf[160];
    for (const auto& p : points) {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%d\n", p.signal_nm, p.idler_nm,
                    p.rate, p.valid ? 1 : 0);
      f << buf;
    }
    return 0;
  }
  throw ValidationError("unknown spdc subcommand '" + cfg.subcommand + "'");
}

inline int cmd_fit(const RunConfig& cfg, std::ostream& out) {
  if (cfg.input_path.empty()) throw ValidationError("fit: --in required");
  std::ifstream in(cfg.input_path);
  if (!in) throw ValidationError("cannot open '" + cfg.input_path + "'");
  const XyData data = read_xy_csv(in);

  if (cfg.fit_model == "six-maxima") {
    if (cfg.input_path2.empty())
      throw ValidationError("fit six-maxima: --in2 (off-structure pattern) required");
    std::ifstream in2(cfg.input_path2);
    if (!in2) throw ValidationError("cannot open '" + cfg.input_path2 + "'");
    const XyData off = read_xy_csv(in2);
    PolarPattern on_pat, off_pat;
    on_pat.angles_deg = data.x;
    on_pat.intensity = data.y;
    off_pat.angles_deg = off.x;
    off_pat.intensity = off.y;
    const EnhancementStats stats = six_maxima_stats(on_pat, off_pat);
    emit_json(cfg,
              {{"model", "six-maxima"},
               {"pair_angles_deg", stats.pair_angles_deg},
               {"ratios", stats.ratios},
               {"mean", stats.mean},
               {"stddev", stats.stddev}},
              out);
    return 0;
  }

  if (cfg.fit_model == "lorentz") {
    Spectrum spec{data.x, data.y};
    const LorentzFit fit = lorentz_fit(spec);
    emit_json(cfg,
              {{"model", "lorentz"},
               {"center_nm", fit.center_nm},
               {"fwhm_nm", fit.fwhm_nm},
               {"amplitude", fit.amplitude},
               {"offset", fit.offset},
               {"residual_rms", fit.residual_rms}},
              out);
    return 0;
  }

  PolarFitModel model;
  if (cfg.fit_model == "d3h")
    model = PolarFitModel::d3h;
  else if (cfg.fit_model == "strained-d3h" || cfg.fit_model == "strained_d3h")
    model = PolarFitModel::strained_d3h;
  else if (cfg.fit_model == "c2")
    model = PolarFitModel::c2;
  else
    throw ValidationError(
        "fit model must be lorentz, d3h, strained-d3h, c2 or six-maxima");

  PolarPattern pattern;
  pattern.angles_deg = data.x;
  pattern.intensity = data.y;
  const PolarFitResult fit = polar_fit(pattern, model);
  nlohmann::json body{{"model", to_string(fit.model)},
                      {"theta0_deg", fit.theta0_deg},
                      {"residual_rms", fit.residual_rms},
                      {"period_mismatch", fit.period_mismatch}};
  if (model == PolarFitModel::c2) {
    body["d22"] = fit.d22;
    body["d23_over_d22"] = fit.d23_over_d22;
  } else {
    body["chi0"] = fit.chi0;
  }
  if (model == PolarFitModel::strained_d3h) {
    body["strain_magnitude"] = fit.strain_magnitude;
    body["strain_angle_deg"] = fit.strain_angle_deg;
  }
  emit_json(cfg, body, out);
  return 0;
}

inline int cmd_materials(const RunConfig& cfg, std::ostream& out) {
  const MaterialLibrary lib = MaterialLibrary::load_default();
  if (cfg.subcommand == "list" || cfg.subcommand.empty()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const std::string& name : lib.names()) {
      const OpticalConstants& m = lib.at(name);
      arr.push_back({{"name", name},
                     {"min_wavelength_nm", m.min_wavelength_nm()},
                     {"max_wavelength_nm", m.max_wavelength_nm()},
                     {"samples", m.samples().size()},
                     {"provenance", m.provenance()}});
    }
    emit_json(cfg, {{"materials", arr}}, out);
    return 0;
  }
  if (cfg.subcommand == "show") {
    if (cfg.material_name.empty()) throw ValidationError("materials show: --name required");
    const OpticalConstants& m = lib.at(cfg.material_name);
    nlohmann::json body{{"name", m.name()}, {"provenance", m.provenance()}};
    if (cfg.at_nm > 0.0) {
      const auto nk = m.index_at(cfg.at_nm);
      body["wavelength_nm"] = cfg.at_nm;
      body["n"] = nk.real();
      body["k"] = nk.imag();
    }
    emit_json(cfg, body, out);
    return 0;
  }
  if (cfg.subcommand == "export") {
    if (cfg.export_dir.empty()) throw ValidationError("materials export: --dir required");
    std::filesystem::create_directories(cfg.export_dir);
    for (const auto& [name, csv] : data::bundled_tables()) {
      auto f = open_output((std::filesystem::path(cfg.export_dir) / (name + ".csv")).string());
      f << csv;
    }
    emit_json(cfg, {{"exported_to", cfg.export_dir}}, out);
    return 0;
  }
  throw ValidationError("unknown materials subcommand '" + cfg.subcommand + "'");
}

}  // namespace cli_detail

/// Execute a parsed command. Returns the process exit status; failures print
/// one machine-parsable `error: ...` line and produce no partial output on
/// stdout-bound JSON documents.
inline int run(const RunConfig& cfg, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  try {
    if (cfg.command == "simulate") return cli_detail::cmd_simulate(cfg, out);
    if (cfg.command == "sweep") return cli_detail::cmd_sweep(cfg, out);
    if (cfg.command == "polar") return cli_detail::cmd_polar(cfg, out);
    if (cfg.command == "spdc") return cli_detail::cmd_spdc(cfg, out);
    if (cfg.command == "fit") return cli_detail::cmd_fit(cfg, out);
    if (cfg.command == "materials") return cli_detail::cmd_materials(cfg, out);
    throw ValidationError("unknown command '" + cfg.command + "'");
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace nlstack
