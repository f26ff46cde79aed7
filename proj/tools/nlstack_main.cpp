// Command-line front end: parses arguments into a RunConfig and hands off to
// nlstack::run. All real work lives in the headers so it stays testable.

#include <CLI11.hpp>

#include "nlstack/cli.hpp"
#include "nlstack/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"nlstack: nonlinear transfer-matrix toolkit for layered stacks"};
  app.set_version_flag("--version", std::string("nlstack ") + nlstack::kVersion);
  app.require_subcommand(1);

  nlstack::RunConfig cfg;

  auto* simulate = app.add_subcommand(
      "simulate", "Second-harmonic / sum-frequency response of one stack");
  simulate->add_option("--stack", cfg.stack_path, "stack definition JSON file")
      ->required();
  simulate->add_option("--pump-nm", cfg.pump_nm, "pump wavelength [nm]")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--sfg-nm-1", cfg.sfg_nm_1, "first SFG pump wavelength [nm]")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--sfg-nm-2", cfg.sfg_nm_2, "second SFG pump wavelength [nm]")
      ->check(CLI::PositiveNumber);
  simulate->add_flag("--reflectance", cfg.want_reflectance,
                     "include linear R/T/A at the pump wavelength");
  simulate->add_flag("--field", cfg.field_profile,
                     "write the pump field profile CSV instead of the SHG result");
  simulate->add_option("--z-start", cfg.z_start_nm, "profile start depth [nm]");
  simulate->add_option("--z-stop", cfg.z_stop_nm, "profile stop depth [nm]");
  simulate->add_option("--z-step", cfg.z_step_nm, "profile step [nm]")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--out", cfg.output_path, "output file (default stdout)");

  auto* sweep = app.add_subcommand("sweep", "Intensity sweeps over stack geometry");
  sweep->add_option("--stack", cfg.stack_path, "stack template JSON file")->required();
  sweep->add_option("--axis", cfg.axis_spec, "axis as name:start:stop:step "
                    "(name: hbn|sio2|pump)")
      ->required();
  sweep->add_option("--axis2", cfg.axis2_spec, "optional second axis");
  sweep->add_option("--pump-nm", cfg.pump_nm, "pump wavelength [nm]")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--parity", cfg.parity, "monolayer parity: odd|even|any");
  sweep->add_option("--jobs", cfg.jobs, "worker threads (results are order-independent)")
      ->check(CLI::PositiveNumber);
  sweep->add_flag("--optima", cfg.locate_optima, "print located maxima as JSON");
  sweep->add_option("--min-prominence", cfg.min_prominence,
                    "optimum prominence threshold, fraction of global max");
  sweep->add_option("--enhance-against", cfg.enhance_against,
                    "second stack template; output becomes the pointwise ratio map");
  sweep->add_option("--out", cfg.output_path, "output CSV (sidecar: <out>.meta.json)")
      ->required();

  auto* polar = app.add_subcommand("polar", "Polarization-resolved SHG patterns");
  polar->add_option("--symmetry", cfg.symmetry, "d3h or c2");
  polar->add_option("--chi0", cfg.chi0, "D3h coefficient");
  polar->add_option("--d22", cfg.d22, "C2 d22 coefficient");
  double d23_value = 0.0;
  auto* d23_opt = polar->add_option("--d23", d23_value, "C2 d23 (default 0.1*d22)");
  polar->add_option("--theta0", cfg.theta0_deg, "pattern orientation [deg]");
  polar->add_option("--analyzer", cfg.analyzer, "co, cross or none");
  polar->add_option("--strain", cfg.strain, "strain magnitude (d3h only)");
  polar->add_option("--strain-angle", cfg.strain_angle_deg, "strain axis [deg]");
  polar->add_option("--step", cfg.angle_step_deg, "angle grid step [deg]")
      ->check(CLI::PositiveNumber);
  polar->add_option("--out", cfg.output_path, "output CSV")->required();

  auto* spdc = app.add_subcommand("spdc", "Coincidence statistics toolkit");
  spdc->require_subcommand(1);
  auto add_model_flags = [&cfg](CLI::App* cmd) {
    cmd->add_option("--pair-rate", cfg.model.pair_rate_per_mw, "pairs /s/mW");
    cmd->add_option("--bg1", cfg.model.singles_background_per_mw[0], "channel-1 background /s/mW");
    cmd->add_option("--bg2", cfg.model.singles_background_per_mw[1], "channel-2 background /s/mW");
    cmd->add_option("--dark1", cfg.model.dark_rate[0], "channel-1 dark counts /s");
    cmd->add_option("--dark2", cfg.model.dark_rate[1], "channel-2 dark counts /s");
    cmd->add_option("--jitter-ps", cfg.model.jitter_sigma_ps, "detector jitter sigma [ps]");
    cmd->add_option("--power-mw", cfg.model.pump_power_mw, "pump power [mW]");
    cmd->add_option("--duration-s", cfg.model.duration_s, "acquisition time [s]");
    cmd->add_option("--seed", cfg.model.seed, "simulation seed");
  };
  auto* tags = spdc->add_subcommand("tags", "simulate per-channel timestamp files");
  add_model_flags(tags);
  tags->add_option("--out-ch1", cfg.output_path, "channel-1 output file")->required();
  tags->add_option("--out-ch2", cfg.output_path2, "channel-2 output file")->required();

  auto* hist = spdc->add_subcommand("histogram", "delay histogram of two tag files");
  hist->add_option("--ch1", cfg.input_path, "channel-1 tag file")->required();
  hist->add_option("--ch2", cfg.input_path2, "channel-2 tag file")->required();
  hist->add_option("--bin-width-ps", cfg.bin_width_ps, "bin width [ps]")
      ->check(CLI::PositiveNumber);
  hist->add_option("--half-window", cfg.half_window_bins, "bins on each side of zero delay")
      ->check(CLI::PositiveNumber);
  hist->add_option("--out", cfg.output_path, "output CSV (default stdout)");

  auto* carc = spdc->add_subcommand("car", "coincidence-to-accidental ratio");
  carc->add_option("--ch1", cfg.input_path, "channel-1 tag file")->required();
  carc->add_option("--ch2", cfg.input_path2, "channel-2 tag file")->required();
  carc->add_option("--bin-width-ps", cfg.bin_width_ps, "bin width [ps]")
      ->check(CLI::PositiveNumber);
  carc->add_option("--half-window", cfg.half_window_bins, "bins on each side of zero delay")
      ->check(CLI::PositiveNumber);
  carc->add_option("--exclude", cfg.exclude_bins, "bins excluded around the peak");
  carc->add_option("--out", cfg.output_path, "output JSON (default stdout)");

  auto* scan = spdc->add_subcommand("power-scan", "rate and CAR across pump powers");
  add_model_flags(scan);
  scan->add_option("--powers", cfg.powers_csv, "comma-separated powers [mW]");
  scan->add_option("--bin-width-ps", cfg.bin_width_ps, "bin width [ps]")
      ->check(CLI::PositiveNumber);
  scan->add_option("--half-window", cfg.half_window_bins, "bins on each side of zero delay");
  scan->add_option("--exclude", cfg.exclude_bins, "bins excluded around the peak");
  scan->add_option("--out", cfg.output_path, "per-power CSV output");

  auto* spectral = spdc->add_subcommand("spectral-rate",
                                        "pair rate vs signal wavelength for a stack");
  spectral->add_option("--stack", cfg.stack_path, "stack definition JSON file")->required();
  spectral->add_option("--pump-nm", cfg.pump_nm, "pump wavelength [nm]")
      ->check(CLI::PositiveNumber);
  spectral->add_option("--signal", cfg.signal_spec, "signal grid start:stop:step [nm]")
      ->required();
  spectral->add_option("--out", cfg.output_path, "output CSV")->required();

  auto* fit = app.add_subcommand("fit", "Fit spectra or polar patterns from CSV");
  fit->add_option("--model", cfg.fit_model,
                  "lorentz, d3h, strained-d3h, c2 or six-maxima");
  fit->add_option("--in", cfg.input_path, "input CSV file")->required();
  fit->add_option("--in2", cfg.input_path2,
                  "off-structure pattern CSV (six-maxima only)");
  fit->add_option("--out", cfg.output_path, "output JSON (default stdout)");

  auto* materials = app.add_subcommand("materials", "Inspect or export index tables");
  materials->require_subcommand(1);
  materials->add_subcommand("list", "list available materials");
  auto* show = materials->add_subcommand("show", "show one material");
  show->add_option("--name", cfg.material_name, "material name")->required();
  show->add_option("--at", cfg.at_nm, "evaluate n,k at this wavelength [nm]");
  auto* exp = materials->add_subcommand("export", "write bundled tables as CSV files");
  exp->add_option("--dir", cfg.export_dir, "destination directory")->required();
  materials->footer(std::string("Set ") + nlstack::kMaterialsDirEnvVar +
                    " to a directory of <name>.csv files to override bundled data.");

  CLI11_PARSE(app, argc, argv);

  for (CLI::App* sub : app.get_subcommands()) {
    cfg.command = sub->get_name();
    for (CLI::App* subsub : sub->get_subcommands()) cfg.subcommand = subsub->get_name();
  }
  if (d23_opt->count() > 0) cfg.d23 = d23_value;

  return nlstack::run(cfg);
}
