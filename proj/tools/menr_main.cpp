// Batch front end: run | sweep | campaign | analyze | calibrate |
// project-vacuum. Every command is deterministic given (config, seed) and
// exits nonzero on any validation failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "menr/analysis.hpp"
#include "menr/experiment.hpp"
#include "menr/io/config.hpp"
#include "menr/io/csv.hpp"
#include "menr/io/report.hpp"
#include "menr/io/svg.hpp"

namespace fs = std::filesystem;
using menr::io::json;

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::string label;
  std::optional<std::uint64_t> seed;
  bool no_noise = false;
  unsigned jobs = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts, const char* default_label) {
  opts.label = default_label;
  cmd->add_option("-c,--config", opts.config_path,
                  "Config file (TOML); built-in defaults when omitted");
  cmd->add_option("-o,--out", opts.out_dir, "Output directory");
  cmd->add_option("--seed", opts.seed, "Override the base seed");
  cmd->add_option("--label", opts.label, "Stem for output file names");
  cmd->add_flag("--no-noise", opts.no_noise, "Disable the noise model");
}

menr::RunConfig load_config(const CommonOpts& opts) {
  menr::RunConfig cfg =
      opts.config_path.empty()
          ? menr::io::parse_config_text(menr::io::default_config_toml())
          : menr::io::parse_config_file(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.no_noise) {
    cfg.noise.white_split_noise_asd = 0.0;
    cfg.noise.drift_rate_hz_per_s = 0.0;
  }
  cfg.validate();
  for (const auto& w : cfg.warnings())
    std::cerr << "warning: " << w << "\n";
  return cfg;
}

std::string out_path(const CommonOpts& opts, const std::string& suffix) {
  fs::create_directories(opts.out_dir);
  return (fs::path(opts.out_dir) / (opts.label + suffix)).string();
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

int cmd_run(const CommonOpts& opts, bool store_series) {
  menr::RunConfig cfg = load_config(opts);
  if (store_series) cfg.store_series = true;

  const menr::RunResult result = menr::simulate_run(cfg);
  const json rec = menr::io::run_record(cfg, result);
  const std::string json_path = out_path(opts, ".json");
  menr::io::write_json_file(json_path, rec);

  std::string series_note;
  if (cfg.store_series && result.series) {
    const std::string csv_path = out_path(opts, "_series.csv");
    menr::io::write_series_csv(csv_path, *result.series);
    series_note = ", series " + csv_path;
  }

  std::cout << "delta_nu_fE = " << fmt("%.6g", result.delta_nu_fe_hz)
            << " Hz +- " << fmt("%.3g", result.sigma_stat_hz)
            << " Hz  (calibration factor "
            << fmt("%.6g", result.calibration.factor_hz_per_v) << " Hz/V +- "
            << fmt("%.2g", result.calibration.rel_sigma * 100.0) << "%)\n";
  std::cout << "wrote " << json_path << series_note << "\n";
  return 0;
}

int cmd_sweep(const CommonOpts& opts, std::vector<double> e_values, int points,
              double e_max, bool through_origin, double fields_rel_sigma) {
  menr::RunConfig cfg = load_config(opts);
  if (e_values.empty()) e_values = linspace(0.0, e_max, points);

  const menr::SweepResult sweep = menr::sweep_e(cfg, e_values, opts.jobs);
  const menr::FitResult fit =
      menr::weighted_linear_fit(sweep.series, through_origin);
  const menr::EtaEstimate eta =
      menr::extract_eta(fit, cfg.cavity, cfg.assembly,
                        sweep.calibration.rel_sigma, fields_rel_sigma);

  menr::io::write_json_file(out_path(opts, ".json"),
                            menr::io::sweep_record(cfg, sweep, fit, eta));
  menr::io::write_points_csv(out_path(opts, "_points.csv"), sweep.series);
  menr::io::write_text_file(out_path(opts, ".svg"),
                            menr::io::sweep_plot_svg(sweep.series, fit));

  std::cout << "fit: slope = " << fmt("%.6g", fit.slope) << " Hz/(V/m) +- "
            << fmt("%.3g", fit.sigma_slope) << ", intercept = "
            << fmt("%.3g", fit.intercept) << " Hz, chi2/dof = "
            << fmt("%.3g", fit.chi2_per_dof) << "\n";
  std::cout << "2eta = " << fmt("%.6g", eta.value) << " m/(V T) +- "
            << fmt("%.3g", eta.sigma_total)
            << " (stat " << fmt("%.3g", eta.sigma_stat) << ", calib "
            << fmt("%.3g", eta.sigma_calib) << ", fields "
            << fmt("%.3g", eta.sigma_fields) << "), sign "
            << (eta.sign_relative >= 0 ? "+" : "-") << " vs reference\n";
  std::cout << "wrote " << out_path(opts, ".json") << ", "
            << out_path(opts, "_points.csv") << ", " << out_path(opts, ".svg")
            << "\n";
  return 0;
}

int cmd_campaign(const CommonOpts& opts) {
  menr::RunConfig cfg = load_config(opts);
  const auto rows =
      menr::campaign_table1(cfg, menr::table1_configurations(), opts.jobs);

  menr::io::write_json_file(out_path(opts, ".json"),
                            menr::io::campaign_record(cfg, rows));

  auto signs = [](const std::array<int, 4>& s) {
    std::string t;
    for (int v : s) t += v > 0 ? '+' : (v < 0 ? '-' : '0');
    return t;
  };
  std::printf("%-6s %-6s %-6s %12s %22s\n", "rods", "E", "B", "expected",
              "measured");
  for (const auto& row : rows)
    std::printf("%-6d %-6s %-6s %12g %14.3f +- %.3f\n", row.connected_rods,
                signs(row.sign_e).c_str(), signs(row.sign_b).c_str(),
                row.expected, row.measured, row.sigma);
  std::cout << "wrote " << out_path(opts, ".json") << "\n";
  return 0;
}

int cmd_analyze(const CommonOpts& opts, const std::vector<std::string>& inputs,
                bool allow_mixed, bool final_eta, double fields_rel_sigma) {
  std::vector<menr::WeightedValue> values;
  std::vector<std::string> hashes;
  int sign = 0;
  for (const auto& path : inputs) {
    const json rec = menr::io::read_json_file(path);
    const std::string schema = rec.value("schema", "");
    if (schema != "menr-sweep-record/1" && schema != "menr-run-record/1")
      throw menr::Error(path + ": unsupported record schema '" + schema + "'");
    if (!rec.contains("eta"))
      throw menr::Error(path + ": record carries no eta extraction");
    const json& eta = rec.at("eta");
    const double stat = eta.at("sigma_stat").get<double>();
    const double calib = eta.at("sigma_calib").get<double>();
    values.push_back({eta.at("value_m_per_v_t").get<double>(),
                      std::sqrt(stat * stat + calib * calib)});
    hashes.push_back(rec.at("config_hash").get<std::string>());
    if (sign == 0) sign = eta.at("sign_relative").get<int>();
  }
  for (const auto& h : hashes)
    if (h != hashes.front() && !allow_mixed)
      throw menr::Error(
          "inputs mix different configurations; pass --allow-mixed to combine "
          "them anyway");

  const menr::WeightedValue mean = menr::weighted_mean(values);
  menr::EtaEstimate final;
  final.value = mean.value;
  final.sign_relative = sign;
  final.sigma_stat = mean.sigma;
  final.sigma_calib = 0.0;  // already inside the per-run bars
  final.sigma_fields = fields_rel_sigma * std::abs(mean.value);
  final.sigma_total = std::sqrt(final.sigma_stat * final.sigma_stat +
                                final.sigma_fields * final.sigma_fields);

  menr::io::write_json_file(
      out_path(opts, ".json"),
      menr::io::analysis_record(hashes, values, mean, final));
  menr::io::write_text_file(
      out_path(opts, ".svg"),
      menr::io::eta_plot_svg(values, mean, "Per-run 2 eta with weighted mean"));

  std::cout << "weighted mean: 2eta = " << fmt("%.6g", mean.value)
            << " m/(V T) +- " << fmt("%.3g", mean.sigma) << " (" << values.size()
            << " runs)\n";
  if (final_eta)
    std::cout << "final (with field-determination uncertainty "
              << fmt("%.3g", fields_rel_sigma * 100.0)
              << "%): 2eta = " << fmt("%.6g", final.value) << " +- "
              << fmt("%.3g", final.sigma_total) << " m/(V T)\n";
  std::cout << "wrote " << out_path(opts, ".json") << ", "
            << out_path(opts, ".svg") << "\n";
  return 0;
}

int cmd_calibrate(const CommonOpts& opts, double amplitude_hz) {
  menr::RunConfig cfg = load_config(opts);
  const menr::Calibration cal = menr::calibrate(cfg, amplitude_hz);
  menr::io::write_json_file(out_path(opts, ".json"),
                            menr::io::calibration_record(cfg, cal));
  std::cout << "calibration factor = " << fmt("%.6g", cal.factor_hz_per_v)
            << " Hz/V +- " << fmt("%.2g", cal.rel_sigma * 100.0)
            << "% (discriminant " << fmt("%.6g", cal.discriminant_v_per_hz)
            << " V/Hz, injected " << fmt("%.3g", cal.injected_amplitude_hz)
            << " Hz)\n";
  std::cout << "wrote " << out_path(opts, ".json") << "\n";
  return 0;
}

int cmd_project_vacuum(const CommonOpts& opts, double measured_delta_n,
                       double suppression, const std::string& target_config,
                       double noise_floor_asd, double filling_factor) {
  menr::RingCavity target{1.6, 0.4, 200000.0, 1.064e-6};
  bool defaults_used = true;
  if (!target_config.empty()) {
    target = menr::io::parse_config_file(target_config).cavity;
    defaults_used = false;
  }
  const menr::VacuumProjection proj = menr::vacuum_projection(
      measured_delta_n, suppression, target, noise_floor_asd, filling_factor);

  menr::io::write_json_file(
      out_path(opts, ".json"),
      menr::io::projection_record(measured_delta_n, suppression, target,
                                  noise_floor_asd, filling_factor,
                                  defaults_used, proj));

  if (defaults_used)
    std::cout << "target cavity: built-in defaults (finesse 200000, same "
                 "geometry)\n";
  std::cout << "target delta_n = " << fmt("%.6g", proj.target_delta_n)
            << ", target delta_nu = " << fmt("%.6g", proj.target_delta_nu_hz)
            << " Hz\n";
  if (proj.resolvable)
    std::cout << "required averaging time at SNR 1: "
              << fmt("%.3g", proj.required_time_s) << " s\n";
  else
    std::cout << "target split is zero: not resolvable in finite time\n";
  std::cout << "wrote " << out_path(opts, ".json") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Digital twin of a ring-cavity magneto-electric non-reciprocity "
      "measurement"};
  app.require_subcommand(1);

  CommonOpts run_opts;
  bool store_series = false;
  CLI::App* run = app.add_subcommand("run", "One measurement run");
  add_common(run, run_opts, "run");
  run->add_flag("--store-series", store_series,
                "Write the raw time series as CSV");

  CommonOpts sweep_opts;
  std::vector<double> e_values;
  int sweep_points = 12;
  double sweep_e_max = 5.0e5;
  bool through_origin = false;
  double sweep_fields_rel = 0.0;
  CLI::App* sweep =
      app.add_subcommand("sweep", "Field-amplitude sweep with weighted fit");
  add_common(sweep, sweep_opts, "sweep");
  sweep->add_option("--e-values", e_values,
                    "Comma-separated field amplitudes in V/m")
      ->delimiter(',');
  sweep->add_option("--points", sweep_points,
                    "Number of evenly spaced points when --e-values is absent")
      ->check(CLI::Range(2, 1000));
  sweep->add_option("--max-e", sweep_e_max,
                    "Top of the default field range (V/m)");
  sweep->add_flag("--through-origin", through_origin,
                  "Fit without an intercept");
  sweep->add_option("--fields-rel-sigma", sweep_fields_rel,
                    "Relative field-determination uncertainty folded into the "
                    "sweep's eta record");
  sweep->add_option("-j,--jobs", sweep_opts.jobs,
                    "Worker threads (0 = hardware)");

  CommonOpts campaign_opts;
  bool table1 = false;
  CLI::App* campaign =
      app.add_subcommand("campaign", "Sign-configuration campaign");
  add_common(campaign, campaign_opts, "campaign");
  campaign->add_flag("--table1", table1,
                     "Run the published nine-row sign table (default)");
  campaign->add_option("-j,--jobs", campaign_opts.jobs,
                       "Worker threads (0 = hardware)");

  CommonOpts analyze_opts;
  std::vector<std::string> analyze_inputs;
  bool allow_mixed = false;
  bool final_eta = false;
  double fields_rel = menr::default_fields_rel_sigma;
  CLI::App* analyze =
      app.add_subcommand("analyze", "Combine run/sweep records into 2 eta");
  add_common(analyze, analyze_opts, "analysis");
  analyze->add_option("inputs", analyze_inputs, "Result record JSON files")
      ->required()
      ->expected(-1);
  analyze->add_flag("--allow-mixed", allow_mixed,
                    "Combine records from different configurations");
  analyze->add_flag("--final-eta", final_eta,
                    "Also report the final value with the "
                    "field-determination uncertainty");
  analyze->add_option("--fields-rel-sigma", fields_rel,
                      "Relative field-determination uncertainty");

  CommonOpts cal_opts;
  double cal_amplitude = 10.0e-3;
  CLI::App* cal = app.add_subcommand("calibrate", "Chain calibration run");
  add_common(cal, cal_opts, "calibration");
  cal->add_option("--amplitude-hz", cal_amplitude,
                  "Injected split amplitude (Hz)");

  CommonOpts proj_opts;
  double measured_delta_n = 2.0e-17;
  double suppression = 7.0e8;
  std::string target_config;
  double noise_floor = 8.9e-3;
  double filling = 0.5;
  CLI::App* proj =
      app.add_subcommand("project-vacuum", "Quantum-vacuum sensitivity target");
  add_common(proj, proj_opts, "projection");
  proj->add_option("--measured-delta-n", measured_delta_n,
                   "Measured in-rod index difference to scale down");
  proj->add_option("--suppression", suppression,
                   "How much smaller the vacuum effect is");
  proj->add_option("--target-config", target_config,
                   "Config file providing the target [cavity]");
  proj->add_option("--noise-floor-asd", noise_floor,
                   "Split-noise floor of the target setup (Hz/sqrt(Hz))");
  proj->add_option("--filling-factor", filling,
                   "Fraction of the target perimeter exposed to the fields");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opts, store_series);
    if (sweep->parsed())
      return cmd_sweep(sweep_opts, e_values, sweep_points, sweep_e_max,
                       through_origin, sweep_fields_rel);
    if (campaign->parsed()) return cmd_campaign(campaign_opts);
    if (analyze->parsed())
      return cmd_analyze(analyze_opts, analyze_inputs, allow_mixed, final_eta,
                         fields_rel);
    if (cal->parsed()) return cmd_calibrate(cal_opts, cal_amplitude);
    if (proj->parsed())
      return cmd_project_vacuum(proj_opts, measured_delta_n, suppression,
                                target_config, noise_floor, filling);
  } catch (const menr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
