#pragma once

// JSON result records. Every record carries a schema tag (validated by the
// schemas shipped under schemas/) and a UTC timestamp; everything else is
// deterministic in (config, seed).

#include <cmath>
#include <ctime>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "menr/analysis.hpp"
#include "menr/experiment.hpp"
#include "menr/io/config.hpp"

namespace menr {
namespace io {

using nlohmann::json;

inline std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace detail {

inline json calibration_json(const Calibration& cal) {
  return json{{"factor_hz_per_v", cal.factor_hz_per_v},
              {"rel_sigma", cal.rel_sigma},
              {"injected_amplitude_hz", cal.injected_amplitude_hz},
              {"discriminant_v_per_hz", cal.discriminant_v_per_hz},
              {"seed", cal.seed}};
}

inline json eta_json(const EtaEstimate& eta) {
  return json{{"value_m_per_v_t", eta.value},
              {"sign_relative", eta.sign_relative},
              {"sigma_stat", eta.sigma_stat},
              {"sigma_calib", eta.sigma_calib},
              {"sigma_fields", eta.sigma_fields},
              {"sigma_total", eta.sigma_total}};
}

}  // namespace detail

inline json run_record(const RunConfig& config, const RunResult& result) {
  json rec{
      {"schema", "menr-run-record/1"},
      {"generated_utc", utc_timestamp()},
      {"config_hash", config_hash_hex(config)},
      {"config_label", config.config_label()},
      {"seed", result.seed},
      {"duration_s", config.duration_s},
      {"e_amplitude_v_per_m", config.e_amplitude_v_per_m},
      {"delta_nu_fe_hz", result.delta_nu_fe_hz},
      {"sigma_stat_hz", result.sigma_stat_hz},
      {"calibration", detail::calibration_json(result.calibration)},
      {"diagnostics",
       {{"sagnac_offset_hz", result.diagnostics.sagnac_offset_hz},
        {"dc_error_signal_v", result.diagnostics.dc_error_signal_v},
        {"raw_in_phase_v", result.diagnostics.raw_in_phase_v},
        {"raw_quadrature_v", result.diagnostics.raw_quadrature_v},
        {"raw_sigma_v", result.diagnostics.raw_sigma_v},
        {"discriminant_v_per_hz", result.diagnostics.discriminant_v_per_hz},
        {"settled_samples", result.diagnostics.settled_samples},
        {"effective_sample_count", result.diagnostics.effective_sample_count},
        {"warnings", result.diagnostics.warnings}}},
  };

  const DeltaNEstimate dn =
      smallest_resolvable_delta_n(result, config.cavity, config.assembly);
  rec["delta_n"] = {{"value", dn.delta_n}, {"sigma", dn.sigma}};

  // Single-run extraction through the origin, when the run is sensitive.
  if (config.e_amplitude_v_per_m > 0.0 &&
      config.assembly.signed_b_sum() != 0.0) {
    FitResult fit;
    fit.slope = result.delta_nu_fe_hz / config.e_amplitude_v_per_m;
    fit.sigma_slope = result.sigma_stat_hz / config.e_amplitude_v_per_m;
    rec["eta"] = detail::eta_json(
        extract_eta(fit, config.cavity, config.assembly,
                    result.calibration.rel_sigma, 0.0));
  }
  return rec;
}

inline json sweep_record(const RunConfig& config, const SweepResult& sweep,
                         const FitResult& fit, const EtaEstimate& eta) {
  json points = json::array();
  for (std::size_t i = 0; i < sweep.series.points.size(); ++i) {
    const auto& p = sweep.series.points[i];
    points.push_back({{"e_amplitude_v_per_m", p.e_amplitude_v_per_m},
                      {"delta_nu_hz", p.delta_nu_hz},
                      {"sigma_hz", p.sigma_hz},
                      {"seed", sweep.runs[i].seed}});
  }
  return json{
      {"schema", "menr-sweep-record/1"},
      {"generated_utc", utc_timestamp()},
      {"config_hash", config_hash_hex(config)},
      {"config_label", sweep.series.config_label},
      {"base_seed", config.seed},
      {"calibration", detail::calibration_json(sweep.calibration)},
      {"points", points},
      {"fit",
       {{"slope_hz_per_v_per_m", fit.slope},
        {"sigma_slope", fit.sigma_slope},
        {"intercept_hz", fit.intercept},
        {"sigma_intercept", fit.sigma_intercept},
        {"chi2_per_dof", fit.chi2_per_dof},
        {"n_points", fit.n_points}}},
      {"eta", detail::eta_json(eta)},
  };
}

inline json campaign_record(const RunConfig& config,
                            const std::vector<CampaignRow>& rows) {
  json out_rows = json::array();
  for (const auto& row : rows) {
    out_rows.push_back({{"sign_e", row.sign_e},
                        {"sign_b", row.sign_b},
                        {"connected_rods", row.connected_rods},
                        {"expected", row.expected},
                        {"measured", row.measured},
                        {"sigma", row.sigma},
                        {"delta_nu_hz", row.delta_nu_hz},
                        {"sigma_delta_nu_hz", row.sigma_delta_nu_hz}});
  }
  return json{{"schema", "menr-campaign-record/1"},
              {"generated_utc", utc_timestamp()},
              {"config_hash", config_hash_hex(config)},
              {"base_seed", config.seed},
              {"e_amplitude_v_per_m", config.e_amplitude_v_per_m},
              {"rows", out_rows}};
}

inline json calibration_record(const RunConfig& config, const Calibration& cal) {
  return json{{"schema", "menr-calibration-record/1"},
              {"generated_utc", utc_timestamp()},
              {"config_hash", config_hash_hex(config)},
              {"calibration", detail::calibration_json(cal)}};
}

inline json analysis_record(const std::vector<std::string>& input_hashes,
                            const std::vector<WeightedValue>& per_run,
                            const WeightedValue& mean,
                            const EtaEstimate& final_eta) {
  json runs = json::array();
  for (const auto& r : per_run)
    runs.push_back({{"value", r.value}, {"sigma", r.sigma}});
  return json{{"schema", "menr-analysis-record/1"},
              {"generated_utc", utc_timestamp()},
              {"input_config_hashes", input_hashes},
              {"per_run", runs},
              {"weighted_mean", {{"value", mean.value}, {"sigma", mean.sigma}}},
              {"final", detail::eta_json(final_eta)}};
}

inline json projection_record(double measured_delta_n, double suppression,
                              const RingCavity& target,
                              double noise_floor_asd, double filling_factor,
                              bool target_defaults_used,
                              const VacuumProjection& proj) {
  // JSON has no infinity: the unreachable-target case is reported as null.
  json time = nullptr;
  if (std::isfinite(proj.required_time_s)) time = proj.required_time_s;
  return json{{"schema", "menr-projection-record/1"},
              {"generated_utc", utc_timestamp()},
              {"measured_delta_n", measured_delta_n},
              {"suppression", suppression},
              {"target_cavity",
               {{"perimeter_m", target.perimeter_m},
                {"arm_m", target.arm_m},
                {"finesse", target.finesse},
                {"wavelength_m", target.wavelength_m}}},
              {"target_defaults_used", target_defaults_used},
              {"noise_floor_asd_hz_per_rt_hz", noise_floor_asd},
              {"filling_factor", filling_factor},
              {"target_delta_n", proj.target_delta_n},
              {"target_delta_nu_hz", proj.target_delta_nu_hz},
              {"required_time_s", time},
              {"resolvable", proj.resolvable}};
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) throw Error("write to '" + path + "' failed");
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return json::parse(in);
}

}  // namespace io
}  // namespace menr
