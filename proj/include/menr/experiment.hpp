#pragma once

// Synthetic experiment orchestration: single demodulated runs, E-field
// sweeps, the sign-configuration campaign and calibration runs.

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "menr/errors.hpp"
#include "menr/optics.hpp"
#include "menr/signal.hpp"

namespace menr {

/// Deterministic per-subtask seed stream. splitmix64 finalizer over the
/// base seed and a stream index; the mapping is part of the on-disk
/// contract (sweeps quote per-point seeds) and must stay stable.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

namespace seed_stream {
// Stream index layout: sweep point i uses index i; everything else lives
// above 2^32 so arbitrarily long sweeps cannot collide.
inline constexpr std::uint64_t calibration = 1ull << 32;
inline constexpr std::uint64_t campaign_base = 2ull << 32;
}  // namespace seed_stream

/// Run n tasks on up to `jobs` threads (0 = hardware concurrency).
/// Results are for the caller to collect by index; completion order never
/// matters.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  if (n == 0) return;
  unsigned workers = jobs == 0 ? std::thread::hardware_concurrency() : jobs;
  if (workers == 0) workers = 1;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Complete parameter set for one simulated measurement run.
///
/// The run drives all connected rods with a common sinusoidal field
/// E(t) = e_amplitude sin(2 pi f_E t); the rods' static voltage settings
/// play no role here. `seed` is the master seed: the split-noise stream
/// and the calibration stream both derive from it, so noise.seed is
/// ignored inside runs.
struct RunConfig {
  RingCavity cavity;
  RodAssembly assembly;
  GasMedium gas;
  SagnacContext sagnac;
  double e_amplitude_v_per_m = 5.0e5;
  PDHParams pdh;
  LockInParams lockin;
  NoiseModel noise;
  ServoParams servo;
  double duration_s = 2000.0;
  std::uint64_t seed = 1;
  bool store_series = false;

  void validate() const {
    cavity.validate();
    assembly.validate();
    gas.validate();
    sagnac.validate();
    pdh.validate();
    lockin.validate();
    noise.validate();
    servo.validate(lockin.reference_freq_hz);
    if (!(e_amplitude_v_per_m >= 0.0))
      throw InvalidParameterError("e_amplitude must be >= 0");
    if (!(duration_s >= 10.0 * lockin.time_constant_s))
      throw InvalidParameterError(
          "run duration must be at least 10 lock-in time constants");
  }

  std::vector<std::string> warnings() const {
    std::vector<std::string> w = pdh.warnings(cavity);
    if (e_amplitude_v_per_m > 0.5e6)
      w.push_back("field amplitude " + std::to_string(e_amplitude_v_per_m) +
                  " V/m exceeds the 0.5 MV/m hardware envelope");
    return w;
  }

  std::string config_label() const {
    auto glyph = [](int s) { return s > 0 ? '+' : (s < 0 ? '-' : '0'); };
    std::string label = "E";
    for (const Rod& r : assembly.rods) label += glyph(r.sign_e);
    label += "/B";
    for (const Rod& r : assembly.rods) label += glyph(r.sign_b);
    return label;
  }
};

/// Raw per-sample record of a run, kept only on request.
struct StoredSeries {
  double sample_rate_hz = 0.0;
  std::vector<double> time_s;
  std::vector<double> e_field_v_per_m;
  std::vector<double> detuning_ccw_hz;
  std::vector<double> error_signal_v;
};

/// Chain calibration from a known EOM-injected frequency modulation.
/// Multiplying a demodulated in-phase voltage by `factor_hz_per_v`
/// converts it to a split amplitude in Hz.
struct Calibration {
  double factor_hz_per_v = 0.0;
  double rel_sigma = 0.0;
  double injected_amplitude_hz = 0.0;
  double discriminant_v_per_hz = 0.0;
  std::uint64_t seed = 0;
};

struct RunDiagnostics {
  double sagnac_offset_hz = 0.0;
  double dc_error_signal_v = 0.0;
  double raw_in_phase_v = 0.0;
  double raw_quadrature_v = 0.0;
  double raw_sigma_v = 0.0;
  double discriminant_v_per_hz = 0.0;
  std::size_t settled_samples = 0;
  double effective_sample_count = 0.0;
  std::vector<std::string> warnings;
};

struct RunResult {
  double delta_nu_fe_hz = 0.0;  // signed demodulated split amplitude
  double sigma_stat_hz = 0.0;
  Calibration calibration;
  std::uint64_t seed = 0;
  RunDiagnostics diagnostics;
  std::shared_ptr<const StoredSeries> series;  // null unless requested
};

struct MeasurementPoint {
  double e_amplitude_v_per_m = 0.0;
  double delta_nu_hz = 0.0;
  double sigma_hz = 0.0;
};

/// The (E, delta nu, sigma) points feeding the weighted fit.
struct MeasurementSeries {
  std::vector<MeasurementPoint> points;
  std::string config_label;
};

struct SweepResult {
  MeasurementSeries series;
  std::vector<RunResult> runs;
  Calibration calibration;
};

struct CampaignRow {
  std::array<int, 4> sign_e{};
  std::array<int, 4> sign_b{};
  int connected_rods = 0;
  double expected = 0.0;
  double measured = 0.0;
  double sigma = 0.0;
  double delta_nu_hz = 0.0;
  double sigma_delta_nu_hz = 0.0;
};

namespace detail {

// Statistical floor: noiseless runs still report the demodulator's own
// 1e-3 tolerance so downstream inverse-variance weights stay finite.
inline double sigma_floor(double sigma_hz, double delta_nu_hz) {
  const double floor = std::max(1.0e-3 * std::abs(delta_nu_hz), 1.0e-9);
  return std::max(sigma_hz, floor);
}

inline std::size_t sample_count(const RunConfig& cfg) {
  return static_cast<std::size_t>(
      std::llround(cfg.duration_s * cfg.servo.sample_rate_hz));
}

}  // namespace detail

/// Calibrate the chain: inject a known cw frequency modulation at f_E,
/// demodulate it with the run's lock-in settings, and return the
/// volts-to-hertz factor with its relative uncertainty.
inline Calibration calibrate(const RunConfig& config,
                             double injected_amplitude_hz = 10.0e-3) {
  config.validate();
  if (!(injected_amplitude_hz > 0.0))
    throw InvalidParameterError("injected calibration amplitude must be positive");

  const double discriminant = pdh_discriminant(config.cavity, config.pdh);
  NoiseModel noise = config.noise;
  noise.seed = derive_seed(config.seed, seed_stream::calibration);

  const SampledSeries series = eom_calibration_signal(
      injected_amplitude_hz, config.lockin.reference_freq_hz, discriminant,
      config.duration_s, config.servo.sample_rate_hz,
      noise.is_quiet() ? nullptr : &noise);
  const LockInResult demod = lock_in_demodulate(series, config.lockin);

  const double response_v = demod.in_phase;
  if (response_v == 0.0)
    throw CalibrationFailedError("calibration injection produced no response");
  if (!config.noise.is_quiet() && std::abs(response_v) < 3.0 * demod.sigma)
    throw CalibrationFailedError(
        "calibration SNR below 3; raise the injected amplitude or duration");

  Calibration cal;
  cal.factor_hz_per_v = injected_amplitude_hz / response_v;
  cal.rel_sigma = std::abs(demod.sigma / response_v);
  cal.injected_amplitude_hz = injected_amplitude_hz;
  cal.discriminant_v_per_hz = discriminant;
  cal.seed = noise.seed;
  return cal;
}

namespace detail {

// Residual cw lock error under the discrete PI loop: the servo pulls in
// from an initial offset through a first-order actuator. Gains of zero
// select a conservative auto-tune placing the unity-gain frequency well
// below the actuator pole. Lock acquisition happens before data taking:
// the constructor runs the loop until the pull-in transient has died, so
// the recorded window only sees the converged residual.
class ServoLoop {
public:
  ServoLoop(const RunConfig& cfg, const PdhResponse& resp, double discriminant)
      : resp_(resp) {
    const double dt = 1.0 / cfg.servo.sample_rate_hz;
    double ki = cfg.servo.integral_gain;
    double kp = cfg.servo.proportional_gain;
    if (ki == 0.0 && kp == 0.0) {
      if (discriminant == 0.0)
        throw InvalidParameterError(
            "cannot auto-tune the servo with a zero discriminant");
      ki = 0.15 * cfg.servo.sample_rate_hz / std::abs(discriminant);
    }
    ki_dt_ = ki * dt;
    kp_ = kp;
    actuator_pole_ =
        1.0 - std::exp(-2.0 * constants::pi * cfg.servo.actuator_bandwidth_hz * dt);
    offset_hz_ = linewidth_fwhm(cfg.cavity) / 100.0;
    const auto acquisition =
        static_cast<std::size_t>(cfg.servo.sample_rate_hz) + 1;
    for (std::size_t k = 0; k < acquisition; ++k) step();
  }

  double step() {
    const double eps = offset_hz_ - actuator_hz_;
    const double err_v = resp_.error(eps);
    integrator_ += ki_dt_ * err_v;
    const double command = kp_ * err_v + integrator_;
    actuator_hz_ += actuator_pole_ * (command - actuator_hz_);
    return eps;
  }

private:
  const PdhResponse& resp_;
  double ki_dt_ = 0.0, kp_ = 0.0, actuator_pole_ = 0.0;
  double offset_hz_ = 0.0, integrator_ = 0.0, actuator_hz_ = 0.0;
};

}  // namespace detail

/// One complete measurement: synthesize the ccw detuning series, map it
/// through the PDH chain, demodulate at f_E and convert to Hz with the
/// supplied calibration. Deterministic in config.seed.
inline RunResult simulate_run(const RunConfig& config, const Calibration& cal) {
  config.validate();
  if (!(cal.factor_hz_per_v != 0.0))
    throw InvalidParameterError("calibration factor must be nonzero");

  const double rate = config.servo.sample_rate_hz;
  const std::size_t n = detail::sample_count(config);
  const double dt = 1.0 / rate;

  const double sagnac_hz = sagnac_split(config.cavity, config.sagnac);
  const double split_slope =
      split_slope_per_field(config.cavity, config.assembly, config.gas);
  const detail::PdhResponse resp(config.cavity, config.pdh);

  NoiseModel noise = config.noise;
  noise.seed = derive_seed(config.seed, 0);
  SampledSeries noise_series;
  if (!noise.is_quiet()) noise_series = generate_noise(noise, n, rate);

  const bool full_loop = config.servo.mode == ServoParams::Mode::full_loop;
  std::optional<detail::ServoLoop> servo;
  if (full_loop)
    servo.emplace(config, resp,
                  cal.discriminant_v_per_hz != 0.0
                      ? cal.discriminant_v_per_hz
                      : pdh_discriminant(config.cavity, config.pdh));

  SampledSeries error_signal;
  error_signal.sample_rate_hz = rate;
  error_signal.samples.resize(n);

  std::shared_ptr<StoredSeries> stored;
  if (config.store_series) {
    stored = std::make_shared<StoredSeries>();
    stored->sample_rate_hz = rate;
    stored->time_s.resize(n);
    stored->e_field_v_per_m.resize(n);
    stored->detuning_ccw_hz.resize(n);
    stored->error_signal_v.resize(n);
  }

  const double w_e = 2.0 * constants::pi * config.lockin.reference_freq_hz;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = k * dt;
    const double e_field = config.e_amplitude_v_per_m * std::sin(w_e * t);
    double detuning = sagnac_hz + split_slope * e_field;
    if (!noise_series.samples.empty()) detuning += noise_series.samples[k];
    if (servo) detuning += servo->step();
    const double v = resp.error(detuning);
    error_signal.samples[k] = v;
    if (stored) {
      stored->time_s[k] = t;
      stored->e_field_v_per_m[k] = e_field;
      stored->detuning_ccw_hz[k] = detuning;
      stored->error_signal_v[k] = v;
    }
  }

  const LockInResult demod = lock_in_demodulate(error_signal, config.lockin);

  RunResult result;
  result.delta_nu_fe_hz = demod.in_phase * cal.factor_hz_per_v;
  result.sigma_stat_hz = detail::sigma_floor(
      std::abs(demod.sigma * cal.factor_hz_per_v), result.delta_nu_fe_hz);
  result.calibration = cal;
  result.seed = config.seed;
  result.series = stored;

  result.diagnostics.sagnac_offset_hz = sagnac_hz;
  result.diagnostics.dc_error_signal_v = resp.error(sagnac_hz);
  result.diagnostics.raw_in_phase_v = demod.in_phase;
  result.diagnostics.raw_quadrature_v = demod.quadrature;
  result.diagnostics.raw_sigma_v = demod.sigma;
  result.diagnostics.discriminant_v_per_hz = cal.discriminant_v_per_hz;
  result.diagnostics.settled_samples = demod.settled_samples;
  result.diagnostics.effective_sample_count =
      2.0 * config.lockin.noise_bandwidth_hz() * (demod.settled_samples / rate);
  result.diagnostics.warnings = config.warnings();

  if (!std::isfinite(result.delta_nu_fe_hz))
    throw InvalidParameterError("run produced a non-finite split estimate");
  return result;
}

/// Convenience overload: calibrates first with the default injection.
inline RunResult simulate_run(const RunConfig& config) {
  return simulate_run(config, calibrate(config));
}

/// Sweep the field amplitude. One shared calibration; per-point seeds
/// derive from the base seed by index so the sweep is reproducible while
/// the points stay statistically independent.
inline SweepResult sweep_e(const RunConfig& config,
                           const std::vector<double>& e_values_v_per_m,
                           unsigned jobs = 1) {
  config.validate();
  if (e_values_v_per_m.size() < 2)
    throw InvalidParameterError("a sweep needs at least 2 field values");
  bool any_nonzero = false;
  for (double e : e_values_v_per_m) {
    if (!(e >= 0.0))
      throw InvalidParameterError("sweep field values must be >= 0");
    if (e > 0.0) any_nonzero = true;
  }
  if (!any_nonzero)
    throw InvalidParameterError("sweep field values are all zero");

  const Calibration cal = calibrate(config);

  SweepResult out;
  out.calibration = cal;
  out.runs.resize(e_values_v_per_m.size());
  parallel_for(e_values_v_per_m.size(), jobs, [&](std::size_t i) {
    RunConfig point = config;
    point.e_amplitude_v_per_m = e_values_v_per_m[i];
    point.seed = derive_seed(config.seed, i);
    out.runs[i] = simulate_run(point, cal);
  });

  out.series.config_label = config.config_label();
  out.series.points.reserve(out.runs.size());
  for (std::size_t i = 0; i < out.runs.size(); ++i)
    out.series.points.push_back({e_values_v_per_m[i],
                                 out.runs[i].delta_nu_fe_hz,
                                 out.runs[i].sigma_stat_hz});
  return out;
}

struct SignConfig {
  std::array<int, 4> sign_e{};
  std::array<int, 4> sign_b{};
};

/// The nine published sign configurations; the all-plus reference first.
inline std::vector<SignConfig> table1_configurations() {
  return {
      {{+1, +1, +1, +1}, {+1, +1, +1, +1}},
      {{-1, -1, -1, -1}, {+1, +1, +1, +1}},
      {{+1, +1, -1, -1}, {+1, +1, -1, -1}},
      {{+1, +1, -1, 0}, {+1, +1, -1, -1}},
      {{-1, -1, 0, 0}, {+1, +1, +1, +1}},
      {{0, +1, 0, -1}, {+1, +1, -1, -1}},
      {{+1, 0, 0, 0}, {+1, +1, +1, +1}},
      {{+1, -1, 0, 0}, {+1, +1, +1, +1}},
      {{+1, +1, +1, +1}, {+1, +1, -1, -1}},
  };
}

/// Run every sign configuration at fixed field amplitude and report each
/// split relative to the first (reference) configuration.
inline std::vector<CampaignRow> campaign_table1(
    const RunConfig& base, const std::vector<SignConfig>& configs,
    unsigned jobs = 1) {
  base.validate();
  if (configs.empty())
    throw InvalidParameterError("campaign needs at least the reference configuration");
  for (int s : configs.front().sign_e)
    if (s != +1)
      throw InvalidParameterError("campaign reference must be the all-plus configuration");
  for (int s : configs.front().sign_b)
    if (s != +1)
      throw InvalidParameterError("campaign reference must be the all-plus configuration");

  const Calibration cal = calibrate(base);

  std::vector<RunResult> runs(configs.size());
  parallel_for(configs.size(), jobs, [&](std::size_t i) {
    RunConfig cfg = base;
    for (int r = 0; r < 4; ++r) {
      cfg.assembly.rods[r].sign_e = configs[i].sign_e[r];
      cfg.assembly.rods[r].sign_b = configs[i].sign_b[r];
    }
    cfg.seed = derive_seed(base.seed, seed_stream::campaign_base + i);
    runs[i] = simulate_run(cfg, cal);
  });

  const double ref = runs.front().delta_nu_fe_hz;
  const double ref_sigma = runs.front().sigma_stat_hz;
  // sigma_stat carries a positive floor, so this also catches an exactly
  // zero reference.
  if (!(std::abs(ref) >= 3.0 * ref_sigma))
    throw UndefinedRatioError(
        "campaign reference configuration produced no resolvable split");

  std::vector<CampaignRow> rows(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    CampaignRow& row = rows[i];
    row.sign_e = configs[i].sign_e;
    row.sign_b = configs[i].sign_b;
    int connected = 0;
    double expected4 = 0.0;
    for (int r = 0; r < 4; ++r) {
      if (row.sign_e[r] != 0 && row.sign_b[r] != 0) ++connected;
      expected4 += row.sign_e[r] * row.sign_b[r];
    }
    row.connected_rods = connected;
    row.expected = expected4 / 4.0;
    row.delta_nu_hz = runs[i].delta_nu_fe_hz;
    row.sigma_delta_nu_hz = runs[i].sigma_stat_hz;
    row.measured = runs[i].delta_nu_fe_hz / ref;
    const double term_row = runs[i].sigma_stat_hz / ref;
    const double term_ref = runs[i].delta_nu_fe_hz * ref_sigma / (ref * ref);
    row.sigma = std::sqrt(term_row * term_row + term_ref * term_ref);
  }
  return rows;
}

}  // namespace menr
