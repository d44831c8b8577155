#pragma once

// Electro-optic measurement chain: cavity reflection response, the
// Pound-Drever-Hall error signal and its frequency discriminant, lock-in
// demodulation, the EOM calibration injection and the split-noise model.
//
// Everything here is baseband: the RF chain at the modulation frequency is
// treated analytically and only the slow dynamics (the field-modulation
// frequency and below) are ever time-sampled.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "menr/constants.hpp"
#include "menr/errors.hpp"
#include "menr/optics.hpp"

namespace menr {

/// Pound-Drever-Hall chain parameters. The mirror amplitudes encode the
/// input coupler (r) and the lumped rest of the round trip (a); detector
/// gain is in arbitrary volts, fixed downstream by calibration.
struct PDHParams {
  double mod_angular_freq_rad_s = 2.0 * constants::pi * 15.0e6;
  double mod_depth_rad = 1.0;
  double input_coupler_reflectivity = 0.99994764149321859;  // finesse 30000
  double round_trip_amplitude = 0.99994764149321859;
  double detector_gain = 1.0;

  /// Symmetric lossless mapping from a quoted finesse: r = a with
  /// pi * r / (1 - r^2) = finesse.
  static double mirror_amplitude_for_finesse(double finesse) {
    if (!(finesse >= 1.0))
      throw InvalidParameterError("finesse must be >= 1");
    const double pi = constants::pi;
    return (-pi + std::sqrt(pi * pi + 4.0 * finesse * finesse)) /
           (2.0 * finesse);
  }

  static PDHParams for_finesse(double finesse) {
    PDHParams p;
    p.input_coupler_reflectivity = mirror_amplitude_for_finesse(finesse);
    p.round_trip_amplitude = p.input_coupler_reflectivity;
    return p;
  }

  void validate() const {
    if (!(input_coupler_reflectivity > 0.0) ||
        !(input_coupler_reflectivity < 1.0))
      throw InvalidParameterError("input coupler reflectivity must be in (0,1)");
    if (!(round_trip_amplitude > 0.0) || !(round_trip_amplitude <= 1.0))
      throw InvalidParameterError("round-trip amplitude must be in (0,1]");
    if (!(mod_angular_freq_rad_s > 0.0))
      throw InvalidParameterError("modulation frequency must be positive");
    if (!(mod_depth_rad >= 0.0))
      throw InvalidParameterError("modulation depth must be >= 0");
  }

  /// Soft checks; the PDH linearization assumes the modulation frequency is
  /// far outside the cavity line.
  std::vector<std::string> warnings(const RingCavity& cavity) const {
    std::vector<std::string> w;
    const double f_mod = mod_angular_freq_rad_s / (2.0 * constants::pi);
    const double lw = linewidth_fwhm(cavity);
    if (f_mod < 10.0 * lw)
      w.push_back("PDH modulation frequency (" + std::to_string(f_mod) +
                  " Hz) is not large against the cavity linewidth (" +
                  std::to_string(lw) + " Hz); sidebands are not fully reflected");
    return w;
  }
};

/// Uniformly sampled real-valued series.
struct SampledSeries {
  double sample_rate_hz = 0.0;
  std::vector<double> samples;

  double duration_s() const {
    return sample_rate_hz > 0.0 ? samples.size() / sample_rate_hz : 0.0;
  }
};

/// Steady-state amplitude reflection of the ring at a given carrier
/// detuning from resonance: (r - a e^{i phi}) / (1 - r a e^{i phi}),
/// phi = 2 pi detuning / FSR. |result| <= 1 always.
inline std::complex<double> reflection_coefficient(const RingCavity& cavity,
                                                   const PDHParams& pdh,
                                                   double detuning_hz) {
  cavity.validate();
  pdh.validate();
  const double r = pdh.input_coupler_reflectivity;
  const double a = pdh.round_trip_amplitude;
  const double phi =
      2.0 * constants::pi * detuning_hz / free_spectral_range(cavity);
  const std::complex<double> e = std::polar(1.0, phi);
  return (r - a * e) / (1.0 - r * a * e);
}

namespace detail {

// Precomputed PDH response; evaluating the error signal sample by sample
// must not redo Bessel functions or parameter validation.
class PdhResponse {
public:
  PdhResponse(const RingCavity& cavity, const PDHParams& pdh) {
    cavity.validate();
    pdh.validate();
    r_ = pdh.input_coupler_reflectivity;
    a_ = pdh.round_trip_amplitude;
    fsr_ = free_spectral_range(cavity);
    sideband_hz_ = pdh.mod_angular_freq_rad_s / (2.0 * constants::pi);
    const double beta = pdh.mod_depth_rad;
    scale_ = pdh.detector_gain * 2.0 * std::cyl_bessel_j(0, beta) *
             std::cyl_bessel_j(1, beta);
  }

  std::complex<double> reflection(double detuning_hz) const {
    const double phi = 2.0 * constants::pi * detuning_hz / fsr_;
    const std::complex<double> e = std::polar(1.0, phi);
    return (r_ - a_ * e) / (1.0 - r_ * a_ * e);
  }

  // Demodulated-at-Omega error signal for a carrier at `detuning_hz` with
  // one sideband pair. Odd in detuning, zero on resonance. The sign makes
  // the slope at resonance positive for the default parameters.
  double error(double detuning_hz) const {
    const std::complex<double> fc = reflection(detuning_hz);
    const std::complex<double> fp = reflection(detuning_hz + sideband_hz_);
    const std::complex<double> fm = reflection(detuning_hz - sideband_hz_);
    const std::complex<double> chi = fc * std::conj(fp) - std::conj(fc) * fm;
    return -scale_ * chi.imag();
  }

private:
  double r_, a_, fsr_, sideband_hz_, scale_;
};

}  // namespace detail

/// PDH error signal (V) at a given ccw-beam detuning.
inline double pdh_error(const RingCavity& cavity, const PDHParams& pdh,
                        double detuning_hz) {
  return detail::PdhResponse(cavity, pdh).error(detuning_hz);
}

/// Slope of the error signal at resonance, V/Hz, by central finite
/// difference with step linewidth / 1000. This is the conversion constant
/// the calibration fixes in the real chain.
inline double pdh_discriminant(const RingCavity& cavity, const PDHParams& pdh) {
  const detail::PdhResponse resp(cavity, pdh);
  const double h = linewidth_fwhm(cavity) / 1000.0;
  const double d = (resp.error(h) - resp.error(-h)) / (2.0 * h);
  if (!std::isfinite(d))
    throw InvalidParameterError("PDH discriminant is not finite");
  // A dead chain (no sidebands or no detector gain) legitimately reads 0;
  // a vanishing slope with live modulation and gain is a degenerate optical
  // configuration.
  if (d == 0.0 && pdh.mod_depth_rad > 0.0 && pdh.detector_gain != 0.0)
    throw InvalidParameterError(
        "degenerate PDH configuration: error-signal slope vanishes at resonance");
  return d;
}

/// Dual-phase lock-in. Output is scaled so a matched pure tone
/// A sin(2 pi f t + reference_phase) reads in_phase = A.
struct LockInParams {
  double reference_freq_hz = 18.5;
  double time_constant_s = 10.0;
  int filter_order = 4;
  double reference_phase_rad = 0.0;

  void validate() const {
    if (!(reference_freq_hz > 0.0))
      throw InvalidParameterError("lock-in reference frequency must be positive");
    if (!(time_constant_s > 0.0))
      throw InvalidParameterError("lock-in time constant must be positive");
    if (filter_order < 1 || filter_order > 8)
      throw InvalidParameterError("lock-in filter order must be in [1,8]");
  }

  /// One-sided equivalent noise bandwidth of the cascaded single-pole
  /// low-pass, I_k / (2 pi tau) with I_k = int dx (1+x^2)^-k.
  double noise_bandwidth_hz() const {
    double ik = constants::pi / 2.0;
    for (int k = 2; k <= filter_order; ++k)
      ik *= (2.0 * k - 3.0) / (2.0 * k - 2.0);
    return ik / (2.0 * constants::pi * time_constant_s);
  }
};

struct LockInResult {
  double in_phase;    // mean settled I output
  double quadrature;  // mean settled Q output
  double sigma;       // standard error of in_phase
  std::size_t settled_samples;
};

/// Demodulate a series at the reference frequency: remove the series mean
/// (the instrument input is AC coupled; the locked error signal carries a
/// DC offset thousands of times the split signal, and its settling
/// transient would otherwise leak into the output), multiply by the
/// sin/cos references, run the low-pass cascade, discard the first 10 time
/// constants, and return the settled mean with its standard error. The
/// standard error accounts for the filter correlation through the cascade
/// noise bandwidth.
inline LockInResult lock_in_demodulate(const SampledSeries& series,
                                       const LockInParams& params) {
  params.validate();
  if (!(series.sample_rate_hz > 0.0))
    throw InvalidParameterError("series sample rate must be positive");
  if (params.reference_freq_hz >= series.sample_rate_hz / 2.0)
    throw InvalidParameterError("lock-in reference frequency is above Nyquist");
  if (series.duration_s() < 10.0 * params.time_constant_s)
    throw InsufficientDataError(
        "series shorter than 10 lock-in time constants");

  const double rate = series.sample_rate_hz;
  const double dt = 1.0 / rate;
  const double pole = std::exp(-dt / params.time_constant_s);
  const double gain = 1.0 - pole;
  const int order = params.filter_order;

  std::vector<double> i_state(order, 0.0), q_state(order, 0.0);
  const std::size_t n = series.samples.size();
  const std::size_t n_settle =
      static_cast<std::size_t>(std::ceil(10.0 * params.time_constant_s * rate));
  if (n_settle + 2 > n)
    throw InsufficientDataError("no settled samples after the 10-tau discard");

  double dc = 0.0;
  for (double x : series.samples) dc += x;
  dc /= static_cast<double>(n);

  const double w = 2.0 * constants::pi * params.reference_freq_hz;
  double sum_i = 0.0, sum_q = 0.0, sum_ii = 0.0;
  std::size_t kept = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = k * dt;
    const double ref_s = std::sin(w * t + params.reference_phase_rad);
    const double ref_c = std::cos(w * t + params.reference_phase_rad);
    const double x = series.samples[k] - dc;
    double vi = 2.0 * x * ref_s;
    double vq = 2.0 * x * ref_c;
    for (int s = 0; s < order; ++s) {
      i_state[s] += gain * (vi - i_state[s]);
      vi = i_state[s];
      q_state[s] += gain * (vq - q_state[s]);
      vq = q_state[s];
    }
    if (k >= n_settle) {
      sum_i += vi;
      sum_q += vq;
      sum_ii += vi * vi;
      ++kept;
    }
  }

  const double mean_i = sum_i / kept;
  const double mean_q = sum_q / kept;
  // Effective independent sample count of the settled window: 2 B T, with
  // B the cascade noise bandwidth. The -1 removes the first-order bias of
  // the sample variance around the window mean.
  const double settled_t = kept * dt;
  const double n_eff = 2.0 * params.noise_bandwidth_hz() * settled_t;
  const double var = std::max(sum_ii / kept - mean_i * mean_i, 0.0);
  const double sigma = std::sqrt(var / std::max(n_eff - 1.0, 1.0));
  return LockInResult{mean_i, mean_q, sigma, kept};
}

/// Equivalent cw-ccw frequency-difference noise: white Gaussian of the
/// given amplitude spectral density plus a linear drift. Reproducible from
/// the seed alone.
struct NoiseModel {
  double white_split_noise_asd = 8.9e-3;  // Hz / sqrt(Hz)
  double drift_rate_hz_per_s = 0.0;
  std::uint64_t seed = 0;

  bool is_quiet() const {
    return white_split_noise_asd == 0.0 && drift_rate_hz_per_s == 0.0;
  }

  void validate() const {
    if (!(white_split_noise_asd >= 0.0))
      throw InvalidParameterError("noise ASD must be >= 0");
  }
};

/// Seeded split-noise series in Hz. White part has per-sample standard
/// deviation asd * sqrt(rate / 2), i.e. one-sided ASD `asd` up to Nyquist.
inline SampledSeries generate_noise(const NoiseModel& model, std::size_t n_samples,
                                    double sample_rate_hz) {
  model.validate();
  if (n_samples == 0)
    throw InvalidParameterError("noise series length must be positive");
  if (!(sample_rate_hz > 0.0))
    throw InvalidParameterError("sample rate must be positive");

  SampledSeries out;
  out.sample_rate_hz = sample_rate_hz;
  out.samples.resize(n_samples, 0.0);

  if (model.white_split_noise_asd > 0.0) {
    std::mt19937_64 rng(model.seed);
    std::normal_distribution<double> gauss(
        0.0, model.white_split_noise_asd * std::sqrt(sample_rate_hz / 2.0));
    for (double& s : out.samples) s = gauss(rng);
  }
  if (model.drift_rate_hz_per_s != 0.0) {
    const double dt = 1.0 / sample_rate_hz;
    for (std::size_t k = 0; k < n_samples; ++k)
      out.samples[k] += model.drift_rate_hz_per_s * k * dt;
  }
  return out;
}

/// Error-signal series produced by a known EOM-injected cw frequency
/// modulation: discriminant * (amplitude * sin(2 pi f t) + split noise).
/// This is the calibration standard of the chain.
inline SampledSeries eom_calibration_signal(double injected_split_amplitude_hz,
                                            double f_e_hz, double discriminant,
                                            double duration_s,
                                            double sample_rate_hz,
                                            const NoiseModel* noise = nullptr) {
  if (!(injected_split_amplitude_hz >= 0.0))
    throw InvalidParameterError("injected amplitude must be >= 0");
  if (!(sample_rate_hz > 0.0) || !(duration_s > 0.0))
    throw InvalidParameterError("duration and sample rate must be positive");

  const std::size_t n =
      static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  SampledSeries out;
  out.sample_rate_hz = sample_rate_hz;
  out.samples.resize(n);

  SampledSeries noise_series;
  if (noise != nullptr && !noise->is_quiet())
    noise_series = generate_noise(*noise, n, sample_rate_hz);

  const double w = 2.0 * constants::pi * f_e_hz;
  const double dt = 1.0 / sample_rate_hz;
  for (std::size_t k = 0; k < n; ++k) {
    double split = injected_split_amplitude_hz * std::sin(w * k * dt);
    if (!noise_series.samples.empty()) split += noise_series.samples[k];
    out.samples[k] = discriminant * split;
  }
  return out;
}

/// Frequency-stabilization loop model. ideal_lock pins the cw beam exactly
/// on resonance; full_loop runs a discrete PI controller with a first-order
/// actuator, to show that the residual servo error is common mode.
struct ServoParams {
  enum class Mode { ideal_lock, full_loop };

  Mode mode = Mode::ideal_lock;
  double proportional_gain = 0.0;  // Hz per V; 0 = auto-tune
  double integral_gain = 0.0;      // Hz per V s; 0 = auto-tune
  double actuator_bandwidth_hz = 200.0;
  double sample_rate_hz = 2000.0;

  void validate(double f_e_hz) const {
    if (proportional_gain < 0.0 || integral_gain < 0.0)
      throw InvalidParameterError("servo gains must be >= 0");
    if (!(actuator_bandwidth_hz > 0.0))
      throw InvalidParameterError("actuator bandwidth must be positive");
    if (!(sample_rate_hz > 2.0 * f_e_hz))
      throw InvalidParameterError(
          "sample rate must exceed twice the field-modulation frequency");
  }
};

}  // namespace menr
