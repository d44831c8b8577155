#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "menr/signal.hpp"

using namespace menr;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SampledSeries tone(double amplitude, double freq_hz, double phase_rad,
                   double duration_s, double rate_hz) {
  SampledSeries s;
  s.sample_rate_hz = rate_hz;
  const std::size_t n = static_cast<std::size_t>(duration_s * rate_hz);
  s.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    s.samples[k] =
        amplitude * std::sin(2.0 * constants::pi * freq_hz * k / rate_hz +
                             phase_rad);
  return s;
}

LockInParams fast_lockin() {
  LockInParams p;
  p.reference_freq_hz = 18.5;
  p.time_constant_s = 0.25;
  p.filter_order = 4;
  return p;
}

}  // namespace

TEST_CASE("mirror amplitude mapping reproduces the finesse") {
  for (double f : {15000.0, 30000.0, 50000.0}) {
    const double r = PDHParams::mirror_amplitude_for_finesse(f);
    CHECK(r > 0.0);
    CHECK(r < 1.0);
    CHECK_THAT(constants::pi * r / (1.0 - r * r), WithinRel(f, 1e-9));
  }
}

TEST_CASE("cavity reflection response") {
  const RingCavity cavity;
  const PDHParams pdh = PDHParams::for_finesse(cavity.finesse);

  SECTION("impedance matched on resonance") {
    CHECK(std::abs(reflection_coefficient(cavity, pdh, 0.0)) < 1e-12);
  }

  SECTION("modulus bounded by one and symmetric") {
    const double fsr = free_spectral_range(cavity);
    for (double frac : {1e-6, 1e-4, 0.01, 0.1, 0.25, 0.5, 0.9}) {
      const double d = frac * fsr;
      const double mag = std::abs(reflection_coefficient(cavity, pdh, d));
      CHECK(mag <= 1.0 + 1e-12);
      CHECK_THAT(mag, WithinAbs(std::abs(reflection_coefficient(cavity, pdh, -d)),
                                1e-12));
    }
  }

  SECTION("anti-resonance is the reflection maximum") {
    const double fsr = free_spectral_range(cavity);
    const double anti = std::abs(reflection_coefficient(cavity, pdh, fsr / 2.0));
    for (double frac : {0.0, 0.1, 0.2, 0.3, 0.49})
      CHECK(std::abs(reflection_coefficient(cavity, pdh, frac * fsr)) <=
            anti + 1e-12);
  }
}

TEST_CASE("PDH error signal shape") {
  const RingCavity cavity;
  const PDHParams pdh = PDHParams::for_finesse(cavity.finesse);
  const double lw = linewidth_fwhm(cavity);

  CHECK(pdh_error(cavity, pdh, 0.0) == 0.0);

  SECTION("odd in detuning") {
    for (double d : {lw / 500.0, lw / 20.0, lw / 2.0, lw, 5.0 * lw}) {
      const double plus = pdh_error(cavity, pdh, d);
      const double minus = pdh_error(cavity, pdh, -d);
      CHECK_THAT(plus + minus, WithinAbs(0.0, 1e-12 * std::abs(plus)));
    }
  }

  SECTION("linear near resonance against the discriminant") {
    const double d0 = pdh_discriminant(cavity, pdh);
    CHECK(d0 > 0.0);
    for (double frac : {0.001, 0.01, 0.02, 0.05}) {
      const double d = frac * lw;
      CHECK_THAT(pdh_error(cavity, pdh, d), WithinRel(d0 * d, 0.01));
    }
  }
}

TEST_CASE("PDH discriminant") {
  const RingCavity cavity;
  PDHParams pdh = PDHParams::for_finesse(cavity.finesse);
  const double base = pdh_discriminant(cavity, pdh);

  SECTION("linear in detector gain") {
    pdh.detector_gain = 2.0;
    CHECK_THAT(pdh_discriminant(cavity, pdh), WithinRel(2.0 * base, 1e-12));
  }

  SECTION("grows with finesse") {
    RingCavity lo = cavity, hi = cavity;
    lo.finesse = 15000.0;
    hi.finesse = 50000.0;
    const double d_lo = pdh_discriminant(lo, PDHParams::for_finesse(15000.0));
    const double d_hi = pdh_discriminant(hi, PDHParams::for_finesse(50000.0));
    CHECK(std::abs(d_hi) > std::abs(d_lo));
  }

  SECTION("dead chain reads zero without flagging") {
    pdh.mod_depth_rad = 0.0;
    CHECK(pdh_discriminant(cavity, pdh) == 0.0);
    pdh = PDHParams::for_finesse(cavity.finesse);
    pdh.detector_gain = 0.0;
    CHECK(pdh_discriminant(cavity, pdh) == 0.0);
  }
}

TEST_CASE("lock-in recovers a matched tone") {
  const LockInParams params = fast_lockin();
  const SampledSeries s = tone(3.0, params.reference_freq_hz, 0.0, 10.0, 2000.0);
  const LockInResult r = lock_in_demodulate(s, params);
  CHECK_THAT(r.in_phase, WithinRel(3.0, 1e-3));
  CHECK_THAT(r.quadrature, WithinAbs(0.0, 3.0 * 1e-3));

  SECTION("any reference phase") {
    LockInParams shifted = params;
    shifted.reference_phase_rad = 1.1;
    const SampledSeries s2 =
        tone(3.0, params.reference_freq_hz, 1.1, 10.0, 2000.0);
    const LockInResult r2 = lock_in_demodulate(s2, shifted);
    CHECK_THAT(r2.in_phase, WithinRel(3.0, 1e-3));
  }

  SECTION("quadrature component lands in quadrature") {
    const SampledSeries s3 = tone(3.0, params.reference_freq_hz,
                                  constants::pi / 2.0, 10.0, 2000.0);
    const LockInResult r3 = lock_in_demodulate(s3, params);
    CHECK_THAT(r3.quadrature, WithinRel(3.0, 1e-3));
    CHECK_THAT(r3.in_phase, WithinAbs(0.0, 3.0 * 1e-3));
  }
}

TEST_CASE("lock-in rejects off-reference content") {
  const LockInParams params = fast_lockin();

  SECTION("second harmonic") {
    const SampledSeries s =
        tone(5.0, 2.0 * params.reference_freq_hz, 0.4, 10.0, 2000.0);
    const LockInResult r = lock_in_demodulate(s, params);
    CHECK(std::abs(r.in_phase) < 5.0 * 1e-3);
    CHECK(std::abs(r.quadrature) < 5.0 * 1e-3);
  }

  SECTION("DC offset") {
    SampledSeries s = tone(0.0, params.reference_freq_hz, 0.0, 10.0, 2000.0);
    for (double& v : s.samples) v = 7.0;
    const LockInResult r = lock_in_demodulate(s, params);
    CHECK(std::abs(r.in_phase) < 7.0 * 1e-3);
  }
}

TEST_CASE("lock-in preconditions") {
  const LockInParams params = fast_lockin();

  SECTION("short series") {
    const SampledSeries s = tone(1.0, 18.5, 0.0, 2.0, 2000.0);
    CHECK_THROWS_AS(lock_in_demodulate(s, params), InsufficientDataError);
  }

  SECTION("reference above Nyquist") {
    LockInParams bad = params;
    bad.reference_freq_hz = 1100.0;
    const SampledSeries s = tone(1.0, 18.5, 0.0, 10.0, 2000.0);
    CHECK_THROWS_AS(lock_in_demodulate(s, bad), InvalidParameterError);
  }

  SECTION("filter order bounds") {
    LockInParams bad = params;
    bad.filter_order = 9;
    CHECK_THROWS_AS(bad.validate(), InvalidParameterError);
  }
}

TEST_CASE("cascade noise bandwidth") {
  LockInParams p;
  p.time_constant_s = 10.0;
  const double expected[] = {0.025, 0.0125, 0.009375, 0.0078125};
  for (int order = 1; order <= 4; ++order) {
    p.filter_order = order;
    CHECK_THAT(p.noise_bandwidth_hz(), WithinRel(expected[order - 1], 1e-12));
  }
}

TEST_CASE("noise generation") {
  NoiseModel model;
  model.white_split_noise_asd = 8.9e-3;
  model.seed = 42;

  SECTION("deterministic in the seed") {
    const SampledSeries a = generate_noise(model, 10000, 2000.0);
    const SampledSeries b = generate_noise(model, 10000, 2000.0);
    CHECK(a.samples == b.samples);
    model.seed = 43;
    const SampledSeries c = generate_noise(model, 10000, 2000.0);
    CHECK(a.samples != c.samples);
  }

  SECTION("quiet model yields zeros") {
    NoiseModel quiet;
    quiet.white_split_noise_asd = 0.0;
    const SampledSeries s = generate_noise(quiet, 100, 2000.0);
    for (double v : s.samples) CHECK(v == 0.0);
  }

  SECTION("sample variance matches the spectral density") {
    const double rate = 2000.0;
    const SampledSeries s = generate_noise(model, 1000000, rate);
    double sum = 0.0, sum2 = 0.0;
    for (double v : s.samples) {
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / s.samples.size();
    const double var = sum2 / s.samples.size() - mean * mean;
    const double expected = model.white_split_noise_asd *
                            model.white_split_noise_asd * rate / 2.0;
    CHECK_THAT(var, WithinRel(expected, 0.05));
  }

  SECTION("drift adds a linear ramp") {
    NoiseModel drift;
    drift.white_split_noise_asd = 0.0;
    drift.drift_rate_hz_per_s = 2.0;
    const SampledSeries s = generate_noise(drift, 2001, 1000.0);
    CHECK(s.samples[0] == 0.0);
    CHECK_THAT(s.samples[2000], WithinRel(4.0, 1e-12));
  }
}

TEST_CASE("demodulated white noise: reported sigma tracks the ensemble") {
  // White split noise of ASD s demodulated over a settled window W has a
  // true standard error s / sqrt(W); the lock-in reports it from a single
  // record, so over an ensemble both the reported value and the empirical
  // scatter must sit near that analytic level.
  const double rate = 200.0;
  const double duration = 30.0;
  const double asd = 0.5;
  LockInParams params;
  params.reference_freq_hz = 20.0;
  params.time_constant_s = 0.25;
  params.filter_order = 4;

  const double settled = duration - 10.0 * params.time_constant_s;
  const double analytic = asd / std::sqrt(settled);

  NoiseModel model;
  model.white_split_noise_asd = asd;

  double mean_reported = 0.0, scatter2 = 0.0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    model.seed = 1000 + t;
    const std::size_t n = static_cast<std::size_t>(duration * rate);
    const SampledSeries s = generate_noise(model, n, rate);
    const LockInResult r = lock_in_demodulate(s, params);
    mean_reported += r.sigma;
    scatter2 += r.in_phase * r.in_phase;
  }
  mean_reported /= trials;
  const double scatter = std::sqrt(scatter2 / trials);

  CHECK(mean_reported / analytic > 1.0 / 1.2);
  CHECK(mean_reported / analytic < 1.2);
  CHECK(scatter / analytic > 1.0 / 1.2);
  CHECK(scatter / analytic < 1.2);
}

TEST_CASE("standard error scales as one over root duration") {
  const double rate = 200.0;
  const double asd = 0.5;
  LockInParams params;
  params.reference_freq_hz = 20.0;
  params.time_constant_s = 0.25;
  params.filter_order = 4;
  NoiseModel model;
  model.white_split_noise_asd = asd;

  auto ensemble_scatter = [&](double duration, int trials) {
    double s2 = 0.0;
    for (int t = 0; t < trials; ++t) {
      model.seed = 5000 + t;
      const std::size_t n = static_cast<std::size_t>(duration * rate);
      const SampledSeries s = generate_noise(model, n, rate);
      s2 += std::pow(lock_in_demodulate(s, params).in_phase, 2);
    }
    return std::sqrt(s2 / trials);
  };

  const double s_short = ensemble_scatter(20.0, 100);
  const double s_long = ensemble_scatter(72.5, 100);
  // Settled windows: 17.5 s vs 70 s, a factor 4, so the scatter should
  // halve.
  CHECK_THAT(s_short / s_long, WithinRel(2.0, 0.2));
}

TEST_CASE("calibration injection chain") {
  const RingCavity cavity;
  const PDHParams pdh = PDHParams::for_finesse(cavity.finesse);
  const double d0 = pdh_discriminant(cavity, pdh);
  LockInParams params = fast_lockin();

  SECTION("zero amplitude gives a null series") {
    const SampledSeries s =
        eom_calibration_signal(0.0, params.reference_freq_hz, d0, 5.0, 2000.0);
    for (double v : s.samples) CHECK(v == 0.0);
  }

  SECTION("demodulation inverts the chain") {
    const double amplitude = 10.0e-3;
    const SampledSeries s = eom_calibration_signal(
        amplitude, params.reference_freq_hz, d0, 10.0, 2000.0);
    const LockInResult r = lock_in_demodulate(s, params);
    CHECK_THAT(r.in_phase, WithinRel(d0 * amplitude, 1e-3));
  }

  SECTION("end-to-end linearity over the working range") {
    const double amplitudes[] = {12.5e-3, 25.0e-3, 50.0e-3, 100.0e-3};
    double ratio0 = 0.0;
    for (double a : amplitudes) {
      const SampledSeries s = eom_calibration_signal(
          a, params.reference_freq_hz, d0, 10.0, 2000.0);
      const double ratio = lock_in_demodulate(s, params).in_phase / a;
      if (ratio0 == 0.0) ratio0 = ratio;
      CHECK_THAT(ratio, WithinRel(ratio0, 1e-3));
    }
  }
}

TEST_CASE("parameter validation and warnings") {
  const RingCavity cavity;
  PDHParams pdh = PDHParams::for_finesse(cavity.finesse);

  SECTION("reflectivity bounds") {
    pdh.input_coupler_reflectivity = 1.0;
    CHECK_THROWS_AS(pdh.validate(), InvalidParameterError);
  }

  SECTION("slow modulation draws a warning") {
    PDHParams slow = PDHParams::for_finesse(cavity.finesse);
    slow.mod_angular_freq_rad_s = 2.0 * constants::pi * 1.0e4;
    CHECK_FALSE(slow.warnings(cavity).empty());
    CHECK(PDHParams::for_finesse(cavity.finesse).warnings(cavity).empty());
  }
}
