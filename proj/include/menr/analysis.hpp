#pragma once

// Statistical pipeline and physics cross-checks: weighted fits and means,
// extraction of 2*eta with propagated uncertainties, the sign-table
// prediction, the fine-structure scaling comparison and the quantum-vacuum
// projection.

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "menr/errors.hpp"
#include "menr/experiment.hpp"
#include "menr/optics.hpp"

namespace menr {

struct FitResult {
  double slope = 0.0;  // Hz per (V/m)
  double sigma_slope = 0.0;
  double intercept = 0.0;  // Hz
  double sigma_intercept = 0.0;
  double chi2_per_dof = 0.0;
  std::size_t n_points = 0;
};

/// Inverse-variance weighted least squares of delta_nu vs E. Fits slope
/// and intercept by default; the intercept guards against offset
/// systematics even though the model passes through the origin. Parameter
/// sigmas come from the normal-equations covariance and do not absorb
/// chi2.
inline FitResult weighted_linear_fit(const MeasurementSeries& series,
                                     bool through_origin = false) {
  const auto& pts = series.points;
  if (pts.size() < 2)
    throw InsufficientDataError("fit needs at least 2 points");
  for (const auto& p : pts)
    if (!(p.sigma_hz > 0.0))
      throw InvalidParameterError("fit points must carry positive sigma");

  double sw = 0.0, swx = 0.0;
  for (const auto& p : pts) {
    const double w = 1.0 / (p.sigma_hz * p.sigma_hz);
    sw += w;
    swx += w * p.e_amplitude_v_per_m;
  }
  const double xbar = swx / sw;

  // Centered accumulation keeps the normal equations well conditioned for
  // E values in the 1e5 range.
  double sxx = 0.0, sxy = 0.0, sy = 0.0;
  for (const auto& p : pts) {
    const double w = 1.0 / (p.sigma_hz * p.sigma_hz);
    const double dx = p.e_amplitude_v_per_m - xbar;
    sxx += w * dx * dx;
    sxy += w * dx * p.delta_nu_hz;
    sy += w * p.delta_nu_hz;
  }

  FitResult fit;
  fit.n_points = pts.size();

  if (through_origin) {
    double sx2 = 0.0, sxy0 = 0.0;
    for (const auto& p : pts) {
      const double w = 1.0 / (p.sigma_hz * p.sigma_hz);
      sx2 += w * p.e_amplitude_v_per_m * p.e_amplitude_v_per_m;
      sxy0 += w * p.e_amplitude_v_per_m * p.delta_nu_hz;
    }
    if (!(sx2 > 0.0))
      throw SingularFitError("all field values are zero");
    fit.slope = sxy0 / sx2;
    fit.sigma_slope = std::sqrt(1.0 / sx2);
    fit.intercept = 0.0;
    fit.sigma_intercept = 0.0;
    double chi2 = 0.0;
    for (const auto& p : pts) {
      const double r = (p.delta_nu_hz - fit.slope * p.e_amplitude_v_per_m) /
                       p.sigma_hz;
      chi2 += r * r;
    }
    fit.chi2_per_dof = pts.size() > 1 ? chi2 / (pts.size() - 1) : 0.0;
    return fit;
  }

  if (!(sxx > 0.0))
    throw SingularFitError("all field values are identical");

  fit.slope = sxy / sxx;
  fit.intercept = sy / sw - fit.slope * xbar;
  fit.sigma_slope = std::sqrt(1.0 / sxx);
  fit.sigma_intercept = std::sqrt(1.0 / sw + xbar * xbar / sxx);

  double chi2 = 0.0;
  for (const auto& p : pts) {
    const double model = fit.intercept + fit.slope * p.e_amplitude_v_per_m;
    const double r = (p.delta_nu_hz - model) / p.sigma_hz;
    chi2 += r * r;
  }
  fit.chi2_per_dof = pts.size() > 2 ? chi2 / (pts.size() - 2) : 0.0;
  return fit;
}

struct WeightedValue {
  double value = 0.0;
  double sigma = 0.0;
};

/// Inverse-variance weighted mean: mean = sum(x/s^2)/sum(1/s^2),
/// sigma = (sum 1/s^2)^(-1/2).
inline WeightedValue weighted_mean(const std::vector<WeightedValue>& values) {
  if (values.empty())
    throw InsufficientDataError("weighted mean of an empty set");
  double sw = 0.0, swx = 0.0;
  for (const auto& v : values) {
    if (!(v.sigma > 0.0))
      throw InvalidParameterError("weighted mean needs positive sigmas");
    const double w = 1.0 / (v.sigma * v.sigma);
    sw += w;
    swx += w * v.value;
  }
  return WeightedValue{swx / sw, std::sqrt(1.0 / sw)};
}

struct EtaEstimate {
  double value = 0.0;  // |2 eta|, m V^-1 T^-1
  int sign_relative = 0;
  double sigma_stat = 0.0;
  double sigma_calib = 0.0;
  double sigma_fields = 0.0;
  double sigma_total = 0.0;
};

/// Back-computed from the published quadrature, not a measured quantity:
/// sqrt(1.0^2 - 0.4^2) / 4.7 of the final value is attributed to the
/// field-determination uncertainty.
inline constexpr double default_fields_rel_sigma = 0.195;

/// Convert a fitted slope into the material constant with the full error
/// budget: statistical (from the fit), calibration and field-determination
/// terms combined in quadrature.
inline EtaEstimate extract_eta(const FitResult& fit, const RingCavity& cavity,
                               const RodAssembly& assembly,
                               double calib_rel_sigma,
                               double fields_rel_sigma = default_fields_rel_sigma) {
  if (!(calib_rel_sigma >= 0.0) || !(fields_rel_sigma >= 0.0))
    throw InvalidParameterError("relative sigmas must be >= 0");
  const SlopeEta se = eta_from_slope(fit.slope, cavity, assembly);
  EtaEstimate est;
  est.value = se.magnitude;
  est.sign_relative = se.sign_relative;
  // The slope-to-eta map is linear, so the statistical sigma maps the same
  // way as the value.
  est.sigma_stat = eta_from_slope(fit.sigma_slope, cavity, assembly).magnitude;
  est.sigma_calib = calib_rel_sigma * est.value;
  est.sigma_fields = fields_rel_sigma * est.value;
  est.sigma_total =
      std::sqrt(est.sigma_stat * est.sigma_stat + est.sigma_calib * est.sigma_calib +
                est.sigma_fields * est.sigma_fields);
  return est;
}

/// Predicted relative splitting of a sign configuration against the
/// all-plus reference: (1/4) sum_i sign_E,i * sign_B,i.
inline double relative_effect(const std::array<int, 4>& sign_e,
                              const std::array<int, 4>& sign_b) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (std::abs(sign_e[i]) > 1 || std::abs(sign_b[i]) > 1)
      throw InvalidParameterError("signs must be -1, 0 or +1");
    s += sign_e[i] * sign_b[i];
  }
  return s / 4.0;
}

/// Benchmark electro- and magneto-optical constants of the gas, with
/// provenance tags. Defaults are the published N2 values at atmospheric
/// pressure and ambient temperature.
struct ConstantsTable {
  double kerr_m2_per_v2 = 1.4e-25;
  double cotton_mouton_per_t2 = -2.1e-13;
  double mejb_m_per_v_t = 9.0e-23;
  double menr_parallel_m_per_v_t = 4.7e-23;
  std::string kerr_source = "experimental";
  std::string cotton_mouton_source = "experimental";
  std::string mejb_source = "computed";
  std::string menr_source = "experimental";
};

struct AlphaRatio {
  double predicted_m_per_v_t = 0.0;  // alpha * sqrt(Kerr * |CM|)
  double suppression_factor = 0.0;   // predicted / measured MENR
};

/// The dimensional-analysis expectation that bilinear magneto-electric
/// constants sit near alpha times the geometric mean of the quadratic
/// effects, and how far below it the measured constant falls.
inline AlphaRatio alpha_ratio_check(const ConstantsTable& table,
                                    double alpha = constants::fine_structure_alpha) {
  if (!(table.kerr_m2_per_v2 >= 0.0))
    throw InvalidParameterError("Kerr constant must be >= 0");
  if (table.kerr_m2_per_v2 > 0.0 && table.cotton_mouton_per_t2 == 0.0)
    throw InvalidParameterError("Cotton-Mouton constant must be nonzero");
  AlphaRatio out;
  out.predicted_m_per_v_t =
      alpha * std::sqrt(table.kerr_m2_per_v2 * std::abs(table.cotton_mouton_per_t2));
  if (out.predicted_m_per_v_t == 0.0) {
    out.suppression_factor = 0.0;
    return out;
  }
  if (table.menr_parallel_m_per_v_t == 0.0)
    throw UndefinedRatioError("suppression factor undefined for zero MENR constant");
  out.suppression_factor = out.predicted_m_per_v_t / table.menr_parallel_m_per_v_t;
  return out;
}

struct VacuumProjection {
  double target_delta_n = 0.0;
  double target_delta_nu_hz = 0.0;
  double required_time_s = 0.0;
  bool resolvable = true;  // false flags the infinite-time case
};

/// Scale the measured in-rod index difference down to the vacuum target
/// and estimate the white-noise averaging time to reach it at SNR 1.
/// `filling_factor` is the fraction of the target cavity perimeter exposed
/// to the fields.
inline VacuumProjection vacuum_projection(double measured_delta_n,
                                          double suppression,
                                          const RingCavity& cavity_target,
                                          double noise_floor_asd_hz_rt_hz,
                                          double filling_factor = 0.5) {
  if (!(suppression > 0.0))
    throw InvalidParameterError("suppression factor must be positive");
  if (!(noise_floor_asd_hz_rt_hz >= 0.0))
    throw InvalidParameterError("noise floor must be >= 0");
  if (!(filling_factor > 0.0) || !(filling_factor <= 1.0))
    throw InvalidParameterError("filling factor must be in (0,1]");
  cavity_target.validate();

  VacuumProjection out;
  out.target_delta_n = measured_delta_n / suppression;
  out.target_delta_nu_hz =
      cavity_target.optical_frequency_hz() * out.target_delta_n * filling_factor;
  if (out.target_delta_nu_hz == 0.0) {
    out.resolvable = false;
    out.required_time_s = std::numeric_limits<double>::infinity();
    return out;
  }
  const double ratio = noise_floor_asd_hz_rt_hz / out.target_delta_nu_hz;
  out.required_time_s = ratio * ratio;
  out.resolvable = true;
  return out;
}

struct DeltaNEstimate {
  double delta_n = 0.0;
  double sigma = 0.0;
};

/// Convert a measured splitting back into the per-rod index difference:
/// delta_n = (delta_nu / nu) * (L / sum of connected rod lengths).
inline DeltaNEstimate smallest_resolvable_delta_n(const RunResult& run,
                                                  const RingCavity& cavity,
                                                  const RodAssembly& assembly) {
  cavity.validate();
  assembly.validate();
  const int connected = assembly.connected_count();
  if (connected == 0)
    throw UnsupportedConfigurationError(
        "no connected rods: the splitting carries no index information");
  const double rod_l = assembly.common_length_m();
  const double scale =
      cavity.perimeter_m / (connected * rod_l) / cavity.optical_frequency_hz();
  return DeltaNEstimate{run.delta_nu_fe_hz * scale, run.sigma_stat_hz * scale};
}

}  // namespace menr
