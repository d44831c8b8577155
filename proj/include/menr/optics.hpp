#pragma once

// Closed-form optics of the ring-cavity magneto-electric non-reciprocity
// (MENR) instrument: cavity spectral quantities, the Sagnac splitting, the
// bilinear index model over the E x B rod assembly, and the conversion
// between resonance splitting and the material constant 2*eta.

#include <array>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>

#include "menr/constants.hpp"
#include "menr/errors.hpp"

namespace menr {

/// Square ring resonator. Lengths in m, wavelength in m.
struct RingCavity {
  double perimeter_m = 1.6;
  double arm_m = 0.4;
  double finesse = 30000.0;
  double wavelength_m = 1.064e-6;

  static RingCavity square(double arm_m, double finesse, double wavelength_m) {
    return RingCavity{4.0 * arm_m, arm_m, finesse, wavelength_m};
  }

  double optical_frequency_hz() const {
    return constants::speed_of_light / wavelength_m;
  }

  void validate() const {
    if (!(perimeter_m > 0.0))
      throw InvalidParameterError("cavity perimeter must be positive");
    if (!(arm_m > 0.0))
      throw InvalidParameterError("cavity arm length must be positive");
    if (!(wavelength_m > 0.0))
      throw InvalidParameterError("wavelength must be positive");
    if (!(finesse >= 1.0))
      throw InvalidParameterError("finesse must be >= 1");
    // Square geometry: perimeter = 4 * arm.
    if (std::abs(perimeter_m - 4.0 * arm_m) > 1e-9 * perimeter_m)
      throw InvalidParameterError("cavity is square: perimeter must equal 4 x arm length");
  }
};

/// One E x B field region. The electrodes can be connected either way or
/// left floating; sign_e / sign_b in {-1, 0, +1}, 0 meaning disconnected
/// (E) or absent (B). E magnitude is voltage / gap.
struct Rod {
  double length_m = 0.2;
  double b_field_t = 0.85;
  double gap_m = 4.0e-3;
  double voltage_v = 2000.0;
  int sign_b = +1;
  int sign_e = +1;

  double e_field_v_per_m() const { return voltage_v / gap_m; }

  void validate() const {
    if (!(length_m > 0.0))
      throw InvalidParameterError("rod length must be positive");
    if (!(b_field_t >= 0.0))
      throw InvalidParameterError("rod B magnitude must be >= 0");
    if (!(gap_m > 0.0))
      throw InvalidParameterError("rod electrode gap must be positive");
    if (std::abs(sign_b) > 1 || std::abs(sign_e) > 1)
      throw InvalidParameterError("rod signs must be -1, 0 or +1");
  }
};

/// The four-rod assembly along the cavity arms.
struct RodAssembly {
  std::array<Rod, 4> rods{};

  /// Reference orientation: all B up, all inner electrodes grounded.
  static RodAssembly aligned() { return RodAssembly{}; }

  static RodAssembly with_signs(const std::array<int, 4>& sign_e,
                                const std::array<int, 4>& sign_b) {
    RodAssembly a;
    for (int i = 0; i < 4; ++i) {
      a.rods[i].sign_e = sign_e[i];
      a.rods[i].sign_b = sign_b[i];
    }
    return a;
  }

  /// Sum of sign_e * sign_b over the rods; in [-4, +4].
  int signed_sum() const {
    int s = 0;
    for (const Rod& r : rods) s += r.sign_e * r.sign_b;
    return s;
  }

  /// Sum of sign_e * sign_b * B_i, the sensitivity weight of Eq-type
  /// splitting per unit E field and unit 2*eta.
  double signed_b_sum() const {
    double s = 0.0;
    for (const Rod& r : rods) s += r.sign_e * r.sign_b * r.b_field_t;
    return s;
  }

  /// Rods that actually contribute (both connections live).
  int connected_count() const {
    int n = 0;
    for (const Rod& r : rods)
      if (r.sign_e != 0 && r.sign_b != 0) ++n;
    return n;
  }

  /// All rods share one length in this hardware; mixed lengths are not
  /// representable by the per-field splitting formula.
  double common_length_m() const {
    double l = rods[0].length_m;
    for (const Rod& r : rods)
      if (std::abs(r.length_m - l) > 1e-12 * l)
        throw UnsupportedConfigurationError("rods must share a common length");
    return l;
  }

  void validate() const {
    for (const Rod& r : rods) r.validate();
  }
};

/// Gas under study. two_eta_parallel is the MENR constant for polarization
/// parallel to B, in m V^-1 T^-1; the perpendicular constant is carried but
/// unmeasured. Reference pressure/temperature in Pa / K.
struct GasMedium {
  std::string name = "N2";
  double two_eta_parallel = 4.7e-23;
  std::optional<double> two_eta_perp{};
  double pressure_pa = 101325.0;
  double temperature_k = 293.15;

  void validate() const {
    if (!(pressure_pa > 0.0))
      throw InvalidParameterError("gas pressure must be positive");
    if (!(temperature_k > 0.0))
      throw InvalidParameterError("gas temperature must be positive");
  }
};

/// Earth rotation input for the Sagnac splitting.
struct SagnacContext {
  double earth_rate_rad_s = constants::earth_rotation_rate;
  double latitude_rad = constants::default_latitude_rad;

  void validate() const {
    if (!(earth_rate_rad_s >= 0.0))
      throw InvalidParameterError("Earth rotation rate must be >= 0");
    if (std::abs(latitude_rad) > constants::pi / 2.0 + 1e-12)
      throw InvalidParameterError("|latitude| must be <= pi/2");
  }
};

/// FSR = c / perimeter.
inline double free_spectral_range(const RingCavity& cavity) {
  cavity.validate();
  return constants::speed_of_light / cavity.perimeter_m;
}

/// FWHM resonance width, FSR / finesse.
inline double linewidth_fwhm(const RingCavity& cavity) {
  cavity.validate();
  return free_spectral_range(cavity) / cavity.finesse;
}

/// DC cw-ccw resonance splitting from Earth rotation,
/// (L0 / lambda) * Omega_ER * cos(latitude).
inline double sagnac_split(const RingCavity& cavity, const SagnacContext& ctx) {
  cavity.validate();
  ctx.validate();
  return (cavity.arm_m / cavity.wavelength_m) * ctx.earth_rate_rad_s *
         std::cos(ctx.latitude_rad);
}

/// cw-ccw index difference inside one rod: sign_b * sign_e * 2eta * E * B.
inline double rod_delta_n(const Rod& rod, const GasMedium& gas) {
  rod.validate();
  gas.validate();
  return static_cast<double>(rod.sign_b * rod.sign_e) * gas.two_eta_parallel *
         rod.e_field_v_per_m() * rod.b_field_t;
}

namespace detail {

// nu * (L_rod / L) * sum_i sign_i * 2eta * E_i * B_i with a caller-chosen
// per-rod E field magnitude.
inline double cavity_split_impl(const RingCavity& cavity,
                                const RodAssembly& assembly,
                                const GasMedium& gas, bool common_field,
                                double e_field_v_per_m) {
  cavity.validate();
  assembly.validate();
  gas.validate();
  const double rod_l = assembly.common_length_m();
  double dn_sum = 0.0;
  for (const Rod& r : assembly.rods) {
    const double e = common_field ? e_field_v_per_m : r.e_field_v_per_m();
    dn_sum += static_cast<double>(r.sign_b * r.sign_e) * gas.two_eta_parallel *
              e * r.b_field_t;
  }
  return cavity.optical_frequency_hz() * (rod_l / cavity.perimeter_m) * dn_sum;
}

}  // namespace detail

/// MENR-induced cw-ccw resonance splitting at the rods' own static field
/// values: nu * (L_rod / L) * sum_i dn_i.
inline double cavity_split(const RingCavity& cavity, const RodAssembly& assembly,
                           const GasMedium& gas) {
  return detail::cavity_split_impl(cavity, assembly, gas, false, 0.0);
}

/// Splitting when every connected rod sees the same |E| (one HV supply
/// driving all rods, signs per connection).
inline double cavity_split_at_field(const RingCavity& cavity,
                                    const RodAssembly& assembly,
                                    const GasMedium& gas,
                                    double e_field_v_per_m) {
  return detail::cavity_split_impl(cavity, assembly, gas, true, e_field_v_per_m);
}

/// d(splitting)/dE for a common drive field, Hz per (V/m).
inline double split_slope_per_field(const RingCavity& cavity,
                                    const RodAssembly& assembly,
                                    const GasMedium& gas) {
  return detail::cavity_split_impl(cavity, assembly, gas, true, 1.0);
}

struct SlopeEta {
  double magnitude;        // |2 eta|, m V^-1 T^-1
  int sign_relative;       // sign vs the all-aligned reference orientation
};

/// Invert a fitted splitting-vs-E slope into |2 eta|:
/// |slope| / nu * (L / L_rod) / |sum_i sign_i B_i|.
/// The absolute sign is not fixed by the instrument; what is well defined
/// is the sign relative to the reference rod orientation, reported
/// separately.
inline SlopeEta eta_from_slope(double slope_hz_per_v_per_m,
                               const RingCavity& cavity,
                               const RodAssembly& assembly) {
  cavity.validate();
  assembly.validate();
  const double rod_l = assembly.common_length_m();
  const double b_sum = assembly.signed_b_sum();
  if (b_sum == 0.0)
    throw UnsupportedConfigurationError(
        "rod configuration is insensitive: signed B sum is zero, the "
        "splitting does not depend on 2eta");
  const double mag = std::abs(slope_hz_per_v_per_m) /
                     cavity.optical_frequency_hz() *
                     (cavity.perimeter_m / rod_l) / std::abs(b_sum);
  int sign = 0;
  if (slope_hz_per_v_per_m != 0.0)
    sign = (slope_hz_per_v_per_m / b_sum > 0.0) ? +1 : -1;
  return SlopeEta{mag, sign};
}

struct GasState {
  double pressure_pa;
  double temperature_k;
};

/// Ideal-gas number-density rescaling of any per-molecule optical constant:
/// value * (P_to / P_from) * (T_from / T_to).
inline double ideal_gas_rescale(double value, const GasState& from,
                                const GasState& to) {
  if (!(from.pressure_pa > 0.0) || !(to.pressure_pa > 0.0))
    throw InvalidParameterError("gas rescale: pressures must be positive");
  if (!(from.temperature_k > 0.0) || !(to.temperature_k > 0.0))
    throw InvalidParameterError("gas rescale: temperatures must be positive");
  return value * (to.pressure_pa / from.pressure_pa) *
         (from.temperature_k / to.temperature_k);
}

}  // namespace menr
