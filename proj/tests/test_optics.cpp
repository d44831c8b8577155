#include <catch2/catch_amalgamated.hpp>

#include "menr/optics.hpp"

using namespace menr;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

RingCavity default_cavity() { return RingCavity{}; }

}  // namespace

TEST_CASE("free spectral range") {
  RingCavity cavity = default_cavity();
  CHECK_THAT(free_spectral_range(cavity), WithinRel(187370286.25, 1e-12));

  cavity = RingCavity::square(constants::speed_of_light / 4.0, 1000.0, 1.064e-6);
  CHECK_THAT(free_spectral_range(cavity), WithinRel(1.0, 1e-12));

  RingCavity half = RingCavity::square(0.2, 30000.0, 1.064e-6);
  CHECK_THAT(free_spectral_range(half),
             WithinRel(2.0 * free_spectral_range(default_cavity()), 1e-12));

  RingCavity bad = default_cavity();
  bad.perimeter_m = -1.0;
  bad.arm_m = -0.25;
  CHECK_THROWS_AS(free_spectral_range(bad), InvalidParameterError);
}

TEST_CASE("linewidth from finesse") {
  RingCavity cavity = default_cavity();
  cavity.finesse = 15000.0;
  CHECK_THAT(linewidth_fwhm(cavity), WithinRel(12491.352416666667, 1e-12));
  cavity.finesse = 50000.0;
  CHECK_THAT(linewidth_fwhm(cavity), WithinRel(3747.405725, 1e-12));

  cavity.finesse = free_spectral_range(cavity);
  CHECK_THAT(linewidth_fwhm(cavity), WithinRel(1.0, 1e-12));

  cavity.finesse = 0.5;
  CHECK_THROWS_AS(linewidth_fwhm(cavity), InvalidParameterError);
}

TEST_CASE("linewidth times finesse is the free spectral range") {
  for (double f : {1.0, 17.3, 15000.0, 30000.0, 50000.0}) {
    RingCavity cavity = default_cavity();
    cavity.finesse = f;
    CHECK_THAT(linewidth_fwhm(cavity) * f,
               WithinRel(free_spectral_range(cavity), 1e-12));
  }
}

TEST_CASE("Sagnac splitting") {
  RingCavity cavity = default_cavity();
  SagnacContext ctx;
  CHECK_THAT(sagnac_split(cavity, ctx), WithinRel(20.04930810564289, 1e-12));

  SECTION("vanishes at the pole and without rotation") {
    ctx.latitude_rad = constants::pi / 2.0;
    CHECK_THAT(sagnac_split(cavity, ctx), WithinAbs(0.0, 1e-12));
    ctx = SagnacContext{};
    ctx.earth_rate_rad_s = 0.0;
    CHECK(sagnac_split(cavity, ctx) == 0.0);
  }

  SECTION("linear in rate and cos latitude") {
    SagnacContext twice = ctx;
    twice.earth_rate_rad_s *= 2.0;
    CHECK_THAT(sagnac_split(cavity, twice),
               WithinRel(2.0 * sagnac_split(cavity, ctx), 1e-12));

    SagnacContext equator = ctx;
    equator.latitude_rad = 0.0;
    CHECK_THAT(sagnac_split(cavity, ctx),
               WithinRel(sagnac_split(cavity, equator) *
                             std::cos(ctx.latitude_rad),
                         1e-12));
  }

  SECTION("latitude bound enforced") {
    ctx.latitude_rad = 2.0;
    CHECK_THROWS_AS(sagnac_split(cavity, ctx), InvalidParameterError);
  }
}

TEST_CASE("per-rod index difference") {
  Rod rod;  // 2 kV over 4 mm, 0.85 T
  GasMedium gas;
  CHECK_THAT(rod.e_field_v_per_m(), WithinRel(5.0e5, 1e-12));
  CHECK_THAT(rod_delta_n(rod, gas), WithinRel(1.9975e-17, 1e-12));

  SECTION("disconnected rod contributes nothing") {
    rod.sign_e = 0;
    CHECK(rod_delta_n(rod, gas) == 0.0);
  }

  SECTION("only the sign product matters") {
    Rod pm = rod, mp = rod;
    pm.sign_e = +1;
    pm.sign_b = -1;
    mp.sign_e = -1;
    mp.sign_b = +1;
    CHECK(rod_delta_n(pm, gas) == rod_delta_n(mp, gas));
    CHECK(rod_delta_n(pm, gas) == -rod_delta_n(rod, gas));
  }
}

TEST_CASE("cavity splitting, forward direction") {
  RingCavity cavity = default_cavity();
  RodAssembly assembly = RodAssembly::aligned();
  GasMedium gas;

  CHECK_THAT(cavity_split(cavity, assembly, gas),
             WithinRel(2.814076291611842e-3, 1e-12));
  CHECK_THAT(cavity_split_at_field(cavity, assembly, gas, 5.0e5),
             WithinRel(cavity_split(cavity, assembly, gas), 1e-12));

  SECTION("single rod gives exactly a quarter") {
    RodAssembly one = assembly;
    for (int i = 1; i < 4; ++i) one.rods[i].sign_e = 0;
    CHECK_THAT(cavity_split(cavity, one, gas),
               WithinRel(cavity_split(cavity, assembly, gas) / 4.0, 1e-12));
  }

  SECTION("pairwise-canceling configurations read zero") {
    RodAssembly null1 =
        RodAssembly::with_signs({+1, -1, 0, 0}, {+1, +1, +1, +1});
    RodAssembly null2 =
        RodAssembly::with_signs({+1, +1, +1, +1}, {+1, +1, -1, -1});
    CHECK(cavity_split(cavity, null1, gas) == 0.0);
    CHECK(cavity_split(cavity, null2, gas) == 0.0);
  }

  SECTION("mixed rod lengths are rejected") {
    assembly.rods[2].length_m = 0.21;
    CHECK_THROWS_AS(cavity_split(cavity, assembly, gas),
                    UnsupportedConfigurationError);
  }
}

TEST_CASE("splitting is antisymmetric under a global field flip") {
  RingCavity cavity = default_cavity();
  GasMedium gas;
  const std::array<std::array<int, 4>, 3> e_configs{
      {{+1, +1, +1, +1}, {+1, +1, -1, 0}, {0, +1, 0, -1}}};
  const std::array<std::array<int, 4>, 2> b_configs{
      {{+1, +1, +1, +1}, {+1, +1, -1, -1}}};
  for (const auto& se : e_configs)
    for (const auto& sb : b_configs) {
      RodAssembly fwd = RodAssembly::with_signs(se, sb);
      auto flipped = se;
      for (int& s : flipped) s = -s;
      RodAssembly rev = RodAssembly::with_signs(flipped, sb);
      CHECK(cavity_split(cavity, fwd, gas) == -cavity_split(cavity, rev, gas));
    }
}

TEST_CASE("splitting is additive over rods") {
  RingCavity cavity = default_cavity();
  GasMedium gas;
  RodAssembly assembly = RodAssembly::with_signs({+1, -1, +1, 0}, {+1, +1, -1, -1});
  assembly.rods[0].voltage_v = 1500.0;
  assembly.rods[1].voltage_v = 2500.0;

  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    RodAssembly solo = assembly;
    for (int j = 0; j < 4; ++j)
      if (j != i) solo.rods[j].sign_e = 0;
    sum += cavity_split(cavity, solo, gas);
  }
  CHECK_THAT(cavity_split(cavity, assembly, gas), WithinRel(sum, 1e-12));
}

TEST_CASE("slope inversion recovers the material constant") {
  RingCavity cavity = default_cavity();
  RodAssembly assembly = RodAssembly::aligned();

  SECTION("published-slope arithmetic") {
    const SlopeEta eta = eta_from_slope(-5.27e-9, cavity, assembly);
    CHECK_THAT(eta.magnitude, WithinRel(4.40091124640634e-23, 1e-12));
    CHECK(eta.sign_relative == -1);
  }

  SECTION("zero slope maps to zero") {
    const SlopeEta eta = eta_from_slope(0.0, cavity, assembly);
    CHECK(eta.magnitude == 0.0);
    CHECK(eta.sign_relative == 0);
  }

  SECTION("round trip through the forward model") {
    const std::array<std::array<int, 4>, 4> e_configs{
        {{+1, +1, +1, +1}, {-1, -1, -1, -1}, {+1, +1, -1, 0}, {+1, 0, 0, 0}}};
    GasMedium gas;
    for (const auto& se : e_configs) {
      RodAssembly a = RodAssembly::with_signs(se, {+1, +1, -1, -1});
      if (a.signed_b_sum() == 0.0) continue;
      const double slope = split_slope_per_field(cavity, a, gas);
      const SlopeEta eta = eta_from_slope(slope, cavity, a);
      CHECK_THAT(eta.magnitude, WithinRel(gas.two_eta_parallel, 1e-12));
    }
  }

  SECTION("insensitive configuration is rejected") {
    RodAssembly null = RodAssembly::with_signs({+1, -1, 0, 0}, {+1, +1, +1, +1});
    CHECK_THROWS_AS(eta_from_slope(1e-9, cavity, null),
                    UnsupportedConfigurationError);
  }
}

TEST_CASE("ideal-gas rescaling") {
  const GasState atm{101325.0, 293.15};
  const GasState ref{1.0e5, 300.0};

  CHECK(ideal_gas_rescale(4.7e-23, atm, atm) == 4.7e-23);
  CHECK_THAT(ideal_gas_rescale(1.0, GasState{1.0e5, 300.0}, GasState{2.0e5, 300.0}),
             WithinRel(2.0, 1e-12));
  CHECK_THAT(ideal_gas_rescale(9.0e-23, ref, atm),
             WithinRel(9.332338393314003e-23, 1e-12));

  SECTION("composition") {
    const GasState mid{5.0e4, 250.0};
    const double direct = ideal_gas_rescale(3.3e-13, ref, atm);
    const double via = ideal_gas_rescale(ideal_gas_rescale(3.3e-13, ref, mid),
                                         mid, atm);
    CHECK_THAT(via, WithinRel(direct, 1e-12));
  }

  SECTION("bad states rejected") {
    CHECK_THROWS_AS(ideal_gas_rescale(1.0, GasState{0.0, 300.0}, atm),
                    InvalidParameterError);
    CHECK_THROWS_AS(ideal_gas_rescale(1.0, atm, GasState{1e5, -1.0}),
                    InvalidParameterError);
  }
}

TEST_CASE("type invariants") {
  SECTION("cavity must be square") {
    RingCavity c = default_cavity();
    c.perimeter_m = 1.7;
    CHECK_THROWS_AS(c.validate(), InvalidParameterError);
  }
  SECTION("rod signs restricted") {
    Rod r;
    r.sign_e = 2;
    CHECK_THROWS_AS(r.validate(), InvalidParameterError);
  }
  SECTION("signed sum bounds") {
    CHECK(RodAssembly::aligned().signed_sum() == 4);
    CHECK(RodAssembly::with_signs({-1, -1, -1, -1}, {+1, +1, +1, +1})
              .signed_sum() == -4);
  }
  SECTION("connected count ignores half-connected rods") {
    RodAssembly a = RodAssembly::with_signs({+1, +1, 0, -1}, {+1, 0, +1, -1});
    CHECK(a.connected_count() == 2);
  }
}
