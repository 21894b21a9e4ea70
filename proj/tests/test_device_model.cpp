#include <cmath>
#include <numbers>
#include <random>

#include "gtest/gtest.h"

#include "jpo/device_model.hpp"
#include "jpo/errors.hpp"
#include "jpo/units.hpp"

using namespace jpo;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kOperatingBias = 0.185 * kPi;

// Reference values evaluated independently in 30-digit arithmetic from the closed forms.
constexpr double kBareAtZeroHz = 5.27065527065527e9;
constexpr double kQubitAtZeroFluxHz = 5.51254104838782e9;
constexpr double kBareAtBiasHz = 5.2190508958576e9;
constexpr double kDressedAtBiasHz = 5.22527050138433e9;
constexpr double kQubitAtBiasHz = 4.87883639336137e9;
constexpr double kDetuningAtBiasHz = -3.40214502496226e8;
constexpr double kTwoChiAtBiasHz = -7.10395812165104e6;
constexpr double kAlphaAtBiasHz = 27054.313863675;
constexpr double kBetaAtBias = 0.00869246328347618;
constexpr double kOutputRateAt200 = 2.56353960532927e9;
constexpr double kPurcellT1 = 4.11308073676736e-6;

DeviceParameters without_coupling() {
  DeviceParameters d = DeviceParameters::reference();
  d.coupling = 1e-30;
  return d;
}

}  // namespace

TEST(DeviceModel, BareResonatorAtZeroFlux) {
  const auto d = DeviceParameters::reference();
  EXPECT_NEAR(cyclic(bare_resonator_frequency(d, 0.0)) / kBareAtZeroHz, 1.0, 1e-12);
}

TEST(DeviceModel, BareResonatorWithoutParticipationIsQuarterWave) {
  auto d = DeviceParameters::reference();
  d.participation = 1e-300;
  for (double f : {0.0, 0.3, 1.2}) {
    EXPECT_NEAR(bare_resonator_frequency(d, f) / d.bare_frequency, 1.0, 1e-15);
  }
}

TEST(DeviceModel, BareResonatorDecreasesWithFlux) {
  const auto d = DeviceParameters::reference();
  double previous = bare_resonator_frequency(d, 0.0);
  for (int k = 1; k < 50; ++k) {
    const double f = 0.49 * kPi * k / 49.0;
    const double w = bare_resonator_frequency(d, f);
    EXPECT_LT(w, previous);
    EXPECT_DOUBLE_EQ(w, bare_resonator_frequency(d, -f));
    previous = w;
  }
}

TEST(DeviceModel, FluxDomainGuard) {
  const auto d = DeviceParameters::reference();
  EXPECT_THROW(bare_resonator_frequency(d, kPi / 2), DomainError);
  EXPECT_THROW(duffing_alpha(d, kPi / 2), DomainError);
  EXPECT_THROW(pump_induced_beta(d, 0.0), DomainError);
}

TEST(DeviceModel, OperatingBiasFrequencies) {
  const auto d = DeviceParameters::reference();
  EXPECT_NEAR(cyclic(bare_resonator_frequency(d, kOperatingBias)) / kBareAtBiasHz, 1.0, 1e-12);
  EXPECT_NEAR(cyclic(dressed_resonator_frequency(d, kOperatingBias)) / kDressedAtBiasHz, 1.0,
              1e-12);
  EXPECT_NEAR(cyclic(qubit_frequency(d, kOperatingBias)) / kQubitAtBiasHz, 1.0, 1e-12);
  EXPECT_NEAR(cyclic(qubit_resonator_detuning(d, kOperatingBias)) / kDetuningAtBiasHz, 1.0, 1e-11);
  EXPECT_NEAR(cyclic(2.0 * dispersive_shift(d, kOperatingBias)) / kTwoChiAtBiasHz, 1.0, 1e-10);
  EXPECT_NEAR(cyclic(duffing_alpha(d, kOperatingBias)) / kAlphaAtBiasHz, 1.0, 1e-12);
  EXPECT_NEAR(pump_induced_beta(d, kOperatingBias) / kBetaAtBias, 1.0, 1e-12);
  EXPECT_TRUE(in_dispersive_regime(d, kOperatingBias));
}

TEST(DeviceModel, OperatingBiasAgainstQuotedValues) {
  // Quoted device figures the fitted constants reproduce to within their rounding.
  const auto d = DeviceParameters::reference();
  EXPECT_NEAR(cyclic(qubit_frequency(d, kOperatingBias)), 4.885e9, 10e6);
  EXPECT_NEAR(cyclic(dressed_resonator_frequency(d, kOperatingBias)), 5.218e9, 10e6);
  EXPECT_NEAR(cyclic(qubit_resonator_detuning(d, kOperatingBias)), -334e6, 10e6);
  EXPECT_NEAR(cyclic(2.0 * dispersive_shift(d, kOperatingBias)), -7.258e6, 0.25e6);
  EXPECT_NEAR(cyclic(duffing_alpha(d, kOperatingBias)), 27e3, 1.5e3);
}

TEST(DeviceModel, QubitFrequencyAtZeroTransmonFlux) {
  auto d = DeviceParameters::reference();
  d.flux_map_offset = 0.0;
  EXPECT_NEAR(cyclic(qubit_frequency(d, 0.0)) / kQubitAtZeroFluxHz, 1.0, 1e-12);
}

TEST(DeviceModel, QubitFrequencyAtCosineZero) {
  auto d = DeviceParameters::reference();
  d.flux_map_offset = kPi / 2;
  EXPECT_NEAR(qubit_frequency(d, 0.0), -d.charging_energy, 1e-6 * d.charging_energy);
}

TEST(DeviceModel, DressedEqualsBareWithoutCoupling) {
  const auto d = without_coupling();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> flux(-0.45 * kPi, 0.45 * kPi);
  for (int k = 0; k < 100; ++k) {
    const double f = flux(rng);
    EXPECT_DOUBLE_EQ(dressed_resonator_frequency(d, f), bare_resonator_frequency(d, f));
    EXPECT_NEAR(dispersive_shift(d, f), 0.0, 1e-30);
  }
}

TEST(DeviceModel, DispersiveShiftDecaysWithDetuning) {
  // Raising the transmon flux offset lowers the qubit and pushes Delta further negative.
  auto d = DeviceParameters::reference();
  double last_detuning = 0.0;
  double last_chi = INFINITY;
  for (double offset = 0.58; offset < 1.4; offset += 0.05) {
    d.flux_map_offset = offset;
    const double detuning = qubit_resonator_detuning(d, kOperatingBias);
    const double chi = std::abs(dispersive_shift(d, kOperatingBias));
    ASSERT_LT(detuning, last_detuning);
    EXPECT_LT(chi, last_chi);
    last_detuning = detuning;
    last_chi = chi;
  }
}

TEST(DeviceModel, AlphaMinimumAtZeroAndMonotone) {
  const auto d = DeviceParameters::reference();
  const double a0 = duffing_alpha(d, 0.0);
  double previous = a0;
  for (int k = 1; k < 10; ++k) {
    const double a = duffing_alpha(d, 0.45 * kPi * k / 9.0);
    EXPECT_GT(a, previous);
    previous = a;
  }
  const double alpha_scale = kPi * kPi * d.bare_frequency * d.impedance / d.resistance_quantum;
  EXPECT_NEAR(a0 / (alpha_scale * std::pow(d.participation, 3)), 1.0, 1e-12);
}

TEST(DeviceModel, BetaDecreasingAndVanishesAtHalfPi) {
  const auto d = DeviceParameters::reference();
  double previous = pump_induced_beta(d, 0.01 * kPi);
  for (int k = 2; k < 50; ++k) {
    const double b = pump_induced_beta(d, 0.0099 * kPi * k);
    EXPECT_LT(b, previous);
    EXPECT_GT(b, 0.0);
    previous = b;
  }
  EXPECT_NEAR(pump_induced_beta(d, kPi / 2 - 1e-5), 0.0, 1e-12);
}

TEST(DeviceModel, NonlinearShiftHasInteriorMinimumInFlux) {
  // The Duffing pull grows toward F = pi / 2 and the pump pull toward F = 0, so the
  // combined shift at fixed photon number and pump strength is smallest in between.
  const auto d = DeviceParameters::reference();
  const double gamma = d.total_damping();
  double best = INFINITY;
  int best_k = -1;
  for (int k = 1; k < 100; ++k) {
    const double f = 0.49 * kPi * k / 100.0;
    const double shift = std::abs(nonlinear_shift(duffing_alpha(d, f), pump_induced_beta(d, f),
                                                  200.0, 3.56 * gamma, gamma));
    if (shift < best) {
      best = shift;
      best_k = k;
    }
  }
  EXPECT_GT(best_k, 1);
  EXPECT_LT(best_k, 99);
}

TEST(DeviceModel, NonlinearShiftTerms) {
  EXPECT_NEAR(cyclic(nonlinear_shift(angular(27e3), 0.0, 200.0, 0.0, angular(1.32e6))), -5.4e6,
              1e-3);
  // Pump term of the closed form at (eps / Gamma = 3.56, beta = 7.5e-3, Gamma / 2pi = 1.32 MHz).
  const double gamma = angular(1.32e6);
  EXPECT_NEAR(cyclic(nonlinear_shift(0.0, 7.5e-3, 0.0, 3.56 * gamma, gamma)),
              -7.5e-3 * 1.32e6 * 3.56 * 3.56, 1e-6);
  EXPECT_EQ(nonlinear_shift(angular(27e3), 7.5e-3, 0.0, 0.0, gamma), 0.0);
}

TEST(DeviceModel, ThresholdSmallBetaLimit) {
  for (double d : {-8.0, -3.0, -0.5, 0.0, 0.7, 2.0, 4.0}) {
    // The leading correction to the lower branch is beta * delta / Gamma relative.
    const auto b = instability_threshold(d, 1e-7, 1.0);
    ASSERT_TRUE(b.has_value());
    EXPECT_NEAR(b->lower / std::sqrt(1.0 + d * d), 1.0, 1e-6) << "delta " << d;
    EXPECT_GT(b->upper, 1e4);
  }
  const auto zero = instability_threshold(0.0, 1e-9, 1.0);
  ASSERT_TRUE(zero.has_value());
  EXPECT_NEAR(zero->lower, 1.0, 1e-8);
}

TEST(DeviceModel, ThresholdDimensionlessInGamma) {
  const double gamma = angular(1.32e6);
  const auto a = instability_threshold(-2.0 * gamma, 7.5e-3, gamma);
  const auto b = instability_threshold(-2.0, 7.5e-3, 1.0);
  ASSERT_TRUE(a && b);
  EXPECT_NEAR(a->lower, b->lower, 1e-12);
  EXPECT_NEAR(a->upper, b->upper, 1e-9);
}

TEST(DeviceModel, ThresholdSkewedTowardRedDetuning) {
  for (double d = -8.0; d < 0.0; d += 0.5) {
    const auto b = instability_threshold(d, 7.5e-3, 1.0);
    ASSERT_TRUE(b.has_value());
    EXPECT_LT(b->lower, std::sqrt(1.0 + d * d));
  }
}

TEST(DeviceModel, ThresholdNoBoundaryWhenDiscriminantNegative) {
  // 1 - 4 beta (beta + delta) < 0 for beta = 0.1, delta = 3.
  EXPECT_FALSE(instability_threshold(3.0, 0.1, 1.0).has_value());
}

TEST(DeviceModel, SteadyStateAtThresholdPoint) {
  const auto s = steady_state_photons(0.0, 1.0, 1.0, 1.0);
  EXPECT_FALSE(s.oscillating());
  EXPECT_FALSE(s.stable_photons().has_value());
}

TEST(DeviceModel, SteadyStateScalesInverselyWithAlpha) {
  const double gamma = angular(1.32e6);
  const double alpha = angular(27e3);
  const auto one = steady_state_photons(-5.34 * gamma, 3.56 * gamma, alpha, gamma);
  const auto two = steady_state_photons(-5.34 * gamma, 3.56 * gamma, 2.0 * alpha, gamma);
  ASSERT_TRUE(one.stable_photons() && two.stable_photons());
  EXPECT_NEAR(*one.stable_photons() / *two.stable_photons(), 2.0, 1e-12);
  // Closed-form root for the quoted alpha, without the pump-induced pull.
  const double expected = (gamma / alpha) * (std::sqrt(3.56 * 3.56 - 1.0) + 5.34);
  EXPECT_NEAR(*one.stable_photons() / expected, 1.0, 1e-12);
}

TEST(DeviceModel, SteadyStateRegimes) {
  // alpha > 0 with red detuning and eps below |delta|: zero state stable beside two roots.
  const auto tri = steady_state_photons(-5.0, 3.0, 1.0, 1.0);
  EXPECT_EQ(tri.regime, Regime::Tristable);
  ASSERT_EQ(tri.points.size(), 3u);
  EXPECT_TRUE(tri.points[0].stable);
  EXPECT_FALSE(tri.points[1].stable);
  EXPECT_TRUE(tri.points[2].stable);
  const auto bi = steady_state_photons(0.0, 3.0, 1.0, 1.0);
  EXPECT_EQ(bi.regime, Regime::Bistable);
  EXPECT_FALSE(bi.points[0].stable);
  EXPECT_EQ(steady_state_photons(5.0, 3.0, 1.0, 1.0).regime, Regime::Quiet);
  EXPECT_EQ(steady_state_photons(0.0, 3.0, 0.0, 1.0).regime, Regime::Unbounded);
}

TEST(DeviceModel, SteadyStateResidualVanishes) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> delta(-8.0, 4.0), eps(1.01, 10.0);
  for (int k = 0; k < 200; ++k) {
    const double d = delta(rng), e = eps(rng);
    const auto s = steady_state_photons(d, e, 0.02, 1.0);
    for (std::size_t i = 1; i < s.points.size(); ++i) {
      EXPECT_LT(steady_state_residual(d, e, 0.02, 1.0, s.points[i].photons, s.points[i].phase),
                1e-9);
    }
  }
}

TEST(DeviceModel, ThresholdAndSteadyStateAgree) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> delta(-6.0, 6.0), eps(0.0, 8.0);
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 50; ++j) {
      const double d = delta(rng), e = eps(rng);
      const bool root = steady_state_photons(d, e, 1.0, 1.0).stable_photons().has_value();
      const bool expected = d >= 0.0 ? e > std::sqrt(1.0 + d * d) : e > 1.0;
      EXPECT_EQ(root, expected) << "delta " << d << " eps " << e;
    }
  }
}

TEST(DeviceModel, OperatingPointMirrorSymmetry) {
  const auto d = DeviceParameters::reference();
  const auto p = make_operating_point(d, kOperatingBias, angular(-3e6), angular(4e6));
  EXPECT_DOUBLE_EQ(0.5 * (p.delta_q0() + p.delta_q1()), p.delta);
  const double gamma = d.total_damping();
  const auto q = make_operating_point_from_q0(d, kOperatingBias, -5.34 * gamma, 3.56 * gamma,
                                              {.chi = angular(-3.629e6), .alpha = std::nullopt, .beta = 7.5e-3});
  EXPECT_NEAR(q.delta_q0() / gamma, -5.34, 1e-12);
  EXPECT_NEAR((q.delta_q1() - q.delta_q0()) / angular(7.258e6), 1.0, 1e-12);
  EXPECT_EQ(q.beta, 7.5e-3);
}

TEST(DeviceModel, OutputRateAtTwoHundredPhotons) {
  EXPECT_NEAR(2.0 * angular(1.02e6) * 200.0 / kOutputRateAt200, 1.0, 1e-12);
}

TEST(DeviceModel, PurcellLimit) {
  const double g0 = angular(1.02e6), g = angular(46e6), delta = angular(-334e6);
  EXPECT_NEAR(purcell_t1(g0, g, delta) / kPurcellT1, 1.0, 1e-12);
  EXPECT_NEAR(purcell_t1(g0, g, delta), 4.11e-6, 0.01e-6);
  EXPECT_NEAR(purcell_t1(g0 / 2, g, delta) / purcell_t1(g0, g, delta), 2.0, 1e-12);
  EXPECT_NEAR(purcell_t1(g0, g / 2, delta) / purcell_t1(g0, g, delta), 4.0, 1e-12);
  EXPECT_THROW(purcell_t1(g0, 0.0, delta), DomainError);
  EXPECT_THROW(purcell_t1(g0, g, 0.0), DomainError);
}

TEST(DeviceModel, ThermalPopulation) {
  auto q = QubitParameters::reference();
  const double x = kHbar * q.frequency / (kBoltzmann * q.temperature);
  EXPECT_NEAR(q.thermal_population(), std::exp(-x) / (1.0 + std::exp(-x)), 1e-15);
  q.temperature = 0.0;
  EXPECT_EQ(q.thermal_population(), 0.0);
}
