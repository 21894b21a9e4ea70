#pragma once

// Closed-form physics of a flux-pumped quarter-wave resonator with a dispersively
// coupled transmon. All frequencies, energies and rates are angular (rad/s);
// photon numbers are dimensionless.

#include <optional>
#include <vector>

namespace jpo {

struct DeviceParameters {
  double josephson_energy = 0.0;   // E_J
  double charging_energy = 0.0;    // E_C
  double coupling = 0.0;           // g01
  double bare_frequency = 0.0;     // quarter-wave resonance without the SQUID
  double participation = 0.0;      // inductive participation ratio at zero flux, in (0, 1)
  double external_damping = 0.0;   // Gamma0
  double internal_loss = 0.0;      // Gamma_R
  double flux_map_scale = 1.0;     // transmon flux F' = F / scale + offset
  double flux_map_offset = 0.0;
  double impedance = 50.0;         // ohm
  double resistance_quantum = 0.0; // ohm

  double total_damping() const { return external_damping + internal_loss; }

  /// Throws DomainError when a field is non-positive or the participation ratio is outside (0, 1).
  void validate() const;

  /// Device characterised for the single-shot readout demonstration
  /// (E_J/2pi = 9.82 GHz, E_C/2pi = 453 MHz, g01/2pi = 46 MHz, ...).
  static DeviceParameters reference();
};

struct QubitParameters {
  double t1 = 0.0;           // s
  double t2_star = 0.0;      // s
  double temperature = 0.0;  // K
  double frequency = 0.0;    // rad/s

  void validate() const;

  /// Excited-state population of a two-level system in thermal equilibrium.
  double thermal_population() const;

  static QubitParameters reference();
};

/// Pump settings at a static flux bias plus the per-point coefficients that the
/// dynamics need. The qubit-state detunings are mirror images about `delta`.
struct OperatingPoint {
  double flux_bias = 0.0;  // F = pi * Phi_dc / Phi_0
  double delta = 0.0;      // omega_p / 2 - omega_r, centre between the two qubit states
  double epsilon = 0.0;    // pump amplitude
  double chi = 0.0;        // dispersive shift (resonator pull of |1> is 2 chi)
  double alpha = 0.0;      // Duffing shift per photon
  double beta = 0.0;       // pump-induced shift coefficient
  double gamma = 0.0;      // total damping
  double gamma0 = 0.0;     // external damping

  // A resonator pulled down by 2 chi sees a pump detuning raised by 2 chi.
  double delta_q0() const { return delta + chi; }
  double delta_q1() const { return delta - chi; }
  double detuning(int qubit_state) const { return qubit_state == 0 ? delta_q0() : delta_q1(); }

  void validate() const;
};

struct OperatingPointOverrides {
  std::optional<double> chi;
  std::optional<double> alpha;
  std::optional<double> beta;
};

/// Builds an operating point from device constants. Any coefficient present in
/// `overrides` replaces the closed-form value.
OperatingPoint make_operating_point(const DeviceParameters& device, double flux_bias, double delta,
                                    double epsilon, const OperatingPointOverrides& overrides = {});

/// Same, but positioned so that the ground-state detuning equals `delta_q0`.
OperatingPoint make_operating_point_from_q0(const DeviceParameters& device, double flux_bias,
                                            double delta_q0, double epsilon,
                                            const OperatingPointOverrides& overrides = {});

// Guard on |cos F| and |sin F| before evaluating the divergent formulas.
inline constexpr double kFluxDomainTolerance = 1e-6;

double bare_resonator_frequency(const DeviceParameters& device, double flux_bias);
double transmon_flux(const DeviceParameters& device, double flux_bias);
double qubit_frequency(const DeviceParameters& device, double flux_bias);

/// Delta(F) = omega_a(F') - omega_r(F).
double qubit_resonator_detuning(const DeviceParameters& device, double flux_bias);

double dispersive_shift(const DeviceParameters& device, double flux_bias);

/// True when |Delta| > 5 g01. Outside that the dispersive formulas are only indicative.
bool in_dispersive_regime(const DeviceParameters& device, double flux_bias);

double dressed_resonator_frequency(const DeviceParameters& device, double flux_bias);
double duffing_alpha(const DeviceParameters& device, double flux_bias);
double pump_induced_beta(const DeviceParameters& device, double flux_bias);

/// Total frequency pull -alpha |A|^2 - beta Gamma (epsilon / Gamma)^2.
double nonlinear_shift(double alpha, double beta, double photons, double epsilon, double gamma);

/// Pump detuning including the pump-induced pull of the resonator frequency.
inline double effective_detuning(double delta, double epsilon, double beta, double gamma) {
  return delta + beta * epsilon * epsilon / gamma;
}

/// Lower and upper instability boundaries in units of epsilon / Gamma. The zero
/// state is unstable for lower < epsilon / Gamma < upper.
struct ThresholdBranches {
  double lower = 0.0;
  double upper = 0.0;
};

/// Returns nullopt when 1 - 4 beta (beta + delta / Gamma) < 0 (no boundary).
std::optional<ThresholdBranches> instability_threshold(double delta, double beta, double gamma);

enum class Regime {
  Quiet,      // only the zero state exists and it is stable
  Bistable,   // zero unstable; two pi-shifted oscillating states
  Tristable,  // zero stable alongside the two oscillating states
  Unbounded,  // zero unstable without a finite-amplitude state (alpha = 0)
};

const char* to_string(Regime regime);

struct FixedPoint {
  double photons = 0.0;
  double phase = 0.0;  // one of the two phases; the other is phase + pi
  bool stable = false;
};

struct SteadyState {
  Regime regime = Regime::Quiet;
  std::vector<FixedPoint> points;  // zero state first, then finite roots by increasing photons

  bool oscillating() const { return regime == Regime::Bistable || regime == Regime::Tristable; }
  /// Photon number of the stable oscillating state, or nullopt when none exists.
  std::optional<double> stable_photons() const;
};

/// Fixed points of the slow-amplitude equation with B = 0, where
/// alpha |A|^2 = -delta +/- sqrt(epsilon^2 - Gamma^2). `delta` is the detuning the
/// amplitude sees; use effective_detuning() to fold in the pump-induced pull.
SteadyState steady_state_photons(double delta, double epsilon, double alpha, double gamma);

/// Residual |dA/dt| / Gamma of the noise-free equation of motion at amplitude A.
double steady_state_residual(double delta, double epsilon, double alpha, double gamma,
                             double photons, double phase);

/// Purcell-limited relaxation time [2 Gamma0 (g01 / Delta)^2]^-1.
double purcell_t1(double gamma0, double coupling, double detuning);

}  // namespace jpo
