#include "jpo/device_model.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include "jpo/errors.hpp"
#include "jpo/units.hpp"

namespace jpo {
namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    std::ostringstream msg;
    msg << name << " must be positive and finite, got " << value;
    throw DomainError(msg.str());
  }
}

double guarded_cos(double flux_bias, const char* what) {
  const double c = std::cos(flux_bias);
  if (std::abs(c) <= kFluxDomainTolerance) {
    std::ostringstream msg;
    msg << what << ": |cos F| <= " << kFluxDomainTolerance << " at F = " << flux_bias;
    throw DomainError(msg.str());
  }
  return c;
}

}  // namespace

void DeviceParameters::validate() const {
  require_positive(josephson_energy, "josephson_energy");
  require_positive(charging_energy, "charging_energy");
  require_positive(coupling, "coupling");
  require_positive(bare_frequency, "bare_frequency");
  require_positive(external_damping, "external_damping");
  require_positive(internal_loss, "internal_loss");
  require_positive(flux_map_scale, "flux_map_scale");
  require_positive(impedance, "impedance");
  require_positive(resistance_quantum, "resistance_quantum");
  if (!(participation > 0.0 && participation < 1.0)) {
    throw DomainError("participation ratio must lie in (0, 1)");
  }
}

DeviceParameters DeviceParameters::reference() {
  DeviceParameters d;
  d.josephson_energy = angular(9.82e9);
  d.charging_energy = angular(453e6);
  d.coupling = angular(46e6);
  d.bare_frequency = angular(5.55e9);
  d.participation = 0.053;
  d.external_damping = angular(1.02e6);
  d.internal_loss = angular(0.30e6);
  d.flux_map_scale = 8.88;
  d.flux_map_offset = 0.58;
  d.impedance = 50.0;
  d.resistance_quantum = kResistanceQuantum;
  return d;
}

void QubitParameters::validate() const {
  require_positive(t1, "t1");
  require_positive(t2_star, "t2_star");
  if (t2_star > 2.0 * t1) throw DomainError("t2_star must not exceed 2 t1");
  if (!(temperature >= 0.0)) throw DomainError("temperature must be non-negative");
  require_positive(frequency, "qubit frequency");
}

double QubitParameters::thermal_population() const {
  if (temperature == 0.0) return 0.0;
  const double boltzmann = std::exp(-kHbar * frequency / (kBoltzmann * temperature));
  return boltzmann / (1.0 + boltzmann);
}

QubitParameters QubitParameters::reference() {
  QubitParameters q;
  q.t1 = 4.24e-6;
  q.t2_star = 1.66e-6;
  q.temperature = 45e-3;
  q.frequency = angular(4.885e9);
  return q;
}

void OperatingPoint::validate() const {
  if (!(std::abs(flux_bias) < std::numbers::pi / 2)) {
    throw DomainError("operating point requires |F| < pi/2");
  }
  if (!(epsilon >= 0.0)) throw DomainError("pump amplitude epsilon must be non-negative");
  require_positive(gamma, "gamma");
  require_positive(gamma0, "gamma0");
  if (gamma0 > gamma) throw DomainError("external damping exceeds total damping");
  if (!std::isfinite(delta) || !std::isfinite(chi) || !std::isfinite(alpha) ||
      !std::isfinite(beta)) {
    throw DomainError("operating point coefficients must be finite");
  }
}

OperatingPoint make_operating_point(const DeviceParameters& device, double flux_bias, double delta,
                                    double epsilon, const OperatingPointOverrides& overrides) {
  device.validate();
  OperatingPoint p;
  p.flux_bias = flux_bias;
  p.delta = delta;
  p.epsilon = epsilon;
  p.gamma = device.total_damping();
  p.gamma0 = device.external_damping;
  p.chi = overrides.chi ? *overrides.chi : dispersive_shift(device, flux_bias);
  p.alpha = overrides.alpha ? *overrides.alpha : duffing_alpha(device, flux_bias);
  p.beta = overrides.beta ? *overrides.beta : pump_induced_beta(device, flux_bias);
  p.validate();
  return p;
}

OperatingPoint make_operating_point_from_q0(const DeviceParameters& device, double flux_bias,
                                            double delta_q0, double epsilon,
                                            const OperatingPointOverrides& overrides) {
  OperatingPoint p = make_operating_point(device, flux_bias, delta_q0, epsilon, overrides);
  p.delta = delta_q0 - p.chi;
  return p;
}

double bare_resonator_frequency(const DeviceParameters& device, double flux_bias) {
  const double c = guarded_cos(flux_bias, "bare_resonator_frequency");
  return device.bare_frequency / (1.0 + device.participation / std::abs(c));
}

double transmon_flux(const DeviceParameters& device, double flux_bias) {
  return flux_bias / device.flux_map_scale + device.flux_map_offset;
}

double qubit_frequency(const DeviceParameters& device, double flux_bias) {
  const double c = std::abs(std::cos(transmon_flux(device, flux_bias)));
  return std::sqrt(8.0 * device.josephson_energy * c * device.charging_energy) -
         device.charging_energy;
}

double qubit_resonator_detuning(const DeviceParameters& device, double flux_bias) {
  return qubit_frequency(device, flux_bias) - bare_resonator_frequency(device, flux_bias);
}

double dispersive_shift(const DeviceParameters& device, double flux_bias) {
  const double detuning = qubit_resonator_detuning(device, flux_bias);
  const double ec = device.charging_energy;
  const double guard = 1e-9 * ec;
  if (std::abs(detuning) <= guard || std::abs(detuning - ec) <= guard) {
    throw DomainError("dispersive_shift: qubit-resonator detuning at a pole (Delta = 0 or E_C)");
  }
  const double g2 = device.coupling * device.coupling;
  return -(g2 / detuning) * (ec / (detuning - ec));
}

bool in_dispersive_regime(const DeviceParameters& device, double flux_bias) {
  return std::abs(qubit_resonator_detuning(device, flux_bias)) > 5.0 * device.coupling;
}

double dressed_resonator_frequency(const DeviceParameters& device, double flux_bias) {
  const double detuning = qubit_resonator_detuning(device, flux_bias);
  if (std::abs(detuning) <= 1e-9 * device.charging_energy) {
    throw DomainError("dressed_resonator_frequency: qubit resonant with resonator");
  }
  return bare_resonator_frequency(device, flux_bias) -
         device.coupling * device.coupling / detuning;
}

double duffing_alpha(const DeviceParameters& device, double flux_bias) {
  const double c = guarded_cos(flux_bias, "duffing_alpha");
  const double alpha0 = std::numbers::pi * std::numbers::pi * device.bare_frequency *
                        device.impedance / device.resistance_quantum;
  const double ratio = device.participation / c;
  return alpha0 * ratio * ratio * ratio;
}

double pump_induced_beta(const DeviceParameters& device, double flux_bias) {
  const double s = std::sin(flux_bias);
  if (std::abs(s) <= kFluxDomainTolerance) {
    throw DomainError("pump_induced_beta: |sin F| below domain tolerance");
  }
  const double c = std::cos(flux_bias);
  const double beta0 = device.total_damping() / (device.bare_frequency * device.participation);
  return beta0 * c * c * c / (s * s);
}

double nonlinear_shift(double alpha, double beta, double photons, double epsilon, double gamma) {
  if (photons < 0.0) throw DomainError("nonlinear_shift: negative photon number");
  const double pump_ratio = epsilon / gamma;
  return -alpha * photons - beta * gamma * pump_ratio * pump_ratio;
}

std::optional<ThresholdBranches> instability_threshold(double delta, double beta, double gamma) {
  const double d = delta / gamma;
  const double disc = 1.0 - 4.0 * beta * (beta + d);
  if (disc < 0.0) return std::nullopt;
  const double p = 1.0 - 2.0 * beta * d;
  const double root = std::sqrt(disc);
  ThresholdBranches out;
  // Lower branch in rationalised form: (p - root) / (2 beta^2) == 2 (1 + d^2) / (p + root),
  // which stays accurate as beta -> 0.
  const double denom = p + root;
  if (denom <= 0.0) return std::nullopt;
  out.lower = std::sqrt(2.0 * (1.0 + d * d) / denom);
  out.upper = beta == 0.0 ? std::numeric_limits<double>::infinity()
                          : std::sqrt(denom / 2.0) / std::abs(beta);
  return out;
}

const char* to_string(Regime regime) {
  switch (regime) {
    case Regime::Quiet: return "quiet";
    case Regime::Bistable: return "bistable";
    case Regime::Tristable: return "tristable";
    case Regime::Unbounded: return "unbounded";
  }
  return "unknown";
}

std::optional<double> SteadyState::stable_photons() const {
  std::optional<double> best;
  for (const auto& fp : points) {
    if (fp.stable && fp.photons > 0.0 && (!best || fp.photons > *best)) best = fp.photons;
  }
  return best;
}

namespace {

// Phase theta of A = sqrt(n) e^{i theta} solving eps e^{-2 i theta} = -i Gamma - (delta + alpha n).
double fixed_point_phase(double delta, double epsilon, double alpha, double gamma, double photons) {
  const std::complex<double> rhs(-(delta + alpha * photons), -gamma);
  return -0.5 * std::arg(rhs / epsilon);
}

}  // namespace

SteadyState steady_state_photons(double delta, double epsilon, double alpha, double gamma) {
  SteadyState out;
  const bool zero_stable = epsilon * epsilon < gamma * gamma + delta * delta;
  out.points.push_back({0.0, 0.0, zero_stable});

  bool finite_stable = false;
  if (epsilon > gamma && alpha != 0.0) {
    const double s = std::sqrt(epsilon * epsilon - gamma * gamma);
    // alpha n = -delta + sign * s. A root is stable when d(residual)/dn > 0 with
    // residual(n) = (delta + alpha n)^2 + Gamma^2 - epsilon^2.
    for (double sign : {-1.0, 1.0}) {
      const double n = (-delta + sign * s) / alpha;
      if (!(n > 0.0)) continue;
      const double slope = 2.0 * alpha * (delta + alpha * n);
      const bool stable = slope > 0.0;
      out.points.push_back({n, fixed_point_phase(delta, epsilon, alpha, gamma, n), stable});
      finite_stable = finite_stable || stable;
    }
    if (out.points.size() == 3 && out.points[1].photons > out.points[2].photons) {
      std::swap(out.points[1], out.points[2]);
    }
  }

  if (zero_stable) {
    out.regime = finite_stable ? Regime::Tristable : Regime::Quiet;
  } else {
    out.regime = finite_stable ? Regime::Bistable : Regime::Unbounded;
  }
  return out;
}

double steady_state_residual(double delta, double epsilon, double alpha, double gamma,
                             double photons, double phase) {
  const std::complex<double> i(0.0, 1.0);
  const std::complex<double> a = std::polar(std::sqrt(photons), phase);
  const std::complex<double> drift =
      i * epsilon * std::conj(a) + i * (delta + alpha * photons) * a - gamma * a;
  return std::abs(drift) / gamma;
}

double purcell_t1(double gamma0, double coupling, double detuning) {
  if (coupling == 0.0 || detuning == 0.0 || gamma0 == 0.0) {
    throw DomainError("purcell_t1: coupling, detuning and gamma0 must be non-zero");
  }
  const double ratio = coupling / detuning;
  return 1.0 / (2.0 * gamma0 * ratio * ratio);
}

}  // namespace jpo
