#pragma once

// Time-domain integration of the slow-amplitude equation of motion
//
//   i dA/dt + eps A* + delta A + alpha |A|^2 A + i Gamma A = sqrt(2 Gamma0) B(t)
//
// in the frame rotating at half the pump frequency, with a qubit-state dependent
// detuning, additive fluctuation seeding, pump ramp-up and scheduled jump events.

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "jpo/device_model.hpp"

namespace jpo {

using Complex = std::complex<double>;

/// Coherent input B(t) = amplitude * exp(-i offset t); amplitude in sqrt(photons / s).
struct InputDrive {
  double amplitude = 0.0;
  double frequency_offset = 0.0;  // rad/s
};

struct SimulationConfig {
  double dt = 0.5e-9;                // s
  double t_end = 600e-9;             // s, measured from pump-on
  double seed_noise_photons = 0.5;   // stationary occupancy the fluctuation force maintains in an undriven resonator
  std::uint64_t rng_seed = 0;
  double pump_ramp = 10e-9;          // linear ramp of epsilon from 0 to target
  std::optional<InputDrive> input_drive;
  Complex initial_amplitude{0.0, 0.0};
  std::size_t record_stride = 1;     // store every n-th step
  bool latching = true;              // false: the pump is removed once the qubit decays

  void validate() const;
};

/// Qubit history for one shot. Times are on the trajectory clock (pump-on at t = 0)
/// except `decay_time`, which is measured from the end of the state-preparation pulse.
struct JumpSchedule {
  int prepared_state = 0;
  bool preparation_fault = false;
  bool thermal_excited = false;
  std::optional<double> decay_time;   // > 0; nullopt = never relaxes
  double pulse_to_pump = 0.0;         // delay between pulse end and pump-on
  std::vector<double> phase_switch_times;

  /// Qubit state right after the preparation pulse.
  int state_after_pulse() const;
  /// Decay instant on the trajectory clock, if the qubit is excited and decays.
  std::optional<double> decay_on_trajectory_clock() const;
  /// Qubit state when the pump turns on.
  int state_at_pump_on() const;

  void validate() const;
};

enum class EventKind { QubitDecay, PhaseSwitch };

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::QubitDecay;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Complex> amplitudes;
  std::vector<std::uint8_t> qubit_state;
  std::vector<Event> events;

  std::size_t size() const { return times.size(); }
  double photons(std::size_t i) const { return std::norm(amplitudes[i]); }
  /// Linear interpolation of A at time t (clamped to the recorded range).
  Complex amplitude_at(double t) const;
  /// Mean |A|^2 over samples with t in [from, to].
  double mean_photons(double from, double to) const;
};

/// Integrates one trajectory. The deterministic part uses classical RK4; the
/// fluctuation force is an Euler-Maruyama increment per step with per-quadrature
/// variance Gamma * seed_noise_photons * dt. Steps containing a decay or phase-switch
/// event are split at the event time. Deterministic for a fixed rng_seed.
Trajectory integrate(const SimulationConfig& config, const OperatingPoint& point,
                     const JumpSchedule& schedule);

/// Stable oscillating photon number at the given qubit state (pump-induced pull included).
std::optional<double> expected_photons(const OperatingPoint& point, int qubit_state);

/// First time |A|^2 exceeds fraction * reference_photons and stays above it for at
/// least 5 / Gamma, or until the end of the record if that comes first (provided the
/// excursion lasted at least 1 / Gamma). nullopt when that never happens.
std::optional<double> detect_latch(const Trajectory& trajectory, double fraction,
                                   double reference_photons, double gamma);

/// Same, with the reference taken as the stable root at the excited-state detuning.
std::optional<double> detect_latch(const Trajectory& trajectory, double fraction,
                                   const OperatingPoint& point);

struct RegionGrid {
  double delta_min = -8.0;  // delta / Gamma (centre detuning)
  double delta_max = 4.0;
  std::size_t delta_points = 64;
  double epsilon_min = 0.0;  // epsilon / Gamma
  double epsilon_max = 10.0;
  std::size_t epsilon_points = 64;

  double delta_at(std::size_t i) const;
  double epsilon_at(std::size_t j) const;
  void validate() const;
};

struct RegionMap {
  RegionGrid grid;
  int qubit_state = 0;
  std::vector<double> photons;  // row-major [epsilon index][delta index]
  std::vector<std::string> failures;

  double at(std::size_t delta_index, std::size_t epsilon_index) const {
    return photons[epsilon_index * grid.delta_points + delta_index];
  }
  /// Cells whose averaged photon number exceeds fraction * max(photons).
  std::vector<std::uint8_t> oscillation_mask(double fraction) const;
};

struct RegionOptions {
  std::size_t trajectories_per_cell = 1;
  double averaging_fraction = 0.5;  // trailing fraction of t_end averaged
  unsigned threads = 0;
};

/// Time-averaged |A|^2 over a (delta, epsilon) grid for one qubit state. Each cell
/// uses its own RNG stream derived from (config.rng_seed, cell index). Cell
/// failures are recorded (NaN in `photons`) rather than aborting the map.
RegionMap map_region(const RegionGrid& grid, const SimulationConfig& config,
                     const OperatingPoint& point, int qubit_state,
                     const RegionOptions& options = {});

/// Exponential growth rate of a small noise-free amplitude around the zero state,
/// measured from the integrator (late-time log slope), in units of Gamma.
double numerical_growth_rate(double delta, double epsilon, double beta, double gamma,
                             double dt_gamma = 0.01);

/// Pump amplitude (epsilon / Gamma) at which numerical_growth_rate changes sign,
/// found by bisection between lo and hi.
double numerical_onset(double delta, double beta, double gamma, double lo, double hi,
                       double tolerance = 1e-6);

/// Columnar text export: time_s re_A im_A photons qubit_state. `header` is echoed
/// as a comment line before the column names.
void write_trajectory(std::ostream& out, const Trajectory& trajectory, const std::string& header,
                      std::size_t stride = 1);

}  // namespace jpo
