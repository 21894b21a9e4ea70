#pragma once

// Run configuration: a JSON document with the sections device, operating_point,
// qubit, detection, simulation and cycle. Values are stored exactly as written in
// the file (frequencies as /2pi values in Hz, flux bias in units of pi) and
// converted to the rad/s structs of the library on request. Every key must be
// present; unknown keys are rejected. Keys held in std::optional accept null,
// meaning "derive from the device model".

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "jpo/device_model.hpp"
#include "jpo/dynamics.hpp"
#include "jpo/measurement_chain.hpp"
#include "jpo/readout_experiment.hpp"

namespace jpo {

struct RunConfig {
  struct Device {
    double josephson_energy_hz = 9.82e9;
    double charging_energy_hz = 453e6;
    double coupling_hz = 46e6;
    double bare_frequency_hz = 5.55e9;
    double participation_ratio = 0.053;
    double external_damping_hz = 1.02e6;
    double internal_loss_hz = 0.30e6;
    double flux_map_scale = 8.88;
    double flux_map_offset = 0.58;
    double impedance_ohm = 50.0;
    std::optional<double> resistance_quantum_ohm;
  } device;

  struct Operating {
    double flux_bias_over_pi = 0.185;
    double delta_q0_over_gamma = -5.34;
    double epsilon_over_gamma = 3.56;
    std::optional<double> two_chi_hz = -7.258e6;
    std::optional<double> alpha_hz;
    std::optional<double> beta = 7.5e-3;
  } operating_point;

  struct Qubit {
    double t1_s = 4.24e-6;
    double t2_star_s = 1.66e-6;
    double temperature_k = 45e-3;
    std::optional<double> frequency_hz = 4.885e9;
  } qubit;

  struct Detection {
    double added_noise_photons = 16.1;
    double if_frequency_hz = 187.5e6;
    double adc_rate_sps = 250e6;
    double decimated_rate_sps = 20e6;
    double gain_db = 81.0;
    double readout_delay_s = 300e-9;
    double sampling_time_s = 300e-9;
    std::optional<double> carrier_frequency_hz = 5.218e9;
    double load_impedance_ohm = 50.0;
  } detection;

  struct Simulation {
    double dt_s = 0.5e-9;
    double t_end_s = 600e-9;
    double seed_noise_photons = 0.5;
    double pump_ramp_s = 10e-9;
    bool latching = true;
    std::uint64_t record_stride = 1;
    std::uint64_t rng_seed = 1;
  } simulation;

  struct Cycle {
    std::uint64_t n_shots = 100000;
    double pi_pulse_s = 52e-9;
    double pump_delay_s = 20e-9;
    double prep_error_prob = 0.045;
    std::optional<double> thermal_prob;
    double switch_prob = 0.024;
  } cycle;

  DeviceParameters device_parameters() const;
  double flux_bias() const;
  OperatingPoint operating_point_at_q0() const;
  QubitParameters qubit_parameters() const;
  DetectionConfig detection_config() const;
  SimulationConfig simulation_config() const;
  CycleConfig cycle_config() const;

  /// Builds every derived struct once, turning library errors into ConfigError.
  void validate() const;
};

/// Parses and validates a configuration document. Errors name the key as section.key.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// Serialises the configuration; parse_config(to_json_text(c)) reproduces c exactly.
std::string to_json_text(const RunConfig& config);

/// Quantities derived from the configuration (rad/s values converted back to Hz), as JSON.
std::string derived_json_text(const RunConfig& config);

}  // namespace jpo
