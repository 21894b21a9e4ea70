#pragma once

// Output coupling, heterodyne detection at complex baseband, and the
// attenuation / gain / photon-number calibration chain.

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "jpo/device_model.hpp"
#include "jpo/dynamics.hpp"
#include "jpo/units.hpp"

namespace jpo {

struct DetectionConfig {
  double added_noise_photons = 16.1;  // chain noise referred to the resonator, per sampling window
  double if_frequency = 187.5e6;      // Hz, kept for bookkeeping; mixing is not simulated
  double adc_rate = 250e6;            // samples / s
  double decimated_rate = 20e6;       // samples / s
  double gain_db = 81.0;
  double readout_delay = 300e-9;      // tau_r after pump-on
  double sampling_time = 300e-9;      // tau_s
  double carrier_frequency = angular(5.218e9);  // rad/s, sets the photon energy
  double load_impedance = 50.0;       // ohm

  void validate() const;

  double window_start() const { return readout_delay; }
  double window_end() const { return readout_delay + sampling_time; }
  std::size_t decimated_samples() const;

  /// Volts per sqrt(photons / s) of output field. Chosen so that V^2 / Z equals the
  /// digitiser power 2 (Gamma0 / 2 pi) hbar omega 10^(G/10) |A|^2 of the photon-number
  /// calibration, which keeps detect() and photons_from_power() mutually inverse.
  double voltage_scale() const;
};

/// C = B - i sqrt(2 Gamma0) A, in sqrt(photons / s).
std::complex<double> output_field(std::complex<double> amplitude, std::complex<double> input,
                                  double gamma0);

struct WindowMeasurement {
  std::complex<double> mean;            // window mean of the decimated (V_I, V_Q) stream, volts
  double rectified_mean = 0.0;          // window mean of |V| per decimated sample
  std::vector<std::complex<double>> decimated;
};

/// Samples the trajectory's output field at the ADC rate (B = 0), box-car decimates
/// to decimated_rate, adds complex Gaussian chain noise per decimated sample and
/// averages over [tau_r, tau_r + tau_s]. The noise per decimated sample is scaled so
/// that the window mean carries added_noise_photons / 4 per quadrature in amplitude
/// units, i.e. SNR^2 = |A|^2 / n_add for SNR = |mu1 - mu0| / (sigma1 + sigma0).
WindowMeasurement detect(const Trajectory& trajectory, const DetectionConfig& config,
                         double gamma0, std::mt19937_64& rng);

/// Noise-free window mean computed directly from ADC-rate samples.
std::complex<double> window_mean_at_adc_rate(const Trajectory& trajectory,
                                             const DetectionConfig& config, double gamma0);

/// Converts a voltage magnitude back to intracavity photons, |V|^2 / (scale^2 2 Gamma0).
double photons_from_voltage(double volts, const DetectionConfig& config, double gamma0);

/// Resonant frequency pulled by the Duffing shift of a probe at generator power
/// `power_dbm` through `attenuation_db`.
double duffing_frequency(double zero_power_frequency, double alpha, double gamma0, double gamma,
                         double attenuation_db, double power_dbm);

std::vector<double> duffing_frequency_vs_power(const DeviceParameters& device, double flux_bias,
                                               double attenuation_db,
                                               std::span<const double> powers_dbm);

struct AttenuationFit {
  double attenuation_db = 0.0;
  double zero_power_frequency = 0.0;  // fitted intercept, rad/s
  double rms_residual = 0.0;          // rad/s
  std::size_t points = 0;
  bool low_dof = false;               // fewer than one residual degree of freedom
};

/// Least-squares fit of the attenuation with alpha, Gamma0 and Gamma fixed by the
/// device model at `flux_bias`. The zero-power frequency is a nuisance intercept.
/// Input order does not matter.
AttenuationFit fit_attenuation(std::span<const double> powers_dbm,
                               std::span<const double> frequencies, const DeviceParameters& device,
                               double flux_bias);

/// G = |S11|^2 + Att (all in dB).
double gain_from_attenuation(double s11_sq_db, double attenuation_db);

/// |A|^2 = (P_s - P_n) / (2 (Gamma0 / 2 pi) hbar omega_r 10^(G/10)); powers in W.
double photons_from_power(double signal_power, double noise_power, double gamma0, double omega_r,
                          double gain_db);

/// Inverse of photons_from_power.
double power_from_photons(double photons, double noise_power, double gamma0, double omega_r,
                          double gain_db);

struct CalibrationPoint {
  double flux_bias = 0.0;
  double power_dbm = 0.0;
  double frequency = 0.0;  // rad/s
};

struct BiasCalibration {
  double flux_bias = 0.0;
  AttenuationFit fit;
};

struct CalibrationReport {
  std::vector<BiasCalibration> per_bias;
  double mean_attenuation_db = 0.0;
  double s11_sq_db = 0.0;
  double gain_db = 0.0;
  double photons_per_watt = 0.0;  // digitiser power to intracavity photons at omega_r
  std::vector<std::string> warnings;
};

/// Groups points by flux bias, fits each series and derives gain and the photon
/// conversion factor at `omega_r`.
CalibrationReport calibrate(std::span<const CalibrationPoint> dataset,
                            const DeviceParameters& device, double s11_sq_db, double omega_r);

/// Columnar text: flux_bias_F probe_power_dbm resonant_frequency_hz. '#' starts a comment.
std::vector<CalibrationPoint> read_calibration_dataset(std::istream& in);
void write_calibration_dataset(std::ostream& out, std::span<const CalibrationPoint> dataset);
void write_calibration_report(std::ostream& out, const CalibrationReport& report);

/// Synthetic Duffing-pull data. Each frequency gets additive Gaussian noise with
/// standard deviation noise_fraction * (largest pull in that flux series).
std::vector<CalibrationPoint> synthesize_calibration_dataset(const DeviceParameters& device,
                                                             std::span<const double> flux_biases,
                                                             std::span<const double> powers_dbm,
                                                             double attenuation_db,
                                                             double noise_fraction,
                                                             std::uint64_t seed);

}  // namespace jpo
