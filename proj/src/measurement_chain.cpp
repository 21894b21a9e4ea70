#include "jpo/measurement_chain.hpp"

#include <cmath>

#include "jpo/errors.hpp"
#include "jpo/units.hpp"

namespace jpo {

void DetectionConfig::validate() const {
  if (!(added_noise_photons >= 0.0)) throw SimulationError("added_noise_photons must be >= 0");
  if (!(adc_rate > 0.0) || !(decimated_rate > 0.0)) {
    throw SimulationError("sampling rates must be positive");
  }
  if (!(decimated_rate < adc_rate)) {
    throw SimulationError("decimated_rate must be below adc_rate");
  }
  if (!(readout_delay >= 0.0) || !(sampling_time > 0.0)) {
    throw SimulationError("sampling window must have tau_r >= 0 and tau_s > 0");
  }
  if (decimated_samples() == 0) {
    throw SimulationError("sampling window shorter than one decimated sample");
  }
  if (!(carrier_frequency > 0.0) || !(load_impedance > 0.0)) {
    throw SimulationError("carrier_frequency and load_impedance must be positive");
  }
}

std::size_t DetectionConfig::decimated_samples() const {
  return static_cast<std::size_t>(std::llround(sampling_time * decimated_rate));
}

double DetectionConfig::voltage_scale() const {
  return std::sqrt(load_impedance * kHbar * carrier_frequency * db_to_linear(gain_db) / kTwoPi);
}

std::complex<double> output_field(std::complex<double> amplitude, std::complex<double> input,
                                  double gamma0) {
  return input - std::complex<double>(0.0, 1.0) * std::sqrt(2.0 * gamma0) * amplitude;
}

namespace {

void require_window(const Trajectory& trajectory, const DetectionConfig& config) {
  if (trajectory.size() < 2 || trajectory.times.back() < config.window_end() * (1.0 - 1e-12)) {
    throw SimulationError("detect: sampling window extends beyond the trajectory");
  }
}

// Box-car decimated, noise-free output field over the sampling window.
std::vector<std::complex<double>> decimate(const Trajectory& trajectory,
                                           const DetectionConfig& config, double gamma0) {
  const std::size_t n_dec = config.decimated_samples();
  const double bin = 1.0 / config.decimated_rate;
  const double adc_dt = 1.0 / config.adc_rate;
  std::vector<std::complex<double>> out(n_dec);
  std::vector<std::size_t> counts(n_dec, 0);
  const auto n_adc = static_cast<std::size_t>(std::floor(config.sampling_time / adc_dt + 1e-9));
  for (std::size_t k = 0; k < n_adc; ++k) {
    const double offset = static_cast<double>(k) * adc_dt;
    const auto j = std::min(n_dec - 1, static_cast<std::size_t>(offset / bin));
    const double t = config.window_start() + offset;
    out[j] += output_field(trajectory.amplitude_at(t), {}, gamma0);
    ++counts[j];
  }
  for (std::size_t j = 0; j < n_dec; ++j) {
    if (counts[j] == 0) {
      // Bin narrower than the ADC spacing; sample its centre directly.
      const double t = config.window_start() + (static_cast<double>(j) + 0.5) * bin;
      out[j] = output_field(trajectory.amplitude_at(t), {}, gamma0);
    } else {
      out[j] /= static_cast<double>(counts[j]);
    }
  }
  return out;
}

}  // namespace

WindowMeasurement detect(const Trajectory& trajectory, const DetectionConfig& config,
                         double gamma0, std::mt19937_64& rng) {
  config.validate();
  require_window(trajectory, config);
  std::vector<std::complex<double>> samples = decimate(trajectory, config, gamma0);
  const double n_dec = static_cast<double>(samples.size());
  const double scale = config.voltage_scale();
  // Window-mean noise is sqrt(n_add) / 2 per quadrature in amplitude units; the
  // per-sample value is larger by sqrt(n_dec). Output field = sqrt(2 Gamma0) * amplitude.
  const double sigma = std::sqrt(2.0 * gamma0) * 0.5 * std::sqrt(config.added_noise_photons * n_dec);
  std::normal_distribution<double> normal(0.0, 1.0);

  WindowMeasurement m;
  m.decimated.reserve(samples.size());
  std::complex<double> sum{};
  double abs_sum = 0.0;
  for (const auto& c : samples) {
    const double nr = normal(rng);
    const double ni = normal(rng);
    const std::complex<double> v = scale * (c + sigma * std::complex<double>(nr, ni));
    m.decimated.push_back(v);
    sum += v;
    abs_sum += std::abs(v);
  }
  m.mean = sum / n_dec;
  m.rectified_mean = abs_sum / n_dec;
  return m;
}

std::complex<double> window_mean_at_adc_rate(const Trajectory& trajectory,
                                             const DetectionConfig& config, double gamma0) {
  config.validate();
  require_window(trajectory, config);
  const double adc_dt = 1.0 / config.adc_rate;
  const auto n_adc = static_cast<std::size_t>(std::floor(config.sampling_time / adc_dt + 1e-9));
  std::complex<double> sum{};
  for (std::size_t k = 0; k < n_adc; ++k) {
    const double t = config.window_start() + static_cast<double>(k) * adc_dt;
    sum += output_field(trajectory.amplitude_at(t), {}, gamma0);
  }
  return config.voltage_scale() * sum / static_cast<double>(n_adc);
}

double photons_from_voltage(double volts, const DetectionConfig& config, double gamma0) {
  const double amplitude = volts / (config.voltage_scale() * std::sqrt(2.0 * gamma0));
  return amplitude * amplitude;
}

}  // namespace jpo
