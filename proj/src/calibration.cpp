#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "jpo/errors.hpp"
#include "jpo/measurement_chain.hpp"
#include "jpo/parallel.hpp"
#include "jpo/units.hpp"

namespace jpo {

namespace {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

// Photons per (W at the device) that a resonant probe builds up, without the
// attenuation factor: 2 Gamma0 / (Gamma^2 hbar omega).
double pull_coefficient(double alpha, double gamma0, double gamma, double omega0) {
  return 2.0 * alpha * gamma0 / (gamma * gamma * kHbar * omega0);
}

}  // namespace

double duffing_frequency(double zero_power_frequency, double alpha, double gamma0, double gamma,
                         double attenuation_db, double power_dbm) {
  const double power_at_device = dbm_to_watts(power_dbm - attenuation_db);
  return zero_power_frequency -
         pull_coefficient(alpha, gamma0, gamma, zero_power_frequency) * power_at_device;
}

std::vector<double> duffing_frequency_vs_power(const DeviceParameters& device, double flux_bias,
                                               double attenuation_db,
                                               std::span<const double> powers_dbm) {
  const double omega0 = dressed_resonator_frequency(device, flux_bias);
  const double alpha = duffing_alpha(device, flux_bias);
  std::vector<double> out;
  out.reserve(powers_dbm.size());
  for (double p : powers_dbm) {
    out.push_back(duffing_frequency(omega0, alpha, device.external_damping,
                                    device.total_damping(), attenuation_db, p));
  }
  return out;
}

AttenuationFit fit_attenuation(std::span<const double> powers_dbm,
                               std::span<const double> frequencies, const DeviceParameters& device,
                               double flux_bias) {
  if (powers_dbm.size() != frequencies.size()) {
    throw AnalysisError("fit_attenuation: power and frequency columns differ in length");
  }
  if (powers_dbm.size() < 2) throw AnalysisError("fit_attenuation: need at least two points");

  std::vector<std::pair<double, double>> rows;
  rows.reserve(powers_dbm.size());
  for (std::size_t i = 0; i < powers_dbm.size(); ++i) {
    if (!std::isfinite(powers_dbm[i]) || !std::isfinite(frequencies[i])) {
      throw AnalysisError("fit_attenuation: non-finite input");
    }
    rows.emplace_back(powers_dbm[i], frequencies[i]);
  }
  std::sort(rows.begin(), rows.end());
  if (rows.front().first == rows.back().first) {
    throw AnalysisError("fit_attenuation: all probe powers are equal");
  }

  // omega = omega0 - c * x with x the generator power in W; linear least squares in
  // (omega0, c), then c = k(omega0) * 10^(-Att/10).
  const double n = static_cast<double>(rows.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [p, f] : rows) {
    sx += dbm_to_watts(p);
    sy += f;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [p, f] : rows) {
    const double dx = dbm_to_watts(p) - mx;
    sxx += dx * dx;
    sxy += dx * (f - my);
  }
  const double slope = sxy / sxx;  // = -c
  const double omega0 = my - slope * mx;
  const double c = -slope;
  if (!(c > 0.0)) {
    throw AnalysisError("fit_attenuation: frequencies do not decrease with power");
  }

  const double k = pull_coefficient(duffing_alpha(device, flux_bias), device.external_damping,
                                    device.total_damping(), omega0);
  AttenuationFit fit;
  fit.attenuation_db = -linear_to_db(c / k);
  fit.zero_power_frequency = omega0;
  fit.points = rows.size();
  fit.low_dof = rows.size() < 3;
  double ss = 0.0;
  for (const auto& [p, f] : rows) {
    const double r = f - (omega0 - c * dbm_to_watts(p));
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / n);
  return fit;
}

double gain_from_attenuation(double s11_sq_db, double attenuation_db) {
  return s11_sq_db + attenuation_db;
}

double photons_from_power(double signal_power, double noise_power, double gamma0, double omega_r,
                          double gain_db) {
  const double net = signal_power - noise_power;
  if (net < 0.0) throw DomainError("photons_from_power: signal power below noise power");
  return net / (2.0 * (gamma0 / kTwoPi) * kHbar * omega_r * db_to_linear(gain_db));
}

double power_from_photons(double photons, double noise_power, double gamma0, double omega_r,
                          double gain_db) {
  if (photons < 0.0) throw DomainError("power_from_photons: negative photon number");
  return noise_power + photons * 2.0 * (gamma0 / kTwoPi) * kHbar * omega_r * db_to_linear(gain_db);
}

CalibrationReport calibrate(std::span<const CalibrationPoint> dataset,
                            const DeviceParameters& device, double s11_sq_db, double omega_r) {
  if (dataset.empty()) throw AnalysisError("calibrate: empty dataset");
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> series;
  for (const auto& pt : dataset) {
    auto& s = series[pt.flux_bias];
    s.first.push_back(pt.power_dbm);
    s.second.push_back(pt.frequency);
  }
  CalibrationReport report;
  report.s11_sq_db = s11_sq_db;
  double sum_att = 0.0;
  for (const auto& [flux, cols] : series) {
    BiasCalibration b;
    b.flux_bias = flux;
    b.fit = fit_attenuation(cols.first, cols.second, device, flux);
    if (b.fit.low_dof) {
      std::ostringstream msg;
      msg << "flux bias " << flux << ": " << b.fit.points
          << " points leave no residual degree of freedom";
      report.warnings.push_back(msg.str());
    }
    sum_att += b.fit.attenuation_db;
    report.per_bias.push_back(b);
  }
  report.mean_attenuation_db = sum_att / static_cast<double>(report.per_bias.size());
  report.gain_db = gain_from_attenuation(s11_sq_db, report.mean_attenuation_db);
  report.photons_per_watt =
      photons_from_power(1.0, 0.0, device.external_damping, omega_r, report.gain_db);
  return report;
}

std::vector<CalibrationPoint> read_calibration_dataset(std::istream& in) {
  std::vector<CalibrationPoint> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string first;
    if (!(fields >> first)) continue;
    std::istringstream row(line);
    CalibrationPoint pt;
    double f_hz = 0.0;
    std::string extra;
    if (!(row >> pt.flux_bias >> pt.power_dbm >> f_hz) || (row >> extra)) {
      throw ConfigError("calibration dataset line " + std::to_string(line_no) +
                        ": expected three numeric columns");
    }
    pt.frequency = angular(f_hz);
    out.push_back(pt);
  }
  if (out.empty()) throw ConfigError("calibration dataset contains no data rows");
  return out;
}

void write_calibration_dataset(std::ostream& out, std::span<const CalibrationPoint> dataset) {
  out << "# flux_bias_F[rad] probe_power[dBm] resonant_frequency[Hz]\n";
  out << std::setprecision(17);
  for (const auto& pt : dataset) {
    out << pt.flux_bias << ' ' << pt.power_dbm << ' ' << cyclic(pt.frequency) << '\n';
  }
}

void write_calibration_report(std::ostream& out, const CalibrationReport& report) {
  out << std::setprecision(10);
  out << "# calibration report\n";
  out << "# flux_bias_F[rad] attenuation[dB] zero_power_frequency[Hz] rms_residual[Hz] points\n";
  for (const auto& b : report.per_bias) {
    out << b.flux_bias << ' ' << b.fit.attenuation_db << ' ' << cyclic(b.fit.zero_power_frequency)
        << ' ' << cyclic(b.fit.rms_residual) << ' ' << b.fit.points << '\n';
  }
  out << "mean_attenuation_db " << report.mean_attenuation_db << '\n';
  out << "s11_sq_db " << report.s11_sq_db << '\n';
  out << "gain_db " << report.gain_db << '\n';
  out << "photons_per_watt " << report.photons_per_watt << '\n';
  for (const auto& w : report.warnings) out << "warning " << w << '\n';
}

std::vector<CalibrationPoint> synthesize_calibration_dataset(const DeviceParameters& device,
                                                             std::span<const double> flux_biases,
                                                             std::span<const double> powers_dbm,
                                                             double attenuation_db,
                                                             double noise_fraction,
                                                             std::uint64_t seed) {
  if (noise_fraction < 0.0) throw DomainError("noise_fraction must be >= 0");
  std::vector<CalibrationPoint> out;
  for (std::size_t k = 0; k < flux_biases.size(); ++k) {
    const double flux = flux_biases[k];
    const std::vector<double> freqs =
        duffing_frequency_vs_power(device, flux, attenuation_db, powers_dbm);
    const double omega0 = dressed_resonator_frequency(device, flux);
    double max_pull = 0.0;
    for (double f : freqs) max_pull = std::max(max_pull, omega0 - f);
    std::mt19937_64 rng(derive_seed(seed, k));
    std::normal_distribution<double> normal(0.0, noise_fraction * max_pull);
    for (std::size_t i = 0; i < freqs.size(); ++i) {
      const double noise = noise_fraction > 0.0 ? normal(rng) : 0.0;
      out.push_back({flux, powers_dbm[i], freqs[i] + noise});
    }
  }
  return out;
}

}  // namespace jpo
