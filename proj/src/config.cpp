#include "jpo/config.hpp"

#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "jpo/errors.hpp"
#include "jpo/units.hpp"

namespace jpo {

using nlohmann::ordered_json;

namespace {

// Calls v(section, key, field) for every configuration field, in file order.
template <typename Config, typename Visitor>
void visit_fields(Config& c, Visitor&& v) {
  v("device", "josephson_energy_hz", c.device.josephson_energy_hz);
  v("device", "charging_energy_hz", c.device.charging_energy_hz);
  v("device", "coupling_hz", c.device.coupling_hz);
  v("device", "bare_frequency_hz", c.device.bare_frequency_hz);
  v("device", "participation_ratio", c.device.participation_ratio);
  v("device", "external_damping_hz", c.device.external_damping_hz);
  v("device", "internal_loss_hz", c.device.internal_loss_hz);
  v("device", "flux_map_scale", c.device.flux_map_scale);
  v("device", "flux_map_offset", c.device.flux_map_offset);
  v("device", "impedance_ohm", c.device.impedance_ohm);
  v("device", "resistance_quantum_ohm", c.device.resistance_quantum_ohm);

  v("operating_point", "flux_bias_over_pi", c.operating_point.flux_bias_over_pi);
  v("operating_point", "delta_q0_over_gamma", c.operating_point.delta_q0_over_gamma);
  v("operating_point", "epsilon_over_gamma", c.operating_point.epsilon_over_gamma);
  v("operating_point", "two_chi_hz", c.operating_point.two_chi_hz);
  v("operating_point", "alpha_hz", c.operating_point.alpha_hz);
  v("operating_point", "beta", c.operating_point.beta);

  v("qubit", "t1_s", c.qubit.t1_s);
  v("qubit", "t2_star_s", c.qubit.t2_star_s);
  v("qubit", "temperature_k", c.qubit.temperature_k);
  v("qubit", "frequency_hz", c.qubit.frequency_hz);

  v("detection", "added_noise_photons", c.detection.added_noise_photons);
  v("detection", "if_frequency_hz", c.detection.if_frequency_hz);
  v("detection", "adc_rate_sps", c.detection.adc_rate_sps);
  v("detection", "decimated_rate_sps", c.detection.decimated_rate_sps);
  v("detection", "gain_db", c.detection.gain_db);
  v("detection", "readout_delay_s", c.detection.readout_delay_s);
  v("detection", "sampling_time_s", c.detection.sampling_time_s);
  v("detection", "carrier_frequency_hz", c.detection.carrier_frequency_hz);
  v("detection", "load_impedance_ohm", c.detection.load_impedance_ohm);

  v("simulation", "dt_s", c.simulation.dt_s);
  v("simulation", "t_end_s", c.simulation.t_end_s);
  v("simulation", "seed_noise_photons", c.simulation.seed_noise_photons);
  v("simulation", "pump_ramp_s", c.simulation.pump_ramp_s);
  v("simulation", "latching", c.simulation.latching);
  v("simulation", "record_stride", c.simulation.record_stride);
  v("simulation", "rng_seed", c.simulation.rng_seed);

  v("cycle", "n_shots", c.cycle.n_shots);
  v("cycle", "pi_pulse_s", c.cycle.pi_pulse_s);
  v("cycle", "pump_delay_s", c.cycle.pump_delay_s);
  v("cycle", "prep_error_prob", c.cycle.prep_error_prob);
  v("cycle", "thermal_prob", c.cycle.thermal_prob);
  v("cycle", "switch_prob", c.cycle.switch_prob);
}

std::string key_name(const char* section, const char* key) {
  return std::string(section) + "." + key;
}

void read_value(const ordered_json& j, const std::string& name, double& out) {
  if (!j.is_number()) throw ConfigError(name + ": expected a number");
  out = j.get<double>();
  if (!std::isfinite(out)) throw ConfigError(name + ": must be finite");
}

void read_value(const ordered_json& j, const std::string& name, std::optional<double>& out) {
  if (j.is_null()) {
    out.reset();
    return;
  }
  double v = 0.0;
  read_value(j, name, v);
  out = v;
}

void read_value(const ordered_json& j, const std::string& name, bool& out) {
  if (!j.is_boolean()) throw ConfigError(name + ": expected true or false");
  out = j.get<bool>();
}

void read_value(const ordered_json& j, const std::string& name, std::uint64_t& out) {
  if (!j.is_number_unsigned()) {
    throw ConfigError(name + ": expected a non-negative integer");
  }
  out = j.get<std::uint64_t>();
}

ordered_json write_value(double v) { return v; }
ordered_json write_value(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}
ordered_json write_value(bool v) { return v; }
ordered_json write_value(std::uint64_t v) { return v; }

template <typename Fn>
auto as_config_error(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

DeviceParameters RunConfig::device_parameters() const {
  DeviceParameters d;
  d.josephson_energy = angular(device.josephson_energy_hz);
  d.charging_energy = angular(device.charging_energy_hz);
  d.coupling = angular(device.coupling_hz);
  d.bare_frequency = angular(device.bare_frequency_hz);
  d.participation = device.participation_ratio;
  d.external_damping = angular(device.external_damping_hz);
  d.internal_loss = angular(device.internal_loss_hz);
  d.flux_map_scale = device.flux_map_scale;
  d.flux_map_offset = device.flux_map_offset;
  d.impedance = device.impedance_ohm;
  d.resistance_quantum = device.resistance_quantum_ohm.value_or(kResistanceQuantum);
  return d;
}

double RunConfig::flux_bias() const { return operating_point.flux_bias_over_pi * std::numbers::pi; }

OperatingPoint RunConfig::operating_point_at_q0() const {
  const DeviceParameters d = device_parameters();
  const double gamma = d.total_damping();
  OperatingPointOverrides o;
  if (operating_point.two_chi_hz) o.chi = angular(*operating_point.two_chi_hz) / 2.0;
  if (operating_point.alpha_hz) o.alpha = angular(*operating_point.alpha_hz);
  o.beta = operating_point.beta;
  return make_operating_point_from_q0(d, flux_bias(), operating_point.delta_q0_over_gamma * gamma,
                                      operating_point.epsilon_over_gamma * gamma, o);
}

QubitParameters RunConfig::qubit_parameters() const {
  QubitParameters q;
  q.t1 = qubit.t1_s;
  q.t2_star = qubit.t2_star_s;
  q.temperature = qubit.temperature_k;
  q.frequency = qubit.frequency_hz ? angular(*qubit.frequency_hz)
                                   : qubit_frequency(device_parameters(), flux_bias());
  return q;
}

DetectionConfig RunConfig::detection_config() const {
  DetectionConfig c;
  c.added_noise_photons = detection.added_noise_photons;
  c.if_frequency = detection.if_frequency_hz;
  c.adc_rate = detection.adc_rate_sps;
  c.decimated_rate = detection.decimated_rate_sps;
  c.gain_db = detection.gain_db;
  c.readout_delay = detection.readout_delay_s;
  c.sampling_time = detection.sampling_time_s;
  c.carrier_frequency = detection.carrier_frequency_hz
                            ? angular(*detection.carrier_frequency_hz)
                            : dressed_resonator_frequency(device_parameters(), flux_bias());
  c.load_impedance = detection.load_impedance_ohm;
  return c;
}

SimulationConfig RunConfig::simulation_config() const {
  SimulationConfig s;
  s.dt = simulation.dt_s;
  s.t_end = simulation.t_end_s;
  s.seed_noise_photons = simulation.seed_noise_photons;
  s.pump_ramp = simulation.pump_ramp_s;
  s.latching = simulation.latching;
  s.record_stride = static_cast<std::size_t>(simulation.record_stride);
  s.rng_seed = simulation.rng_seed;
  return s;
}

CycleConfig RunConfig::cycle_config() const {
  CycleConfig c;
  c.n_shots = static_cast<std::size_t>(cycle.n_shots);
  c.pi_pulse = cycle.pi_pulse_s;
  c.pump_delay = cycle.pump_delay_s;
  c.prep_error_prob = cycle.prep_error_prob;
  c.thermal_prob = cycle.thermal_prob;
  c.switch_prob = cycle.switch_prob;
  return c;
}

void RunConfig::validate() const {
  as_config_error("device", [&] { device_parameters().validate(); });
  as_config_error("operating_point", [&] { operating_point_at_q0(); });
  as_config_error("qubit", [&] { qubit_parameters().validate(); });
  as_config_error("detection", [&] { detection_config().validate(); });
  as_config_error("simulation", [&] { simulation_config().validate(); });
  as_config_error("cycle", [&] { cycle_config().validate(); });
}

RunConfig parse_config(const std::string& json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const ordered_json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be an object");

  RunConfig config;
  std::set<std::string> known;
  std::set<std::string> sections;
  visit_fields(config, [&](const char* section, const char* key, auto& field) {
    const std::string name = key_name(section, key);
    known.insert(name);
    sections.insert(section);
    const auto s = doc.find(section);
    if (s == doc.end()) throw ConfigError("missing config key: " + name);
    if (!s->is_object()) throw ConfigError(std::string(section) + ": expected an object");
    const auto v = s->find(key);
    if (v == s->end()) throw ConfigError("missing config key: " + name);
    read_value(*v, name, field);
  });
  for (const auto& [section, body] : doc.items()) {
    if (!sections.contains(section)) throw ConfigError("unknown config key: " + section);
    for (const auto& [key, value] : body.items()) {
      const std::string name = section + "." + key;
      if (!known.contains(name)) throw ConfigError("unknown config key: " + name);
    }
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_json_text(const RunConfig& config) {
  ordered_json doc = ordered_json::object();
  visit_fields(config, [&](const char* section, const char* key, const auto& field) {
    doc[section][key] = write_value(field);
  });
  return doc.dump(2) + "\n";
}

std::string derived_json_text(const RunConfig& config) {
  const DeviceParameters d = config.device_parameters();
  const double f = config.flux_bias();
  const OperatingPoint p = config.operating_point_at_q0();
  const QubitParameters q = config.qubit_parameters();
  const DetectionConfig det = config.detection_config();
  ordered_json j;
  j["bare_resonator_frequency_hz"] = cyclic(bare_resonator_frequency(d, f));
  j["dressed_resonator_frequency_hz"] = cyclic(dressed_resonator_frequency(d, f));
  j["qubit_frequency_model_hz"] = cyclic(qubit_frequency(d, f));
  j["qubit_resonator_detuning_hz"] = cyclic(qubit_resonator_detuning(d, f));
  j["dispersive_regime"] = in_dispersive_regime(d, f);
  j["two_chi_model_hz"] = cyclic(2.0 * dispersive_shift(d, f));
  j["alpha_model_hz"] = cyclic(duffing_alpha(d, f));
  j["beta_model"] = pump_induced_beta(d, f);
  j["gamma_hz"] = cyclic(p.gamma);
  j["two_chi_used_hz"] = cyclic(2.0 * p.chi);
  j["alpha_used_hz"] = cyclic(p.alpha);
  j["beta_used"] = p.beta;
  j["delta_over_gamma"] = p.delta / p.gamma;
  j["delta_q0_over_gamma"] = p.delta_q0() / p.gamma;
  j["delta_q1_over_gamma"] = p.delta_q1() / p.gamma;
  j["epsilon_over_gamma"] = p.epsilon / p.gamma;
  for (int s = 0; s < 2; ++s) {
    const auto n = expected_photons(p, s);
    j[s == 0 ? "expected_photons_q0" : "expected_photons_q1"] =
        n ? ordered_json(*n) : ordered_json(nullptr);
  }
  j["thermal_population"] = q.thermal_population();
  j["thermal_prob_used"] = config.cycle_config().resolved_thermal_prob(q);
  j["purcell_t1_s"] = purcell_t1(d.external_damping, d.coupling, qubit_resonator_detuning(d, f));
  j["voltage_scale_v_per_sqrt_photon_rate"] = det.voltage_scale();
  return j.dump(2) + "\n";
}

}  // namespace jpo
