#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "jpo/config.hpp"
#include "jpo/errors.hpp"
#include "jpo/units.hpp"

namespace py = pybind11;
using namespace py::literals;

namespace {

py::dict fixed_points_to_dict(const jpo::SteadyState& s) {
  py::list points;
  for (const auto& p : s.points) {
    points.append(py::dict("photons"_a = p.photons, "phase"_a = p.phase, "stable"_a = p.stable));
  }
  return py::dict("regime"_a = jpo::to_string(s.regime), "points"_a = points,
                  "stable_photons"_a = s.stable_photons());
}

py::dict analysis_to_dict(const jpo::HistogramAnalysis& a, const jpo::ErrorBudget& b) {
  return py::dict("mode"_a = a.rectified ? "rectified" : "amplitude", "rotation"_a = a.rotation,
                  "mu0"_a = a.fit0.mean, "sigma0"_a = a.fit0.sigma, "mu1"_a = a.fit1.mean,
                  "sigma1"_a = a.fit1.sigma, "snr"_a = a.snr,
                  "discrimination"_a = a.discrimination, "threshold"_a = a.threshold,
                  "relaxation_loss"_a = b.relaxation_loss,
                  "preparation_loss"_a = b.preparation_loss, "thermal_loss"_a = b.thermal_loss,
                  "switching_loss"_a = b.switching_loss, "overlap_loss"_a = b.overlap_loss,
                  "overlap_loss_gaussian"_a = b.overlap_loss_gaussian,
                  "inferred_fidelity"_a = b.inferred_fidelity);
}

// Accepts None (defaults), JSON text or a nested dict.
jpo::RunConfig config_from(const py::object& cfg) {
  if (cfg.is_none()) return jpo::RunConfig{};
  if (py::isinstance<py::str>(cfg)) return jpo::parse_config(cfg.cast<std::string>());
  return jpo::parse_config(py::module_::import("json").attr("dumps")(cfg).cast<std::string>());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Josephson parametric oscillator readout simulator (compiled core)";
  m.attr("__version__") = JPO_VERSION;

  py::register_exception<jpo::DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<jpo::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<jpo::SimulationError>(m, "SimulationError", PyExc_RuntimeError);
  py::register_exception<jpo::AnalysisError>(m, "AnalysisError", PyExc_RuntimeError);

  m.def("default_config_json", [] { return jpo::to_json_text(jpo::RunConfig{}); },
        "Reference configuration as JSON text.");
  m.def("derived_quantities_json",
        [](const py::object& cfg) { return jpo::derived_json_text(config_from(cfg)); },
        "cfg"_a = py::none());

  m.def(
      "device_frequencies",
      [](double flux_bias, const py::object& cfg) {
        const auto d = config_from(cfg).device_parameters();
        return py::dict(
            "bare_resonator_hz"_a = jpo::cyclic(jpo::bare_resonator_frequency(d, flux_bias)),
            "dressed_resonator_hz"_a = jpo::cyclic(jpo::dressed_resonator_frequency(d, flux_bias)),
            "qubit_hz"_a = jpo::cyclic(jpo::qubit_frequency(d, flux_bias)),
            "two_chi_hz"_a = jpo::cyclic(2.0 * jpo::dispersive_shift(d, flux_bias)),
            "alpha_hz"_a = jpo::cyclic(jpo::duffing_alpha(d, flux_bias)),
            "beta"_a = jpo::pump_induced_beta(d, flux_bias));
      },
      "flux_bias"_a, "cfg"_a = py::none(),
      "Closed-form device quantities at flux bias F (radians); frequencies in Hz.");

  m.def(
      "instability_threshold",
      [](double delta, double beta, double gamma) -> std::optional<std::pair<double, double>> {
        const auto b = jpo::instability_threshold(delta, beta, gamma);
        if (!b) return std::nullopt;
        return std::make_pair(b->lower, b->upper);
      },
      "delta"_a, "beta"_a, "gamma"_a = 1.0,
      "Lower and upper epsilon / Gamma boundaries, or None.");

  m.def(
      "steady_state",
      [](double delta, double epsilon, double alpha, double gamma) {
        return fixed_points_to_dict(jpo::steady_state_photons(delta, epsilon, alpha, gamma));
      },
      "delta"_a, "epsilon"_a, "alpha"_a, "gamma"_a);

  m.def("purcell_t1", &jpo::purcell_t1, "gamma0"_a, "coupling"_a, "detuning"_a);

  m.def(
      "integrate",
      [](int qubit_state, std::optional<double> decay_time, const py::object& cfg,
         std::optional<std::uint64_t> seed, std::optional<double> t_end,
         std::optional<double> seed_noise_photons) {
        const jpo::RunConfig c = config_from(cfg);
        jpo::SimulationConfig sim = c.simulation_config();
        if (seed) sim.rng_seed = *seed;
        if (t_end) sim.t_end = *t_end;
        if (seed_noise_photons) sim.seed_noise_photons = *seed_noise_photons;
        jpo::JumpSchedule schedule;
        schedule.prepared_state = qubit_state;
        schedule.decay_time = decay_time;
        schedule.pulse_to_pump = c.cycle.pump_delay_s;
        jpo::Trajectory traj;
        {
          py::gil_scoped_release release;
          traj = jpo::integrate(sim, c.operating_point_at_q0(), schedule);
        }
        py::array_t<double> times(static_cast<py::ssize_t>(traj.size()));
        py::array_t<std::complex<double>> amps(static_cast<py::ssize_t>(traj.size()));
        std::copy(traj.times.begin(), traj.times.end(), times.mutable_data());
        std::copy(traj.amplitudes.begin(), traj.amplitudes.end(), amps.mutable_data());
        return py::make_tuple(times, amps);
      },
      "qubit_state"_a, "decay_time"_a = py::none(), "cfg"_a = py::none(), "seed"_a = py::none(),
      "t_end"_a = py::none(), "seed_noise_photons"_a = py::none(),
      "Integrates one trajectory at the configured operating point. Returns (times, A).");

  m.def(
      "readout",
      [](std::size_t shots, const py::object& cfg, std::optional<std::uint64_t> seed,
         bool rectified, unsigned threads) {
        const jpo::RunConfig c = config_from(cfg);
        jpo::CycleConfig cycle = c.cycle_config();
        cycle.n_shots = shots;
        std::vector<jpo::ReadoutCycleRecord> records;
        jpo::HistogramAnalysis analysis;
        jpo::ErrorBudget budget;
        {
          py::gil_scoped_release release;
          records = jpo::run_cycles(cycle, c.operating_point_at_q0(), c.qubit_parameters(),
                                    c.detection_config(), c.simulation_config(),
                                    seed.value_or(c.simulation.rng_seed), threads);
          analysis = rectified ? jpo::rectified_analyze(records) : jpo::analyze(records);
          budget = jpo::error_budget(records, analysis);
        }
        py::array_t<double> v(
            {static_cast<py::ssize_t>(records.size()), static_cast<py::ssize_t>(2)});
        py::array_t<std::uint8_t> prepared(static_cast<py::ssize_t>(records.size()));
        auto vv = v.mutable_unchecked<2>();
        auto pp = prepared.mutable_unchecked<1>();
        for (std::size_t k = 0; k < records.size(); ++k) {
          const auto i = static_cast<py::ssize_t>(k);
          vv(i, 0) = records[k].v_i;
          vv(i, 1) = records[k].v_q;
          pp(i) = records[k].prepared;
        }
        py::dict out = analysis_to_dict(analysis, budget);
        out["voltages"] = v;
        out["prepared"] = prepared;
        return out;
      },
      "shots"_a, "cfg"_a = py::none(), "seed"_a = py::none(), "rectified"_a = false,
      "threads"_a = 0u,
      "Runs `shots` cycles per prepared state and returns the analysis and error budget.");

  m.def(
      "fit_attenuation",
      [](std::vector<double> powers_dbm, std::vector<double> frequencies_hz, double flux_bias,
         const py::object& cfg) {
        std::vector<double> omega;
        for (double f : frequencies_hz) omega.push_back(jpo::angular(f));
        const auto fit = jpo::fit_attenuation(powers_dbm, omega,
                                              config_from(cfg).device_parameters(), flux_bias);
        return py::dict("attenuation_db"_a = fit.attenuation_db,
                        "zero_power_frequency_hz"_a = jpo::cyclic(fit.zero_power_frequency),
                        "rms_residual_hz"_a = jpo::cyclic(fit.rms_residual),
                        "low_dof"_a = fit.low_dof);
      },
      "powers_dbm"_a, "frequencies_hz"_a, "flux_bias"_a, "cfg"_a = py::none());

  m.def(
      "duffing_frequencies",
      [](double flux_bias, double attenuation_db, std::vector<double> powers_dbm,
         const py::object& cfg) {
        std::vector<double> out = jpo::duffing_frequency_vs_power(
            config_from(cfg).device_parameters(), flux_bias, attenuation_db, powers_dbm);
        for (double& f : out) f = jpo::cyclic(f);
        return out;
      },
      "flux_bias"_a, "attenuation_db"_a, "powers_dbm"_a, "cfg"_a = py::none(),
      "Duffing-pulled resonance (Hz) versus generator power.");

  m.def("photons_from_power", &jpo::photons_from_power, "signal_power"_a, "noise_power"_a,
        "gamma0"_a, "omega_r"_a, "gain_db"_a);
  m.def("power_from_photons", &jpo::power_from_photons, "photons"_a, "noise_power"_a,
        "gamma0"_a, "omega_r"_a, "gain_db"_a);
}
