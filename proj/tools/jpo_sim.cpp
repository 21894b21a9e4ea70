// jpo-sim: batch front end for the simulator.
//
//   jpo-sim [--config PATH] [--seed N] [--out DIR] [--threads N] <command> [options]
//
// Every run writes config.resolved.json and manifest.json into the output
// directory next to its data files. Exit codes: 0 success, 2 usage or
// configuration error, 3 runtime failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "jpo/config.hpp"
#include "jpo/errors.hpp"
#include "jpo/parallel.hpp"
#include "jpo/units.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "jpo-out";
  unsigned threads = 0;
};

// Collects output files and writes the manifest at the end of a run.
class Run {
 public:
  Run(std::string command, const GlobalOptions& global, jpo::RunConfig config)
      : command_(std::move(command)), global_(global), config_(std::move(config)),
        start_(std::chrono::steady_clock::now()) {
    if (global_.seed) config_.simulation.rng_seed = *global_.seed;
    config_.validate();
    fs::create_directories(global_.out_dir);
  }

  jpo::RunConfig& config() { return config_; }
  std::uint64_t seed() const { return config_.simulation.rng_seed; }
  unsigned threads() const { return global_.threads; }

  fs::path output(const std::string& name) {
    outputs_.push_back(name);
    return fs::path(global_.out_dir) / name;
  }

  std::ofstream open(const std::string& name, bool binary = false) {
    const fs::path path = output(name);
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
  }

  void set_options(ordered_json options) { options_ = std::move(options); }

  void finish() {
    {
      std::ofstream snap = open("config.resolved.json");
      snap << jpo::to_json_text(config_);
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    ordered_json m;
    m["tool"] = "jpo-sim";
    m["version"] = JPO_VERSION;
    m["command"] = command_;
    m["options"] = options_;
    m["config_path"] = global_.config_path.empty() ? ordered_json(nullptr)
                                                   : ordered_json(global_.config_path);
    m["rng_seed"] = seed();
    m["threads"] = global_.threads;
    m["output_directory"] = global_.out_dir;
    m["duration_s"] = seconds;
    m["outputs"] = outputs_;
    m["snapshot"] = ordered_json::parse(jpo::to_json_text(config_));
    m["derived"] = ordered_json::parse(jpo::derived_json_text(config_));
    std::ofstream out(fs::path(global_.out_dir) / "manifest.json");
    out << m.dump(2) << '\n';
  }

 private:
  std::string command_;
  GlobalOptions global_;
  jpo::RunConfig config_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> outputs_;
  ordered_json options_ = ordered_json::object();
};

jpo::RunConfig load(const GlobalOptions& global) {
  if (global.config_path.empty()) return jpo::RunConfig{};
  return jpo::load_config(global.config_path);
}

std::pair<std::size_t, std::size_t> parse_grid(const std::string& text) {
  const auto x = text.find('x');
  std::size_t nd = 0, ne = 0;
  try {
    if (x == std::string::npos) throw std::invalid_argument("no x");
    std::size_t used = 0;
    nd = std::stoul(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("trailing");
    ne = std::stoul(text.substr(x + 1), &used);
    if (used != text.size() - x - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw jpo::ConfigError("--grid expects NxM, got '" + text + "'");
  }
  if (nd < 2 || ne < 2) throw jpo::ConfigError("--grid needs at least 2 points per axis");
  return {nd, ne};
}

// ---------------------------------------------------------------------------

struct ThresholdOptions {
  double delta_min = -8.0;
  double delta_max = 4.0;
  std::size_t points = 121;
  std::optional<double> beta;
};

void cmd_threshold(const GlobalOptions& global, const ThresholdOptions& opt) {
  Run run("threshold", global, load(global));
  const jpo::OperatingPoint p = run.config().operating_point_at_q0();
  const double beta = opt.beta.value_or(p.beta);
  if (opt.points < 2) throw jpo::ConfigError("--points must be >= 2");
  run.set_options({{"delta_min", opt.delta_min},
                   {"delta_max", opt.delta_max},
                   {"points", opt.points},
                   {"beta", beta}});
  std::ofstream out = run.open("threshold.txt");
  std::ostringstream table;
  table << "# instability boundary, beta = " << beta << "\n";
  table << "# delta_over_gamma lower_eps_over_gamma upper_eps_over_gamma\n";
  table << std::setprecision(10);
  for (std::size_t k = 0; k < opt.points; ++k) {
    const double d = opt.delta_min + (opt.delta_max - opt.delta_min) * static_cast<double>(k) /
                                         static_cast<double>(opt.points - 1);
    const auto b = jpo::instability_threshold(d, beta, 1.0);
    table << d << ' ';
    if (b) {
      table << b->lower << ' ' << b->upper << '\n';
    } else {
      table << "nan nan\n";
    }
  }
  out << table.str();
  std::cout << table.str();
  run.finish();
}

// ---------------------------------------------------------------------------

struct RegionOptions {
  std::string grid = "64x64";
  std::size_t shots_per_cell = 1;
  double duration_gamma = 100.0;  // integration time in units of 1 / Gamma
  bool discrimination = false;
  std::size_t map_shots = 2000;
};

void write_region(std::ostream& out, const jpo::RegionMap& map) {
  out << "# time-averaged intracavity photons, qubit state " << map.qubit_state << "\n";
  out << "# delta_over_gamma epsilon_over_gamma photons\n";
  out << std::setprecision(10);
  for (std::size_t j = 0; j < map.grid.epsilon_points; ++j) {
    for (std::size_t i = 0; i < map.grid.delta_points; ++i) {
      out << map.grid.delta_at(i) << ' ' << map.grid.epsilon_at(j) << ' ' << map.at(i, j) << '\n';
    }
  }
  for (const auto& f : map.failures) out << "# failure " << f << '\n';
}

void cmd_region_map(const GlobalOptions& global, const RegionOptions& opt) {
  Run run("region-map", global, load(global));
  const auto [nd, ne] = parse_grid(opt.grid);
  if (opt.shots_per_cell < 1) throw jpo::ConfigError("--shots-per-cell must be >= 1");
  if (!(opt.duration_gamma > 0.0)) throw jpo::ConfigError("--duration-gamma must be positive");
  run.set_options({{"grid", opt.grid},
                   {"shots_per_cell", opt.shots_per_cell},
                   {"duration_gamma", opt.duration_gamma},
                   {"discrimination", opt.discrimination},
                   {"map_shots", opt.map_shots}});

  const jpo::OperatingPoint point = run.config().operating_point_at_q0();
  jpo::RegionGrid grid;
  grid.delta_points = nd;
  grid.epsilon_points = ne;
  jpo::SimulationConfig sim = run.config().simulation_config();
  sim.t_end = opt.duration_gamma / point.gamma;
  sim.record_stride = 1;
  jpo::RegionOptions ropt;
  ropt.trajectories_per_cell = opt.shots_per_cell;
  ropt.threads = run.threads();

  std::size_t failures = 0;
  for (int state : {0, 1}) {
    const jpo::RegionMap map = jpo::map_region(grid, sim, point, state, ropt);
    failures += map.failures.size();
    std::ofstream out = run.open("region_q" + std::to_string(state) + ".txt");
    write_region(out, map);
  }

  {
    std::ofstream out = run.open("boundary.txt");
    const double chi = point.chi / point.gamma;
    out << "# instability boundary per qubit state; beta = " << point.beta
        << ", chi / Gamma = " << chi << "\n";
    out << "# delta_over_gamma lower_q0 upper_q0 lower_q1 upper_q1 (epsilon / Gamma)\n";
    out << std::setprecision(10);
    const std::size_t fine = 4 * nd + 1;
    for (std::size_t k = 0; k < fine; ++k) {
      const double d = grid.delta_min + (grid.delta_max - grid.delta_min) *
                                            static_cast<double>(k) /
                                            static_cast<double>(fine - 1);
      out << d;
      for (double dq : {d + chi, d - chi}) {
        const auto b = jpo::instability_threshold(dq, point.beta, 1.0);
        if (b) {
          out << ' ' << b->lower << ' ' << b->upper;
        } else {
          out << " nan nan";
        }
      }
      out << '\n';
    }
  }

  if (opt.discrimination) {
    jpo::CycleConfig cycle = run.config().cycle_config();
    cycle.n_shots = opt.map_shots;
    jpo::RegionGrid dgrid = grid;  // delta axis: ground-state detuning
    const auto map = jpo::discrimination_map(dgrid, cycle, point, run.config().qubit_parameters(),
                                             run.config().detection_config(),
                                             run.config().simulation_config(), run.seed(), false,
                                             run.threads());
    std::ofstream out = run.open("discrimination.txt");
    out << "# state discrimination; delta axis is delta_q0 / Gamma\n";
    out << "# delta_q0_over_gamma epsilon_over_gamma discrimination\n" << std::setprecision(10);
    for (std::size_t j = 0; j < dgrid.epsilon_points; ++j) {
      for (std::size_t i = 0; i < dgrid.delta_points; ++i) {
        out << dgrid.delta_at(i) << ' ' << dgrid.epsilon_at(j) << ' ' << map.at(i, j) << '\n';
      }
    }
    out << "# best " << dgrid.delta_at(map.best_delta) << ' ' << dgrid.epsilon_at(map.best_epsilon)
        << ' ' << map.at(map.best_delta, map.best_epsilon) << '\n';
    for (const auto& f : map.failures) out << "# failure " << f << '\n';
    failures += map.failures.size();
  }
  run.finish();
  if (failures > 0) std::cerr << "warning: " << failures << " cells failed (see output files)\n";
}

// ---------------------------------------------------------------------------

struct ReadoutOptions {
  std::optional<std::size_t> shots;
  bool rectified = false;
  std::string records_format = "binary";
};

void cmd_readout(const GlobalOptions& global, const ReadoutOptions& opt) {
  jpo::RunConfig config = load(global);
  if (opt.shots) {
    if (*opt.shots == 0) throw jpo::ConfigError("--shots must be >= 1");
    config.cycle.n_shots = *opt.shots;
  }
  Run run("readout", global, config);
  run.set_options({{"rectified", opt.rectified}, {"records_format", opt.records_format}});

  auto records = jpo::run_cycles(run.config().cycle_config(), run.config().operating_point_at_q0(),
                                 run.config().qubit_parameters(), run.config().detection_config(),
                                 run.config().simulation_config(), run.seed(), run.threads());
  const jpo::HistogramAnalysis analysis =
      opt.rectified ? jpo::rectified_analyze(records) : jpo::analyze(records);
  jpo::classify(records, analysis);
  const jpo::ErrorBudget budget = jpo::error_budget(records, analysis);

  if (opt.records_format == "binary") {
    std::ofstream out = run.open("records.bin", true);
    jpo::write_records_binary(out, records);
  } else if (opt.records_format == "text") {
    std::ofstream out = run.open("records.txt");
    jpo::write_records_text(out, records);
  }
  {
    std::ofstream out = run.open("report.txt");
    jpo::write_analysis_report(out, analysis, budget);
  }
  {
    std::ofstream out = run.open("histograms.txt");
    jpo::write_histograms(out, analysis);
  }
  jpo::write_analysis_report(std::cout, analysis, budget);
  run.finish();
}

// ---------------------------------------------------------------------------

struct TrajectoryOptions {
  std::size_t average = 1;
};

void cmd_trajectory(const GlobalOptions& global, const TrajectoryOptions& opt) {
  Run run("trajectory", global, load(global));
  if (opt.average < 1) throw jpo::ConfigError("--average must be >= 1");
  run.set_options({{"average", opt.average}});
  const jpo::OperatingPoint point = run.config().operating_point_at_q0();
  const jpo::CycleConfig cycle = run.config().cycle_config();
  const jpo::QubitParameters qubit = run.config().qubit_parameters();
  const jpo::DetectionConfig detection = run.config().detection_config();
  const jpo::SimulationConfig base = run.config().simulation_config();

  for (int state : {0, 1}) {
    const std::uint64_t offset = static_cast<std::uint64_t>(state) * opt.average;
    auto simulate = [&](std::size_t k) {
      const jpo::JumpSchedule schedule =
          jpo::draw_schedule(cycle, qubit, detection, state, run.seed(), offset + k);
      jpo::SimulationConfig sim = base;
      sim.rng_seed = jpo::derive_seed(run.seed(), offset + k, 1);
      return jpo::integrate(sim, point, schedule);
    };
    const std::string name = "trajectory_q" + std::to_string(state) + ".txt";
    if (opt.average == 1) {
      const jpo::Trajectory traj = simulate(0);
      std::ofstream out = run.open(name);
      std::ostringstream header;
      header << "single shot, prepared state " << state << ", time from pump-on";
      jpo::write_trajectory(out, traj, header.str());
      continue;
    }
    std::vector<jpo::Trajectory> shots(opt.average);
    jpo::parallel_for(opt.average, run.threads(), [&](std::size_t k) { shots[k] = simulate(k); });
    const std::size_t n = shots.front().size();
    std::ofstream out = run.open(name);
    out << "# average of " << opt.average << " shots, prepared state " << state
        << ", time from pump-on\n";
    out << "# time_s mean_photons excited_fraction\n" << std::setprecision(10);
    for (std::size_t i = 0; i < n; ++i) {
      double photons = 0.0, excited = 0.0;
      for (const auto& t : shots) {
        photons += t.photons(i);
        excited += t.qubit_state[i];
      }
      const double inv = 1.0 / static_cast<double>(shots.size());
      out << shots.front().times[i] << ' ' << photons * inv << ' ' << excited * inv << '\n';
    }
  }
  run.finish();
}

// ---------------------------------------------------------------------------

struct CalibrateOptions {
  std::string dataset;
  double s11_db = 0.0;
  bool synthesize = false;
  double synth_attenuation = 127.5;
  double synth_noise = 0.01;
  std::vector<double> flux_over_pi = {0.10, 0.15, 0.185, 0.22, 0.25};
  std::vector<double> powers_dbm = {-30, -25, -20, -15, -10, -5, 0};
};

void cmd_calibrate(const GlobalOptions& global, const CalibrateOptions& opt) {
  Run run("calibrate", global, load(global));
  if (opt.dataset.empty() == !opt.synthesize) {
    throw jpo::ConfigError("calibrate needs exactly one of --dataset or --synthesize");
  }
  run.set_options({{"dataset", opt.dataset.empty() ? ordered_json(nullptr) : ordered_json(opt.dataset)},
                   {"s11_db", opt.s11_db},
                   {"synthesize", opt.synthesize},
                   {"synth_attenuation_db", opt.synth_attenuation},
                   {"synth_noise_fraction", opt.synth_noise},
                   {"flux_over_pi", opt.flux_over_pi},
                   {"powers_dbm", opt.powers_dbm}});
  const jpo::DeviceParameters device = run.config().device_parameters();

  std::vector<jpo::CalibrationPoint> data;
  if (opt.synthesize) {
    std::vector<double> flux;
    for (double f : opt.flux_over_pi) flux.push_back(f * std::numbers::pi);
    data = jpo::synthesize_calibration_dataset(device, flux, opt.powers_dbm, opt.synth_attenuation,
                                               opt.synth_noise, run.seed());
    std::ofstream out = run.open("calibration_dataset.txt");
    jpo::write_calibration_dataset(out, data);
  } else {
    std::ifstream in(opt.dataset);
    if (!in) throw jpo::ConfigError("cannot open dataset " + opt.dataset);
    data = jpo::read_calibration_dataset(in);
  }
  const jpo::CalibrationReport report = jpo::calibrate(
      data, device, opt.s11_db, run.config().detection_config().carrier_frequency);
  {
    std::ofstream out = run.open("calibration_report.txt");
    jpo::write_calibration_report(out, report);
  }
  jpo::write_calibration_report(std::cout, report);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  run.finish();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Josephson parametric oscillator readout simulator", "jpo-sim"};
  app.set_version_flag("--version", std::string(JPO_VERSION));
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--config", global.config_path, "Run configuration (JSON)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", global.seed, "Override simulation.rng_seed");
  app.add_option("--out", global.out_dir, "Output directory")->capture_default_str();
  app.add_option("--threads", global.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();

  ThresholdOptions threshold;
  auto* th = app.add_subcommand("threshold", "Tabulate the instability boundary");
  th->add_option("--delta-min", threshold.delta_min, "Lowest delta / Gamma")->capture_default_str();
  th->add_option("--delta-max", threshold.delta_max, "Highest delta / Gamma")->capture_default_str();
  th->add_option("--points", threshold.points, "Table rows")->capture_default_str();
  th->add_option("--beta", threshold.beta, "Pump-induced shift (default: operating point)");

  RegionOptions region;
  auto* rm = app.add_subcommand("region-map", "Map oscillation regions for both qubit states");
  rm->add_option("--grid", region.grid, "Grid as NxM (delta x epsilon)")->capture_default_str();
  rm->add_option("--shots-per-cell", region.shots_per_cell, "Trajectories averaged per cell")
      ->capture_default_str();
  rm->add_option("--duration-gamma", region.duration_gamma,
                 "Integration time per cell in units of 1/Gamma")
      ->capture_default_str();
  rm->add_flag("--discrimination", region.discrimination, "Also map state discrimination");
  rm->add_option("--map-shots", region.map_shots, "Shots per state per discrimination cell")
      ->capture_default_str();

  ReadoutOptions readout;
  auto* ro = app.add_subcommand("readout", "Monte-Carlo readout cycles with analysis");
  ro->add_option("--shots", readout.shots, "Shots per prepared state (overrides cycle.n_shots)");
  ro->add_flag("--rectified", readout.rectified, "Classify on the rectified signal |V|");
  ro->add_option("--records-format", readout.records_format, "binary, text or none")
      ->check(CLI::IsMember({"binary", "text", "none"}))
      ->capture_default_str();

  TrajectoryOptions trajectory;
  auto* tr = app.add_subcommand("trajectory", "Photon number versus time for both preparations");
  tr->add_option("--average", trajectory.average, "Number of shots averaged")->capture_default_str();

  CalibrateOptions calibrate;
  auto* ca = app.add_subcommand("calibrate", "Fit attenuation, gain and photon conversion");
  ca->add_option("--dataset", calibrate.dataset, "Dataset: flux_bias_F power_dBm frequency_Hz");
  ca->add_option("--s11-db", calibrate.s11_db, "Off-resonant |S11|^2 in dB")->capture_default_str();
  ca->add_flag("--synthesize", calibrate.synthesize, "Generate a synthetic dataset instead");
  ca->add_option("--synth-attenuation", calibrate.synth_attenuation, "Attenuation used (dB)")
      ->capture_default_str();
  ca->add_option("--synth-noise", calibrate.synth_noise,
                 "Frequency noise as a fraction of the largest pull")
      ->capture_default_str();
  ca->add_option("--flux-over-pi", calibrate.flux_over_pi, "Flux biases in units of pi")
      ->delimiter(',');
  ca->add_option("--powers-dbm", calibrate.powers_dbm, "Generator powers (dBm)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*th) cmd_threshold(global, threshold);
    if (*rm) cmd_region_map(global, region);
    if (*ro) cmd_readout(global, readout);
    if (*tr) cmd_trajectory(global, trajectory);
    if (*ca) cmd_calibrate(global, calibrate);
  } catch (const jpo::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
