#include "jpo/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "jpo/errors.hpp"
#include "jpo/parallel.hpp"

namespace jpo {
namespace {

constexpr Complex kI{0.0, 1.0};

// Right-hand side of the equation of motion solved for dA/dt.
struct Drift {
  double detuning = 0.0;  // qubit-state detuning, before the pump-induced pull
  double epsilon = 0.0;   // target pump amplitude
  double ramp = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double coupling = 0.0;  // sqrt(2 Gamma0)
  const InputDrive* drive = nullptr;
  bool pump_on = true;

  double pump(double t) const {
    if (!pump_on) return 0.0;
    if (ramp <= 0.0 || t >= ramp) return epsilon;
    return epsilon * std::max(t, 0.0) / ramp;
  }

  Complex operator()(double t, Complex a) const {
    const double eps = pump(t);
    const double det = detuning + beta * eps * eps / gamma + alpha * std::norm(a);
    Complex d = kI * eps * std::conj(a) + kI * det * a - gamma * a;
    if (drive != nullptr && drive->amplitude != 0.0) {
      d -= kI * coupling * drive->amplitude * std::polar(1.0, -drive->frequency_offset * t);
    }
    return d;
  }
};

Complex rk4_step(const Drift& f, double t, Complex a, double h) {
  const Complex k1 = f(t, a);
  const Complex k2 = f(t + 0.5 * h, a + 0.5 * h * k1);
  const Complex k3 = f(t + 0.5 * h, a + 0.5 * h * k2);
  const Complex k4 = f(t + h, a + h * k3);
  return a + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

void SimulationConfig::validate() const {
  if (!(dt > 0.0)) throw SimulationError("simulation dt must be positive");
  if (!(t_end > 0.0)) throw SimulationError("simulation t_end must be positive");
  if (!(seed_noise_photons >= 0.0)) throw SimulationError("seed_noise_photons must be >= 0");
  if (!(pump_ramp >= 0.0)) throw SimulationError("pump_ramp must be >= 0");
  if (record_stride == 0) throw SimulationError("record_stride must be >= 1");
}

int JumpSchedule::state_after_pulse() const {
  // The pulse flips the thermal state; a failed pulse leaves it untouched.
  const int start = thermal_excited ? 1 : 0;
  const bool flips = prepared_state == 1 && !preparation_fault;
  return flips ? 1 - start : start;
}

std::optional<double> JumpSchedule::decay_on_trajectory_clock() const {
  if (state_after_pulse() == 0 || !decay_time) return std::nullopt;
  return *decay_time - pulse_to_pump;
}

int JumpSchedule::state_at_pump_on() const {
  if (state_after_pulse() == 0) return 0;
  const auto decay = decay_on_trajectory_clock();
  return decay && *decay <= 0.0 ? 0 : 1;
}

void JumpSchedule::validate() const {
  if (prepared_state != 0 && prepared_state != 1) {
    throw SimulationError("prepared_state must be 0 or 1");
  }
  if (decay_time && !(*decay_time > 0.0)) throw SimulationError("decay_time must be positive");
  if (!(pulse_to_pump >= 0.0)) throw SimulationError("pulse_to_pump must be >= 0");
}

Complex Trajectory::amplitude_at(double t) const {
  if (times.empty()) return {};
  if (t <= times.front()) return amplitudes.front();
  if (t >= times.back()) return amplitudes.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - times.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  return amplitudes[lo] + w * (amplitudes[hi] - amplitudes[lo]);
}

double Trajectory::mean_photons(double from, double to) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] >= from && times[i] <= to) {
      sum += photons(i);
      ++n;
    }
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

std::optional<double> expected_photons(const OperatingPoint& point, int qubit_state) {
  const double det =
      effective_detuning(point.detuning(qubit_state), point.epsilon, point.beta, point.gamma);
  return steady_state_photons(det, point.epsilon, point.alpha, point.gamma).stable_photons();
}

Trajectory integrate(const SimulationConfig& config, const OperatingPoint& point,
                     const JumpSchedule& schedule) {
  config.validate();
  schedule.validate();

  // Stiffness guard against the fastest rate the amplitude can see.
  double expected = 0.0;
  for (int q : {0, 1}) expected = std::max(expected, expected_photons(point, q).value_or(0.0));
  const double fastest = std::max({point.gamma, std::abs(point.delta_q0()),
                                   std::abs(point.delta_q1()), point.epsilon,
                                   std::abs(point.alpha) * expected});
  if (config.dt * fastest >= 0.1) {
    std::ostringstream msg;
    msg << "stiffness guard: dt * max rate = " << config.dt * fastest << " >= 0.1";
    throw SimulationError(msg.str());
  }

  const auto steps = static_cast<std::size_t>(std::llround(config.t_end / config.dt));
  const std::optional<double> decay = schedule.decay_on_trajectory_clock();
  int qubit = schedule.state_at_pump_on();

  std::vector<Event> pending;
  if (decay && *decay > 0.0) pending.push_back({*decay, EventKind::QubitDecay});
  for (double ts : schedule.phase_switch_times) {
    if (ts >= 0.0) pending.push_back({ts, EventKind::PhaseSwitch});
  }
  std::stable_sort(pending.begin(), pending.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });

  Drift drift;
  drift.epsilon = point.epsilon;
  drift.ramp = config.pump_ramp;
  drift.alpha = point.alpha;
  drift.beta = point.beta;
  drift.gamma = point.gamma;
  drift.coupling = std::sqrt(2.0 * point.gamma0);
  drift.drive = config.input_drive ? &*config.input_drive : nullptr;
  drift.detuning = point.detuning(qubit);
  drift.pump_on = config.latching || qubit == 1 || schedule.state_after_pulse() == 0;

  std::mt19937_64 rng(config.rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double kick = std::sqrt(point.gamma * config.seed_noise_photons * config.dt);

  Trajectory traj;
  const std::size_t capacity = steps / config.record_stride + 2;
  traj.times.reserve(capacity);
  traj.amplitudes.reserve(capacity);
  traj.qubit_state.reserve(capacity);

  Complex a = config.initial_amplitude;
  traj.times.push_back(0.0);
  traj.amplitudes.push_back(a);
  traj.qubit_state.push_back(static_cast<std::uint8_t>(qubit));

  std::size_t next_event = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t0 = static_cast<double>(k) * config.dt;
    const double t1 = static_cast<double>(k + 1) * config.dt;
    double t = t0;
    while (next_event < pending.size() && pending[next_event].time <= t1) {
      const Event ev = pending[next_event++];
      if (ev.time > t) {
        a = rk4_step(drift, t, a, ev.time - t);
        t = ev.time;
      }
      if (ev.kind == EventKind::QubitDecay) {
        qubit = 0;
        drift.detuning = point.detuning(0);
        if (!config.latching) drift.pump_on = false;
      } else {
        a = -a;
      }
      traj.events.push_back(ev);
    }
    if (t1 > t) a = rk4_step(drift, t, a, t1 - t);

    // Draws are made every step, even with zero noise, so event timing never shifts
    // the random stream.
    const double nr = normal(rng);
    const double ni = normal(rng);
    a += kick * Complex(nr, ni);

    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
      std::ostringstream msg;
      msg << "integrator produced a non-finite amplitude at t = " << t1 << " s";
      throw SimulationError(msg.str());
    }
    if ((k + 1) % config.record_stride == 0 || k + 1 == steps) {
      traj.times.push_back(t1);
      traj.amplitudes.push_back(a);
      traj.qubit_state.push_back(static_cast<std::uint8_t>(qubit));
    }
  }
  return traj;
}

std::optional<double> detect_latch(const Trajectory& trajectory, double fraction,
                                   double reference_photons, double gamma) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw SimulationError("detect_latch: fraction must lie in (0, 1)");
  }
  const double level = fraction * reference_photons;
  const double hold = 5.0 / gamma;
  std::optional<double> candidate;
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    if (trajectory.photons(i) > level) {
      if (!candidate) candidate = trajectory.times[i];
      if (trajectory.times[i] - *candidate >= hold) return candidate;
    } else {
      candidate.reset();
    }
  }
  // A record shorter than the hold time counts as latched if the excursion is still
  // running at the end and has lasted at least 1 / Gamma.
  if (candidate && trajectory.times.back() - *candidate >= 1.0 / gamma) return candidate;
  return std::nullopt;
}

std::optional<double> detect_latch(const Trajectory& trajectory, double fraction,
                                   const OperatingPoint& point) {
  const auto reference = expected_photons(point, 1);
  if (!reference) return std::nullopt;
  return detect_latch(trajectory, fraction, *reference, point.gamma);
}

double RegionGrid::delta_at(std::size_t i) const {
  if (delta_points == 1) return delta_min;
  return delta_min + (delta_max - delta_min) * static_cast<double>(i) /
                         static_cast<double>(delta_points - 1);
}

double RegionGrid::epsilon_at(std::size_t j) const {
  if (epsilon_points == 1) return epsilon_min;
  return epsilon_min + (epsilon_max - epsilon_min) * static_cast<double>(j) /
                           static_cast<double>(epsilon_points - 1);
}

void RegionGrid::validate() const {
  if (delta_points < 2 || epsilon_points < 2) {
    throw SimulationError("region grid needs at least 2 points per axis");
  }
  if (!(delta_max > delta_min) || !(epsilon_max > epsilon_min)) {
    throw SimulationError("region grid ranges must be increasing");
  }
  if (epsilon_min < 0.0) throw SimulationError("region grid epsilon must be >= 0");
}

std::vector<std::uint8_t> RegionMap::oscillation_mask(double fraction) const {
  double peak = 0.0;
  for (double v : photons) {
    if (std::isfinite(v)) peak = std::max(peak, v);
  }
  std::vector<std::uint8_t> mask(photons.size(), 0);
  for (std::size_t i = 0; i < photons.size(); ++i) {
    mask[i] = std::isfinite(photons[i]) && photons[i] > fraction * peak ? 1 : 0;
  }
  return mask;
}

RegionMap map_region(const RegionGrid& grid, const SimulationConfig& config,
                     const OperatingPoint& point, int qubit_state, const RegionOptions& options) {
  grid.validate();
  config.validate();
  if (options.trajectories_per_cell == 0) {
    throw SimulationError("trajectories_per_cell must be >= 1");
  }
  RegionMap map;
  map.grid = grid;
  map.qubit_state = qubit_state;
  const std::size_t cells = grid.delta_points * grid.epsilon_points;
  map.photons.assign(cells, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> errors(cells);

  const double window_start = config.t_end * (1.0 - options.averaging_fraction);
  parallel_for(cells, options.threads, [&](std::size_t cell) {
    const std::size_t i = cell % grid.delta_points;
    const std::size_t j = cell / grid.delta_points;
    OperatingPoint p = point;
    p.delta = grid.delta_at(i) * point.gamma;
    p.epsilon = grid.epsilon_at(j) * point.gamma;
    JumpSchedule schedule;
    schedule.prepared_state = qubit_state;
    try {
      double sum = 0.0;
      for (std::size_t s = 0; s < options.trajectories_per_cell; ++s) {
        SimulationConfig c = config;
        c.rng_seed = derive_seed(config.rng_seed, cell, s);
        sum += integrate(c, p, schedule).mean_photons(window_start, config.t_end);
      }
      map.photons[cell] = sum / static_cast<double>(options.trajectories_per_cell);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "cell (" << i << ", " << j << "): " << e.what();
      errors[cell] = msg.str();
    }
  });
  for (auto& e : errors) {
    if (!e.empty()) map.failures.push_back(std::move(e));
  }
  return map;
}

double numerical_growth_rate(double delta, double epsilon, double beta, double gamma,
                             double dt_gamma) {
  // The zero state's stability is a linear question, so alpha = 0 and the amplitude
  // is renormalised every step with the log norm accumulated separately.
  Drift drift;
  drift.detuning = delta;
  drift.epsilon = epsilon;
  drift.beta = beta;
  drift.gamma = gamma;
  const double h = dt_gamma / gamma;
  const double settle = 20.0 / gamma;
  const double span = 40.0 / gamma;
  Complex a = std::polar(1.0, 0.3927);
  double log_norm = 0.0;
  double t = 0.0;
  double log_at_settle = 0.0;
  const auto settle_steps = static_cast<std::size_t>(std::llround(settle / h));
  const auto total_steps = static_cast<std::size_t>(std::llround((settle + span) / h));
  for (std::size_t k = 0; k < total_steps; ++k) {
    a = rk4_step(drift, t, a, h);
    t += h;
    const double n = std::abs(a);
    log_norm += std::log(n);
    a /= n;
    if (k + 1 == settle_steps) log_at_settle = log_norm;
  }
  return (log_norm - log_at_settle) / (span * gamma);
}

double numerical_onset(double delta, double beta, double gamma, double lo, double hi,
                       double tolerance) {
  const double g_lo = numerical_growth_rate(delta, lo * gamma, beta, gamma);
  const double g_hi = numerical_growth_rate(delta, hi * gamma, beta, gamma);
  if (g_lo > 0.0 || g_hi < 0.0) {
    throw SimulationError("numerical_onset: growth rate does not change sign in bracket");
  }
  while (hi - lo > tolerance * std::max(1.0, std::abs(hi))) {
    const double mid = 0.5 * (lo + hi);
    const double g = numerical_growth_rate(delta, mid * gamma, beta, gamma);
    if (g > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void write_trajectory(std::ostream& out, const Trajectory& trajectory, const std::string& header,
                      std::size_t stride) {
  if (stride == 0) stride = 1;
  out << "# " << header << '\n';
  out << "# time_s re_A_sqrt_photons im_A_sqrt_photons photons qubit_state\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < trajectory.size(); i += stride) {
    out << trajectory.times[i] << ' ' << trajectory.amplitudes[i].real() << ' '
        << trajectory.amplitudes[i].imag() << ' ' << trajectory.photons(i) << ' '
        << static_cast<int>(trajectory.qubit_state[i]) << '\n';
  }
}

}  // namespace jpo
