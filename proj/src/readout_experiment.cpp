#include "jpo/readout_experiment.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "jpo/errors.hpp"
#include "jpo/parallel.hpp"

namespace jpo {

namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw SimulationError(std::string(name) + " must lie in [0, 1]");
  }
}

}  // namespace

void CycleConfig::validate() const {
  if (n_shots < 1) throw SimulationError("n_shots must be >= 1");
  if (!(pi_pulse >= 0.0) || !(pump_delay >= 0.0)) {
    throw SimulationError("pi_pulse and pump_delay must be >= 0");
  }
  check_probability(prep_error_prob, "prep_error_prob");
  if (thermal_prob) check_probability(*thermal_prob, "thermal_prob");
  check_probability(switch_prob, "switch_prob");
  if (prepared_state && *prepared_state != 0 && *prepared_state != 1) {
    throw SimulationError("prepared_state must be 0 or 1");
  }
}

double CycleConfig::resolved_thermal_prob(const QubitParameters& qubit) const {
  return thermal_prob ? *thermal_prob : qubit.thermal_population();
}

JumpSchedule draw_schedule(const CycleConfig& cycle, const QubitParameters& qubit,
                           const DetectionConfig& detection, int prepared, std::uint64_t seed,
                           std::uint64_t shot_index) {
  std::mt19937_64 rng(derive_seed(seed, shot_index, 0));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u_thermal = uniform(rng);
  const double u_prep = uniform(rng);
  const double u_decay = uniform(rng);
  const double u_switch = uniform(rng);
  const double u_switch_time = uniform(rng);

  JumpSchedule s;
  s.prepared_state = prepared;
  s.thermal_excited = u_thermal < cycle.resolved_thermal_prob(qubit);
  s.preparation_fault = prepared == 1 && u_prep < cycle.prep_error_prob;
  if (std::isfinite(qubit.t1)) {
    const double t = -qubit.t1 * std::log1p(-u_decay);
    if (t > 0.0) s.decay_time = t;
  }
  s.pulse_to_pump = cycle.pump_delay;
  if (u_switch < cycle.switch_prob) {
    s.phase_switch_times.push_back(detection.window_start() +
                                   u_switch_time * detection.sampling_time);
  }
  return s;
}

std::vector<ReadoutCycleRecord> run_cycles(const CycleConfig& cycle, const OperatingPoint& point,
                                           const QubitParameters& qubit,
                                           const DetectionConfig& detection,
                                           const SimulationConfig& sim, std::uint64_t seed,
                                           unsigned threads) {
  cycle.validate();
  point.validate();
  detection.validate();
  sim.validate();
  if (!(qubit.t1 > 0.0)) throw SimulationError("T1 must be positive");

  std::vector<int> states;
  if (cycle.prepared_state) {
    states.push_back(*cycle.prepared_state);
  } else {
    states = {0, 1};
  }
  const std::size_t total = cycle.n_shots * states.size();
  SimulationConfig base = sim;
  base.t_end = std::max(sim.t_end, detection.window_end());
  DetectionConfig quiet = detection;
  quiet.added_noise_photons = 0.0;

  std::vector<ReadoutCycleRecord> records(total);
  parallel_for(total, threads, [&](std::size_t k) {
    const int prepared = states[k / cycle.n_shots];
    try {
      const JumpSchedule schedule = draw_schedule(cycle, qubit, detection, prepared, seed, k);
      SimulationConfig cfg = base;
      cfg.rng_seed = derive_seed(seed, k, 1);
      const Trajectory traj = integrate(cfg, point, schedule);
      std::mt19937_64 det_rng(derive_seed(seed, k, 2));
      const WindowMeasurement m = detect(traj, detection, point.gamma0, det_rng);
      std::mt19937_64 unused(0);
      const WindowMeasurement s = detect(traj, quiet, point.gamma0, unused);

      ReadoutCycleRecord& r = records[k];
      r.shot_index = k;
      r.prepared = static_cast<std::uint8_t>(prepared);
      r.true_state = static_cast<std::uint8_t>(schedule.state_after_pulse());
      std::uint8_t flags = 0;
      if (schedule.preparation_fault) flags |= kFaultPreparation;
      if (schedule.thermal_excited) flags |= kFaultThermal;
      if (const auto decay = schedule.decay_on_trajectory_clock()) {
        r.decay_time = *schedule.decay_time;
        if (*decay <= cfg.t_end) {
          // With latching, a decay after the latch leaves the oscillation untouched.
          const auto latch = cfg.latching ? detect_latch(traj, 0.5, point) : std::nullopt;
          if (!latch || *decay < *latch) flags |= kFaultDecay;
        }
      }
      if (!schedule.phase_switch_times.empty()) flags |= kFaultSwitch;
      r.fault_flags = flags;
      r.v_i = m.mean.real();
      r.v_q = m.mean.imag();
      r.v_abs = m.rectified_mean;
      r.signal_i = s.mean.real();
      r.signal_q = s.mean.imag();
      r.signal_abs = s.rectified_mean;
    } catch (const std::exception& e) {
      throw SimulationError("shot " + std::to_string(k) + ": " + e.what());
    }
  });
  return records;
}

// ---------------------------------------------------------------------------
// Analysis

namespace {

constexpr std::size_t kHistBins = 101;
constexpr std::size_t kFitBins = 51;
constexpr std::size_t kSCurvePoints = 201;
constexpr std::size_t kMinShotsPerState = 100;

std::vector<ReadoutCycleRecord> sorted_copy(std::span<const ReadoutCycleRecord> records) {
  std::vector<ReadoutCycleRecord> out(records.begin(), records.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.prepared != b.prepared ? a.prepared < b.prepared : a.shot_index < b.shot_index;
  });
  return out;
}

double principal_angle(std::span<const ReadoutCycleRecord> sorted) {
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& r : sorted) {
    if (r.prepared != 1) continue;
    sxx += r.v_i * r.v_i;
    syy += r.v_q * r.v_q;
    sxy += r.v_i * r.v_q;
  }
  return 0.5 * std::atan2(2.0 * sxy, sxx - syy);
}

struct SCurveResult {
  double discrimination = 0.0;
  double threshold = 0.0;
  bool inverted = false;
};

// Exact empirical S-curves. F_s(t) = fraction of state-s observables below t; the
// best threshold sits midway between the two sorted values where |F0 - F1| peaks.
SCurveResult s_curve_optimum(const std::vector<double>& obs0, const std::vector<double>& obs1) {
  const double n0 = static_cast<double>(obs0.size());
  const double n1 = static_cast<double>(obs1.size());
  auto next_value = [&](std::size_t i, std::size_t j) {
    return j >= obs1.size() || (i < obs0.size() && obs0[i] <= obs1[j]) ? obs0[i] : obs1[j];
  };
  SCurveResult fwd{-1.0, 0.0, false};
  SCurveResult rev{-1.0, 0.0, true};
  std::size_t i = 0, j = 0;
  while (i < obs0.size() || j < obs1.size()) {
    const double v = next_value(i, j);
    while (i < obs0.size() && obs0[i] == v) ++i;
    while (j < obs1.size() && obs1[j] == v) ++j;
    if (i == obs0.size() && j == obs1.size()) break;
    const double t = 0.5 * (v + next_value(i, j));
    const double d = static_cast<double>(i) / n0 - static_cast<double>(j) / n1;
    if (d > fwd.discrimination) fwd = {d, t, false};
    if (-d > rev.discrimination) rev = {-d, t, true};
  }
  if (fwd.discrimination < 0.0) {
    // Every observable is identical; the S-curves never separate.
    return {0.0, obs0.empty() ? 0.0 : obs0.front(), false};
  }
  return rev.discrimination > fwd.discrimination ? rev : fwd;
}

double fraction_below(const std::vector<double>& sorted, double t) {
  if (sorted.empty()) return 0.0;
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

Histogram2D make_histogram2d(const std::vector<double>& x, const std::vector<double>& y,
                             double lo, double hi, std::size_t bins) {
  const Histogram1D hx = make_histogram({}, lo, hi, bins);
  Histogram2D h;
  h.x_edges = hx.edges;
  h.y_edges = hx.edges;
  h.counts.assign(bins * bins, 0.0);
  const double width = (hi - lo) / static_cast<double>(bins);
  auto index = [&](double v) {
    const double pos = std::floor((v - lo) / width);
    return pos < 0.0 ? std::size_t{0} : std::min(bins - 1, static_cast<std::size_t>(pos));
  };
  for (std::size_t k = 0; k < x.size(); ++k) h.counts[index(y[k]) * bins + index(x[k])] += 1.0;
  return h;
}

struct Projected {
  std::vector<double> x0, y0, x1, y1;  // rotated quadratures per prepared state
  std::vector<double> obs0, obs1;      // sorted observables
};

Projected project(std::span<const ReadoutCycleRecord> sorted, double angle, bool rectified) {
  Projected p;
  const double c = std::cos(angle), s = std::sin(angle);
  for (const auto& r : sorted) {
    const double x = r.v_i * c + r.v_q * s;
    const double y = -r.v_i * s + r.v_q * c;
    const double obs = rectified ? r.v_abs : std::abs(x);
    if (r.prepared == 0) {
      p.x0.push_back(x);
      p.y0.push_back(y);
      p.obs0.push_back(obs);
    } else if (r.prepared == 1) {
      p.x1.push_back(x);
      p.y1.push_back(y);
      p.obs1.push_back(obs);
    } else {
      throw AnalysisError("record " + std::to_string(r.shot_index) + " has prepared state " +
                          std::to_string(r.prepared));
    }
  }
  std::sort(p.obs0.begin(), p.obs0.end());
  std::sort(p.obs1.begin(), p.obs1.end());
  return p;
}

HistogramAnalysis analyze_impl(std::span<const ReadoutCycleRecord> records, bool rectified) {
  const std::vector<ReadoutCycleRecord> sorted = sorted_copy(records);
  HistogramAnalysis a;
  a.rectified = rectified;
  a.rotation = principal_angle(sorted);
  const Projected p = project(sorted, a.rotation, rectified);
  a.n0 = p.obs0.size();
  a.n1 = p.obs1.size();
  if (a.n0 < kMinShotsPerState || a.n1 < kMinShotsPerState) {
    throw AnalysisError("analysis needs at least 100 shots per prepared state (got " +
                        std::to_string(a.n0) + " and " + std::to_string(a.n1) + ")");
  }

  a.fit0 = fit_dominant_gaussian(rectified ? p.obs0 : p.x0, kFitBins);
  a.fit1 = fit_dominant_gaussian(p.obs1, kFitBins);
  a.snr = std::abs(a.fit1.mean - a.fit0.mean) / (a.fit1.sigma + a.fit0.sigma);

  const SCurveResult sc = s_curve_optimum(p.obs0, p.obs1);
  a.discrimination = sc.discrimination;
  a.threshold = sc.threshold;
  a.inverted = sc.inverted;

  const double range = std::max({std::abs(a.fit1.mean) + 5.0 * a.fit1.sigma,
                                  std::abs(a.fit0.mean) + 5.0 * a.fit0.sigma});
  const double lo = rectified ? 0.0 : -range;
  a.hist0 = make_histogram(rectified ? p.obs0 : p.x0, lo, range, kHistBins);
  a.hist1 = make_histogram(rectified ? p.obs1 : p.x1, lo, range, kHistBins);
  a.hist2d0 = make_histogram2d(p.x0, p.y0, -range, range, kHistBins);
  a.hist2d1 = make_histogram2d(p.x1, p.y1, -range, range, kHistBins);

  a.s_threshold.resize(kSCurvePoints);
  a.s_curve0.resize(kSCurvePoints);
  a.s_curve1.resize(kSCurvePoints);
  for (std::size_t k = 0; k < kSCurvePoints; ++k) {
    const double t = range * static_cast<double>(k) / static_cast<double>(kSCurvePoints - 1);
    a.s_threshold[k] = t;
    a.s_curve0[k] = fraction_below(p.obs0, t);
    a.s_curve1[k] = fraction_below(p.obs1, t);
  }
  return a;
}

}  // namespace

double HistogramAnalysis::observable(const ReadoutCycleRecord& r) const {
  if (rectified) return r.v_abs;
  return std::abs(r.v_i * std::cos(rotation) + r.v_q * std::sin(rotation));
}

double HistogramAnalysis::signal_observable(const ReadoutCycleRecord& r) const {
  if (rectified) return r.signal_abs;
  return std::abs(r.signal_i * std::cos(rotation) + r.signal_q * std::sin(rotation));
}

std::uint8_t HistogramAnalysis::classify_value(double value) const {
  const bool above = value >= threshold;
  return static_cast<std::uint8_t>(above != inverted ? 1 : 0);
}

HistogramAnalysis analyze(std::span<const ReadoutCycleRecord> records) {
  return analyze_impl(records, false);
}

HistogramAnalysis rectified_analyze(std::span<const ReadoutCycleRecord> records) {
  return analyze_impl(records, true);
}

void classify(std::span<ReadoutCycleRecord> records, const HistogramAnalysis& analysis) {
  for (auto& r : records) r.classified = analysis.classify(r);
}

ErrorBudget error_budget(std::span<const ReadoutCycleRecord> records,
                         const HistogramAnalysis& analysis) {
  const std::vector<ReadoutCycleRecord> sorted = sorted_copy(records);
  std::size_t n[2] = {0, 0};
  for (const auto& r : sorted) {
    if (r.prepared > 1) throw AnalysisError("record has prepared state outside {0, 1}");
    ++n[r.prepared];
  }
  if (n[0] == 0 || n[1] == 0) throw AnalysisError("error budget needs both prepared states");

  ErrorBudget b;
  for (const auto& r : sorted) {
    if (analysis.classify(r) == r.prepared) continue;
    const double w = 1.0 / static_cast<double>(n[r.prepared]);
    const bool signal_wrong = analysis.classify_value(analysis.signal_observable(r)) != r.prepared;
    if (!signal_wrong) {
      b.overlap_loss += w;
    } else if (r.fault_flags & kFaultPreparation) {
      b.preparation_loss += w;
    } else if (r.fault_flags & kFaultThermal) {
      b.thermal_loss += w;
    } else if (r.fault_flags & kFaultDecay) {
      b.relaxation_loss += w;
    } else if (r.fault_flags & kFaultSwitch) {
      b.switching_loss += w;
    } else {
      b.overlap_loss += w;
    }
  }
  b.measured_discrimination = analysis.discrimination;
  b.overlap_loss_gaussian = std::erfc(analysis.snr / std::sqrt(2.0));
  b.inferred_fidelity =
      b.measured_discrimination + b.relaxation_loss + b.preparation_loss + b.thermal_loss;
  return b;
}

DiscriminationMap discrimination_map(const RegionGrid& grid, const CycleConfig& cycle,
                                     const OperatingPoint& point, const QubitParameters& qubit,
                                     const DetectionConfig& detection,
                                     const SimulationConfig& sim, std::uint64_t seed,
                                     bool rectified, unsigned threads) {
  grid.validate();
  CycleConfig per_cell = cycle;
  per_cell.prepared_state.reset();
  DiscriminationMap map;
  map.grid = grid;
  const std::size_t cells = grid.delta_points * grid.epsilon_points;
  map.discrimination.assign(cells, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> errors(cells);

  parallel_for(cells, threads, [&](std::size_t c) {
    const std::size_t i = c % grid.delta_points;
    const std::size_t j = c / grid.delta_points;
    try {
      OperatingPoint p = point;
      p.delta = grid.delta_at(i) * point.gamma - point.chi;
      p.epsilon = grid.epsilon_at(j) * point.gamma;
      const auto records =
          run_cycles(per_cell, p, qubit, detection, sim, derive_seed(seed, c, 3), 1);
      const auto sorted = sorted_copy(records);
      const double angle = principal_angle(sorted);
      const Projected proj = project(sorted, angle, rectified);
      map.discrimination[c] = s_curve_optimum(proj.obs0, proj.obs1).discrimination;
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "cell (" << i << ", " << j << "): " << e.what();
      errors[c] = msg.str();
    }
  });
  for (auto& e : errors) {
    if (!e.empty()) map.failures.push_back(std::move(e));
  }
  double best = -1.0;
  for (std::size_t c = 0; c < cells; ++c) {
    if (map.discrimination[c] > best) {
      best = map.discrimination[c];
      map.best_delta = c % grid.delta_points;
      map.best_epsilon = c / grid.delta_points;
    }
  }
  return map;
}

void write_analysis_report(std::ostream& out, const HistogramAnalysis& a, const ErrorBudget& b) {
  out << std::setprecision(10);
  out << "# readout analysis; voltages in V, fractions dimensionless\n";
  out << "mode " << (a.rectified ? "rectified" : "amplitude") << '\n';
  out << "shots_prepared_0 " << a.n0 << '\n';
  out << "shots_prepared_1 " << a.n1 << '\n';
  out << "rotation_rad " << a.rotation << '\n';
  out << "mu0_V " << a.fit0.mean << '\n';
  out << "sigma0_V " << a.fit0.sigma << '\n';
  out << "mu1_V " << a.fit1.mean << '\n';
  out << "sigma1_V " << a.fit1.sigma << '\n';
  out << "snr " << a.snr << '\n';
  out << "threshold_V " << a.threshold << '\n';
  out << "threshold_inverted " << (a.inverted ? 1 : 0) << '\n';
  out << "discrimination " << a.discrimination << '\n';
  out << "relaxation_loss " << b.relaxation_loss << '\n';
  out << "preparation_loss " << b.preparation_loss << '\n';
  out << "thermal_loss " << b.thermal_loss << '\n';
  out << "switching_loss " << b.switching_loss << '\n';
  out << "overlap_loss " << b.overlap_loss << '\n';
  out << "overlap_loss_gaussian " << b.overlap_loss_gaussian << '\n';
  out << "inferred_fidelity " << b.inferred_fidelity << '\n';
  out << "accounting_sum " << b.accounted() << '\n';
}

void write_histograms(std::ostream& out, const HistogramAnalysis& a) {
  out << std::setprecision(10);
  auto write_1d = [&](const char* name, const Histogram1D& h) {
    out << "# " << name << ": bin_lo[V] bin_hi[V] count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      out << h.edges[i] << ' ' << h.edges[i + 1] << ' ' << h.counts[i] << '\n';
    }
    out << '\n';
  };
  auto write_2d = [&](const char* name, const Histogram2D& h) {
    const std::size_t nx = h.x_edges.size() - 1;
    out << "# " << name << ": x_lo[V] y_lo[V] count (bin width " << h.x_edges[1] - h.x_edges[0]
        << " V)\n";
    for (std::size_t j = 0; j < h.y_edges.size() - 1; ++j) {
      for (std::size_t i = 0; i < nx; ++i) {
        out << h.x_edges[i] << ' ' << h.y_edges[j] << ' ' << h.counts[j * nx + i] << '\n';
      }
    }
    out << '\n';
  };
  write_1d("hist1d prepared 0", a.hist0);
  write_1d("hist1d prepared 1", a.hist1);
  write_2d("hist2d prepared 0", a.hist2d0);
  write_2d("hist2d prepared 1", a.hist2d1);
  out << "# s_curves: threshold[V] below_fraction_0 below_fraction_1\n";
  for (std::size_t k = 0; k < a.s_threshold.size(); ++k) {
    out << a.s_threshold[k] << ' ' << a.s_curve0[k] << ' ' << a.s_curve1[k] << '\n';
  }
}

}  // namespace jpo
