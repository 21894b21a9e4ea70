#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "gtest/gtest.h"

#include "jpo/config.hpp"
#include "jpo/errors.hpp"
#include "jpo/gaussian_fit.hpp"
#include "jpo/readout_experiment.hpp"

using namespace jpo;

namespace {

struct Bench {
  RunConfig config;
  CycleConfig cycle;
  OperatingPoint point;
  QubitParameters qubit;
  DetectionConfig detection;
  SimulationConfig sim;

  explicit Bench(std::size_t shots) {
    cycle = config.cycle_config();
    cycle.n_shots = shots;
    point = config.operating_point_at_q0();
    qubit = config.qubit_parameters();
    detection = config.detection_config();
    sim = config.simulation_config();
  }

  void faults_off() {
    cycle.prep_error_prob = 0.0;
    cycle.thermal_prob = 0.0;
    cycle.switch_prob = 0.0;
    qubit.t1 = std::numeric_limits<double>::infinity();
  }

  std::vector<ReadoutCycleRecord> run(std::uint64_t seed) const {
    return run_cycles(cycle, point, qubit, detection, sim, seed);
  }
};

// Prepared |0> at the origin, prepared |1> at (+-mu, 0), isotropic noise sigma.
std::vector<ReadoutCycleRecord> synthetic_records(std::size_t n, double mu, double sigma,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  std::bernoulli_distribution sign(0.5);
  std::vector<ReadoutCycleRecord> out;
  for (std::size_t k = 0; k < 2 * n; ++k) {
    ReadoutCycleRecord r;
    r.shot_index = k;
    r.prepared = k < n ? 0 : 1;
    r.true_state = r.prepared;
    const double centre = r.prepared == 0 ? 0.0 : (sign(rng) ? mu : -mu);
    r.v_i = centre + noise(rng);
    r.v_q = noise(rng);
    r.v_abs = std::hypot(r.v_i, r.v_q);
    r.signal_i = centre;
    r.signal_abs = std::abs(centre);
    out.push_back(r);
  }
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST(GaussianFit, RecoversParameters) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(2.5, 0.4);
  std::vector<double> x(50000);
  for (double& v : x) v = g(rng);
  const GaussianFit fit = fit_dominant_gaussian(x);
  EXPECT_NEAR(fit.mean, 2.5, 0.01);
  EXPECT_NEAR(fit.sigma / 0.4, 1.0, 0.02);
}

TEST(GaussianFit, IgnoresMinorityContamination) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> main(3.0, 0.5), side(0.0, 0.5);
  std::vector<double> x;
  for (int k = 0; k < 40000; ++k) x.push_back(main(rng));
  for (int k = 0; k < 6000; ++k) x.push_back(side(rng));
  const GaussianFit fit = fit_dominant_gaussian(x);
  EXPECT_NEAR(fit.mean, 3.0, 0.03);
  EXPECT_NEAR(fit.sigma / 0.5, 1.0, 0.05);
}

TEST(GaussianFit, DegenerateDataThrows) {
  const std::vector<double> same(500, 1.0);
  EXPECT_THROW(fit_dominant_gaussian(same), AnalysisError);
}

TEST(GaussianFit, HistogramClampsOutliers) {
  const std::vector<double> x{-10.0, 0.1, 0.5, 0.9, 10.0};
  const Histogram1D h = make_histogram(x, 0.0, 1.0, 4);
  EXPECT_EQ(h.total(), 5.0);
  EXPECT_EQ(h.counts.front(), 2.0);
  EXPECT_EQ(h.counts.back(), 2.0);
}

TEST(Analysis, SyntheticTwoStateSnrAndDiscrimination) {
  const auto records = synthetic_records(20000, 1.0, 0.25, 4);
  const HistogramAnalysis a = analyze(records);
  EXPECT_NEAR(a.snr, 2.0, 0.05);
  EXPECT_NEAR(a.fit0.mean, 0.0, 0.01);
  EXPECT_NEAR(a.fit1.mean, 1.0, 0.01);
  // Analytic S-curve separation of |x| for N(0, s) against N(+-1, s).
  double best = 0.0;
  for (double t = 0.0; t < 2.0; t += 1e-4) {
    const double f0 = 2.0 * normal_cdf(t / 0.25) - 1.0;
    const double f1 = normal_cdf((t - 1.0) / 0.25) - normal_cdf((-t - 1.0) / 0.25);
    best = std::max(best, f0 - f1);
  }
  EXPECT_NEAR(a.discrimination, best, 0.01);
  EXPECT_GT(a.threshold, 0.3);
  EXPECT_LT(a.threshold, 0.7);
  EXPECT_FALSE(a.inverted);
}

TEST(Analysis, IdenticalHistogramsGiveZeroDiscrimination) {
  auto records = synthetic_records(2000, 1.0, 0.25, 5);
  for (std::size_t k = 0; k < 2000; ++k) {
    records[k + 2000].v_i = records[k].v_i;
    records[k + 2000].v_q = records[k].v_q;
    records[k + 2000].v_abs = records[k].v_abs;
  }
  EXPECT_EQ(analyze(records).discrimination, 0.0);
  EXPECT_EQ(rectified_analyze(records).discrimination, 0.0);
}

TEST(Analysis, ScaleInvariance) {
  const auto records = synthetic_records(5000, 1.0, 0.3, 6);
  const HistogramAnalysis a = analyze(records);
  for (double scale : {4.0, 0.125, 3.7e-5}) {
    auto scaled = records;
    for (auto& r : scaled) {
      r.v_i *= scale;
      r.v_q *= scale;
      r.v_abs *= scale;
    }
    const HistogramAnalysis b = analyze(scaled);
    EXPECT_EQ(b.discrimination, a.discrimination);
    EXPECT_NEAR(b.snr / a.snr, 1.0, 1e-9);
    EXPECT_NEAR(b.threshold / (scale * a.threshold), 1.0, 1e-12);
  }
}

TEST(Analysis, OrderIndependent) {
  auto records = synthetic_records(3000, 1.0, 0.3, 7);
  const HistogramAnalysis a = analyze(records);
  std::mt19937_64 rng(1);
  std::shuffle(records.begin(), records.end(), rng);
  const HistogramAnalysis b = analyze(records);
  EXPECT_EQ(a.snr, b.snr);
  EXPECT_EQ(a.discrimination, b.discrimination);
  EXPECT_EQ(a.threshold, b.threshold);
  EXPECT_EQ(a.rotation, b.rotation);
}

TEST(Analysis, RotationFindsPrincipalAxis) {
  auto records = synthetic_records(5000, 1.0, 0.2, 8);
  const double angle = 0.7;
  for (auto& r : records) {
    const Complex v = Complex(r.v_i, r.v_q) * std::polar(1.0, angle);
    r.v_i = v.real();
    r.v_q = v.imag();
  }
  const HistogramAnalysis a = analyze(records);
  EXPECT_NEAR(std::remainder(a.rotation - angle, std::numbers::pi), 0.0, 0.02);
  EXPECT_NEAR(a.snr, 2.5, 0.08);
}

TEST(Analysis, HistogramCountsAndSCurveEndpoints) {
  const auto records = synthetic_records(1000, 1.0, 0.3, 9);
  const HistogramAnalysis a = analyze(records);
  EXPECT_EQ(a.hist0.total(), 1000.0);
  EXPECT_EQ(a.hist1.total(), 1000.0);
  double total2d = 0.0;
  for (double c : a.hist2d1.counts) total2d += c;
  EXPECT_EQ(total2d, 1000.0);
  EXPECT_EQ(a.hist2d0.counts.size(), 101u * 101u);
  EXPECT_EQ(a.s_curve0.front(), 0.0);
  EXPECT_EQ(a.s_curve1.front(), 0.0);
  EXPECT_EQ(a.s_curve0.back(), 1.0);
  EXPECT_EQ(a.s_curve1.back(), 1.0);
}

TEST(Analysis, TooFewShots) {
  EXPECT_THROW(analyze(synthetic_records(50, 1.0, 0.3, 1)), AnalysisError);
}

TEST(Analysis, RectifiedQuietStateFollowsRayleighMean) {
  const DetectionConfig det;
  const double g0 = angular(1.02e6);
  Trajectory traj;
  for (int k = 0; k <= 1200; ++k) {
    traj.times.push_back(k * 0.5e-9);
    traj.amplitudes.push_back(0.0);
    traj.qubit_state.push_back(0);
  }
  std::mt19937_64 rng(3);
  double sum = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) sum += detect(traj, det, g0, rng).rectified_mean;
  const double per_sample = det.voltage_scale() * std::sqrt(2.0 * g0) * 0.5 *
                            std::sqrt(det.added_noise_photons *
                                      static_cast<double>(det.decimated_samples()));
  EXPECT_NEAR(sum / n / (per_sample * std::sqrt(std::numbers::pi / 2.0)), 1.0, 0.01);
}

TEST(ReadoutCycles, ErrorFreeLimitLandsOnOscillationMean) {
  // A few shots start late from the seed fluctuation, so the bulk is checked.
  Bench s(400);
  s.faults_off();
  s.detection.added_noise_photons = 0.0;
  const auto records = s.run(1);
  std::vector<double> v;
  for (const auto& r : records) {
    EXPECT_EQ(r.fault_flags, 0);
    if (r.prepared == 1) v.push_back(std::hypot(r.v_i, r.v_q));
  }
  std::sort(v.begin(), v.end());
  const double median = v[v.size() / 2];
  const auto close = std::count_if(v.begin(), v.end(), [&](double x) {
    return std::abs(x / median - 1.0) < 0.05;
  });
  EXPECT_GE(static_cast<double>(close), 0.95 * static_cast<double>(v.size()));
  EXPECT_NEAR(photons_from_voltage(median, s.detection, s.point.gamma0) /
                  *expected_photons(s.point, 1),
              1.0, 0.03);
}

TEST(ReadoutCycles, DeterministicAcrossThreadCounts) {
  Bench s(60);
  const auto a = run_cycles(s.cycle, s.point, s.qubit, s.detection, s.sim, 11, 1);
  const auto b = run_cycles(s.cycle, s.point, s.qubit, s.detection, s.sim, 11, 4);
  std::ostringstream oa, ob;
  write_records_binary(oa, a);
  write_records_binary(ob, b);
  EXPECT_EQ(oa.str(), ob.str());
}

TEST(ReadoutCycles, ScheduleDrawsFollowProbabilities) {
  Bench s(1);
  s.cycle.prep_error_prob = 0.3;
  s.cycle.thermal_prob = 0.1;
  s.cycle.switch_prob = 0.2;
  int prep = 0, thermal = 0, sw = 0;
  double decay = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const auto sch = draw_schedule(s.cycle, s.qubit, s.detection, 1, 5, k);
    prep += sch.preparation_fault;
    thermal += sch.thermal_excited;
    if (!sch.phase_switch_times.empty()) {
      ++sw;
      EXPECT_GE(sch.phase_switch_times[0], s.detection.window_start());
      EXPECT_LE(sch.phase_switch_times[0], s.detection.window_end());
    }
    decay += *sch.decay_time;
  }
  EXPECT_NEAR(prep / double(n), 0.3, 0.015);
  EXPECT_NEAR(thermal / double(n), 0.1, 0.01);
  EXPECT_NEAR(sw / double(n), 0.2, 0.012);
  EXPECT_NEAR(decay / n / s.qubit.t1, 1.0, 0.03);
}

TEST(ErrorBudget, AccountingIdentity) {
  Bench s(1500);
  const auto records = s.run(21);
  const auto a = analyze(records);
  const auto b = error_budget(records, a);
  EXPECT_NEAR(b.accounted(), 1.0, 1e-12);
  EXPECT_NEAR(b.inferred_fidelity,
              b.measured_discrimination + b.relaxation_loss + b.preparation_loss + b.thermal_loss,
              1e-15);
  for (double v : {b.relaxation_loss, b.preparation_loss, b.thermal_loss, b.switching_loss,
                   b.overlap_loss}) {
    EXPECT_GE(v, 0.0);
  }
  const auto r = rectified_analyze(records);
  EXPECT_NEAR(error_budget(records, r).accounted(), 1.0, 1e-12);
}

TEST(ErrorBudget, PreparationMixtureHalvesDiscrimination) {
  Bench s(3000);
  s.faults_off();
  const double ideal = analyze(s.run(31)).discrimination;
  s.cycle.prep_error_prob = 0.5;
  const auto records = s.run(31);
  const auto a = analyze(records);
  EXPECT_NEAR(a.discrimination / ideal, 0.5, 0.05);
  EXPECT_NEAR(error_budget(records, a).preparation_loss, 0.5 * ideal, 0.03);
}

TEST(ErrorBudget, SwitchingCostsAboutHalfTheSwitchProbability) {
  Bench s(5000);
  s.faults_off();
  s.cycle.switch_prob = 0.2;
  const auto records = s.run(41);
  const auto a = analyze(records);
  const auto b = error_budget(records, a);
  // A switch at fraction u of the window leaves |1 - 2u| of the signal; the shot is lost
  // when that falls below threshold / mu.
  const double expected = s.cycle.switch_prob * a.threshold / a.fit1.mean;
  const double se = std::sqrt(expected * (1.0 - expected) / 5000.0);
  EXPECT_NEAR(b.switching_loss, expected, 4.0 * se);
  // With the threshold at half the oscillation mean the expectation is p / 2.
  HistogramAnalysis half = a;
  half.threshold = 0.5 * a.fit1.mean;
  const double at_half = error_budget(records, half).switching_loss;
  const double half_se = std::sqrt(0.1 * 0.9 / 5000.0);
  EXPECT_NEAR(at_half, s.cycle.switch_prob / 2.0, 4.0 * half_se);
  EXPECT_LT(error_budget(records, rectified_analyze(records)).switching_loss, 0.002);
}

TEST(ErrorBudget, LongerT1NeverLowersDiscrimination) {
  Bench s(2000);
  s.cycle.thermal_prob = 0.0;
  double previous = 0.0;
  for (double t1 : {1e-6, 4.24e-6, 20e-6}) {
    s.qubit.t1 = t1;
    const double d = analyze(s.run(51)).discrimination;
    EXPECT_GE(d, previous) << "T1 = " << t1;
    previous = d;
  }
}

TEST(ErrorBudget, DisablingLatchingRaisesRelaxationLoss) {
  Bench s(2000);
  s.cycle.prep_error_prob = 0.0;
  s.cycle.thermal_prob = 0.0;
  s.cycle.switch_prob = 0.0;
  const auto latched = s.run(61);
  const double with_latch = error_budget(latched, analyze(latched)).relaxation_loss;
  s.sim.latching = false;
  const auto unlatched = s.run(61);
  const double without = error_budget(unlatched, analyze(unlatched)).relaxation_loss;
  EXPECT_GT(without, with_latch);
}

TEST(DiscriminationMap, QuietCellsAndReproducibility) {
  Bench s(1000);
  RegionGrid grid;
  grid.delta_min = -5.34;
  grid.delta_max = 3.0;
  grid.delta_points = 2;
  grid.epsilon_min = 0.5;
  grid.epsilon_max = 3.56;
  grid.epsilon_points = 2;
  const auto map = discrimination_map(grid, s.cycle, s.point, s.qubit, s.detection, s.sim, 3);
  EXPECT_TRUE(map.failures.empty());
  EXPECT_LT(map.at(0, 0), 0.08);
  EXPECT_LT(map.at(1, 0), 0.08);
  EXPECT_GT(map.at(0, 1), 0.7);
  EXPECT_EQ(map.best_delta, 0u);
  EXPECT_EQ(map.best_epsilon, 1u);
  const auto again = discrimination_map(grid, s.cycle, s.point, s.qubit, s.detection, s.sim, 4);
  const double d = map.at(0, 1);
  EXPECT_NEAR(again.at(0, 1), d, 3.0 * std::sqrt(2.0 * 2.0 * d * (1.0 - d) / 1000.0));
}

TEST(Records, BinaryAndTextRoundTrip) {
  Bench s(40);
  auto records = s.run(71);
  classify(records, analyze(synthetic_records(200, 1.0, 0.3, 1)));
  std::stringstream bin;
  write_records_binary(bin, records);
  const auto back = read_records_binary(bin);
  std::stringstream text;
  write_records_text(text, records);
  const auto back_text = read_records_text(text);
  ASSERT_EQ(back.size(), records.size());
  ASSERT_EQ(back_text.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (const auto* r : {&back[i], &back_text[i]}) {
      EXPECT_EQ(r->shot_index, records[i].shot_index);
      EXPECT_EQ(r->prepared, records[i].prepared);
      EXPECT_EQ(r->true_state, records[i].true_state);
      EXPECT_EQ(r->fault_flags, records[i].fault_flags);
      EXPECT_EQ(r->decay_time, records[i].decay_time);
      EXPECT_EQ(r->v_i, records[i].v_i);
      EXPECT_EQ(r->v_q, records[i].v_q);
      EXPECT_EQ(r->v_abs, records[i].v_abs);
      EXPECT_EQ(r->signal_abs, records[i].signal_abs);
      EXPECT_EQ(r->classified, records[i].classified);
    }
  }
}

TEST(Records, CorruptBinaryRejected) {
  std::stringstream bad("NOTMAGIC");
  EXPECT_THROW(read_records_binary(bad), AnalysisError);
  Bench s(5);
  std::stringstream good;
  write_records_binary(good, s.run(1));
  std::string bytes = good.str();
  bytes.resize(bytes.size() - 3);
  std::stringstream truncated(bytes);
  EXPECT_THROW(read_records_binary(truncated), AnalysisError);
}

TEST(Records, ReportNamesEveryField) {
  const auto records = synthetic_records(500, 1.0, 0.3, 2);
  const auto a = analyze(records);
  std::ostringstream out;
  write_analysis_report(out, a, error_budget(records, a));
  const std::string text = out.str();
  for (const char* key : {"snr", "discrimination", "threshold_V", "relaxation_loss",
                          "preparation_loss", "thermal_loss", "switching_loss", "overlap_loss",
                          "inferred_fidelity", "mu0", "sigma1"}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
}
