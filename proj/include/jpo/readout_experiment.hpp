#pragma once

// Monte-Carlo readout cycles and the histogram / S-curve / error-budget analysis.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jpo/device_model.hpp"
#include "jpo/dynamics.hpp"
#include "jpo/gaussian_fit.hpp"
#include "jpo/measurement_chain.hpp"

namespace jpo {

struct CycleConfig {
  std::size_t n_shots = 100000;      // per prepared state
  double pi_pulse = 52e-9;           // tau_pi, plateau of the preparation pulse
  double pump_delay = 20e-9;         // tau_d, pulse end to pump-on
  double prep_error_prob = 0.045;    // pi pulse leaves the qubit untouched
  std::optional<double> thermal_prob;  // nullopt: Boltzmann value from the qubit parameters
  double switch_prob = 0.024;        // one phase switch inside the sampling window
  std::optional<int> prepared_state; // nullopt: run both preparations

  void validate() const;
  double resolved_thermal_prob(const QubitParameters& qubit) const;
};

/// fault_flags bits.
enum FaultFlag : std::uint8_t {
  kFaultPreparation = 1,
  kFaultThermal = 2,
  kFaultDecay = 4,   // relaxed before the oscillator latched (before the trajectory end without latching)
  kFaultSwitch = 8,
};

inline constexpr std::uint8_t kUnclassified = 255;

struct ReadoutCycleRecord {
  std::uint64_t shot_index = 0;
  std::uint8_t prepared = 0;
  std::uint8_t true_state = 0;   // qubit state right after the preparation pulse
  std::uint8_t fault_flags = 0;
  double decay_time = std::numeric_limits<double>::infinity();  // from pulse end
  double v_i = 0.0;              // window-mean quadratures, volts
  double v_q = 0.0;
  double v_abs = 0.0;            // window mean of |V| per decimated sample
  double signal_i = 0.0;         // same observables without chain noise
  double signal_q = 0.0;
  double signal_abs = 0.0;
  std::uint8_t classified = kUnclassified;
};

/// Runs n_shots cycles per prepared state. Shot k uses RNG streams derived from
/// (seed, k): one for the fault / decay / switch draws (drawn in that order for every
/// shot), one for the integrator and one for the detector. Shots of prepared state 0
/// have indices [0, n), those of state 1 [n, 2n) when both are run. The result is
/// independent of the thread count.
std::vector<ReadoutCycleRecord> run_cycles(const CycleConfig& cycle, const OperatingPoint& point,
                                           const QubitParameters& qubit,
                                           const DetectionConfig& detection,
                                           const SimulationConfig& sim, std::uint64_t seed,
                                           unsigned threads = 0);

/// Schedule drawn for one shot (exposed for tests).
JumpSchedule draw_schedule(const CycleConfig& cycle, const QubitParameters& qubit,
                           const DetectionConfig& detection, int prepared, std::uint64_t seed,
                           std::uint64_t shot_index);

struct Histogram2D {
  std::vector<double> x_edges;
  std::vector<double> y_edges;
  std::vector<double> counts;  // row-major [y][x]
};

struct HistogramAnalysis {
  bool rectified = false;
  double rotation = 0.0;         // radians; V is rotated by -rotation before projection
  std::size_t n0 = 0;
  std::size_t n1 = 0;
  Histogram1D hist0;             // rotated V_I (or |V|) for prepared |0>
  Histogram1D hist1;
  Histogram2D hist2d0;           // rotated (V_I, V_Q)
  Histogram2D hist2d1;
  GaussianFit fit0;
  GaussianFit fit1;
  double snr = 0.0;
  std::vector<double> s_threshold;  // V_th grid for export
  std::vector<double> s_curve0;     // fraction of |0> shots with observable below V_th
  std::vector<double> s_curve1;
  double discrimination = 0.0;
  double threshold = 0.0;           // optimal V_th
  bool inverted = false;            // |1> reads below the threshold

  /// Projected observable of a record (|rotated V_I| or |V|).
  double observable(const ReadoutCycleRecord& r) const;
  double signal_observable(const ReadoutCycleRecord& r) const;
  std::uint8_t classify_value(double observable) const;
  std::uint8_t classify(const ReadoutCycleRecord& r) const { return classify_value(observable(r)); }
};

/// Amplitude-mode analysis: the (V_I, V_Q) plane is rotated onto the principal axis
/// of the prepared-|1> shots, Gaussians are fitted to V_I of |0> and to |V_I| of |1>,
/// and S-curves are built from |V_I| outward from the origin. Order-independent.
HistogramAnalysis analyze(std::span<const ReadoutCycleRecord> records);

/// Same pipeline on the rectified observable v_abs.
HistogramAnalysis rectified_analyze(std::span<const ReadoutCycleRecord> records);

struct ErrorBudget {
  double relaxation_loss = 0.0;
  double preparation_loss = 0.0;
  double thermal_loss = 0.0;
  double switching_loss = 0.0;
  double overlap_loss = 0.0;           // residual misclassifications
  double overlap_loss_gaussian = 0.0;  // erfc(SNR / sqrt 2), both states summed
  double measured_discrimination = 0.0;
  double inferred_fidelity = 0.0;      // discrimination + relaxation + preparation + thermal

  double accounted() const {
    return measured_discrimination + relaxation_loss + preparation_loss + thermal_loss +
           switching_loss + overlap_loss;
  }
};

/// Classifies every shot with `analysis` and attributes each misclassification. A
/// shot whose noise-free observable is on the wrong side of the threshold is
/// charged to its earliest drawn fault (preparation > thermal > decay > switch);
/// every other misclassification is overlap. Losses are summed per prepared state,
/// so discrimination + all losses = 1.
ErrorBudget error_budget(std::span<const ReadoutCycleRecord> records,
                         const HistogramAnalysis& analysis);

/// Writes `classified` into each record.
void classify(std::span<ReadoutCycleRecord> records, const HistogramAnalysis& analysis);

struct DiscriminationMap {
  RegionGrid grid;  // delta axis is the ground-state detuning delta_q0 / Gamma
  std::vector<double> discrimination;  // row-major [epsilon][delta], NaN on failure
  std::vector<std::string> failures;
  std::size_t best_delta = 0;
  std::size_t best_epsilon = 0;

  double at(std::size_t i, std::size_t j) const {
    return discrimination[j * grid.delta_points + i];
  }
};

/// Per-cell S-curve discrimination from `cycle.n_shots` shots per state.
DiscriminationMap discrimination_map(const RegionGrid& grid, const CycleConfig& cycle,
                                     const OperatingPoint& point, const QubitParameters& qubit,
                                     const DetectionConfig& detection,
                                     const SimulationConfig& sim, std::uint64_t seed,
                                     bool rectified = false, unsigned threads = 0);

void write_analysis_report(std::ostream& out, const HistogramAnalysis& analysis,
                           const ErrorBudget& budget);
/// Bin edges and counts per prepared state, 1D and 2D, plus the S-curves.
void write_histograms(std::ostream& out, const HistogramAnalysis& analysis);

/// Binary layout (little-endian): magic "JPOREC1\0", u64 count, then per record
/// shot_index u64, prepared u8, true_state u8, fault_flags u8, decay_time f64,
/// v_i f64, v_q f64, v_abs f64, signal_i f64, signal_q f64, signal_abs f64,
/// classified u8.
void write_records_binary(std::ostream& out, std::span<const ReadoutCycleRecord> records);
std::vector<ReadoutCycleRecord> read_records_binary(std::istream& in);
/// Columnar text with a header line naming the fields above.
void write_records_text(std::ostream& out, std::span<const ReadoutCycleRecord> records);
std::vector<ReadoutCycleRecord> read_records_text(std::istream& in);

}  // namespace jpo
