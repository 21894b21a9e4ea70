#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace jpo {

struct Histogram1D {
  std::vector<double> edges;  // size = counts.size() + 1
  std::vector<double> counts;

  double bin_width() const { return edges[1] - edges[0]; }
  double center(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }
  double total() const;
};

/// Equal-width histogram over [lo, hi]. Values outside the range are clamped into
/// the edge bins, so counts always sum to samples.size().
Histogram1D make_histogram(std::span<const double> samples, double lo, double hi,
                           std::size_t bins);

struct RobustEstimate {
  double center = 0.0;
  double spread = 0.0;  // Gaussian-equivalent standard deviation
  std::size_t kept = 0;
};

/// Mode of a coarse histogram as the starting center, IQR / 1.349 as the starting
/// spread, then iterative 3 sigma clipping until the kept set stops changing.
RobustEstimate robust_estimate(std::span<const double> samples);

struct GaussianFit {
  double amplitude = 0.0;  // peak counts per bin
  double mean = 0.0;
  double sigma = 0.0;
  std::size_t iterations = 0;
  std::size_t samples_used = 0;
};

/// Dominant-peak Gaussian fit. Samples farther than 3 sigma from the robust center are
/// trimmed, the rest are binned into `bins` bins and fitted by Levenberg-Marquardt.
/// Throws AnalysisError when the data are degenerate or the fit does not converge.
GaussianFit fit_dominant_gaussian(std::span<const double> samples, std::size_t bins = 51);

}  // namespace jpo
