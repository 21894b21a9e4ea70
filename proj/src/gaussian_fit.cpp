#include "jpo/gaussian_fit.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>
#include <unsupported/Eigen/NonLinearOptimization>

#include "jpo/errors.hpp"

namespace jpo {

double Histogram1D::total() const {
  double s = 0.0;
  for (double c : counts) s += c;
  return s;
}

Histogram1D make_histogram(std::span<const double> samples, double lo, double hi,
                           std::size_t bins) {
  if (bins == 0) throw AnalysisError("histogram needs at least one bin");
  if (!(hi > lo)) throw AnalysisError("histogram range is empty");
  Histogram1D h;
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
  h.counts.assign(bins, 0.0);
  for (double x : samples) {
    const double pos = std::floor((x - lo) / width);
    const auto idx = pos < 0.0 ? std::size_t{0}
                               : std::min(bins - 1, static_cast<std::size_t>(pos));
    h.counts[idx] += 1.0;
  }
  return h;
}

namespace {

double quantile(std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

struct GaussianResidual {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  const Histogram1D* hist;

  int inputs() const { return 3; }
  int values() const { return static_cast<int>(hist->counts.size()); }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
    for (int i = 0; i < values(); ++i) {
      const double z = (hist->center(static_cast<std::size_t>(i)) - p[1]) / p[2];
      f[i] = p[0] * std::exp(-0.5 * z * z) - hist->counts[static_cast<std::size_t>(i)];
    }
    return 0;
  }

  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) const {
    for (int i = 0; i < values(); ++i) {
      const double d = hist->center(static_cast<std::size_t>(i)) - p[1];
      const double z = d / p[2];
      const double g = std::exp(-0.5 * z * z);
      j(i, 0) = g;
      j(i, 1) = p[0] * g * d / (p[2] * p[2]);
      j(i, 2) = p[0] * g * d * d / (p[2] * p[2] * p[2]);
    }
    return 0;
  }
};

}  // namespace

RobustEstimate robust_estimate(std::span<const double> samples) {
  if (samples.size() < 3) throw AnalysisError("robust_estimate: fewer than three samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double q1 = quantile(sorted, 0.25);
  const double q3 = quantile(sorted, 0.75);
  double spread = (q3 - q1) / 1.349;
  if (!(spread > 0.0)) throw AnalysisError("robust_estimate: degenerate (zero spread) data");

  const double lo = quantile(sorted, 0.01);
  const double hi = quantile(sorted, 0.99);
  double center = quantile(sorted, 0.5);
  if (hi > lo) {
    const Histogram1D coarse = make_histogram(sorted, lo, hi, 50);
    const auto it = std::max_element(coarse.counts.begin(), coarse.counts.end());
    center = coarse.center(static_cast<std::size_t>(it - coarse.counts.begin()));
  }

  std::size_t kept = 0;
  for (int iter = 0; iter < 200; ++iter) {
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), center - 3.0 * spread);
    const auto last = std::upper_bound(sorted.begin(), sorted.end(), center + 3.0 * spread);
    const auto n = static_cast<std::size_t>(last - first);
    if (n < 3) break;
    double mean = 0.0;
    for (auto p = first; p != last; ++p) mean += *p;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (auto p = first; p != last; ++p) var += (*p - mean) * (*p - mean);
    var /= static_cast<double>(n - 1);
    const bool stable = n == kept;
    center = mean;
    spread = std::sqrt(var);
    kept = n;
    if (stable || !(spread > 0.0)) break;
  }
  if (!(spread > 0.0)) throw AnalysisError("robust_estimate: degenerate (zero spread) data");
  return {center, spread, kept};
}

GaussianFit fit_dominant_gaussian(std::span<const double> samples, std::size_t bins) {
  if (bins < 5) throw AnalysisError("fit_dominant_gaussian: need at least five bins");
  const RobustEstimate init = robust_estimate(samples);
  const double lo = init.center - 3.0 * init.spread;
  const double hi = init.center + 3.0 * init.spread;
  std::vector<double> trimmed;
  trimmed.reserve(samples.size());
  for (double x : samples) {
    if (x >= lo && x <= hi) trimmed.push_back(x);
  }
  const Histogram1D hist = make_histogram(trimmed, lo, hi, bins);
  const auto occupied = std::count_if(hist.counts.begin(), hist.counts.end(),
                                      [](double c) { return c > 0.0; });
  if (occupied < 3) throw AnalysisError("fit_dominant_gaussian: histogram has fewer than 3 occupied bins");

  Eigen::VectorXd p(3);
  p << *std::max_element(hist.counts.begin(), hist.counts.end()), init.center, init.spread;
  GaussianResidual functor{&hist};
  Eigen::LevenbergMarquardt<GaussianResidual> lm(functor);
  lm.parameters.maxfev = 2000;
  const auto status = lm.minimize(p);
  using Status = Eigen::LevenbergMarquardtSpace::Status;
  if (status == Status::ImproperInputParameters || status == Status::TooManyFunctionEvaluation ||
      !p.allFinite() || p[2] == 0.0) {
    throw AnalysisError("fit_dominant_gaussian: Levenberg-Marquardt did not converge");
  }
  GaussianFit fit;
  fit.amplitude = p[0];
  fit.mean = p[1];
  fit.sigma = std::abs(p[2]);
  fit.iterations = static_cast<std::size_t>(lm.iter);
  fit.samples_used = trimmed.size();
  return fit;
}

}  // namespace jpo
