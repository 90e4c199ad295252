#pragma once

#include <span>
#include <vector>

namespace rbf {

// Floor applied to the MLE variance so precisions n/sd^2 stay finite.
inline constexpr double kVarianceFloor = 1e-8;

// Sufficient statistics of one source's target-parameter samples.
struct SourceSummary {
  int n = 0;        // number of observations, >= 2
  double mean = 0;  // sample mean
  double sd = 0;    // MLE standard deviation (n denominator), variance floored

  double variance() const { return sd * sd; }
  double precision() const { return static_cast<double>(n) / (sd * sd); }
  // Variance of the sample mean as an estimator of the source mean.
  double mean_variance() const { return sd * sd / static_cast<double>(n); }
};

// Mean and MLE standard deviation of `samples`, with the variance floored
// at kVarianceFloor. Throws InsufficientDataError for fewer than two
// samples, ValidationError for non-finite values.
SourceSummary sufficient_stats(std::span<const double> samples);

} // namespace rbf
