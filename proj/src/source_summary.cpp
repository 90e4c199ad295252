#include "rbf/source_summary.hpp"

#include <cmath>

#include "rbf/errors.hpp"

namespace rbf {

SourceSummary sufficient_stats(std::span<const double> samples) {
  if (samples.size() < 2) {
    throw InsufficientDataError("sufficient_stats: need at least 2 samples, got " +
                                std::to_string(samples.size()));
  }
  for (double x : samples) {
    if (!std::isfinite(x)) {
      throw ValidationError("sufficient_stats: non-finite sample value");
    }
  }
  const auto n = static_cast<double>(samples.size());
  double sum = 0;
  for (double x : samples) sum += x;
  const double mean = sum / n;

  double ss = 0;
  for (double x : samples) {
    const double d = x - mean;
    ss += d * d;
  }
  double variance = ss / n;  // MLE, n denominator
  if (variance < kVarianceFloor) variance = kVarianceFloor;

  return SourceSummary{static_cast<int>(samples.size()), mean, std::sqrt(variance)};
}

} // namespace rbf
