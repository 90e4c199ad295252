#include "rbf/dataset.hpp"

#include <string>

#include "rbf/errors.hpp"

namespace rbf {

SourceData SourceData::from_samples(std::vector<double> samples) {
  SourceData data;
  data.summary = sufficient_stats(samples);
  data.samples = std::move(samples);
  return data;
}

std::vector<SourceSummary> Dataset::supplement_summaries() const {
  std::vector<SourceSummary> out;
  out.reserve(supplements.size());
  for (const auto& s : supplements) out.push_back(s.summary);
  return out;
}

std::vector<double> Dataset::source_means() const {
  std::vector<double> means;
  means.reserve(num_sources());
  means.push_back(primary.summary.mean);
  for (const auto& s : supplements) means.push_back(s.summary.mean);
  return means;
}

void Dataset::validate() const {
  if (supplements.empty()) {
    throw ValidationError("dataset: need at least 1 supplemental source");
  }
  const auto n_sources = static_cast<std::size_t>(num_sources());
  for (const auto& [name, values] : characteristics) {
    if (values.size() != n_sources) {
      throw ValidationError("dataset: characteristic '" + name + "' has " +
                            std::to_string(values.size()) + " values, expected one per source (" +
                            std::to_string(n_sources) + ")");
    }
  }
  for (const auto& [name, per_source] : parameters) {
    if (per_source.size() != n_sources) {
      throw ValidationError("dataset: parameter '" + name + "' covers " +
                            std::to_string(per_source.size()) + " sources, expected " +
                            std::to_string(n_sources));
    }
    for (std::size_t i = 0; i < per_source.size(); ++i) {
      if (per_source[i].size() < 2) {
        throw InsufficientDataError("dataset: parameter '" + name + "' has fewer than 2 samples in source " +
                                    std::to_string(i));
      }
    }
  }
  if (primary.summary.n < 2) {
    throw InsufficientDataError("dataset: primary source has fewer than 2 samples");
  }
  for (const auto& s : supplements) {
    if (s.summary.n < 2) {
      throw InsufficientDataError("dataset: supplemental source has fewer than 2 samples");
    }
  }
}

} // namespace rbf
