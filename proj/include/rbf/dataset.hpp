#pragma once

#include <map>
#include <string>
#include <vector>

#include "rbf/source_summary.hpp"

namespace rbf {

// Raw samples of one source plus their sufficient statistics.
struct SourceData {
  std::vector<double> samples;
  SourceSummary summary;

  static SourceData from_samples(std::vector<double> samples);
};

// One primary source, H supplemental sources, and the auxiliary blocks
// observed across all H+1 sources. Auxiliary vectors are ordered with the
// primary first, then the supplements in order. Maps are keyed by block
// name; iteration order (lexicographic) is the canonical block order.
struct Dataset {
  SourceData primary;
  std::vector<SourceData> supplements;
  std::map<std::string, std::vector<double>> characteristics;
  std::map<std::string, std::vector<std::vector<double>>> parameters;

  int num_supplements() const { return static_cast<int>(supplements.size()); }
  int num_sources() const { return num_supplements() + 1; }

  std::vector<SourceSummary> supplement_summaries() const;

  // Observed per-source means of the target parameter, primary first.
  std::vector<double> source_means() const;

  // Throws ValidationError unless H >= 1, every characteristic has one
  // value per source, and every parameter has >= 2 samples per source.
  void validate() const;
};

} // namespace rbf
