#pragma once

#include <map>
#include <string>
#include <vector>

#include "rbf/dataset.hpp"

namespace rbf {

// All sources of a long-format file, before a primary is chosen.
// Source order is first appearance in the file.
struct SourcePool {
  std::vector<std::string> source_ids;
  std::map<std::string, std::vector<double>> targets;          // per source
  // characteristic name -> source id -> value
  std::map<std::string, std::map<std::string, double>> characteristics;
  // parameter name -> source id -> samples
  std::map<std::string, std::map<std::string, std::vector<double>>> parameters;

  int source_index(const std::string& id) const;  // -1 when unknown
};

// Parse a long-format CSV with header `source_id,variable,value` where
// variable is `target`, `char:<name>`, or `param:<name>`. Errors name
// the offending row (1-based, header is row 1).
SourcePool load_long_csv(const std::string& path);

// Assemble a Dataset with the given source as primary and every other
// source as a supplement (in pool order). Target samples may be replaced
// by a subsample; characteristics are always taken whole.
Dataset make_dataset(const SourcePool& pool, const std::string& primary_id);

} // namespace rbf
