#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbf/long_csv.hpp"
#include "rbf/simulate.hpp"

namespace rbf {

// Subsample-and-repeat analysis of a multi-source dataset: each chosen
// primary is re-analyzed `reps` times on random subsamples, with the
// source's full-data mean as the bias reference.
struct AnalyzeConfig {
  std::string data_path;
  std::string primary_id;        // a source id, or "all"
  int subsample_n = 10;
  bool whole_supplements = false;  // keep supplements at full size
  int reps = 500;
  std::uint64_t seed = 1;
  RbfConfig rbf;

  void validate() const;
};

struct AnalyzeResult {
  std::vector<std::string> source_ids;
  std::vector<std::string> primaries;
  std::vector<std::string> record_labels;        // primary id per record
  std::vector<ReplicationRecord> records;        // rep index is global
  // Average total posterior weight of models containing each source,
  // per primary; zero on the diagonal (a source never supplements itself).
  std::vector<std::vector<double>> mem_borrow_weights;
  std::vector<std::vector<double>> rbf_borrow_weights;
};

AnalyzeResult run_analyze(const AnalyzeConfig& config, int num_threads = 1);

// Borrow-weight matrix as CSV: one row per primary, one column per source.
std::string borrow_weights_csv(const std::vector<std::string>& source_ids,
                               const std::vector<std::string>& primaries,
                               const std::vector<std::vector<double>>& weights);

} // namespace rbf
