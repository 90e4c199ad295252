#pragma once

#include <string>
#include <vector>

#include "rbf/simulate.hpp"

#include "json.hpp"

namespace rbf {

// Shortest round-trip decimal form of v (std::to_chars).
std::string format_double(double v);

// Per-rep CSV: rep,method,posterior_mean,posterior_variance,bias,
// squared_error,correct_model_weight,esss. The optional label column is
// prepended when `label_header` is nonempty (analyze mode uses it for
// the primary source id).
std::string rep_csv_string(const std::vector<ReplicationRecord>& records,
                           const std::string& label_header = "",
                           const std::vector<std::string>& labels = {});

// Plot-ready tidy CSV: method,metric,rep,value.
std::string tidy_csv_string(const std::vector<ReplicationRecord>& records);

nlohmann::ordered_json summary_json(const MetricsSummary& summary);

void write_file(const std::string& path, const std::string& contents);

} // namespace rbf
