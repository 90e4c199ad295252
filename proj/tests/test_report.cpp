#include <string>

#include "doctest.h"
#include "rbf/report.hpp"
#include "rbf/simulate.hpp"

using namespace rbf;

namespace {

std::vector<ReplicationRecord> tiny_records() {
  std::vector<ReplicationRecord> records;
  for (int rep = 0; rep < 2; ++rep) {
    ReplicationRecord record;
    record.rep = rep;
    for (Method method : {Method::kMem, Method::kRbf, Method::kNaive}) {
      RepMetrics m;
      m.method = method;
      m.posterior_mean = 0.25 * rep;
      m.posterior_variance = 0.5;
      m.bias = 0.25 * rep;
      m.squared_error = m.bias * m.bias;
      m.esss = 1.5;
      if (method != Method::kNaive) m.correct_model_weight = 0.125;
      record.metrics.push_back(m);
    }
    records.push_back(record);
  }
  return records;
}

} // namespace

TEST_SUITE_BEGIN("report");

TEST_CASE("format_double round trips") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
  CHECK(std::stod(format_double(0.1 + 0.2)) == 0.1 + 0.2);
}

TEST_CASE("rep csv has one line per method per rep") {
  const std::string csv = rep_csv_string(tiny_records());
  int lines = 0;
  for (char c : csv) {
    if (c == '\n') ++lines;
  }
  CHECK(lines == 1 + 2 * 3);
  CHECK(csv.rfind("rep,method,posterior_mean,posterior_variance,bias,squared_error,"
                  "correct_model_weight,esss\n", 0) == 0);
  // naive rows leave the correct-model weight empty
  CHECK(csv.find("naive,0,0.5,0,0,,1.5") != std::string::npos);
}

TEST_CASE("labeled rep csv prepends the label column") {
  const std::string csv =
      rep_csv_string(tiny_records(), "primary", {"p1", "p2"});
  CHECK(csv.rfind("primary,rep,", 0) == 0);
  CHECK(csv.find("p2,1,MEM") != std::string::npos);
}

TEST_CASE("tidy csv is method,metric,rep,value") {
  const std::string csv = tidy_csv_string(tiny_records());
  CHECK(csv.rfind("method,metric,rep,value\n", 0) == 0);
  CHECK(csv.find("RBF,correct_model_weight,0,0.125\n") != std::string::npos);
  CHECK(csv.find("naive,correct_model_weight") == std::string::npos);
}

TEST_CASE("summary json carries the schema fields") {
  const MetricsSummary summary = aggregate(tiny_records());
  const nlohmann::ordered_json doc = summary_json(summary);
  CHECK(doc.at("report_version") == 1);
  for (const char* method : {"MEM", "RBF", "naive"}) {
    const auto& entry = doc.at("methods").at(method);
    CHECK(entry.contains("posterior_variance"));
    CHECK(entry.contains("bias"));
    CHECK(entry.contains("rmse"));
    CHECK(entry.contains("correct_model_weight"));
    CHECK(entry.contains("esss"));
    CHECK(entry.at("posterior_variance").contains("median"));
  }
  CHECK(doc.at("methods").at("naive").at("correct_model_weight").is_null());
  CHECK(doc.at("pct_change_rbf_vs_mem").contains("mse"));
}

TEST_SUITE_END();
