#include "rbf/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "rbf/errors.hpp"

namespace rbf {

std::string format_double(double v) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, ptr);
}

namespace {

void append_metrics(std::string& out, const RepMetrics& m) {
  out += method_name(m.method);
  out += ',';
  out += format_double(m.posterior_mean);
  out += ',';
  out += format_double(m.posterior_variance);
  out += ',';
  out += format_double(m.bias);
  out += ',';
  out += format_double(m.squared_error);
  out += ',';
  if (m.correct_model_weight) out += format_double(*m.correct_model_weight);
  out += ',';
  out += format_double(m.esss);
  out += '\n';
}

nlohmann::ordered_json json_number(double v) {
  // JSON has no representation for non-finite values.
  if (!std::isfinite(v)) return nullptr;
  return v;
}

nlohmann::ordered_json quartiles_json(const Quartiles& q) {
  return {{"q25", json_number(q.q25)}, {"median", json_number(q.median)},
          {"q75", json_number(q.q75)}};
}

} // namespace

std::string rep_csv_string(const std::vector<ReplicationRecord>& records,
                           const std::string& label_header,
                           const std::vector<std::string>& labels) {
  std::string out;
  if (!label_header.empty()) {
    out += label_header;
    out += ',';
  }
  out += "rep,method,posterior_mean,posterior_variance,bias,squared_error,"
         "correct_model_weight,esss\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (const auto& m : records[i].metrics) {
      if (!label_header.empty()) {
        out += labels[i];
        out += ',';
      }
      out += std::to_string(records[i].rep);
      out += ',';
      append_metrics(out, m);
    }
  }
  return out;
}

std::string tidy_csv_string(const std::vector<ReplicationRecord>& records) {
  std::string out = "method,metric,rep,value\n";
  auto add = [&out](const char* method, const char* metric, int rep, double value) {
    out += method;
    out += ',';
    out += metric;
    out += ',';
    out += std::to_string(rep);
    out += ',';
    out += format_double(value);
    out += '\n';
  };
  for (const auto& record : records) {
    for (const auto& m : record.metrics) {
      const char* name = method_name(m.method);
      add(name, "posterior_mean", record.rep, m.posterior_mean);
      add(name, "posterior_variance", record.rep, m.posterior_variance);
      add(name, "bias", record.rep, m.bias);
      add(name, "squared_error", record.rep, m.squared_error);
      if (m.correct_model_weight) {
        add(name, "correct_model_weight", record.rep, *m.correct_model_weight);
      }
      add(name, "esss", record.rep, m.esss);
    }
  }
  return out;
}

nlohmann::ordered_json summary_json(const MetricsSummary& summary) {
  nlohmann::ordered_json methods = nlohmann::ordered_json::object();
  for (const auto& [method, s] : summary.methods) {
    nlohmann::ordered_json entry;
    entry["posterior_variance"] = quartiles_json(s.posterior_variance);
    entry["bias"] = quartiles_json(s.abs_bias);
    entry["squared_error"] = quartiles_json(s.squared_error);
    entry["correct_model_weight"] =
        s.has_correct_model_weight ? quartiles_json(s.correct_model_weight)
                                   : nlohmann::ordered_json(nullptr);
    entry["esss"] = quartiles_json(s.esss);
    entry["mse"] = json_number(s.mse);
    entry["rmse"] = json_number(s.rmse);
    methods[method_name(method)] = std::move(entry);
  }

  nlohmann::ordered_json doc;
  doc["report_version"] = 1;
  doc["methods"] = std::move(methods);
  if (summary.rbf_vs_mem) {
    const PercentChanges& c = *summary.rbf_vs_mem;
    doc["pct_change_rbf_vs_mem"] = {
        {"posterior_variance", json_number(c.posterior_variance)},
        {"bias", json_number(c.abs_bias)},
        {"squared_error", json_number(c.squared_error)},
        {"correct_model_weight", json_number(c.correct_model_weight)},
        {"esss", json_number(c.esss)},
        {"mse", json_number(c.mse)},
    };
  } else {
    doc["pct_change_rbf_vs_mem"] = nullptr;
  }
  return doc;
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << contents;
  if (!out) throw ValidationError("failed writing '" + path + "'");
}

} // namespace rbf
