#include "rbf/long_csv.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <string>

#include "rbf/errors.hpp"

namespace rbf {

namespace {

constexpr const char* kHeader = "source_id,variable,value";

[[noreturn]] void parse_fail(std::size_t row, const std::string& what) {
  throw ValidationError("row " + std::to_string(row) + ": " + what);
}

double parse_number(const std::string& text, std::size_t row) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0') parse_fail(row, "non-numeric value '" + text + "'");
  if (!std::isfinite(value)) parse_fail(row, "non-finite value '" + text + "'");
  return value;
}

} // namespace

int SourcePool::source_index(const std::string& id) const {
  for (std::size_t i = 0; i < source_ids.size(); ++i) {
    if (source_ids[i] == id) return static_cast<int>(i);
  }
  return -1;
}

SourcePool load_long_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");

  SourcePool pool;
  std::set<std::pair<std::string, std::string>> seen_characteristics;

  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (row == 1) {
      if (line != kHeader) {
        parse_fail(row, "header must be exactly '" + std::string(kHeader) + "'");
      }
      continue;
    }
    if (line.empty()) continue;

    const std::size_t first = line.find(',');
    const std::size_t second = first == std::string::npos ? std::string::npos
                                                          : line.find(',', first + 1);
    if (first == std::string::npos || second == std::string::npos ||
        line.find(',', second + 1) != std::string::npos) {
      parse_fail(row, "expected exactly 3 comma-separated fields");
    }
    const std::string source_id = line.substr(0, first);
    const std::string variable = line.substr(first + 1, second - first - 1);
    const std::string value_text = line.substr(second + 1);
    if (source_id.empty()) parse_fail(row, "empty source_id");
    const double value = parse_number(value_text, row);

    if (pool.source_index(source_id) < 0) pool.source_ids.push_back(source_id);

    if (variable == "target") {
      pool.targets[source_id].push_back(value);
    } else if (variable.rfind("char:", 0) == 0) {
      const std::string name = variable.substr(5);
      if (name.empty()) parse_fail(row, "empty characteristic name");
      if (!seen_characteristics.insert({name, source_id}).second) {
        parse_fail(row, "duplicate characteristic '" + name + "' for source '" + source_id + "'");
      }
      pool.characteristics[name][source_id] = value;
    } else if (variable.rfind("param:", 0) == 0) {
      const std::string name = variable.substr(6);
      if (name.empty()) parse_fail(row, "empty parameter name");
      pool.parameters[name][source_id].push_back(value);
    } else {
      parse_fail(row, "variable must be 'target', 'char:<name>', or 'param:<name>', got '" +
                          variable + "'");
    }
  }
  if (row == 0) throw ValidationError("'" + path + "' is empty");

  if (pool.source_ids.size() < 2) {
    throw ValidationError("need at least 2 sources, found " +
                          std::to_string(pool.source_ids.size()));
  }
  for (const auto& id : pool.source_ids) {
    const auto it = pool.targets.find(id);
    if (it == pool.targets.end() || it->second.size() < 2) {
      throw ValidationError("source '" + id + "' has fewer than 2 target samples");
    }
  }
  for (const auto& [name, per_source] : pool.characteristics) {
    for (const auto& id : pool.source_ids) {
      if (per_source.find(id) == per_source.end()) {
        throw ValidationError("characteristic '" + name + "' is missing for source '" + id + "'");
      }
    }
  }
  for (const auto& [name, per_source] : pool.parameters) {
    for (const auto& id : pool.source_ids) {
      const auto it = per_source.find(id);
      if (it == per_source.end() || it->second.size() < 2) {
        throw ValidationError("parameter '" + name + "' has fewer than 2 samples for source '" +
                              id + "'");
      }
    }
  }
  return pool;
}

Dataset make_dataset(const SourcePool& pool, const std::string& primary_id) {
  const int primary_index = pool.source_index(primary_id);
  if (primary_index < 0) throw ValidationError("unknown primary source '" + primary_id + "'");

  Dataset dataset;
  dataset.primary = SourceData::from_samples(pool.targets.at(primary_id));
  std::vector<std::string> ordered_ids{primary_id};
  for (const auto& id : pool.source_ids) {
    if (id == primary_id) continue;
    ordered_ids.push_back(id);
    dataset.supplements.push_back(SourceData::from_samples(pool.targets.at(id)));
  }
  for (const auto& [name, per_source] : pool.characteristics) {
    std::vector<double> values;
    values.reserve(ordered_ids.size());
    for (const auto& id : ordered_ids) values.push_back(per_source.at(id));
    dataset.characteristics[name] = std::move(values);
  }
  for (const auto& [name, per_source] : pool.parameters) {
    std::vector<std::vector<double>> values;
    values.reserve(ordered_ids.size());
    for (const auto& id : ordered_ids) values.push_back(per_source.at(id));
    dataset.parameters[name] = std::move(values);
  }
  dataset.validate();
  return dataset;
}

} // namespace rbf
