#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "rbf/errors.hpp"
#include "rbf/prior.hpp"
#include "rbf/rng.hpp"
#include "rbf/simulate.hpp"

using namespace rbf;

namespace {

double sample_correlation(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

bool metrics_equal(const RepMetrics& a, const RepMetrics& b) {
  return a.method == b.method && a.posterior_mean == b.posterior_mean &&
         a.posterior_variance == b.posterior_variance && a.bias == b.bias &&
         a.squared_error == b.squared_error && a.esss == b.esss &&
         a.correct_model_weight == b.correct_model_weight;
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
  if (a.primary.samples != b.primary.samples) return false;
  if (a.supplements.size() != b.supplements.size()) return false;
  for (std::size_t i = 0; i < a.supplements.size(); ++i) {
    if (a.supplements[i].samples != b.supplements[i].samples) return false;
  }
  return a.characteristics == b.characteristics && a.parameters == b.parameters;
}

const std::vector<double> kGroundTruthY = {0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1};

} // namespace

TEST_SUITE_BEGIN("simulate");

TEST_CASE("correlated characteristic with r=1 is an affine image of Y") {
  Rng rng(1);
  const auto x = gen_correlated_characteristic(kGroundTruthY, 1.0, rng);
  CHECK(sample_correlation(x, kGroundTruthY) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("correlated characteristic with r=0 is orthogonal to Y") {
  Rng rng(2);
  const auto x = gen_correlated_characteristic(kGroundTruthY, 0.0, rng);
  double mx = 0;
  for (double v : x) mx += v;
  mx /= static_cast<double>(x.size());
  const double my = 5.0 / 11.0;
  double dot = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += (x[i] - mx) * (kGroundTruthY[i] - my);
  }
  CHECK(std::abs(dot) < 1e-12);
  CHECK(std::abs(sample_correlation(x, kGroundTruthY)) < 1e-12);
}

TEST_CASE("correlated characteristic hits the target correlation") {
  // The construction gives the exact sample correlation, so the mean
  // over seeds trivially lands within +/- 0.02.
  double total = 0;
  const int seeds = 10000;
  for (int seed = 0; seed < seeds; ++seed) {
    Rng rng = Rng::for_replication(5, seed);
    const auto x = gen_correlated_characteristic(kGroundTruthY, 0.7, rng);
    const double r = sample_correlation(x, kGroundTruthY);
    CHECK(r == doctest::Approx(0.7).epsilon(1e-10));
    total += r;
  }
  CHECK(std::abs(total / seeds - 0.7) < 0.02);
}

TEST_CASE("correlated characteristic rejects constant Y") {
  Rng rng(3);
  const std::vector<double> constant(11, 2.0);
  CHECK_THROWS_AS(gen_correlated_characteristic(constant, 0.5, rng), ValidationError);
}

TEST_CASE("scenario 1 ground truth and size bounds") {
  ScenarioConfig config;
  for (int rep = 0; rep < 20; ++rep) {
    Rng rng = Rng::for_replication(11, rep);
    const GeneratedReplication generated = gen_scenario1(config, rng);
    CHECK(generated.correct_model_index == 0b0000011111u);
    CHECK(generated.dataset.num_supplements() == 10);
    CHECK(generated.dataset.primary.summary.n == 10);
    for (const auto& s : generated.dataset.supplements) {
      CHECK(s.summary.n >= 5);
      CHECK(s.summary.n <= 15);
    }
    CHECK_NOTHROW(generated.dataset.validate());
    CHECK(generated.dataset.characteristics.size() == 3);
  }
}

TEST_CASE("fixed seeds reproduce generated datasets bitwise") {
  for (int scenario = 1; scenario <= 3; ++scenario) {
    ScenarioConfig config;
    config.scenario = scenario;
    Rng rng_a = Rng::for_replication(77, 3);
    Rng rng_b = Rng::for_replication(77, 3);
    const GeneratedReplication a = generate_replication(config, rng_a);
    const GeneratedReplication b = generate_replication(config, rng_b);
    CHECK(datasets_equal(a.dataset, b.dataset));
  }
}

TEST_CASE("exchangeable fraction follows the realized sizes") {
  const std::vector<int> sizes = {10, 10, 10, 10, 10, 10, 10, 10, 10, 10};
  CHECK(exchangeable_fraction(10, sizes, 5) == doctest::Approx(6.0 / 11.0).epsilon(1e-14));
  const std::vector<int> uneven = {5, 15, 10, 5, 15, 10, 10, 10, 5, 15};
  // 10 + 5+15+10+5+15 = 60 exchangeable of 110 total.
  CHECK(exchangeable_fraction(10, uneven, 5) == doctest::Approx(6.0 / 11.0).epsilon(1e-14));
}

TEST_CASE("single-factor correlation matrix is positive definite") {
  const std::vector<double> correlations = {0.99, 0.7, 0.5};
  const auto matrix = single_factor_correlation_matrix(correlations);
  REQUIRE(matrix.size() == 4);
  CHECK(matrix[0][1] == 0.99);
  CHECK(matrix[1][2] == doctest::Approx(0.99 * 0.7).epsilon(1e-14));
  // Cholesky must succeed.
  Rng rng(5);
  const std::vector<double> y(50, 0.0);
  std::vector<double> varied = y;
  for (auto& v : varied) v = rng.normal();
  CHECK_NOTHROW(gen_correlated_parameters(matrix, varied, BaseDist::kNormal, rng));
}

TEST_CASE("identity correlation matrix gives independent columns") {
  std::vector<std::vector<double>> identity(3, std::vector<double>(3, 0.0));
  for (int i = 0; i < 3; ++i) identity[i][i] = 1.0;
  Rng rng(7);
  std::vector<double> y(100000);
  for (auto& v : y) v = rng.normal();
  const auto aux = gen_correlated_parameters(identity, y, BaseDist::kNormal, rng);
  REQUIRE(aux.size() == 2);
  CHECK(std::abs(sample_correlation(aux[0], y)) < 0.02);
  CHECK(std::abs(sample_correlation(aux[1], y)) < 0.02);
}

TEST_CASE("strong target correlation survives at realistic sample sizes") {
  const auto matrix = single_factor_correlation_matrix(std::vector<double>{0.99});
  int hits = 0;
  const int seeds = 200;
  for (int seed = 0; seed < seeds; ++seed) {
    Rng rng = Rng::for_replication(13, seed);
    std::vector<double> y(110);
    for (auto& v : y) v = rng.normal();
    const auto aux = gen_correlated_parameters(matrix, y, BaseDist::kNormal, rng);
    if (sample_correlation(aux[0], y) > 0.9) ++hits;
  }
  CHECK(hits >= 190);  // >= 95% of seeds
}

TEST_CASE("generated covariance matches the requested matrix at scale") {
  const std::vector<double> correlations = {0.7, 0.3};
  const auto matrix = single_factor_correlation_matrix(correlations);
  Rng rng(17);
  const int n = 1000000;
  std::vector<double> y(n);
  for (auto& v : y) v = rng.normal();
  SUBCASE("normal base") {
    const auto aux = gen_correlated_parameters(matrix, y, BaseDist::kNormal, rng);
    CHECK(std::abs(sample_correlation(aux[0], y) - 0.7) < 0.005);
    CHECK(std::abs(sample_correlation(aux[1], y) - 0.3) < 0.005);
    CHECK(std::abs(sample_correlation(aux[0], aux[1]) - 0.21) < 0.005);
  }
  SUBCASE("standardized exponential base") {
    const auto aux = gen_correlated_parameters(matrix, y, BaseDist::kExponential, rng);
    CHECK(std::abs(sample_correlation(aux[0], y) - 0.7) < 0.005);
    // Unit variance after standardization.
    double m = 0, ss = 0;
    for (double v : aux[1]) m += v;
    m /= n;
    for (double v : aux[1]) ss += (v - m) * (v - m);
    CHECK(std::abs(ss / n - 1.0) < 0.01);
  }
}

TEST_CASE("non positive definite matrices are rejected") {
  std::vector<std::vector<double>> bad = {{1.0, 0.9, 0.9}, {0.9, 1.0, -0.9}, {0.9, -0.9, 1.0}};
  Rng rng(19);
  std::vector<double> y(10);
  for (auto& v : y) v = rng.normal();
  CHECK_THROWS_AS(gen_correlated_parameters(bad, y, BaseDist::kNormal, rng), ValidationError);
  std::vector<std::vector<double>> asym = {{1.0, 0.5}, {0.4, 1.0}};
  CHECK_THROWS_AS(gen_correlated_parameters(asym, y, BaseDist::kNormal, rng), ValidationError);
  std::vector<std::vector<double>> scaled = {{2.0, 0.0}, {0.0, 2.0}};
  CHECK_THROWS_AS(gen_correlated_parameters(scaled, y, BaseDist::kNormal, rng), ValidationError);
}

TEST_CASE("scenario 2 builds parameter blocks aligned with sizes") {
  ScenarioConfig config;
  config.scenario = 2;
  Rng rng = Rng::for_replication(23, 0);
  const GeneratedReplication generated = gen_scenario2(config, rng);
  CHECK(generated.dataset.characteristics.empty());
  CHECK(generated.dataset.parameters.size() == 3);
  CHECK_NOTHROW(generated.dataset.validate());
  for (const auto& [name, per_source] : generated.dataset.parameters) {
    REQUIRE(per_source.size() == 11);
    CHECK(per_source[0].size() == 10);
    for (int h = 0; h < 10; ++h) {
      CHECK(per_source[h + 1].size() ==
            static_cast<std::size_t>(generated.dataset.supplements[h].summary.n));
    }
  }
}

TEST_CASE("the example correlation matrix fixture loads and is positive definite") {
  const char* source_dir = std::getenv("RBF_SOURCE_DIR");
  const std::string path = std::string(source_dir ? source_dir : ".") +
                           "/data/scenario2_correlation_example.tsv";
  const auto matrix = load_matrix(path);
  REQUIRE(matrix.size() == 4);
  CHECK(matrix[0] == std::vector<double>{1.0, 0.7, 0.3, 0.1});
  CHECK(matrix[2][3] == 0.05);
  // Positive definite: the generator accepts it.
  Rng rng(29);
  std::vector<double> y(30);
  for (auto& v : y) v = rng.normal();
  CHECK_NOTHROW(gen_correlated_parameters(matrix, y, BaseDist::kNormal, rng));
}

TEST_CASE("scenario 3 preset table matches the shipped fixture") {
  const char* source_dir = std::getenv("RBF_SOURCE_DIR");
  REQUIRE(source_dir != nullptr);
  std::ifstream in(std::string(source_dir) + "/data/scenario3_presets.tsv");
  REQUIRE(in.good());
  std::vector<Scenario3Preset> parsed;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    Scenario3Preset preset;
    std::string truncation;
    fields >> preset.name >> truncation >> preset.rho;
    preset.truncation = truncation_from_name(truncation);
    parsed.push_back(preset);
  }
  const auto& builtin = scenario3_presets();
  REQUIRE(parsed.size() == builtin.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].name == builtin[i].name);
    CHECK(parsed[i].truncation == builtin[i].truncation);
    CHECK(parsed[i].rho == builtin[i].rho);
  }
}

TEST_CASE("truncated normal sampling") {
  SUBCASE("no truncation reproduces the plain normal stream") {
    Rng rng_a(31), rng_b(31);
    for (int i = 0; i < 100; ++i) {
      const double truncated = sample_truncated_normal(
          0.5, 2.0, -std::numeric_limits<double>::infinity(), TruncationSide::kAbove, rng_a);
      CHECK(truncated == rng_b.normal(0.5, 2.0));
    }
  }
  SUBCASE("half-normal mean") {
    Rng rng(37);
    const int draws = 1000000;
    double total = 0;
    for (int i = 0; i < draws; ++i) {
      total += sample_truncated_normal(0.0, 1.0, 0.0, TruncationSide::kAbove, rng);
    }
    CHECK(std::abs(total / draws - std::sqrt(2.0 / 3.141592653589793)) < 0.01);
  }
  SUBCASE("every draw satisfies the constraint") {
    Rng rng(41);
    for (int i = 0; i < 2000; ++i) {
      CHECK(sample_truncated_normal(0.0, 1.0, 1.5, TruncationSide::kAbove, rng) > 1.5);
      CHECK(sample_truncated_normal(1.0, 0.5, 0.8, TruncationSide::kBelow, rng) < 0.8);
    }
  }
  SUBCASE("infeasible truncation is rejected") {
    Rng rng(43);
    CHECK_THROWS_AS(sample_truncated_normal(0.0, 1.0, 10.0, TruncationSide::kAbove, rng),
                    ValidationError);
    CHECK_THROWS_AS(sample_truncated_normal(0.0, 1.0, -10.0, TruncationSide::kBelow, rng),
                    ValidationError);
  }
}

TEST_CASE("scenario 3 truncation layouts") {
  ScenarioConfig config;
  config.scenario = 3;
  SUBCASE("primary above zero") {
    config.truncation = Truncation::kPrimaryAbove;
    Rng rng = Rng::for_replication(47, 0);
    const GeneratedReplication generated = gen_scenario3(config, rng);
    CHECK_NOTHROW(generated.dataset.validate());
    const auto& samples = generated.dataset.primary.samples;
    CHECK(*std::min_element(samples.begin(), samples.end()) > 0.0);
    for (double t : generated.truncation_thresholds) CHECK(std::isnan(t));
    CHECK(generated.dataset.characteristics.size() == 3);
  }
  SUBCASE("primary below zero") {
    config.truncation = Truncation::kPrimaryBelow;
    Rng rng = Rng::for_replication(47, 1);
    const GeneratedReplication generated = gen_scenario3(config, rng);
    const auto& samples = generated.dataset.primary.samples;
    CHECK(*std::max_element(samples.begin(), samples.end()) < 0.0);
  }
  SUBCASE("per-supplement thresholds with uniform law") {
    config.truncation = Truncation::kSuppUnif;
    Rng rng = Rng::for_replication(47, 2);
    const GeneratedReplication generated = gen_scenario3(config, rng);
    std::vector<double> thresholds = generated.truncation_thresholds;
    REQUIRE(thresholds.size() == 10);
    for (int h = 0; h < 10; ++h) {
      CHECK(thresholds[h] >= -1.0);
      CHECK(thresholds[h] <= 1.0);
      const auto& samples = generated.dataset.supplements[h].samples;
      CHECK(*std::min_element(samples.begin(), samples.end()) > thresholds[h]);
    }
    // Independently drawn thresholds differ.
    std::sort(thresholds.begin(), thresholds.end());
    CHECK(std::unique(thresholds.begin(), thresholds.end()) == thresholds.end());
  }
  SUBCASE("mixed law uses Unif(0,2) for nonexchangeable supplements") {
    config.truncation = Truncation::kSuppMixed;
    for (int rep = 0; rep < 10; ++rep) {
      Rng rng = Rng::for_replication(47, 100 + rep);
      const GeneratedReplication generated = gen_scenario3(config, rng);
      for (int h = 0; h < 5; ++h) {
        CHECK(generated.truncation_thresholds[h] >= -1.0);
        CHECK(generated.truncation_thresholds[h] <= 1.0);
      }
      for (int h = 5; h < 10; ++h) {
        CHECK(generated.truncation_thresholds[h] >= 0.0);
        CHECK(generated.truncation_thresholds[h] <= 2.0);
      }
    }
  }
}

TEST_CASE("characteristics in scenario 3 target the untruncated means") {
  ScenarioConfig config;
  config.scenario = 3;
  config.truncation = Truncation::kPrimaryAbove;
  Rng rng = Rng::for_replication(53, 0);
  const GeneratedReplication generated = gen_scenario3(config, rng);
  // Sample correlation against (0 x 6, 1 x 5) equals the configured r
  // even though the observed primary mean is shifted by truncation.
  const auto& chars = generated.dataset.characteristics;
  CHECK(sample_correlation(chars.at("char1"), kGroundTruthY) ==
        doctest::Approx(0.99).epsilon(1e-10));
  CHECK(sample_correlation(chars.at("char2"), kGroundTruthY) ==
        doctest::Approx(0.7).epsilon(1e-10));
  CHECK(sample_correlation(chars.at("char3"), kGroundTruthY) ==
        doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("run_replication worked examples") {
  ScenarioConfig config;
  Rng rng = Rng::for_replication(59, 0);
  const GeneratedReplication generated = gen_scenario1(config, rng);

  SUBCASE("RBF with a=0 equals MEM field by field") {
    RbfConfig rbf;
    rbf.a = 0.0;
    const RepMetrics mem = run_replication(generated.dataset, Method::kMem, rbf, 0.0,
                                           generated.correct_model_index);
    RepMetrics rbf_metrics = run_replication(generated.dataset, Method::kRbf, rbf, 0.0,
                                             generated.correct_model_index);
    rbf_metrics.method = Method::kMem;
    CHECK(metrics_equal(mem, rbf_metrics));
  }
  SUBCASE("naive variance is the primary mean variance exactly") {
    const RepMetrics naive = run_replication(generated.dataset, Method::kNaive, RbfConfig{}, 0.0,
                                             generated.correct_model_index);
    const SourceSummary& p = generated.dataset.primary.summary;
    CHECK(naive.posterior_variance == p.variance() / p.n);
    CHECK(naive.posterior_mean == p.mean);
    CHECK_FALSE(naive.correct_model_weight.has_value());
  }
  SUBCASE("correct model weight is the weight at the ground-truth index") {
    const RepMetrics mem = run_replication(generated.dataset, Method::kMem, RbfConfig{}, 0.0,
                                           generated.correct_model_index);
    const PriorVector weights =
        posterior_weights(generated.dataset.primary.summary,
                          generated.dataset.supplement_summaries(), flat_prior(10));
    REQUIRE(mem.correct_model_weight.has_value());
    CHECK(*mem.correct_model_weight == weights[generated.correct_model_index]);
  }
}

TEST_CASE("rho at one reproduces MEM metrics rep by rep") {
  for (int scenario : {1, 2, 3}) {
    ScenarioConfig config;
    config.scenario = scenario;
    config.reps = 20;
    config.seed = 404;
    config.rbf.rho = 1.0;
    if (scenario == 2) config.rbf.parameter_mode = ParameterMode::kJeffreys;
    const auto records = run_scenario(config, 2);
    for (const auto& record : records) {
      RepMetrics rbf_metrics = record.metrics[1];
      REQUIRE(rbf_metrics.method == Method::kRbf);
      rbf_metrics.method = Method::kMem;
      CHECK(metrics_equal(record.metrics[0], rbf_metrics));
    }
  }
}

TEST_CASE("aggregate worked examples") {
  SUBCASE("single replication quartiles collapse to the value") {
    ReplicationRecord record;
    record.rep = 0;
    RepMetrics m;
    m.method = Method::kMem;
    m.posterior_variance = 0.5;
    m.bias = -0.2;
    m.squared_error = 0.04;
    m.esss = 3.0;
    m.correct_model_weight = 0.25;
    record.metrics.push_back(m);
    const MetricsSummary summary = aggregate({record});
    const MethodSummary& s = summary.methods.at(Method::kMem);
    CHECK(s.posterior_variance.q25 == 0.5);
    CHECK(s.posterior_variance.median == 0.5);
    CHECK(s.posterior_variance.q75 == 0.5);
    CHECK(s.abs_bias.median == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(s.mse == doctest::Approx(0.04).epsilon(1e-14));
    CHECK(s.rmse == doctest::Approx(0.2).epsilon(1e-14));
    CHECK_FALSE(summary.rbf_vs_mem.has_value());
  }
  SUBCASE("identical methods give zero percent change") {
    std::vector<ReplicationRecord> records;
    for (int rep = 0; rep < 5; ++rep) {
      ReplicationRecord record;
      record.rep = rep;
      for (Method method : {Method::kMem, Method::kRbf}) {
        RepMetrics m;
        m.method = method;
        m.posterior_variance = 0.1 * (rep + 1);
        m.bias = 0.01 * rep;
        m.squared_error = m.bias * m.bias;
        m.esss = rep;
        m.correct_model_weight = 0.2;
        record.metrics.push_back(m);
      }
      records.push_back(record);
    }
    const MetricsSummary summary = aggregate(records);
    REQUIRE(summary.rbf_vs_mem.has_value());
    CHECK(summary.rbf_vs_mem->posterior_variance == 0.0);
    CHECK(summary.rbf_vs_mem->squared_error == 0.0);
    CHECK(summary.rbf_vs_mem->mse == 0.0);
    CHECK(summary.rbf_vs_mem->correct_model_weight == 0.0);
  }
  SUBCASE("empty input is an error") {
    CHECK_THROWS_AS(aggregate({}), ValidationError);
  }
}

TEST_CASE("quantile uses linear interpolation") {
  const std::vector<double> values = {1.0, 2.0, 3.0, 4.0};
  CHECK(quantile(values, 0.5) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(quantile(values, 0.25) == doctest::Approx(1.75).epsilon(1e-14));
  CHECK(quantile(values, 0.0) == 1.0);
  CHECK(quantile(values, 1.0) == 4.0);
}

TEST_CASE("run_scenario is deterministic across thread counts") {
  ScenarioConfig config;
  config.reps = 16;
  config.seed = 99;
  const auto serial = run_scenario(config, 1);
  const auto parallel = run_scenario(config, 8);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].rep == parallel[i].rep);
    REQUIRE(serial[i].metrics.size() == parallel[i].metrics.size());
    for (std::size_t j = 0; j < serial[i].metrics.size(); ++j) {
      CHECK(metrics_equal(serial[i].metrics[j], parallel[i].metrics[j]));
    }
  }
}

TEST_CASE("scenario config validation") {
  ScenarioConfig config;
  config.scenario = 4;
  CHECK_THROWS_AS(config.validate(), ValidationError);
  config.scenario = 1;
  config.reps = 0;
  CHECK_THROWS_AS(config.validate(), ValidationError);
  config.reps = 10;
  config.correlations = {1.0};
  CHECK_THROWS_AS(config.validate(), ValidationError);
  config.correlations = {0.5};
  config.supp_size_min = 1;
  CHECK_THROWS_AS(config.validate(), ValidationError);
}

TEST_SUITE_END();
