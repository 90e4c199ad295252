#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rbf/dataset.hpp"
#include "rbf/prior.hpp"
#include "rbf/rng.hpp"

namespace rbf {

enum class Method { kMem, kRbf, kNaive };

const char* method_name(Method method);

enum class BaseDist { kNormal, kExponential };

// The truncation layout of scenario 3.
enum class Truncation {
  kNone,           // scenarios 1 and 2
  kPrimaryAbove,   // primary from TN_{x>0}(0,1), supplements untruncated
  kPrimaryBelow,   // primary from TN_{x<0}(0,1), supplements untruncated
  kSuppUnif,       // primary TN_{x>0}; every supplement TN_{x>u}, u ~ Unif(-1,1)
  kSuppMixed,      // as kSuppUnif but nonexchangeable supplements use u ~ Unif(0,2)
};

struct ScenarioConfig {
  int scenario = 1;
  int num_exchangeable = 5;
  int num_nonexchangeable = 5;
  int n_primary = 10;
  int supp_size_min = 5;
  int supp_size_max = 15;
  double mu_exchangeable = 0.0;
  double mu_nonexchangeable = 1.0;
  std::vector<double> correlations = {0.99, 0.7, 0.5};
  BaseDist base_dist = BaseDist::kNormal;             // scenario 2
  std::vector<std::vector<double>> correlation_matrix; // scenario 2; empty = single-factor
  Truncation truncation = Truncation::kPrimaryAbove;  // scenario 3
  RbfConfig rbf;
  int reps = 1000;
  std::uint64_t seed = 1;

  int num_supplements() const { return num_exchangeable + num_nonexchangeable; }
  void validate() const;
};

// A generated dataset plus the generator's ground truth.
struct GeneratedReplication {
  Dataset dataset;
  std::uint32_t correct_model_index = 0;  // exchangeable supplements included
  double ground_truth = 0.0;              // true primary mean, for bias
  std::vector<double> truncation_thresholds;  // scenario 3, per supplement (NaN if untruncated)
};

struct RepMetrics {
  Method method = Method::kMem;
  double posterior_mean = 0;
  double posterior_variance = 0;
  double bias = 0;
  double squared_error = 0;
  std::optional<double> correct_model_weight;  // absent for naive and analyze runs
  double esss = 0;
};

// One characteristic with exact sample correlation r against Y: draws a
// standard Gaussian vector, removes its projection onto span{1, Y}, and
// combines r * SD(residual) * Y + sqrt(1 - r^2) * SD(Y) * residual.
std::vector<double> gen_correlated_characteristic(std::span<const double> y, double r,
                                                  Rng& rng);

GeneratedReplication gen_scenario1(const ScenarioConfig& config, Rng& rng);

// Mix iid standardized columns into correlated ones with the upper
// Cholesky factor C of R (R = C^T C, C[0][0] = 1 so the target column is
// preserved). Returns the auxiliary columns aligned observation-wise
// with y. Throws ValidationError unless R is symmetric positive definite
// with unit diagonal.
std::vector<std::vector<double>> gen_correlated_parameters(
    const std::vector<std::vector<double>>& correlation_matrix,
    std::span<const double> y, BaseDist base_dist, Rng& rng);

GeneratedReplication gen_scenario2(const ScenarioConfig& config, Rng& rng);

// Fraction of observations in exchangeable sources (primary included).
double exchangeable_fraction(int n_primary, std::span<const int> supplement_sizes,
                             int num_exchangeable);

// Single-factor correlation matrix for target correlations r: entry
// (0, l) is r_l and entry (l, m) is r_l * r_m. Positive definite for
// |r_l| < 1.
std::vector<std::vector<double>> single_factor_correlation_matrix(
    std::span<const double> correlations);

enum class TruncationSide { kAbove, kBelow };

// Rejection sampling from N(mean, sd^2) restricted to one side of
// `bound`. Throws ValidationError when the acceptance probability is
// below 1e-6.
double sample_truncated_normal(double mean, double sd, double bound, TruncationSide side,
                               Rng& rng);

GeneratedReplication gen_scenario3(const ScenarioConfig& config, Rng& rng);

GeneratedReplication generate_replication(const ScenarioConfig& config, Rng& rng);

// Evaluate one method on one dataset. `correct_model_index` empty means
// the correct-model weight is not reported (analyze mode).
RepMetrics run_replication(const Dataset& dataset, Method method, const RbfConfig& rbf_config,
                           double ground_truth,
                           std::optional<std::uint32_t> correct_model_index);

struct ReplicationRecord {
  int rep = 0;
  std::vector<RepMetrics> metrics;  // MEM, RBF, naive
};

struct Quartiles {
  double q25 = 0;
  double median = 0;
  double q75 = 0;
};

struct MethodSummary {
  Quartiles posterior_variance;
  Quartiles abs_bias;
  Quartiles squared_error;
  Quartiles correct_model_weight;  // zeros when the metric is absent
  bool has_correct_model_weight = false;
  Quartiles esss;
  double mse = 0;   // mean of squared errors
  double rmse = 0;
};

// Percent changes of RBF relative to MEM; negative means RBF is lower.
struct PercentChanges {
  double posterior_variance = 0;
  double abs_bias = 0;
  double squared_error = 0;  // of medians
  double correct_model_weight = 0;
  double esss = 0;
  double mse = 0;            // of means
};

struct MetricsSummary {
  std::map<Method, MethodSummary> methods;
  std::optional<PercentChanges> rbf_vs_mem;
};

// Linear-interpolation quantile of the values (R type 7).
double quantile(std::vector<double> values, double p);

MetricsSummary aggregate(const std::vector<ReplicationRecord>& records);

const char* truncation_name(Truncation truncation);
Truncation truncation_from_name(const std::string& name);

// Named scenario-3 presets (truncation layout plus correlation threshold).
struct Scenario3Preset {
  std::string name;
  Truncation truncation;
  double rho;
};
const std::vector<Scenario3Preset>& scenario3_presets();

// Whitespace-separated numeric matrix; '#' starts a comment line.
std::vector<std::vector<double>> load_matrix(const std::string& path);

// Run `config.reps` replications, each on its own deterministic stream
// derived from (seed, rep), distributing reps over `num_threads`
// workers. Results are identical for every thread count.
std::vector<ReplicationRecord> run_scenario(const ScenarioConfig& config, int num_threads = 1);

} // namespace rbf
