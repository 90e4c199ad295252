#include "rbf/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>

#include "rbf/errors.hpp"
#include "rbf/mem.hpp"

namespace rbf {

namespace {

constexpr double kMinAcceptance = 1e-6;

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Ground-truth per-source means, primary first, exchangeable supplements
// before nonexchangeable ones.
std::vector<double> ground_truth_means(const ScenarioConfig& config) {
  std::vector<double> y;
  y.reserve(config.num_supplements() + 1);
  y.push_back(config.mu_exchangeable);
  for (int h = 0; h < config.num_exchangeable; ++h) y.push_back(config.mu_exchangeable);
  for (int h = 0; h < config.num_nonexchangeable; ++h) y.push_back(config.mu_nonexchangeable);
  return y;
}

std::uint32_t correct_model_index_for(const ScenarioConfig& config) {
  return (1u << config.num_exchangeable) - 1u;
}

std::string block_name(const char* stem, int l) { return std::string(stem) + std::to_string(l + 1); }

void add_characteristics(const ScenarioConfig& config, GeneratedReplication& rep, Rng& rng) {
  const std::vector<double> y = ground_truth_means(config);
  for (std::size_t l = 0; l < config.correlations.size(); ++l) {
    rep.dataset.characteristics[block_name("char", static_cast<int>(l))] =
        gen_correlated_characteristic(y, config.correlations[l], rng);
  }
}

// Upper-triangular C with R = C^T C (transpose of the standard lower
// Cholesky factor). Throws unless R is symmetric PD with unit diagonal.
std::vector<std::vector<double>> upper_cholesky(const std::vector<std::vector<double>>& r) {
  const std::size_t dim = r.size();
  for (const auto& row : r) {
    if (row.size() != dim) throw ValidationError("correlation matrix must be square");
  }
  for (std::size_t i = 0; i < dim; ++i) {
    if (std::abs(r[i][i] - 1.0) > 1e-12) {
      throw ValidationError("correlation matrix must have unit diagonal");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(r[i][j] - r[j][i]) > 1e-12) {
        throw ValidationError("correlation matrix must be symmetric");
      }
    }
  }
  std::vector<std::vector<double>> lower(dim, std::vector<double>(dim, 0.0));
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = r[i][j];
      for (std::size_t m = 0; m < j; ++m) sum -= lower[i][m] * lower[j][m];
      if (i == j) {
        if (sum <= 0) throw ValidationError("correlation matrix is not positive definite");
        lower[i][i] = std::sqrt(sum);
      } else {
        lower[i][j] = sum / lower[j][j];
      }
    }
  }
  std::vector<std::vector<double>> upper(dim, std::vector<double>(dim, 0.0));
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j <= i; ++j) upper[j][i] = lower[i][j];
  }
  return upper;
}

} // namespace

const char* method_name(Method method) {
  switch (method) {
    case Method::kMem: return "MEM";
    case Method::kRbf: return "RBF";
    case Method::kNaive: return "naive";
  }
  return "?";
}

void ScenarioConfig::validate() const {
  if (scenario < 1 || scenario > 3) throw ValidationError("scenario must be 1, 2, or 3");
  if (num_exchangeable < 1 || num_nonexchangeable < 0) {
    throw ValidationError("need at least one exchangeable supplement");
  }
  if (num_supplements() > kDefaultMaxSupplements) {
    throw CapacityError("scenario asks for " + std::to_string(num_supplements()) +
                        " supplemental sources; the limit is " +
                        std::to_string(kDefaultMaxSupplements) + " (model space is 2^H)");
  }
  if (n_primary < 2) throw ValidationError("primary sample size must be >= 2");
  if (supp_size_min < 2 || supp_size_max < supp_size_min) {
    throw ValidationError("supplement size range must satisfy 2 <= min <= max");
  }
  if (reps < 1) throw ValidationError("replication count must be >= 1");
  for (double r : correlations) {
    if (!(r > -1.0 && r < 1.0)) {
      throw ValidationError("target correlations must lie in (-1, 1)");
    }
  }
}

std::vector<double> gen_correlated_characteristic(std::span<const double> y, double r, Rng& rng) {
  if (!(std::abs(r) <= 1.0)) {
    throw ValidationError("gen_correlated_characteristic: |r| must be <= 1");
  }
  const auto n = y.size();
  const auto nd = static_cast<double>(n);

  double y_sum = 0;
  for (double v : y) y_sum += v;
  const double y_mean = y_sum / nd;
  std::vector<double> y_centered(n);
  double yy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    y_centered[i] = y[i] - y_mean;
    yy += y_centered[i] * y_centered[i];
  }
  if (yy == 0) {
    throw ValidationError("gen_correlated_characteristic: Y is constant");
  }

  std::vector<double> raw(n);
  for (auto& v : raw) v = rng.normal();

  // Residualize against span{1, Y}: center, then remove the Y component.
  double raw_sum = 0;
  for (double v : raw) raw_sum += v;
  const double raw_mean = raw_sum / nd;
  double cross = 0;
  for (std::size_t i = 0; i < n; ++i) cross += (raw[i] - raw_mean) * y_centered[i];
  const double beta = cross / yy;

  std::vector<double> residual(n);
  double ee = 0;
  for (std::size_t i = 0; i < n; ++i) {
    residual[i] = raw[i] - raw_mean - beta * y_centered[i];
    ee += residual[i] * residual[i];
  }
  const double sd_residual = std::sqrt(ee / nd);
  const double sd_y = std::sqrt(yy / nd);

  const double ortho_scale = std::sqrt(1.0 - r * r) * sd_y;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = r * sd_residual * y[i] + ortho_scale * residual[i];
  }
  return out;
}

GeneratedReplication gen_scenario1(const ScenarioConfig& config, Rng& rng) {
  GeneratedReplication rep;
  rep.ground_truth = config.mu_exchangeable;
  rep.correct_model_index = correct_model_index_for(config);

  // Draw order: primary samples; per supplement its size then samples;
  // characteristics last.
  std::vector<double> primary(config.n_primary);
  for (auto& v : primary) v = rng.normal(config.mu_exchangeable, 1.0);
  rep.dataset.primary = SourceData::from_samples(std::move(primary));

  const int num_supp = config.num_supplements();
  for (int h = 0; h < num_supp; ++h) {
    const double mu =
        h < config.num_exchangeable ? config.mu_exchangeable : config.mu_nonexchangeable;
    const int size = rng.uniform_int(config.supp_size_min, config.supp_size_max);
    std::vector<double> samples(size);
    for (auto& v : samples) v = rng.normal(mu, 1.0);
    rep.dataset.supplements.push_back(SourceData::from_samples(std::move(samples)));
  }

  add_characteristics(config, rep, rng);
  return rep;
}

double exchangeable_fraction(int n_primary, std::span<const int> supplement_sizes,
                             int num_exchangeable) {
  double exchangeable = n_primary;
  double total = n_primary;
  for (std::size_t h = 0; h < supplement_sizes.size(); ++h) {
    total += supplement_sizes[h];
    if (static_cast<int>(h) < num_exchangeable) exchangeable += supplement_sizes[h];
  }
  return exchangeable / total;
}

std::vector<std::vector<double>> single_factor_correlation_matrix(
    std::span<const double> correlations) {
  const std::size_t dim = correlations.size() + 1;
  std::vector<std::vector<double>> r(dim, std::vector<double>(dim, 0.0));
  for (std::size_t i = 0; i < dim; ++i) r[i][i] = 1.0;
  for (std::size_t l = 0; l < correlations.size(); ++l) {
    r[0][l + 1] = correlations[l];
    r[l + 1][0] = correlations[l];
    for (std::size_t m = l + 1; m < correlations.size(); ++m) {
      const double value = correlations[l] * correlations[m];
      r[l + 1][m + 1] = value;
      r[m + 1][l + 1] = value;
    }
  }
  return r;
}

std::vector<std::vector<double>> gen_correlated_parameters(
    const std::vector<std::vector<double>>& correlation_matrix, std::span<const double> y,
    BaseDist base_dist, Rng& rng) {
  const std::vector<std::vector<double>> upper = upper_cholesky(correlation_matrix);
  const std::size_t num_aux = correlation_matrix.size() - 1;
  const std::size_t total = y.size();

  // Independent standardized base draws, one column at a time.
  std::vector<std::vector<double>> base(num_aux, std::vector<double>(total));
  for (std::size_t l = 0; l < num_aux; ++l) {
    for (std::size_t i = 0; i < total; ++i) {
      base[l][i] = base_dist == BaseDist::kNormal ? rng.normal() : rng.exponential() - 1.0;
    }
  }

  // Row-wise mixing (y_i, x'_i) * C; the target column is preserved
  // because C[0][0] = 1.
  std::vector<std::vector<double>> aux(num_aux, std::vector<double>(total));
  for (std::size_t i = 0; i < total; ++i) {
    for (std::size_t j = 1; j <= num_aux; ++j) {
      double value = y[i] * upper[0][j];
      for (std::size_t m = 1; m <= j; ++m) value += base[m - 1][i] * upper[m][j];
      aux[j - 1][i] = value;
    }
  }
  return aux;
}

GeneratedReplication gen_scenario2(const ScenarioConfig& config, Rng& rng) {
  GeneratedReplication rep;
  rep.ground_truth = config.mu_exchangeable;
  rep.correct_model_index = correct_model_index_for(config);

  // Draw order: all supplement sizes (the within-source sd depends on
  // them), primary samples, supplement samples, then base columns.
  const int num_supp = config.num_supplements();
  std::vector<int> sizes(num_supp);
  for (auto& s : sizes) s = rng.uniform_int(config.supp_size_min, config.supp_size_max);

  // Within-source sd keeps the pooled variance of the concatenated
  // observations at one, which the Cholesky mixing below assumes.
  const double p = exchangeable_fraction(config.n_primary, sizes, config.num_exchangeable);
  const double between = p * (1.0 - p) * (config.mu_nonexchangeable - config.mu_exchangeable) *
                         (config.mu_nonexchangeable - config.mu_exchangeable);
  if (!(between < 1.0)) {
    throw ValidationError("scenario 2: between-source spread leaves no within-source variance");
  }
  const double sigma = std::sqrt(1.0 - between);

  std::vector<double> y;
  std::vector<double> primary(config.n_primary);
  for (auto& v : primary) v = rng.normal(config.mu_exchangeable, sigma);
  y.insert(y.end(), primary.begin(), primary.end());
  rep.dataset.primary = SourceData::from_samples(std::move(primary));

  for (int h = 0; h < num_supp; ++h) {
    const double mu =
        h < config.num_exchangeable ? config.mu_exchangeable : config.mu_nonexchangeable;
    std::vector<double> samples(sizes[h]);
    for (auto& v : samples) v = rng.normal(mu, sigma);
    y.insert(y.end(), samples.begin(), samples.end());
    rep.dataset.supplements.push_back(SourceData::from_samples(std::move(samples)));
  }

  const std::vector<std::vector<double>> matrix =
      config.correlation_matrix.empty() ? single_factor_correlation_matrix(config.correlations)
                                        : config.correlation_matrix;
  const std::vector<std::vector<double>> aux =
      gen_correlated_parameters(matrix, y, config.base_dist, rng);

  for (std::size_t l = 0; l < aux.size(); ++l) {
    std::vector<std::vector<double>> per_source;
    per_source.reserve(num_supp + 1);
    auto begin = aux[l].begin();
    per_source.emplace_back(begin, begin + config.n_primary);
    begin += config.n_primary;
    for (int h = 0; h < num_supp; ++h) {
      per_source.emplace_back(begin, begin + sizes[h]);
      begin += sizes[h];
    }
    rep.dataset.parameters[block_name("param", static_cast<int>(l))] = std::move(per_source);
  }
  return rep;
}

double sample_truncated_normal(double mean, double sd, double bound, TruncationSide side,
                               Rng& rng) {
  if (!(sd > 0)) throw ValidationError("sample_truncated_normal: sd must be positive");
  if (std::isfinite(bound)) {
    const double z = (bound - mean) / sd;
    const double acceptance =
        side == TruncationSide::kAbove ? 1.0 - standard_normal_cdf(z) : standard_normal_cdf(z);
    if (acceptance < kMinAcceptance) {
      throw ValidationError("sample_truncated_normal: acceptance probability below 1e-6");
    }
  }
  while (true) {
    const double x = rng.normal(mean, sd);
    if (side == TruncationSide::kAbove ? x > bound : x < bound) return x;
  }
}

GeneratedReplication gen_scenario3(const ScenarioConfig& config, Rng& rng) {
  GeneratedReplication rep;
  rep.ground_truth = config.mu_exchangeable;
  rep.correct_model_index = correct_model_index_for(config);

  const bool primary_below = config.truncation == Truncation::kPrimaryBelow;
  const bool supplements_truncated =
      config.truncation == Truncation::kSuppUnif || config.truncation == Truncation::kSuppMixed;

  // Draw order: primary samples; per supplement its size, threshold (when
  // truncated), then samples; characteristics last.
  std::vector<double> primary(config.n_primary);
  for (auto& v : primary) {
    v = sample_truncated_normal(config.mu_exchangeable, 1.0, 0.0,
                                primary_below ? TruncationSide::kBelow : TruncationSide::kAbove,
                                rng);
  }
  rep.dataset.primary = SourceData::from_samples(std::move(primary));

  const int num_supp = config.num_supplements();
  rep.truncation_thresholds.assign(num_supp, std::numeric_limits<double>::quiet_NaN());
  for (int h = 0; h < num_supp; ++h) {
    const bool exchangeable = h < config.num_exchangeable;
    const double mu = exchangeable ? config.mu_exchangeable : config.mu_nonexchangeable;
    const int size = rng.uniform_int(config.supp_size_min, config.supp_size_max);
    std::vector<double> samples(size);
    if (supplements_truncated) {
      const bool wide = config.truncation == Truncation::kSuppUnif || exchangeable;
      const double u = wide ? rng.uniform(-1.0, 1.0) : rng.uniform(0.0, 2.0);
      rep.truncation_thresholds[h] = u;
      for (auto& v : samples) {
        v = sample_truncated_normal(mu, 1.0, u, TruncationSide::kAbove, rng);
      }
    } else {
      for (auto& v : samples) v = rng.normal(mu, 1.0);
    }
    rep.dataset.supplements.push_back(SourceData::from_samples(std::move(samples)));
  }

  add_characteristics(config, rep, rng);
  return rep;
}

GeneratedReplication generate_replication(const ScenarioConfig& config, Rng& rng) {
  switch (config.scenario) {
    case 1: return gen_scenario1(config, rng);
    case 2: return gen_scenario2(config, rng);
    case 3: return gen_scenario3(config, rng);
    default: throw ValidationError("scenario must be 1, 2, or 3");
  }
}

RepMetrics run_replication(const Dataset& dataset, Method method, const RbfConfig& rbf_config,
                           double ground_truth,
                           std::optional<std::uint32_t> correct_model_index) {
  const SourceSummary& primary = dataset.primary.summary;
  RepMetrics metrics;
  metrics.method = method;

  if (method == Method::kNaive) {
    metrics.posterior_mean = primary.mean;
    metrics.posterior_variance = primary.mean_variance();
  } else {
    const std::vector<SourceSummary> supplements = dataset.supplement_summaries();
    const PriorVector prior = method == Method::kRbf ? build_rbf_prior(dataset, rbf_config)
                                                     : flat_prior(dataset.num_supplements());
    const PriorVector weights = posterior_weights(primary, supplements, prior);

    PosteriorMixture mixture;
    mixture.components.reserve(weights.size());
    for (std::size_t k = 0; k < weights.size(); ++k) {
      const ModelConfiguration model{static_cast<std::uint32_t>(k), dataset.num_supplements()};
      const Moments conditional = conditional_posterior(primary, supplements, model);
      mixture.components.push_back(
          MixtureComponent{weights[k], conditional.mean, conditional.variance});
    }
    const Moments moments = mixture_moments(mixture);
    metrics.posterior_mean = moments.mean;
    metrics.posterior_variance = moments.variance;
    if (correct_model_index) metrics.correct_model_weight = weights[*correct_model_index];
  }

  metrics.bias = metrics.posterior_mean - ground_truth;
  metrics.squared_error = metrics.bias * metrics.bias;
  metrics.esss = esss(metrics.posterior_variance, primary);
  return metrics;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ValidationError("quantile: empty input");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

namespace {

Quartiles quartiles_of(std::vector<double> values) {
  Quartiles q;
  q.q25 = quantile(values, 0.25);
  q.median = quantile(values, 0.5);
  q.q75 = quantile(values, 0.75);
  return q;
}

double pct_change(double rbf, double mem) {
  if (mem == 0) {
    return rbf == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return 100.0 * (rbf - mem) / std::abs(mem);
}

} // namespace

MetricsSummary aggregate(const std::vector<ReplicationRecord>& records) {
  if (records.empty()) throw ValidationError("aggregate: no replications");

  struct Columns {
    std::vector<double> variance, abs_bias, squared_error, cmw, esss;
  };
  std::map<Method, Columns> columns;
  for (const auto& record : records) {
    for (const auto& m : record.metrics) {
      Columns& c = columns[m.method];
      c.variance.push_back(m.posterior_variance);
      c.abs_bias.push_back(std::abs(m.bias));
      c.squared_error.push_back(m.squared_error);
      c.esss.push_back(m.esss);
      if (m.correct_model_weight) c.cmw.push_back(*m.correct_model_weight);
    }
  }

  MetricsSummary summary;
  for (auto& [method, c] : columns) {
    MethodSummary s;
    s.posterior_variance = quartiles_of(c.variance);
    s.abs_bias = quartiles_of(c.abs_bias);
    s.squared_error = quartiles_of(c.squared_error);
    s.esss = quartiles_of(c.esss);
    if (!c.cmw.empty()) {
      s.correct_model_weight = quartiles_of(c.cmw);
      s.has_correct_model_weight = true;
    }
    double total = 0;
    for (double se : c.squared_error) total += se;
    s.mse = total / static_cast<double>(c.squared_error.size());
    s.rmse = std::sqrt(s.mse);
    summary.methods[method] = s;
  }

  const auto mem_it = summary.methods.find(Method::kMem);
  const auto rbf_it = summary.methods.find(Method::kRbf);
  if (mem_it != summary.methods.end() && rbf_it != summary.methods.end()) {
    const MethodSummary& mem = mem_it->second;
    const MethodSummary& rbf = rbf_it->second;
    PercentChanges changes;
    changes.posterior_variance = pct_change(rbf.posterior_variance.median, mem.posterior_variance.median);
    changes.abs_bias = pct_change(rbf.abs_bias.median, mem.abs_bias.median);
    changes.squared_error = pct_change(rbf.squared_error.median, mem.squared_error.median);
    if (mem.has_correct_model_weight && rbf.has_correct_model_weight) {
      changes.correct_model_weight =
          pct_change(rbf.correct_model_weight.median, mem.correct_model_weight.median);
    }
    changes.esss = pct_change(rbf.esss.median, mem.esss.median);
    changes.mse = pct_change(rbf.mse, mem.mse);
    summary.rbf_vs_mem = changes;
  }
  return summary;
}

const char* truncation_name(Truncation truncation) {
  switch (truncation) {
    case Truncation::kNone: return "none";
    case Truncation::kPrimaryAbove: return "primary-above";
    case Truncation::kPrimaryBelow: return "primary-below";
    case Truncation::kSuppUnif: return "supp-unif";
    case Truncation::kSuppMixed: return "supp-mixed";
  }
  return "?";
}

Truncation truncation_from_name(const std::string& name) {
  for (Truncation t : {Truncation::kNone, Truncation::kPrimaryAbove, Truncation::kPrimaryBelow,
                       Truncation::kSuppUnif, Truncation::kSuppMixed}) {
    if (name == truncation_name(t)) return t;
  }
  throw ValidationError("unknown truncation layout '" + name + "'");
}

const std::vector<Scenario3Preset>& scenario3_presets() {
  static const std::vector<Scenario3Preset> presets = {
      {"s3-theta-pos", Truncation::kPrimaryAbove, 0.0},
      {"s3-theta-neg", Truncation::kPrimaryBelow, 0.0},
      {"s3-theta-pos-rho05", Truncation::kPrimaryAbove, 0.5},
      {"s3-theta-neg-rho05", Truncation::kPrimaryBelow, 0.5},
      {"s3-supp-unif", Truncation::kSuppUnif, 0.0},
      {"s3-supp-mixed", Truncation::kSuppMixed, 0.0},
  };
  return presets;
}

std::vector<std::vector<double>> load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::vector<std::vector<double>> matrix;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::vector<double> row;
    double value = 0;
    while (fields >> value) row.push_back(value);
    if (!fields.eof()) {
      throw ValidationError("'" + path + "': non-numeric matrix entry");
    }
    if (!row.empty()) matrix.push_back(std::move(row));
  }
  if (matrix.empty()) throw ValidationError("'" + path + "': no matrix rows");
  return matrix;
}

std::vector<ReplicationRecord> run_scenario(const ScenarioConfig& config, int num_threads) {
  config.validate();
  std::vector<ReplicationRecord> records(config.reps);

  auto run_one = [&config, &records](int rep) {
    Rng rng = Rng::for_replication(config.seed, static_cast<std::uint64_t>(rep));
    const GeneratedReplication generated = generate_replication(config, rng);
    ReplicationRecord record;
    record.rep = rep;
    for (Method method : {Method::kMem, Method::kRbf, Method::kNaive}) {
      record.metrics.push_back(run_replication(generated.dataset, method, config.rbf,
                                               generated.ground_truth,
                                               generated.correct_model_index));
    }
    records[rep] = std::move(record);
  };

  const int workers = std::max(1, std::min(num_threads, config.reps));
  if (workers == 1) {
    for (int rep = 0; rep < config.reps; ++rep) run_one(rep);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        try {
          while (true) {
            const int rep = next.fetch_add(1);
            if (rep >= config.reps) break;
            run_one(rep);
          }
        } catch (...) {
          const std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  return records;
}

} // namespace rbf
