#include "rbf/analyze.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "rbf/errors.hpp"
#include "rbf/mem.hpp"
#include "rbf/report.hpp"

namespace rbf {

namespace {

std::vector<double> subsample(const std::vector<double>& samples, int k, Rng& rng) {
  std::vector<double> pool = samples;
  const int n = static_cast<int>(pool.size());
  for (int i = 0; i < k; ++i) {
    const int j = rng.uniform_int(i, n - 1);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

struct RecordResult {
  ReplicationRecord record;
  // Per pool-ordered source: total weight of models containing it.
  std::vector<double> mem_borrow;
  std::vector<double> rbf_borrow;
};

// Total posterior weight of models containing each supplement, spread
// back onto pool positions (primary stays at zero).
std::vector<double> borrow_by_source(const PriorVector& weights, int num_sources,
                                     int primary_pool_index) {
  std::vector<double> by_supplement(num_sources - 1, 0.0);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] == 0) continue;
    for (int h = 0; h < num_sources - 1; ++h) {
      if ((k >> h) & 1u) by_supplement[h] += weights[k];
    }
  }
  std::vector<double> by_source(num_sources, 0.0);
  int h = 0;
  for (int pool_index = 0; pool_index < num_sources; ++pool_index) {
    if (pool_index == primary_pool_index) continue;
    by_source[pool_index] = by_supplement[h++];
  }
  return by_source;
}

} // namespace

void AnalyzeConfig::validate() const {
  if (data_path.empty()) throw ValidationError("analyze: data path is required");
  if (primary_id.empty()) throw ValidationError("analyze: primary source id is required");
  if (subsample_n < 2) throw ValidationError("analyze: subsample size must be >= 2");
  if (reps < 1) throw ValidationError("analyze: replication count must be >= 1");
}

AnalyzeResult run_analyze(const AnalyzeConfig& config, int num_threads) {
  config.validate();
  const SourcePool pool = load_long_csv(config.data_path);
  const int num_sources = static_cast<int>(pool.source_ids.size());
  if (num_sources - 1 > kDefaultMaxSupplements) {
    throw CapacityError("dataset has " + std::to_string(num_sources - 1) +
                        " supplemental sources per primary; the limit is " +
                        std::to_string(kDefaultMaxSupplements) + " (model space is 2^H)");
  }

  AnalyzeResult result;
  result.source_ids = pool.source_ids;
  if (config.primary_id == "all") {
    result.primaries = pool.source_ids;
  } else {
    if (pool.source_index(config.primary_id) < 0) {
      throw ValidationError("unknown primary source '" + config.primary_id + "'");
    }
    result.primaries = {config.primary_id};
  }

  for (const auto& id : pool.source_ids) {
    if (static_cast<int>(pool.targets.at(id).size()) < config.subsample_n) {
      throw ValidationError("source '" + id + "' has fewer target samples than subsample size " +
                            std::to_string(config.subsample_n));
    }
  }

  const auto num_primaries = static_cast<int>(result.primaries.size());
  const int total = num_primaries * config.reps;
  std::vector<RecordResult> results(total);

  auto run_one = [&](int index) {
    const int primary_pos = index / config.reps;
    const std::string& primary_id = result.primaries[primary_pos];
    const int primary_pool_index = pool.source_index(primary_id);

    Rng rng = Rng::for_replication(config.seed, static_cast<std::uint64_t>(index));

    // Subsample target samples per source in pool order (primary too);
    // characteristics and parameters are taken whole.
    Dataset dataset;
    std::vector<std::string> ordered_ids{primary_id};
    for (const auto& id : pool.source_ids) {
      if (id != primary_id) ordered_ids.push_back(id);
    }
    for (const auto& id : pool.source_ids) {
      const std::vector<double>& full = pool.targets.at(id);
      const bool is_primary = id == primary_id;
      std::vector<double> samples;
      if (is_primary || !config.whole_supplements) {
        samples = subsample(full, config.subsample_n, rng);
      } else {
        samples = full;
      }
      SourceData data = SourceData::from_samples(std::move(samples));
      if (is_primary) {
        dataset.primary = std::move(data);
      } else {
        dataset.supplements.push_back(std::move(data));
      }
    }
    // Keep supplements in pool order: rebuild in ordered_ids order.
    // (The loop above already visits sources in pool order, so the
    // supplements vector is pool-ordered with the primary removed.)
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

    // Bias reference: the source's full-data mean.
    const double ground_truth = sufficient_stats(pool.targets.at(primary_id)).mean;

    const SourceSummary& primary = dataset.primary.summary;
    const std::vector<SourceSummary> supplements = dataset.supplement_summaries();

    RecordResult out;
    out.record.rep = index;
    for (Method method : {Method::kMem, Method::kRbf, Method::kNaive}) {
      if (method == Method::kNaive) {
        out.record.metrics.push_back(run_replication(dataset, method, config.rbf, ground_truth,
                                                     std::nullopt));
        continue;
      }
      const PriorVector prior = method == Method::kRbf
                                    ? build_rbf_prior(dataset, config.rbf)
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
      RepMetrics metrics;
      metrics.method = method;
      metrics.posterior_mean = moments.mean;
      metrics.posterior_variance = moments.variance;
      metrics.bias = moments.mean - ground_truth;
      metrics.squared_error = metrics.bias * metrics.bias;
      metrics.esss = esss(moments.variance, primary);
      out.record.metrics.push_back(metrics);

      auto& borrow = method == Method::kMem ? out.mem_borrow : out.rbf_borrow;
      borrow = borrow_by_source(weights, num_sources, primary_pool_index);
    }
    results[index] = std::move(out);
  };

  const int workers = std::max(1, std::min(num_threads, total));
  if (workers == 1) {
    for (int i = 0; i < total; ++i) run_one(i);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        try {
          while (true) {
            const int i = next.fetch_add(1);
            if (i >= total) break;
            run_one(i);
          }
        } catch (...) {
          const std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  result.records.reserve(total);
  result.record_labels.reserve(total);
  result.mem_borrow_weights.assign(num_primaries, std::vector<double>(num_sources, 0.0));
  result.rbf_borrow_weights.assign(num_primaries, std::vector<double>(num_sources, 0.0));
  for (int i = 0; i < total; ++i) {
    const int primary_pos = i / config.reps;
    result.records.push_back(std::move(results[i].record));
    result.record_labels.push_back(result.primaries[primary_pos]);
    for (int s = 0; s < num_sources; ++s) {
      result.mem_borrow_weights[primary_pos][s] += results[i].mem_borrow[s];
      result.rbf_borrow_weights[primary_pos][s] += results[i].rbf_borrow[s];
    }
  }
  const auto reps = static_cast<double>(config.reps);
  for (int p = 0; p < num_primaries; ++p) {
    for (int s = 0; s < num_sources; ++s) {
      result.mem_borrow_weights[p][s] /= reps;
      result.rbf_borrow_weights[p][s] /= reps;
    }
  }
  return result;
}

std::string borrow_weights_csv(const std::vector<std::string>& source_ids,
                               const std::vector<std::string>& primaries,
                               const std::vector<std::vector<double>>& weights) {
  std::string out = "primary";
  for (const auto& id : source_ids) {
    out += ',';
    out += id;
  }
  out += '\n';
  for (std::size_t p = 0; p < primaries.size(); ++p) {
    out += primaries[p];
    for (double w : weights[p]) {
      out += ',';
      out += format_double(w);
    }
    out += '\n';
  }
  return out;
}

} // namespace rbf
