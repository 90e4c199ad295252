#include "rbf/mem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rbf/errors.hpp"

namespace rbf {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112353;

void check_model(std::span<const SourceSummary> supplements, const ModelConfiguration& model) {
  if (model.num_supplements != static_cast<int>(supplements.size())) {
    throw ValidationError("model describes " + std::to_string(model.num_supplements) +
                          " supplements but " + std::to_string(supplements.size()) +
                          " were given");
  }
}

int prior_size_to_h(std::size_t size) {
  int h = 0;
  while ((std::size_t{1} << h) < size) ++h;
  if ((std::size_t{1} << h) != size || h < 1) {
    throw ValidationError("prior vector length " + std::to_string(size) +
                          " is not 2^H for some H >= 1");
  }
  return h;
}

} // namespace

void validate_prior(const PriorVector& prior) {
  prior_size_to_h(prior.size());
  double sum = 0;
  for (double p : prior) {
    if (!(p >= 0) || !std::isfinite(p)) {
      throw ValidationError("prior entries must be finite and nonnegative");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
    throw ValidationError("prior must sum to 1 (got " + std::to_string(sum) + ")");
  }
}

PriorVector flat_prior(int num_supplements) {
  const std::size_t count = std::size_t{1} << num_supplements;
  return PriorVector(count, 1.0 / static_cast<double>(count));
}

double log_marginal_likelihood(const SourceSummary& primary,
                               std::span<const SourceSummary> supplements,
                               const ModelConfiguration& model) {
  check_model(supplements, model);

  // Pooled group: primary plus included supplements. Left-to-right
  // accumulation keeps results order-deterministic.
  double sum_tau = primary.precision();
  double sum_log_tau = std::log(primary.precision());
  double sum_tau_y = primary.precision() * primary.mean;
  double sum_tau_y2 = primary.precision() * primary.mean * primary.mean;
  int group_size = 1;

  for (int h = 0; h < model.num_supplements; ++h) {
    if (!model.includes(h)) continue;
    const SourceSummary& s = supplements[h];
    const double tau = s.precision();
    sum_tau += tau;
    sum_log_tau += std::log(tau);
    sum_tau_y += tau * s.mean;
    sum_tau_y2 += tau * s.mean * s.mean;
    ++group_size;
  }

  const double quad_form = sum_tau_y2 - sum_tau_y * sum_tau_y / sum_tau;
  return -0.5 * (group_size - 1) * kLog2Pi + 0.5 * sum_log_tau - 0.5 * std::log(sum_tau) -
         0.5 * quad_form;
}

PriorVector posterior_weights(const SourceSummary& primary,
                              std::span<const SourceSummary> supplements,
                              const PriorVector& prior) {
  validate_prior(prior);
  const int h = prior_size_to_h(prior.size());
  if (h != static_cast<int>(supplements.size())) {
    throw ValidationError("prior is over 2^" + std::to_string(h) + " models but " +
                          std::to_string(supplements.size()) + " supplements were given");
  }

  const std::size_t count = prior.size();
  std::vector<double> log_mass(count, -std::numeric_limits<double>::infinity());
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < count; ++k) {
    if (prior[k] <= 0) continue;
    const ModelConfiguration model{static_cast<std::uint32_t>(k), h};
    log_mass[k] = log_marginal_likelihood(primary, supplements, model) + std::log(prior[k]);
    max_log = std::max(max_log, log_mass[k]);
  }
  if (!std::isfinite(max_log)) {
    throw DegenerateWeightsError("posterior_weights: every model mass is numerically zero");
  }

  double norm = 0;
  PriorVector weights(count, 0.0);
  for (std::size_t k = 0; k < count; ++k) {
    if (std::isfinite(log_mass[k])) {
      weights[k] = std::exp(log_mass[k] - max_log);
      norm += weights[k];
    }
  }
  for (double& w : weights) w /= norm;
  return weights;
}

Moments conditional_posterior(const SourceSummary& primary,
                              std::span<const SourceSummary> supplements,
                              const ModelConfiguration& model) {
  check_model(supplements, model);
  double sum_tau = primary.precision();
  double sum_tau_y = primary.precision() * primary.mean;
  for (int h = 0; h < model.num_supplements; ++h) {
    if (!model.includes(h)) continue;
    const double tau = supplements[h].precision();
    sum_tau += tau;
    sum_tau_y += tau * supplements[h].mean;
  }
  const double variance = 1.0 / sum_tau;
  return Moments{sum_tau_y * variance, variance};
}

PosteriorMixture posterior_mixture(const SourceSummary& primary,
                                   std::span<const SourceSummary> supplements,
                                   const PriorVector& prior) {
  const PriorVector weights = posterior_weights(primary, supplements, prior);
  const int h = prior_size_to_h(prior.size());

  PosteriorMixture mixture;
  mixture.components.reserve(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const ModelConfiguration model{static_cast<std::uint32_t>(k), h};
    const Moments m = conditional_posterior(primary, supplements, model);
    mixture.components.push_back(MixtureComponent{weights[k], m.mean, m.variance});
  }
  return mixture;
}

Moments mixture_moments(const PosteriorMixture& mixture) {
  double mean = 0;
  for (const auto& c : mixture.components) mean += c.weight * c.mean;
  double second = 0;
  for (const auto& c : mixture.components) {
    second += c.weight * (c.variance + c.mean * c.mean);
  }
  return Moments{mean, second - mean * mean};
}

double esss(double posterior_variance, const SourceSummary& primary) {
  if (!(posterior_variance > 0)) {
    throw ValidationError("esss: posterior variance must be positive");
  }
  return primary.variance() / posterior_variance - static_cast<double>(primary.n);
}

} // namespace rbf
