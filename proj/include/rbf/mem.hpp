#pragma once

#include <span>
#include <vector>

#include "rbf/model_space.hpp"
#include "rbf/source_summary.hpp"

namespace rbf {

// Probability vector over the 2^H models in canonical index order.
// Entries are nonnegative and sum to 1 within 1e-12.
using PriorVector = std::vector<double>;

inline constexpr double kProbabilitySumTolerance = 1e-12;

// Throws ValidationError unless `prior` is a valid distribution over a
// model space of size 2^H for some H >= 1.
void validate_prior(const PriorVector& prior);

// Flat prior 1/2^H over the 2^H models.
PriorVector flat_prior(int num_supplements);

struct MixtureComponent {
  double weight = 0;
  double mean = 0;
  double variance = 0;
};

// The model-averaged posterior of the primary source's mean: one Gaussian
// component per model, in canonical model order.
struct PosteriorMixture {
  std::vector<MixtureComponent> components;
};

struct Moments {
  double mean = 0;
  double variance = 0;
};

// Log marginal likelihood of the data under one exchangeability model, up
// to an additive constant shared by all models. The pooled group is the
// primary plus the included supplements; excluded sources integrate to a
// model-independent constant under their own flat prior and are omitted.
double log_marginal_likelihood(const SourceSummary& primary,
                               std::span<const SourceSummary> supplements,
                               const ModelConfiguration& model);

// Posterior model weights: w_k proportional to exp(log m_k) * prior_k,
// normalized with log-sum-exp. Throws DegenerateWeightsError when every
// mass is numerically zero.
PriorVector posterior_weights(const SourceSummary& primary,
                              std::span<const SourceSummary> supplements,
                              const PriorVector& prior);

// Conditional posterior of the primary mean under one model: the
// precision-weighted combination of the primary and included supplements.
Moments conditional_posterior(const SourceSummary& primary,
                              std::span<const SourceSummary> supplements,
                              const ModelConfiguration& model);

PosteriorMixture posterior_mixture(const SourceSummary& primary,
                                   std::span<const SourceSummary> supplements,
                                   const PriorVector& prior);

// Mixture mean and total variance (law of total variance).
Moments mixture_moments(const PosteriorMixture& mixture);

// Effective supplemental sample size: the information gained by
// borrowing, in units of primary-source observations.
double esss(double posterior_variance, const SourceSummary& primary);

} // namespace rbf
