#include "rbf/prior.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rbf/errors.hpp"

namespace rbf {

namespace {

// MLE (n-denominator) standard deviation without the variance floor;
// block weighting treats an exactly constant block as zero-information.
double unfloored_sd(std::span<const double> values) {
  const auto n = static_cast<double>(values.size());
  double sum = 0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double ss = 0;
  for (double v : values) {
    const double d = v - mean;
    ss += d * d;
  }
  return std::sqrt(ss / n);
}

double floored_sd(double sd) {
  const double floor = std::sqrt(kVarianceFloor);
  return sd < floor ? floor : sd;
}

GaussianFit fit_gaussian(std::span<const double> samples) {
  const SourceSummary s = sufficient_stats(samples);
  return GaussianFit{s.mean, s.sd};
}

} // namespace

std::vector<double> pooled_minmax_normalize(std::span<const double> values, bool& degenerate) {
  if (values.size() < 2) {
    throw ValidationError("pooled_minmax_normalize: need at least 2 sources");
  }
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *min_it;
  const double hi = *max_it;
  if (lo == hi) {
    degenerate = true;
    return std::vector<double>(values.size(), 0.0);
  }
  degenerate = false;
  const double range = hi - lo;
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back((v - lo) / range);
  return out;
}

double sed_distance(double eta_primary, double eta_supplement) {
  const double d = eta_supplement - eta_primary;
  return d * d;
}

double jeffreys_divergence(const GaussianFit& fit_primary, const GaussianFit& fit_supplement) {
  const double sd_p = floored_sd(fit_primary.sd);
  const double sd_h = floored_sd(fit_supplement.sd);
  const double var_p = sd_p * sd_p;
  const double var_h = sd_h * sd_h;
  const double dm = fit_primary.mean - fit_supplement.mean;
  const double kl_ph = std::log(sd_h / sd_p) + (var_p + dm * dm) / (2.0 * var_h) - 0.5;
  const double kl_hp = std::log(sd_p / sd_h) + (var_h + dm * dm) / (2.0 * var_p) - 0.5;
  return std::max(kl_ph + kl_hp, 0.0);  // rounding can dip just below zero
}

std::vector<double> collapse_parameter(std::span<const std::vector<double>> samples) {
  std::vector<double> means;
  means.reserve(samples.size());
  for (const auto& source_samples : samples) {
    if (source_samples.size() < 2) {
      throw InsufficientDataError("collapse_parameter: need at least 2 samples per source");
    }
    double sum = 0;
    for (double v : source_samples) sum += v;
    means.push_back(sum / static_cast<double>(source_samples.size()));
  }
  return means;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ValidationError("pearson_correlation: length mismatch");
  }
  if (x.size() < 3) {
    throw ValidationError("pearson_correlation: need at least 3 points");
  }
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) {
    throw ValidationError("pearson_correlation: constant input");
  }
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

std::vector<double> characteristic_weights(std::span<const double> pooled_sds,
                                           WeightScheme scheme) {
  std::vector<double> b(pooled_sds.size(), 0.0);
  if (scheme == WeightScheme::kSdRatio) {
    double total = 0;
    for (double sd : pooled_sds) total += sd;
    if (total > 0) {
      for (std::size_t l = 0; l < pooled_sds.size(); ++l) b[l] = pooled_sds[l] / total;
    }
  } else {
    for (std::size_t l = 0; l < pooled_sds.size(); ++l) {
      if (pooled_sds[l] > 0) b[l] = 1.0 / (pooled_sds[l] * pooled_sds[l]);
    }
  }
  return b;
}

std::vector<double> lambda_weights(std::span<const AuxiliaryBlock> blocks, double rho) {
  std::vector<double> lambdas;
  lambdas.reserve(blocks.size());
  for (const auto& block : blocks) {
    const double abs_r = std::abs(block.r);
    const bool keep = !block.degenerate && abs_r > rho;
    lambdas.push_back(keep ? block.b * abs_r : 0.0);
  }
  return lambdas;
}

PriorVector distance_embedded_prior(std::span<const AuxiliaryBlock> blocks,
                                    std::span<const double> lambdas,
                                    int num_supplements) {
  if (blocks.empty()) {
    throw ValidationError("distance_embedded_prior: need at least one auxiliary block");
  }
  if (blocks.size() != lambdas.size()) {
    throw ValidationError("distance_embedded_prior: one lambda per block required");
  }
  for (const auto& block : blocks) {
    if (block.distances.size() != static_cast<std::size_t>(num_supplements)) {
      throw ValidationError("distance_embedded_prior: block '" + block.name +
                            "' has wrong distance count");
    }
  }

  double lambda_total = 0;
  for (double l : lambdas) lambda_total += l;
  if (lambda_total == 0) return flat_prior(num_supplements);

  // Lambda-weighted per-supplement distance; with inverse-variance
  // weights this is the squared Mahalanobis distance to the primary.
  std::vector<double> source_distance(num_supplements, 0.0);
  for (int h = 0; h < num_supplements; ++h) {
    for (std::size_t l = 0; l < blocks.size(); ++l) {
      if (lambdas[l] > 0) source_distance[h] += lambdas[l] * blocks[l].distances[h];
    }
  }

  // Nonnull model mass: squared inclusion count over the summed distance
  // of the included supplements.
  const std::size_t count = std::size_t{1} << num_supplements;
  std::vector<double> numerators(count, 0.0);
  double denominator = 0;
  for (std::size_t k = 1; k < count; ++k) {
    const ModelConfiguration model{static_cast<std::uint32_t>(k), num_supplements};
    const double included = static_cast<double>(model.count());
    double distance_sum = 0;
    for (int h = 0; h < num_supplements; ++h) {
      if (model.includes(h)) distance_sum += source_distance[h];
    }
    numerators[k] = included * included / std::max(distance_sum, kDistanceFloor);
    denominator += numerators[k];
  }

  const auto model_count = static_cast<double>(count);
  PriorVector prior(count, 0.0);
  prior[0] = 1.0 / model_count;
  const double nonnull_mass = (model_count - 1.0) / model_count;
  for (std::size_t k = 1; k < count; ++k) {
    prior[k] = nonnull_mass * numerators[k] / denominator;
  }
  return prior;
}

PriorVector mixed_prior(const PriorVector& distance_prior, double a) {
  if (!(a >= 0.0 && a <= 1.0)) {
    throw ValidationError("mixed_prior: mixing weight a must be in [0, 1]");
  }
  const auto count = static_cast<double>(distance_prior.size());
  PriorVector prior;
  prior.reserve(distance_prior.size());
  for (double p : distance_prior) prior.push_back((1.0 - a) / count + a * p);
  return prior;
}

std::vector<AuxiliaryBlock> build_auxiliary_blocks(const Dataset& dataset,
                                                   const RbfConfig& config) {
  const int num_supp = dataset.num_supplements();
  const std::vector<double> target_means = dataset.source_means();

  std::vector<AuxiliaryBlock> blocks;

  auto finish_scalar_block = [&](AuxiliaryBlock& block) {
    block.distances.resize(num_supp);
    for (int h = 0; h < num_supp; ++h) {
      block.distances[h] = sed_distance(block.values[0], block.values[h + 1]);
    }
    if (!block.degenerate) {
      try {
        block.r = pearson_correlation(target_means, block.values);
      } catch (const ValidationError&) {
        block.degenerate = true;
        block.r = 0;
      }
    }
  };

  for (const auto& [name, values] : dataset.characteristics) {
    AuxiliaryBlock block;
    block.name = name;
    block.kind = BlockKind::kCharacteristic;
    block.values = pooled_minmax_normalize(values, block.degenerate);
    finish_scalar_block(block);
    blocks.push_back(std::move(block));
  }

  for (const auto& [name, samples] : dataset.parameters) {
    AuxiliaryBlock block;
    block.name = name;
    if (config.parameter_mode == ParameterMode::kCollapse) {
      block.kind = BlockKind::kCollapsedParameter;
      const std::vector<double> means = collapse_parameter(samples);
      block.values = pooled_minmax_normalize(means, block.degenerate);
      finish_scalar_block(block);
    } else {
      block.kind = BlockKind::kDistributionParameter;
      block.fits.reserve(samples.size());
      for (const auto& source_samples : samples) block.fits.push_back(fit_gaussian(source_samples));
      block.distances.resize(num_supp);
      for (int h = 0; h < num_supp; ++h) {
        block.distances[h] = jeffreys_divergence(block.fits[0], block.fits[h + 1]);
      }
      // Fitted means stand in for the block's scalar values when
      // estimating the correlation and the pooled spread.
      block.values.reserve(block.fits.size());
      for (const auto& fit : block.fits) block.values.push_back(fit.mean);
      try {
        block.r = pearson_correlation(target_means, block.values);
      } catch (const ValidationError&) {
        block.degenerate = true;
        block.r = 0;
      }
    }
    blocks.push_back(std::move(block));
  }

  std::vector<double> pooled_sds;
  pooled_sds.reserve(blocks.size());
  for (const auto& block : blocks) pooled_sds.push_back(unfloored_sd(block.values));
  const std::vector<double> b = characteristic_weights(pooled_sds, config.weight_scheme);
  for (std::size_t l = 0; l < blocks.size(); ++l) blocks[l].b = b[l];

  return blocks;
}

PriorVector build_rbf_prior(const Dataset& dataset, const RbfConfig& config) {
  dataset.validate();
  const std::vector<AuxiliaryBlock> blocks = build_auxiliary_blocks(dataset, config);
  PriorVector pi_d;
  if (blocks.empty()) {
    pi_d = flat_prior(dataset.num_supplements());
  } else {
    const std::vector<double> lambdas = lambda_weights(blocks, config.rho);
    pi_d = distance_embedded_prior(blocks, lambdas, dataset.num_supplements());
  }
  return mixed_prior(pi_d, config.a);
}

} // namespace rbf
