#include "rbf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rbf/errors.hpp"

namespace rbf {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112353;

double log_normal_density(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(variance)) - d * d / (2.0 * variance);
}

struct GroupMember {
  double mean;
  double variance;  // of the sample mean
};

std::vector<GroupMember> pooled_group(const SourceSummary& primary,
                                      std::span<const SourceSummary> supplements,
                                      const ModelConfiguration& model) {
  std::vector<GroupMember> group;
  group.push_back(GroupMember{primary.mean, primary.mean_variance()});
  for (int h = 0; h < model.num_supplements; ++h) {
    if (model.includes(h)) {
      group.push_back(GroupMember{supplements[h].mean, supplements[h].mean_variance()});
    }
  }
  return group;
}

void check_coverage(const QuadratureSpec& spec, const std::vector<GroupMember>& group) {
  for (const auto& member : group) {
    const double se = std::sqrt(member.variance);
    if (spec.lower > member.mean - 10.0 * se || spec.upper < member.mean + 10.0 * se) {
      throw OracleFailure("quadrature bounds do not cover a group mean +/- 10 standard errors");
    }
  }
}

// Composite Simpson weights over the log-evaluated integrand: returns
// log of the integral via a max shift.
double log_simpson(const std::vector<double>& log_values, double step) {
  const double max_log = *std::max_element(log_values.begin(), log_values.end());
  if (!std::isfinite(max_log)) return -std::numeric_limits<double>::infinity();
  double sum = 0;
  const std::size_t count = log_values.size();
  for (std::size_t i = 0; i < count; ++i) {
    const double weight = (i == 0 || i + 1 == count) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += weight * std::exp(log_values[i] - max_log);
  }
  return max_log + std::log(sum * step / 3.0);
}

} // namespace

void QuadratureSpec::validate() const {
  if (!(lower < upper)) throw ValidationError("quadrature: lower bound must be below upper");
  if (nodes < 101 || nodes % 2 == 0) {
    throw ValidationError("quadrature: node count must be odd and >= 101");
  }
}

QuadratureSpec auto_quadrature_spec(const SourceSummary& primary,
                                    std::span<const SourceSummary> supplements) {
  double lo = primary.mean;
  double hi = primary.mean;
  double max_se = std::sqrt(primary.mean_variance());
  double total_precision = primary.precision();
  for (const auto& s : supplements) {
    lo = std::min(lo, s.mean);
    hi = std::max(hi, s.mean);
    max_se = std::max(max_se, std::sqrt(s.mean_variance()));
    total_precision += s.precision();
  }
  QuadratureSpec spec;
  spec.lower = lo - 10.0 * max_se;
  spec.upper = hi + 10.0 * max_se;

  // Resolve the narrowest possible posterior (every source pooled) to
  // ~0.01 sd per step; Simpson error then sits far below 1e-8 relative.
  const double narrowest_sd = 1.0 / std::sqrt(total_precision);
  const double span = spec.upper - spec.lower;
  auto nodes = static_cast<long>(span / (0.01 * narrowest_sd)) + 1;
  nodes = std::max<long>(nodes, 8001);
  if (nodes % 2 == 0) ++nodes;
  spec.nodes = static_cast<int>(std::min<long>(nodes, 2000001));
  return spec;
}

double marginal_likelihood_quadrature(const SourceSummary& primary,
                                      std::span<const SourceSummary> supplements,
                                      const ModelConfiguration& model,
                                      const QuadratureSpec& spec) {
  spec.validate();
  const std::vector<GroupMember> group = pooled_group(primary, supplements, model);
  check_coverage(spec, group);

  const double step = (spec.upper - spec.lower) / static_cast<double>(spec.nodes - 1);
  std::vector<double> log_values(spec.nodes);
  for (int i = 0; i < spec.nodes; ++i) {
    const double theta = spec.lower + step * static_cast<double>(i);
    double log_value = 0;
    for (const auto& member : group) {
      log_value += log_normal_density(member.mean, theta, member.variance);
    }
    log_values[i] = log_value;
  }
  return log_simpson(log_values, step);
}

Moments posterior_grid(const SourceSummary& primary,
                       std::span<const SourceSummary> supplements, const PriorVector& prior,
                       const QuadratureSpec& spec) {
  spec.validate();
  validate_prior(prior);

  int num_supp = 0;
  while ((std::size_t{1} << num_supp) < prior.size()) ++num_supp;

  // Precompute per-model groups and check coverage for each.
  std::vector<std::vector<GroupMember>> groups;
  groups.reserve(prior.size());
  for (std::size_t k = 0; k < prior.size(); ++k) {
    const ModelConfiguration model{static_cast<std::uint32_t>(k), num_supp};
    groups.push_back(pooled_group(primary, supplements, model));
    if (prior[k] > 0) check_coverage(spec, groups.back());
  }

  const double step = (spec.upper - spec.lower) / static_cast<double>(spec.nodes - 1);
  std::vector<double> density(spec.nodes);
  std::vector<double> log_terms;
  log_terms.reserve(prior.size());
  for (int i = 0; i < spec.nodes; ++i) {
    const double theta = spec.lower + step * static_cast<double>(i);
    log_terms.clear();
    for (std::size_t k = 0; k < prior.size(); ++k) {
      if (prior[k] <= 0) continue;
      double log_value = std::log(prior[k]);
      for (const auto& member : groups[k]) {
        log_value += log_normal_density(member.mean, theta, member.variance);
      }
      log_terms.push_back(log_value);
    }
    const double max_log = *std::max_element(log_terms.begin(), log_terms.end());
    double sum = 0;
    for (double lt : log_terms) sum += std::exp(lt - max_log);
    density[i] = std::exp(max_log) * sum;
  }

  auto simpson = [step](const std::vector<double>& values) {
    double sum = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double weight = (i == 0 || i + 1 == values.size()) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      sum += weight * values[i];
    }
    return sum * step / 3.0;
  };

  std::vector<double> weighted(spec.nodes);
  const double mass = simpson(density);
  if (!(mass > 0)) throw OracleFailure("posterior_grid: zero mass on the grid");
  for (int i = 0; i < spec.nodes; ++i) {
    const double theta = spec.lower + step * static_cast<double>(i);
    weighted[i] = theta * density[i];
  }
  const double mean = simpson(weighted) / mass;
  for (int i = 0; i < spec.nodes; ++i) {
    const double theta = spec.lower + step * static_cast<double>(i);
    const double d = theta - mean;
    weighted[i] = d * d * density[i];
  }
  const double variance = simpson(weighted) / mass;
  return Moments{mean, variance};
}

bool OracleSuiteResult::passed() const {
  for (const auto& check : checks) {
    if (!check.passed) return false;
  }
  return true;
}

OracleSuiteResult run_oracle_suite(const OracleSuiteConfig& config) {
  double worst_marginal = 0;
  double worst_mean = 0;
  double worst_variance = 0;
  double worst_kl_sigma = 0;

  for (int i = 0; i < config.instances; ++i) {
    Rng rng = Rng::for_replication(config.seed, static_cast<std::uint64_t>(i));

    const int num_supp = 1 + rng.uniform_int(0, 3);
    const SourceSummary primary{2 + rng.uniform_int(0, 18), rng.normal(0.0, 1.5),
                                rng.uniform(0.5, 2.0)};
    std::vector<SourceSummary> supplements;
    for (int h = 0; h < num_supp; ++h) {
      supplements.push_back(SourceSummary{2 + rng.uniform_int(0, 18), rng.normal(0.0, 1.5),
                                          rng.uniform(0.5, 2.0)});
    }

    PriorVector prior(std::size_t{1} << num_supp);
    double total = 0;
    for (auto& p : prior) {
      p = rng.uniform(0.01, 1.0);
      total += p;
    }
    for (auto& p : prior) p /= total;

    const QuadratureSpec spec = auto_quadrature_spec(primary, supplements);
    for (std::uint32_t k = 0; k < prior.size(); ++k) {
      const ModelConfiguration model{k, num_supp};
      const double closed = log_marginal_likelihood(primary, supplements, model) +
                            config.perturb_log_marginal;
      const double quad = marginal_likelihood_quadrature(primary, supplements, model, spec);
      const double rel = std::abs(closed - quad) / std::max(1.0, std::abs(closed));
      worst_marginal = std::max(worst_marginal, rel);
    }

    const Moments closed = mixture_moments(posterior_mixture(primary, supplements, prior));
    const Moments grid = posterior_grid(primary, supplements, prior, spec);
    worst_mean = std::max(worst_mean, std::abs(closed.mean - grid.mean));
    worst_variance = std::max(worst_variance, std::abs(closed.variance - grid.variance));

    const GaussianFit fit_p{rng.uniform(-1.0, 1.0), rng.uniform(0.5, 2.0)};
    const GaussianFit fit_h{rng.uniform(-1.0, 1.0), rng.uniform(0.5, 2.0)};
    const double jeffreys = jeffreys_divergence(fit_p, fit_h);
    const McEstimate mc = monte_carlo_kl(fit_p, fit_h, config.kl_draws, rng);
    worst_kl_sigma = std::max(worst_kl_sigma, std::abs(jeffreys - mc.value) / mc.std_error);
  }

  OracleSuiteResult result;
  result.checks.push_back(OracleCheck{"log_marginal_likelihood vs quadrature (relative)",
                                      worst_marginal, config.marginal_rel_tol,
                                      worst_marginal <= config.marginal_rel_tol});
  result.checks.push_back(OracleCheck{"mixture mean vs grid posterior (absolute)", worst_mean,
                                      config.moments_abs_tol,
                                      worst_mean <= config.moments_abs_tol});
  result.checks.push_back(OracleCheck{"mixture variance vs grid posterior (absolute)",
                                      worst_variance, config.moments_abs_tol,
                                      worst_variance <= config.moments_abs_tol});
  result.checks.push_back(OracleCheck{"jeffreys_divergence vs Monte Carlo (standard errors)",
                                      worst_kl_sigma, config.kl_sigma_tol,
                                      worst_kl_sigma <= config.kl_sigma_tol});
  return result;
}

McEstimate monte_carlo_kl(const GaussianFit& fit_p, const GaussianFit& fit_h, int draws,
                          Rng& rng) {
  if (draws < 2) throw ValidationError("monte_carlo_kl: need at least 2 draws");
  const double var_p = fit_p.sd * fit_p.sd;
  const double var_h = fit_h.sd * fit_h.sd;

  double sum = 0;
  double sum_sq = 0;
  for (int i = 0; i < draws; ++i) {
    const double x = fit_p.mean + fit_p.sd * rng.normal();
    const double y = fit_h.mean + fit_h.sd * rng.normal();
    const double term = log_normal_density(x, fit_p.mean, var_p) -
                        log_normal_density(x, fit_h.mean, var_h) +
                        log_normal_density(y, fit_h.mean, var_h) -
                        log_normal_density(y, fit_p.mean, var_p);
    sum += term;
    sum_sq += term * term;
  }
  const auto n = static_cast<double>(draws);
  const double mean = sum / n;
  const double variance = (sum_sq - n * mean * mean) / (n - 1.0);
  return McEstimate{mean, std::sqrt(std::max(variance, 0.0) / n)};
}

} // namespace rbf
