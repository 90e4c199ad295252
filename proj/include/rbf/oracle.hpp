#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rbf/mem.hpp"
#include "rbf/prior.hpp"
#include "rbf/rng.hpp"

namespace rbf {

// Composite-Simpson grid. Nodes must be odd and >= 101.
struct QuadratureSpec {
  double lower = 0;
  double upper = 0;
  int nodes = 8001;

  void validate() const;
};

// Bounds covering every group mean +/- 10 standard errors across all
// models, with nodes scaled to the narrowest posterior.
QuadratureSpec auto_quadrature_spec(const SourceSummary& primary,
                                    std::span<const SourceSummary> supplements);

// Brute-force log marginal likelihood: Simpson integration of the
// product of Gaussian mean-estimate densities over the pooled group.
// Throws OracleFailure when the spec does not cover the mass.
double marginal_likelihood_quadrature(const SourceSummary& primary,
                                      std::span<const SourceSummary> supplements,
                                      const ModelConfiguration& model,
                                      const QuadratureSpec& spec);

// Brute-force posterior moments: the model-averaged unnormalized
// posterior density evaluated on the grid and normalized there.
Moments posterior_grid(const SourceSummary& primary,
                       std::span<const SourceSummary> supplements,
                       const PriorVector& prior, const QuadratureSpec& spec);

struct McEstimate {
  double value = 0;
  double std_error = 0;
};

// Sample-average Jeffreys divergence between two Gaussians from
// log-density differences, with its Monte Carlo standard error.
McEstimate monte_carlo_kl(const GaussianFit& fit_p, const GaussianFit& fit_h,
                          int draws, Rng& rng);

// Randomized cross-validation of the closed forms against the
// brute-force routes.
struct OracleSuiteConfig {
  int instances = 200;        // random instances with H <= 4, n <= 20
  std::uint64_t seed = 7;
  int kl_draws = 200000;
  double marginal_rel_tol = 1e-8;
  double moments_abs_tol = 1e-6;
  double kl_sigma_tol = 3.0;
  // Test hook: offset added to the closed-form log marginal before
  // comparing, to prove the suite catches a broken closed form.
  double perturb_log_marginal = 0.0;
};

struct OracleCheck {
  std::string name;
  double worst = 0;   // worst observed error, in the check's own units
  double limit = 0;
  bool passed = true;
};

struct OracleSuiteResult {
  std::vector<OracleCheck> checks;
  bool passed() const;
};

OracleSuiteResult run_oracle_suite(const OracleSuiteConfig& config);

} // namespace rbf
