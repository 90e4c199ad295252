#include <cmath>
#include <vector>

#include "doctest.h"
#include "rbf/errors.hpp"
#include "rbf/oracle.hpp"
#include "rbf/rng.hpp"

using namespace rbf;

namespace {

SourceSummary summary(int n, double mean, double sd) { return SourceSummary{n, mean, sd}; }

} // namespace

TEST_SUITE_BEGIN("oracle");

TEST_CASE("single-member group integrates to one") {
  const auto primary = summary(10, 0.4, 1.2);
  const std::vector<SourceSummary> supps = {};
  const ModelConfiguration null_model{0, 0};
  QuadratureSpec spec;
  spec.lower = 0.4 - 12.0;
  spec.upper = 0.4 + 12.0;
  spec.nodes = 8001;
  const double log_mass = marginal_likelihood_quadrature(primary, supps, null_model, spec);
  CHECK(std::abs(log_mass) < 1e-10);
}

TEST_CASE("doubling the node count barely moves the result") {
  const auto primary = summary(10, 0.3, 1.0);
  const std::vector<SourceSummary> supps = {summary(8, 0.8, 1.1), summary(14, -0.2, 0.9)};
  const ModelConfiguration model{3, 2};
  QuadratureSpec spec = auto_quadrature_spec(primary, supps);
  const double base = marginal_likelihood_quadrature(primary, supps, model, spec);
  spec.nodes = spec.nodes * 2 + 1;
  const double refined = marginal_likelihood_quadrature(primary, supps, model, spec);
  CHECK(std::abs(base - refined) < 1e-10);
}

TEST_CASE("coverage violations are reported") {
  const auto primary = summary(10, 0.0, 1.0);
  const std::vector<SourceSummary> supps = {summary(10, 8.0, 1.0)};
  QuadratureSpec spec;
  spec.lower = -4.0;
  spec.upper = 4.0;  // excludes the supplement's mean
  spec.nodes = 2001;
  CHECK_THROWS_AS(
      marginal_likelihood_quadrature(primary, supps, ModelConfiguration{1, 1}, spec),
      OracleFailure);
}

TEST_CASE("spec validation") {
  QuadratureSpec spec;
  spec.lower = 1.0;
  spec.upper = 0.0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec.lower = -1.0;
  spec.upper = 1.0;
  spec.nodes = 100;  // even
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec.nodes = 99;  // too few
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec.nodes = 101;
  CHECK_NOTHROW(spec.validate());
}

TEST_CASE("null-only grid posterior is the primary posterior") {
  const auto primary = summary(10, 0.7, 1.3);
  const std::vector<SourceSummary> supps = {summary(5, 3.0, 1.0)};
  const PriorVector prior = {1.0, 0.0};
  const QuadratureSpec spec = auto_quadrature_spec(primary, supps);
  const Moments m = posterior_grid(primary, supps, prior, spec);
  CHECK(std::abs(m.mean - 0.7) < 1e-8);
  CHECK(std::abs(m.variance - 1.3 * 1.3 / 10) < 1e-8);
}

TEST_CASE("grid refinement does not move the posterior moments") {
  const auto primary = summary(10, 0.3, 1.0);
  const std::vector<SourceSummary> supps = {summary(8, 0.8, 1.1), summary(14, -0.2, 0.9)};
  const PriorVector prior = flat_prior(2);
  QuadratureSpec spec = auto_quadrature_spec(primary, supps);
  const Moments base = posterior_grid(primary, supps, prior, spec);
  spec.nodes = spec.nodes * 2 + 1;
  const Moments refined = posterior_grid(primary, supps, prior, spec);
  CHECK(std::abs(base.mean - refined.mean) < 1e-8);
  CHECK(std::abs(base.variance - refined.variance) < 1e-8);
}

TEST_CASE("monte carlo KL sanity") {
  Rng rng(101);
  SUBCASE("identical fits") {
    const GaussianFit fit{0.3, 1.1};
    const McEstimate mc = monte_carlo_kl(fit, fit, 100000, rng);
    CHECK(std::abs(mc.value) <= 3.0 * std::max(mc.std_error, 1e-12));
  }
  SUBCASE("unit mean shift has divergence one") {
    const McEstimate mc = monte_carlo_kl({0.0, 1.0}, {1.0, 1.0}, 1000000, rng);
    CHECK(std::abs(mc.value - 1.0) < 3.0 * mc.std_error);
  }
}

TEST_SUITE_END();
