#pragma once

#include <span>
#include <string>
#include <vector>

#include "rbf/dataset.hpp"
#include "rbf/mem.hpp"

namespace rbf {

// Floor on a model's summed distance so exact ties at distance zero keep
// a finite, maximal prior mass.
inline constexpr double kDistanceFloor = 1e-12;

enum class WeightScheme {
  kSdRatio,          // b_l = sd_l / sum of sds
  kInverseVariance,  // b_l = 1 / sd_l^2
};

enum class ParameterMode {
  kCollapse,  // collapse each parameter to per-source means
  kJeffreys,  // Gaussian fit per source, Jeffreys divergence distance
};

struct RbfConfig {
  double a = 1.0;    // mixing weight between flat and distance prior
  double rho = 0.3;  // correlation threshold below which a block is dropped
  WeightScheme weight_scheme = WeightScheme::kSdRatio;
  ParameterMode parameter_mode = ParameterMode::kCollapse;
};

struct GaussianFit {
  double mean = 0;
  double sd = 0;
};

enum class BlockKind { kCharacteristic, kCollapsedParameter, kDistributionParameter };

// One auxiliary block after normalization: its per-source values (or
// Gaussian fits), weight b, correlation r with the target, and distances
// from the primary to each supplement.
struct AuxiliaryBlock {
  std::string name;
  BlockKind kind = BlockKind::kCharacteristic;
  std::vector<double> values;       // scalar kinds: per-source values, primary first
  std::vector<GaussianFit> fits;    // distribution kind: per-source fits
  bool degenerate = false;          // zero range or undefined correlation
  double b = 0;
  double r = 0;
  std::vector<double> distances;    // length H, primary to each supplement
};

// Pooled min-max normalization x -> (x - min) / (max - min) over all
// sources. A zero range yields all zeros and sets `degenerate`.
std::vector<double> pooled_minmax_normalize(std::span<const double> values,
                                            bool& degenerate);

// Squared Euclidean distance between two scalar characteristic values.
double sed_distance(double eta_primary, double eta_supplement);

// Symmetrized KL divergence between two Gaussian fits (closed form).
// Standard deviations are floored at sqrt(kVarianceFloor).
double jeffreys_divergence(const GaussianFit& fit_primary, const GaussianFit& fit_supplement);

// Per-source sample means of a parameter block, for treating the block
// as a characteristic downstream.
std::vector<double> collapse_parameter(std::span<const std::vector<double>> samples);

// Pearson correlation. Requires equal lengths >= 3; throws
// ValidationError when either vector is constant.
double pearson_correlation(std::span<const double> x, std::span<const double> y);

// Per-block weights b_l from the pooled standard deviations of the
// (normalized) block values. Zero-sd blocks get b_l = 0.
std::vector<double> characteristic_weights(std::span<const double> pooled_sds,
                                           WeightScheme scheme);

// lambda_l = b_l * |r_l| when |r_l| > rho, else 0.
std::vector<double> lambda_weights(std::span<const AuxiliaryBlock> blocks, double rho);

// Distance-embedded prior over the 2^H models. Blocks combine into one
// lambda-weighted distance per supplement, D_h = sum_l lambda_l d_lh;
// nonnull models then share mass (2^H - 1)/2^H proportionally to
// (sum_h s_kh)^2 / max(sum_h s_kh D_h, kDistanceFloor) and the null
// model gets exactly 1/2^H. All lambdas zero falls back to the flat
// prior.
PriorVector distance_embedded_prior(std::span<const AuxiliaryBlock> blocks,
                                    std::span<const double> lambdas,
                                    int num_supplements);

// Convex combination (1 - a) * flat + a * pi_d. Throws ValidationError
// for a outside [0, 1].
PriorVector mixed_prior(const PriorVector& distance_prior, double a);

// Full pipeline: normalize blocks, compute distances, correlations and
// weights, then the mixed distance-embedded prior.
PriorVector build_rbf_prior(const Dataset& dataset, const RbfConfig& config);

// The normalized blocks with their b, r, lambda inputs as used by
// build_rbf_prior; exposed for reporting and tests.
std::vector<AuxiliaryBlock> build_auxiliary_blocks(const Dataset& dataset,
                                                   const RbfConfig& config);

} // namespace rbf
