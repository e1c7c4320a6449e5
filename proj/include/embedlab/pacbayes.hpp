#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "embedlab/matrix.hpp"
#include "embedlab/serialize.hpp"

namespace embedlab {

// Prior/posterior geometry for the generalization bound. The prior is a wide
// isotropic Gaussian N(0, sigma^2 I); the posterior concentrates as tau^2
// times an inverse curvature matrix on curved directions and copies the prior
// on flat ones. `box_half_width` describes the bounded flat region a ReLU
// surplus unit's input weights live in; identical uniform factors appear in
// prior and posterior, so it never enters the divergence numerically.
struct PacBayesConfig {
  double sigma = 1e3;
  double tau = 1e-2;
  double box_half_width = 2.0;  // K > 1
  double delta = 0.05;          // confidence level, in (0, 1]
  std::size_t n = 10;           // training-sample count

  void validate() const;  // sigma >= tau > 0, box_half_width > 1, delta range
};

// Divergence total together with its named additive pieces
// (total == sum of terms). Keys:
//   dim_log_ratio_core     d0 * log(sigma^2/tau^2) / 2
//   dim_log_ratio_surplus  d1 * log(sigma^2/tau^2) / 2   (smooth only)
//   logdet_H               log det of the core curvature / 2
//   logdet_S               log det of the surplus curvature / 2 (smooth only)
//   trace_term             (tau^2/sigma^2) * (tr H^-1 [+ tr S^-1]) / 2
//   norm_term              ||theta||^2 / (2 sigma^2)
//   dim_offset             -(d0 [+ d1]) / 2
// Eigenvalues below 1e-6*max(1, lambda_max) are raised to that floor before
// the log-determinants and inverse traces (flat minima make these matrices
// rank-deficient, and finite-difference noise smears the zeros); the floored
// counts are reported so callers can warn.
struct KLBreakdown {
  double total = 0.0;
  std::map<std::string, double> terms;
  std::size_t floored_core = 0;
  std::size_t floored_surplus = 0;
};

// Divergence of the smooth-activation posterior from the prior. The posterior
// factors as N(theta_core, tau^2 H^-1) x N(theta_v, sigma^2 I) x
// N(theta_w, tau^2 S^-1): the surplus outgoing weights are exactly flat (the
// prior is reused there and cancels), while the surplus input weights carry
// the curvature matrix S. theta_norm is the Euclidean norm of the full mean
// of the Gaussian factors. d0/d1 must match the two curvature dimensions.
// Errors: SingularCovariance (an eigenvalue below the negative tolerance),
// DimMismatch.
KLBreakdown kl_smooth(const Matrix& core_curvature,
                      const Matrix& surplus_curvature, double theta_norm,
                      std::size_t d0, std::size_t d1,
                      const PacBayesConfig& cfg);

// ReLU counterpart: surplus input weights live in a bounded exactly-flat box
// (uniform factor in both prior and posterior) and surplus outgoing weights
// are flat Gaussians, so only the core curvature block contributes.
KLBreakdown kl_relu(const Matrix& core_curvature, double theta_norm,
                    std::size_t d0, const PacBayesConfig& cfg);

// McAllester-style bound: train_loss_mean + 2*sqrt(2*(KL + ln(n/delta))/(n-1))
// with the loss assumed rescaled into [0,1]. Errors: BadRange.
double pac_bayes_bound(double train_loss_mean, const KLBreakdown& kl,
                       const PacBayesConfig& cfg);

// Posterior covariance minimizing the bound under the local quadratic model:
// tau^2 * H^-1 (symmetric positive definite, same eigenvalue floor as above).
Matrix optimal_posterior_covariance(const Matrix& curvature, double tau);

// Monotone map of an unbounded nonnegative loss mean into [0,1] for the
// bound: l / (1 + l). Errors: BadRange for negative input.
double rescale_unit_interval(double loss);

Json kl_breakdown_to_json(const KLBreakdown& kl);

}  // namespace embedlab
