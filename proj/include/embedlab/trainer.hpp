#pragma once

#include <cstdint>
#include <vector>

#include "embedlab/network.hpp"

namespace embedlab {

// Full-batch trainer settings. `restarts` is the total attempt budget:
// attempt 0 starts from the caller's initial parameters, and each further
// attempt re-initializes from a fresh deterministic draw at `init_scale`.
struct TrainConfig {
  std::size_t max_iters = 20000;  // optimizer cycles per attempt (GD + LM)
  double gd_step = 1.0;           // initial backtracking line-search step
  double lm_lambda0 = 1e-3;       // initial Levenberg-Marquardt damping
  double target_loss = 1e-12;     // success when loss falls to this level
  double grad_tol = 1e-10;        // or when the gradient inf-norm does
  std::uint64_t seed = 0;
  std::size_t restarts = 1;  // total attempts, >= 1
  double init_scale = 1.0;   // uniform range for restart re-initialization

  void validate() const;  // target_loss >= 0, restarts >= 1, positive steps
};

struct TrainResult {
  NetworkParams params;
  double final_loss = 0.0;
  double grad_norm = 0.0;  // inf-norm, same convention as verify_stationary
  std::size_t iters = 0;   // optimizer cycles spent in the winning attempt
  bool converged = false;
  std::size_t restarts_used = 0;   // index of the attempt that won
  std::vector<double> trace;       // loss after each accepted step, monotone
};

// Two-phase deterministic optimizer: full-batch gradient descent with a
// monotone backtracking line search while the gradient is large, then (for
// squared error) Levenberg-Marquardt on the residual vector, whose local
// quadratic convergence reaches interpolation-level losses (~1e-30) that
// first-order steps cannot. Success requires loss <= target_loss at a point
// that also certifies stationary (or gradient inf-norm <= grad_tol). ReLU
// networks additionally certify every preactivation off the kink; an on-kink
// finish counts as a failed attempt. Each failed attempt triggers a restart
// from an independent stream keyed by (seed, attempt), so the returned result
// is the lowest-index convergent attempt regardless of scheduling.
//
// Throws NotConverged when the attempt budget runs out, or Diverged when
// every attempt ended with a non-finite loss.
TrainResult train(const NetworkParams& init, const Dataset& data,
                  const TrainConfig& cfg);

// Fresh network with entries i.i.d. uniform(-scale, scale) in canonical
// flatten order, except ReLU biases which use uniform(-scale/2, scale/2) so
// that units stay active on ||x|| <= 1 data with high probability. Rejects
// scale <= 0.
NetworkParams init_params(std::size_t input_dim, std::size_t hidden,
                          std::size_t output_dim, Activation activation,
                          std::uint64_t seed, double scale = 1.0);

}  // namespace embedlab
