#pragma once

#include <cstddef>
#include <string>

#include "embedlab/matrix.hpp"

namespace embedlab {

enum class ActivationKind { Tanh, ReLU };

// Hidden-unit nonlinearity phi applied to the preactivation w.x - bias.
// The all-zero weight row is the canonical inactive point for both kinds:
// phi(0) = 0, so a unit with zero weights contributes nothing to the output.
struct Activation {
  ActivationKind kind = ActivationKind::Tanh;

  bool smooth() const { return kind == ActivationKind::Tanh; }
  const char* name() const { return kind == ActivationKind::Tanh ? "tanh" : "relu"; }

  double phi(double t) const;
  double dphi(double t) const;
  double ddphi(double t) const;
};

// Three-layer network with linear output and no output bias:
//   f_m(x) = sum_j v[j][m] * phi(w[j] . x - w[j][D])
// Row j of w holds D input weights followed by the bias, with the sign
// convention preact = w_wgt . x - w_bias. Row j of v holds the unit's M
// outgoing weights.
struct NetworkParams {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  std::size_t output_dim = 0;
  Activation activation;
  Matrix w;  // hidden x (input_dim + 1)
  Matrix v;  // hidden x output_dim

  std::size_t param_count() const { return hidden * (input_dim + 1) + hidden * output_dim; }

  // Canonical flat layout used by every gradient/Hessian consumer:
  // w row 0, ..., w row H-1 (weights then bias), then v row 0, ..., v row H-1.
  Vec flatten() const;
  void unflatten(const Vec& theta);

  double preactivation(std::size_t j, const Vec& x) const;
  void validate() const;  // shape consistency + finiteness
};

enum class LossKind { SquaredError, Logistic };

// Paired samples with the loss that scores them. Squared error is
// ||y - f||^2 / 2 summed over samples (an un-normalized sum, not a mean).
// Logistic requires M == 1 with targets in {0,1}; the network output is
// treated as a logit and passed through a sigmoid internally.
struct Dataset {
  LossKind loss = LossKind::SquaredError;
  Matrix inputs;   // n x D
  Matrix targets;  // n x M

  std::size_t size() const { return inputs.rows; }
  void validate() const;
};

struct GradReport {
  double loss = 0.0;
  Vec grad;  // same canonical layout as NetworkParams::flatten
};

// How gradient code treats a ReLU preactivation sitting on the kink
// (|preact| <= 1e-12 * (1 + ||w|| * ||x~||)). Strict raises KinkHit; the
// trainer uses ZeroSubgradient (phi'(0) := 0) and certifies off-kink later.
enum class KinkPolicy { Strict, ZeroSubgradient };

Vec forward(const NetworkParams& net, const Vec& x);
double loss_total(const NetworkParams& net, const Dataset& data);

// d(loss)/d(output) for one sample: f - y for squared error, sigmoid(f) - y
// for logistic.
Vec loss_delta(const Dataset& data, const Vec& f, std::size_t nu);
GradReport backprop(const NetworkParams& net, const Dataset& data,
                    KinkPolicy policy = KinkPolicy::Strict);

// Central-difference oracles. Per-coordinate steps scale with the parameter:
// step_i = h * (1 + |theta_i|).
Vec fd_gradient(const NetworkParams& net, const Dataset& data, double h = 1e-5);

// Four-point second differences, symmetrized. For ReLU the preactivation
// margins are checked up front so no evaluation can cross a kink
// (KinkNeighborhood otherwise).
Matrix fd_hessian(const NetworkParams& net, const Dataset& data, double h = 3e-4);

// Residual vector r (n*M entries, sample-major) and its Jacobian w.r.t. the
// flat parameters, for squared-error Gauss-Newton steps.
struct ResidualJacobian {
  Vec r;
  Matrix J;  // (n*M) x param_count
};
ResidualJacobian residual_jacobian(const NetworkParams& net, const Dataset& data,
                                   KinkPolicy policy = KinkPolicy::Strict);

// True when |preact| is within the kink tolerance of unit j at input x.
bool on_kink(const NetworkParams& net, std::size_t j, const Vec& x);

}  // namespace embedlab
