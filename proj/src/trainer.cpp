#include "embedlab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "embedlab/errors.hpp"
#include "embedlab/matrix.hpp"
#include "embedlab/rng.hpp"

namespace embedlab {
namespace {

constexpr std::uint64_t kInitStream = 0x696E6974ull;     // "init"
constexpr std::uint64_t kRestartStream = 0x72657374ull;  // "rest"

// Gradient level at which GD hands over to Levenberg-Marquardt, plus a cycle
// budget so ill-conditioned basins (where first-order descent crawls) still
// reach the damped phase, which degenerates to safeguarded descent anyway
// when the damping is large.
constexpr double kGdToLmGrad = 1e-6;
constexpr std::size_t kGdBudget = 200;
// A loss-based success must also be stationary at half the certification
// tolerance, so every converged result verifies at 1e-7 afterwards.
constexpr double kConvergedStationary = 5e-8;
constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 60;
constexpr double kLambdaMin = 1e-12;
constexpr double kLambdaMax = 1e12;
constexpr int kMaxRejectedAtCap = 30;

enum class Outcome { Converged, Failed, Diverged };

// grad_tol = 0 disables the gradient criterion rather than asking for an
// exact zero: a fully inactive ReLU network has a bitwise-zero gradient, and
// "loss-only" runs must restart out of such dead basins instead of accepting
// them.
bool conv_reached(const TrainConfig& cfg, double loss, double grad_inf) {
  if (cfg.grad_tol > 0.0 && grad_inf <= cfg.grad_tol) return true;
  return loss <= cfg.target_loss &&
         grad_inf <= kConvergedStationary * (1.0 + loss);
}

// Loss/gradient evaluation that reports overflow instead of throwing, so the
// optimizer can back off (line search) or count the attempt as diverged.
bool eval_loss(const NetworkParams& net, const Dataset& data, double& out) {
  try {
    out = loss_total(net, data);
  } catch (const Error&) {
    return false;
  }
  return std::isfinite(out);
}

bool eval_grad(const NetworkParams& net, const Dataset& data,
               KinkPolicy policy, GradReport& out) {
  try {
    out = backprop(net, data, policy);
  } catch (const Error&) {
    return false;
  }
  return std::isfinite(norm_inf(out.grad)) && std::isfinite(out.loss);
}

bool all_off_kink(const NetworkParams& net, const Dataset& data) {
  if (net.activation.smooth()) return true;
  for (std::size_t nu = 0; nu < data.size(); ++nu) {
    const Vec x = data.inputs.row(nu);
    for (std::size_t j = 0; j < net.hidden; ++j) {
      if (on_kink(net, j, x)) return false;
    }
  }
  return true;
}

// One full optimization attempt from the given starting point. On success the
// result fields (except restarts_used) are filled in.
Outcome run_attempt(NetworkParams net, const Dataset& data,
                    const TrainConfig& cfg, TrainResult& out) {
  const bool squared = data.loss == LossKind::SquaredError;
  const KinkPolicy policy = KinkPolicy::ZeroSubgradient;
  const std::size_t P = net.param_count();

  double loss = 0.0;
  if (!eval_loss(net, data, loss)) return Outcome::Diverged;

  std::vector<double> trace{loss};
  double lambda = cfg.lm_lambda0;
  bool in_lm = false;
  int rejected_at_cap = 0;
  std::size_t gd_cycles = 0;
  std::size_t iters = 0;
  double grad_inf = 0.0;
  bool success = false;

  while (true) {
    GradReport g;
    if (!eval_grad(net, data, policy, g)) return Outcome::Diverged;
    grad_inf = norm_inf(g.grad);
    if (conv_reached(cfg, loss, grad_inf)) {
      success = true;
      break;
    }
    if (iters >= cfg.max_iters) break;
    ++iters;

    if (!in_lm && squared &&
        (grad_inf < kGdToLmGrad || gd_cycles >= kGdBudget))
      in_lm = true;

    if (in_lm) {
      bool accepted = false;
      try {
        const ResidualJacobian rj = residual_jacobian(net, data, policy);
        const Matrix Jt = rj.J.transpose();
        Matrix A = Jt * rj.J;
        for (std::size_t i = 0; i < P; ++i) A(i, i) += lambda;
        const Vec Jtr = mat_vec(Jt, rj.r);
        Matrix rhs(P, 1);
        for (std::size_t i = 0; i < P; ++i) rhs(i, 0) = -Jtr[i];

        NetworkParams cand = net;
        cand.unflatten(net.flatten() + lu_solve(A, rhs).col(0));
        double cand_loss = 0.0;
        if (eval_loss(cand, data, cand_loss) && cand_loss < loss) {
          net = cand;
          loss = cand_loss;
          accepted = true;
        }
      } catch (const Error&) {
        // numerically unsolvable damped system: treat as a rejected step
      }
      if (accepted) {
        lambda = std::max(lambda * 0.1, kLambdaMin);
        rejected_at_cap = 0;
        trace.push_back(loss);
      } else {
        lambda = std::min(lambda * 10.0, kLambdaMax);
        if (lambda >= kLambdaMax && ++rejected_at_cap > kMaxRejectedAtCap) {
          // The damped model keeps mispredicting (typically a ReLU kink
          // wall). With gradient left, descent steps can slide along the
          // wall, so fall back to the first phase; otherwise give up.
          if (grad_inf > kGdToLmGrad) {
            in_lm = false;
            gd_cycles = 0;
            lambda = cfg.lm_lambda0;
            rejected_at_cap = 0;
          } else {
            break;
          }
        }
      }
    } else {
      ++gd_cycles;
      const double g2 = dot(g.grad, g.grad);
      const Vec theta = net.flatten();
      double t = cfg.gd_step;
      bool accepted = false;
      for (int h = 0; h < kMaxHalvings; ++h, t *= 0.5) {
        NetworkParams cand = net;
        cand.unflatten(theta - t * g.grad);
        double cand_loss = 0.0;
        if (eval_loss(cand, data, cand_loss) &&
            cand_loss <= loss - kArmijo * t * g2) {
          net = cand;
          loss = cand_loss;
          accepted = true;
          break;
        }
      }
      if (accepted) {
        trace.push_back(loss);
      } else if (squared) {
        in_lm = true;  // flat for first-order steps; let damping take over
      } else {
        break;  // logistic line search stalled above grad_tol
      }
    }
  }

  if (!success) return Outcome::Failed;
  if (!all_off_kink(net, data)) return Outcome::Failed;

  out.params = net;
  out.final_loss = loss;
  out.grad_norm = grad_inf;
  out.iters = iters;
  out.converged = true;
  out.trace = std::move(trace);
  return Outcome::Converged;
}

}  // namespace

void TrainConfig::validate() const {
  if (target_loss < 0.0)
    fail("SpecInvariantViolated", "target_loss must be >= 0");
  if (restarts < 1) fail("SpecInvariantViolated", "restarts must be >= 1");
  if (!(gd_step > 0.0) || !(lm_lambda0 > 0.0))
    fail("SpecInvariantViolated", "gd_step and lm_lambda0 must be positive");
  if (grad_tol < 0.0) fail("SpecInvariantViolated", "grad_tol must be >= 0");
  if (!(init_scale > 0.0))
    fail("SpecInvariantViolated", "init_scale must be positive");
}

NetworkParams init_params(std::size_t input_dim, std::size_t hidden,
                          std::size_t output_dim, Activation activation,
                          std::uint64_t seed, double scale) {
  if (!(scale > 0.0)) fail("SpecInvariantViolated", "init scale must be > 0");
  if (input_dim == 0 || hidden == 0 || output_dim == 0)
    fail("DimMismatch", "init_params dimensions must be positive");

  RngStream rng(seed, {kInitStream});
  NetworkParams net;
  net.input_dim = input_dim;
  net.hidden = hidden;
  net.output_dim = output_dim;
  net.activation = activation;
  net.w = Matrix(hidden, input_dim + 1);
  net.v = Matrix(hidden, output_dim);
  const double bias_scale =
      activation.smooth() ? scale : 0.5 * scale;  // keep ReLU units live
  for (std::size_t j = 0; j < hidden; ++j) {
    for (std::size_t d = 0; d < input_dim; ++d)
      net.w(j, d) = rng.uniform(-scale, scale);
    net.w(j, input_dim) = rng.uniform(-bias_scale, bias_scale);
  }
  for (std::size_t j = 0; j < hidden; ++j)
    for (std::size_t m = 0; m < output_dim; ++m)
      net.v(j, m) = rng.uniform(-scale, scale);
  net.validate();
  return net;
}

TrainResult train(const NetworkParams& init, const Dataset& data,
                  const TrainConfig& cfg) {
  cfg.validate();
  init.validate();
  data.validate();
  if (init.input_dim != data.inputs.cols ||
      init.output_dim != data.targets.cols)
    fail("DimMismatch", "network dimensions do not match the dataset");

  std::size_t diverged = 0;
  for (std::size_t attempt = 0; attempt < cfg.restarts; ++attempt) {
    NetworkParams start = init;
    if (attempt > 0) {
      // Independent deterministic draw per attempt: parallel execution with
      // lowest-index selection would return the identical result.
      RngStream keyer(cfg.seed, {kRestartStream, attempt});
      start = init_params(init.input_dim, init.hidden, init.output_dim,
                          init.activation, keyer.next_u64(), cfg.init_scale);
    }
    TrainResult result;
    const Outcome outcome = run_attempt(start, data, cfg, result);
    if (outcome == Outcome::Converged) {
      result.restarts_used = attempt;
      return result;
    }
    if (outcome == Outcome::Diverged) ++diverged;
  }

  if (diverged == cfg.restarts)
    fail("Diverged", "every attempt produced a non-finite loss");
  fail("NotConverged", "no attempt reached target_loss=" +
                           std::to_string(cfg.target_loss) + " or grad_tol=" +
                           std::to_string(cfg.grad_tol) + " within " +
                           std::to_string(cfg.restarts) + " attempt(s)");
}

}  // namespace embedlab
