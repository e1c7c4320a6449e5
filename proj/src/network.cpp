#include "embedlab/network.hpp"

#include <algorithm>
#include <cmath>

#include "embedlab/errors.hpp"

namespace embedlab {

double Activation::phi(double t) const {
  return kind == ActivationKind::Tanh ? std::tanh(t) : (t > 0.0 ? t : 0.0);
}

double Activation::dphi(double t) const {
  if (kind == ActivationKind::Tanh) {
    double th = std::tanh(t);
    return 1.0 - th * th;
  }
  return t > 0.0 ? 1.0 : 0.0;
}

double Activation::ddphi(double t) const {
  if (kind == ActivationKind::Tanh) {
    double th = std::tanh(t);
    return -2.0 * th * (1.0 - th * th);
  }
  return 0.0;
}

Vec NetworkParams::flatten() const {
  Vec theta;
  theta.reserve(param_count());
  theta.insert(theta.end(), w.a.begin(), w.a.end());
  theta.insert(theta.end(), v.a.begin(), v.a.end());
  return theta;
}

void NetworkParams::unflatten(const Vec& theta) {
  if (theta.size() != param_count()) fail("DimMismatch", "flat parameter length mismatch");
  std::copy(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(w.a.size()),
            w.a.begin());
  std::copy(theta.begin() + static_cast<std::ptrdiff_t>(w.a.size()), theta.end(),
            v.a.begin());
}

double NetworkParams::preactivation(std::size_t j, const Vec& x) const {
  double z = -w(j, input_dim);  // bias enters negatively
  for (std::size_t d = 0; d < input_dim; ++d) z += w(j, d) * x[d];
  return z;
}

void NetworkParams::validate() const {
  if (input_dim < 1 || hidden < 1 || output_dim < 1)
    fail("DimMismatch", "network dims must all be >= 1");
  if (w.rows != hidden || w.cols != input_dim + 1 || v.rows != hidden || v.cols != output_dim)
    fail("DimMismatch", "w/v shapes inconsistent with declared dims");
  if (!w.is_finite() || !v.is_finite()) fail("NonFinite", "network has non-finite parameters");
}

void Dataset::validate() const {
  if (inputs.rows < 1) fail("DimMismatch", "dataset needs at least one sample");
  if (inputs.rows != targets.rows) fail("DimMismatch", "inputs/targets sample count mismatch");
  if (!inputs.is_finite() || !targets.is_finite())
    fail("NonFinite", "dataset has non-finite entries");
  if (loss == LossKind::Logistic) {
    if (targets.cols != 1)
      fail("LogisticRange", "logistic loss needs a single output treated as a probability");
    for (double y : targets.a)
      if (y != 0.0 && y != 1.0) fail("LogisticRange", "logistic targets must be 0 or 1");
  }
}

namespace {

double kink_tolerance(const NetworkParams& net, std::size_t j, const Vec& xt_norms,
                      std::size_t nu) {
  double wn = norm2(net.w.row(j));
  return 1e-12 * (1.0 + wn * xt_norms[nu]);
}

// ||x~|| per sample, x~ = (x, -1).
Vec extended_input_norms(const Dataset& data) {
  Vec norms(data.size());
  for (std::size_t nu = 0; nu < data.size(); ++nu) {
    double s = 1.0;
    for (std::size_t d = 0; d < data.inputs.cols; ++d)
      s += data.inputs(nu, d) * data.inputs(nu, d);
    norms[nu] = std::sqrt(s);
  }
  return norms;
}

double softplus(double t) {
  return t > 30.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

// Per-sample loss and d(loss)/d(output). Squared error: ||y-f||^2/2, delta =
// f - y. Logistic (M == 1): softplus(f) - y*f, delta = sigmoid(f) - y.
double sample_loss(LossKind loss, const Vec& f, const Dataset& data, std::size_t nu) {
  if (loss == LossKind::SquaredError) {
    double s = 0.0;
    for (std::size_t m = 0; m < f.size(); ++m) {
      double r = f[m] - data.targets(nu, m);
      s += r * r;
    }
    return 0.5 * s;
  }
  double z = f[0];
  if (!std::isfinite(z)) fail("LogisticRange", "logit overflowed");
  return softplus(z) - data.targets(nu, 0) * z;
}

void sample_delta(LossKind loss, const Vec& f, const Dataset& data, std::size_t nu,
                  Vec& delta) {
  if (loss == LossKind::SquaredError) {
    for (std::size_t m = 0; m < f.size(); ++m) delta[m] = f[m] - data.targets(nu, m);
    return;
  }
  double z = f[0];
  if (!std::isfinite(z)) fail("LogisticRange", "logit overflowed");
  delta[0] = sigmoid(z) - data.targets(nu, 0);
}

void check_dims(const NetworkParams& net, const Dataset& data) {
  net.validate();
  data.validate();
  if (data.inputs.cols != net.input_dim) fail("DimMismatch", "dataset input dim mismatch");
  if (data.targets.cols != net.output_dim) fail("DimMismatch", "dataset target dim mismatch");
}

}  // namespace

bool on_kink(const NetworkParams& net, std::size_t j, const Vec& x) {
  double z = net.preactivation(j, x);
  double xt = std::sqrt(1.0 + dot(x, x));
  return std::fabs(z) <= 1e-12 * (1.0 + norm2(net.w.row(j)) * xt);
}

Vec forward(const NetworkParams& net, const Vec& x) {
  if (x.size() != net.input_dim) fail("DimMismatch", "input length mismatch");
  Vec f(net.output_dim, 0.0);
  for (std::size_t j = 0; j < net.hidden; ++j) {
    double h = net.activation.phi(net.preactivation(j, x));
    if (h == 0.0) continue;
    for (std::size_t m = 0; m < net.output_dim; ++m) f[m] += net.v(j, m) * h;
  }
  return f;
}

Vec loss_delta(const Dataset& data, const Vec& f, std::size_t nu) {
  Vec delta(f.size());
  sample_delta(data.loss, f, data, nu, delta);
  return delta;
}

double loss_total(const NetworkParams& net, const Dataset& data) {
  check_dims(net, data);
  double total = 0.0;
  Vec f(net.output_dim);
  for (std::size_t nu = 0; nu < data.size(); ++nu) {
    std::fill(f.begin(), f.end(), 0.0);
    for (std::size_t j = 0; j < net.hidden; ++j) {
      double z = -net.w(j, net.input_dim);
      for (std::size_t d = 0; d < net.input_dim; ++d) z += net.w(j, d) * data.inputs(nu, d);
      double h = net.activation.phi(z);
      if (h == 0.0) continue;
      for (std::size_t m = 0; m < net.output_dim; ++m) f[m] += net.v(j, m) * h;
    }
    total += sample_loss(data.loss, f, data, nu);
  }
  if (!std::isfinite(total)) fail("NonFinite", "loss overflowed");
  return total;
}

GradReport backprop(const NetworkParams& net, const Dataset& data, KinkPolicy policy) {
  check_dims(net, data);
  const std::size_t D = net.input_dim, H = net.hidden, M = net.output_dim;
  const Vec xt_norms = extended_input_norms(data);

  GradReport rep;
  rep.grad.assign(net.param_count(), 0.0);
  double* gw = rep.grad.data();                // H x (D+1)
  double* gv = rep.grad.data() + H * (D + 1);  // H x M

  Vec f(M), delta(M), z(H), act(H), dact(H);
  for (std::size_t nu = 0; nu < data.size(); ++nu) {
    Vec x = data.inputs.row(nu);
    std::fill(f.begin(), f.end(), 0.0);
    for (std::size_t j = 0; j < H; ++j) {
      z[j] = net.preactivation(j, x);
      if (net.activation.kind == ActivationKind::ReLU &&
          std::fabs(z[j]) <= kink_tolerance(net, j, xt_norms, nu)) {
        if (policy == KinkPolicy::Strict)
          fail("KinkHit", "sample " + std::to_string(nu) + " sits on the kink of unit " +
                              std::to_string(j));
        act[j] = net.activation.phi(z[j]);
        dact[j] = 0.0;  // zero-subgradient convention
      } else {
        act[j] = net.activation.phi(z[j]);
        dact[j] = net.activation.dphi(z[j]);
      }
      for (std::size_t m = 0; m < M; ++m) f[m] += net.v(j, m) * act[j];
    }
    rep.loss += sample_loss(data.loss, f, data, nu);
    sample_delta(data.loss, f, data, nu, delta);

    for (std::size_t j = 0; j < H; ++j) {
      for (std::size_t m = 0; m < M; ++m) gv[j * M + m] += delta[m] * act[j];
      if (dact[j] == 0.0) continue;
      double dv = 0.0;  // delta . v_j, the generalized delta of unit j
      for (std::size_t m = 0; m < M; ++m) dv += delta[m] * net.v(j, m);
      double gscale = dv * dact[j];
      for (std::size_t d = 0; d < D; ++d) gw[j * (D + 1) + d] += gscale * x[d];
      gw[j * (D + 1) + D] += -gscale;  // bias enters with a negative sign
    }
  }
  if (!std::isfinite(rep.loss)) fail("NonFinite", "loss overflowed");
  return rep;
}

Vec fd_gradient(const NetworkParams& net, const Dataset& data, double h) {
  if (!(h > 0.0)) fail("BadRange", "finite-difference step must be positive");
  check_dims(net, data);
  Vec theta = net.flatten();
  NetworkParams probe = net;
  Vec g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    double step = h * (1.0 + std::fabs(theta[i]));
    Vec t = theta;
    t[i] = theta[i] + step;
    probe.unflatten(t);
    double lp = loss_total(probe, data);
    t[i] = theta[i] - step;
    probe.unflatten(t);
    double lm = loss_total(probe, data);
    g[i] = (lp - lm) / (2.0 * step);
  }
  return g;
}

Matrix fd_hessian(const NetworkParams& net, const Dataset& data, double h) {
  if (!(h > 0.0)) fail("BadRange", "finite-difference step must be positive");
  check_dims(net, data);
  Vec theta = net.flatten();
  const std::size_t P = theta.size();

  Vec steps(P);
  for (std::size_t i = 0; i < P; ++i) steps[i] = h * (1.0 + std::fabs(theta[i]));

  if (net.activation.kind == ActivationKind::ReLU) {
    // Any evaluation moves at most two coordinates by one step each, so the
    // preactivation of unit j at sample nu changes by at most
    // 2 * max_step * ||x~||_1. Demand a margin above that.
    double max_step = *std::max_element(steps.begin(), steps.end());
    for (std::size_t nu = 0; nu < data.size(); ++nu) {
      Vec x = data.inputs.row(nu);
      double l1 = 1.0;
      for (double xv : x) l1 += std::fabs(xv);
      for (std::size_t j = 0; j < net.hidden; ++j) {
        double z = net.preactivation(j, x);
        if (std::fabs(z) <= 2.0 * max_step * l1)
          fail("KinkNeighborhood",
               "unit " + std::to_string(j) + " is within 2h of a kink at sample " +
                   std::to_string(nu));
      }
    }
  }

  NetworkParams probe = net;
  auto eval = [&](const Vec& t) {
    probe.unflatten(t);
    return loss_total(probe, data);
  };

  Matrix hess(P, P);
  for (std::size_t i = 0; i < P; ++i) {
    for (std::size_t j = i; j < P; ++j) {
      Vec t = theta;
      t[i] += steps[i];
      t[j] += steps[j];
      double lpp = eval(t);
      t = theta;
      t[i] += steps[i];
      t[j] -= steps[j];
      double lpm = eval(t);
      t = theta;
      t[i] -= steps[i];
      t[j] += steps[j];
      double lmp = eval(t);
      t = theta;
      t[i] -= steps[i];
      t[j] -= steps[j];
      double lmm = eval(t);
      hess(i, j) = hess(j, i) = (lpp - lpm - lmp + lmm) / (4.0 * steps[i] * steps[j]);
    }
  }
  return hess;
}

ResidualJacobian residual_jacobian(const NetworkParams& net, const Dataset& data,
                                   KinkPolicy policy) {
  check_dims(net, data);
  if (data.loss != LossKind::SquaredError)
    fail("DimMismatch", "residuals are defined for squared error only");
  const std::size_t D = net.input_dim, H = net.hidden, M = net.output_dim;
  const std::size_t P = net.param_count();
  const Vec xt_norms = extended_input_norms(data);

  ResidualJacobian out;
  out.r.assign(data.size() * M, 0.0);
  out.J = Matrix(data.size() * M, P);

  for (std::size_t nu = 0; nu < data.size(); ++nu) {
    Vec x = data.inputs.row(nu);
    for (std::size_t j = 0; j < H; ++j) {
      double z = net.preactivation(j, x);
      double act, dact;
      if (net.activation.kind == ActivationKind::ReLU &&
          std::fabs(z) <= kink_tolerance(net, j, xt_norms, nu)) {
        if (policy == KinkPolicy::Strict) fail("KinkHit", "preactivation on a kink");
        act = net.activation.phi(z);
        dact = 0.0;
      } else {
        act = net.activation.phi(z);
        dact = net.activation.dphi(z);
      }
      for (std::size_t m = 0; m < M; ++m) {
        std::size_t row = nu * M + m;
        out.r[row] += net.v(j, m) * act;
        out.J(row, H * (D + 1) + j * M + m) = act;
        if (dact != 0.0) {
          double gscale = net.v(j, m) * dact;
          for (std::size_t d = 0; d < D; ++d) out.J(row, j * (D + 1) + d) = gscale * x[d];
          out.J(row, j * (D + 1) + D) = -gscale;
        }
      }
    }
    for (std::size_t m = 0; m < M; ++m) out.r[nu * M + m] -= data.targets(nu, m);
  }
  return out;
}

}  // namespace embedlab
