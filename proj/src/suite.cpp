#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "embedlab/embedding.hpp"
#include "embedlab/errors.hpp"
#include "embedlab/experiment.hpp"
#include "embedlab/landscape.hpp"
#include "embedlab/network.hpp"
#include "embedlab/rng.hpp"

namespace embedlab {

namespace {

// ---------------------------------------------------------------------------
// Instance construction. Stationary points with prescribed curvature are
// built directly rather than trained: fixing a network and choosing targets
// so that the residual lies in the null space of the Jacobian transpose
// makes the gradient vanish identically, and the reachable curvature
// matrices form a linear image of that null space which can be searched for
// a wanted definiteness.
// ---------------------------------------------------------------------------

NetworkParams rand_net(std::size_t D, std::size_t H, std::size_t M, ActivationKind kind,
                       RngStream& rng, double wscale = 1.0) {
  NetworkParams net;
  net.input_dim = D;
  net.hidden = H;
  net.output_dim = M;
  net.activation.kind = kind;
  net.w = Matrix(H, D + 1);
  net.v = Matrix(H, M);
  for (double& e : net.w.a) e = rng.uniform(-wscale, wscale);
  for (double& e : net.v.a) e = rng.uniform(-1.0, 1.0);
  return net;
}

struct Instance {
  NetworkParams net;
  Dataset data;
};

struct NullFrame {
  NetworkParams net;
  Matrix inputs;
  std::vector<Vec> null_basis;  // orthonormal, each of length n*M
};

bool build_null_frame(std::size_t D, std::size_t H0, std::size_t M, std::size_t n,
                      ActivationKind act, std::uint64_t seed, NullFrame& out,
                      double wscale = 1.0) {
  RngStream rng(seed, {0xABCD});
  NetworkParams net = rand_net(D, H0, M, act, rng, wscale);
  Matrix inputs(n, D);
  for (double& e : inputs.a) e = rng.uniform(-1.0, 1.0);

  if (act == ActivationKind::ReLU)
    for (std::size_t nu = 0; nu < n; ++nu)
      for (std::size_t j = 0; j < H0; ++j)
        if (std::fabs(net.preactivation(j, inputs.row(nu))) < 0.05) return false;

  Dataset probe;
  probe.inputs = inputs;
  probe.targets = Matrix(n, M);
  ResidualJacobian rj = residual_jacobian(net, probe);
  const std::size_t rows = rj.J.rows;

  std::vector<Vec> span;
  auto project_out = [&](Vec& v) {
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& b : span) {
        double proj = dot(v, b);
        for (std::size_t i = 0; i < rows; ++i) v[i] -= proj * b[i];
      }
  };
  for (std::size_t c = 0; c < rj.J.cols; ++c) {
    Vec v = rj.J.col(c);
    project_out(v);
    double nrm = norm2(v);
    if (nrm > 1e-10) {
      for (double& e : v) e /= nrm;
      span.push_back(std::move(v));
    }
  }
  const std::size_t rank = span.size();
  if (rank >= rows) return false;

  std::vector<Vec> null_basis;
  for (std::size_t i = 0; i < rows && null_basis.size() < rows - rank; ++i) {
    Vec v(rows, 0.0);
    v[i] = 1.0;
    project_out(v);
    double nrm = norm2(v);
    if (nrm > 1e-6) {
      for (double& e : v) e /= nrm;
      span.push_back(v);
      null_basis.push_back(std::move(v));
    }
  }
  if (null_basis.empty()) return false;
  out = {std::move(net), std::move(inputs), std::move(null_basis)};
  return true;
}

bool realize_residual(const NullFrame& frame, const Vec& residual, Instance& out) {
  const std::size_t n = frame.inputs.rows, M = frame.net.output_dim;
  Dataset data;
  data.inputs = frame.inputs;
  data.targets = Matrix(n, M);
  for (std::size_t nu = 0; nu < n; ++nu) {
    Vec f = forward(frame.net, data.inputs.row(nu));
    for (std::size_t m = 0; m < M; ++m) data.targets(nu, m) = f[m] - residual[nu * M + m];
  }
  GradReport rep = backprop(frame.net, data, KinkPolicy::ZeroSubgradient);
  if (norm_inf(rep.grad) > 1e-9 * (1.0 + rep.loss)) return false;
  out = {frame.net, std::move(data)};
  return true;
}

bool make_stationary(std::size_t D, std::size_t H0, std::size_t M, std::size_t n,
                     ActivationKind act, std::uint64_t seed, double scale, Instance& out) {
  NullFrame frame;
  if (!build_null_frame(D, H0, M, n, act, seed, frame)) return false;
  RngStream rng(seed, {0xD1CE});
  Vec q(frame.null_basis.size());
  for (double& e : q) e = rng.normal();
  const std::size_t rows = frame.null_basis.front().size();
  Vec u(rows, 0.0);
  for (std::size_t k = 0; k < q.size(); ++k)
    for (std::size_t i = 0; i < rows; ++i) u[i] += q[k] * frame.null_basis[k][i];
  double nrm = norm2(u);
  if (nrm < 1e-12) return false;
  for (double& e : u) e *= scale / nrm;
  return realize_residual(frame, u, out);
}

bool narrow_hessian_pd(const Instance& inst, double margin = 1e-5) {
  SymEig eig = sym_eig(fd_hessian(inst.net, inst.data));
  return eig.eigenvalues.front() > margin;
}

// -1: negative definite, 0: indefinite with margin, +1: positive definite.
int definiteness(const Matrix& G, double margin = 1e-3) {
  SymEig eig = sym_eig(G);
  double emax = 0.0;
  for (double e : eig.eigenvalues) emax = std::max(emax, std::fabs(e));
  double lo = eig.eigenvalues.front(), hi = eig.eigenvalues.back();
  if (lo > margin * emax) return 1;
  if (hi < -margin * emax) return -1;
  if (lo < -margin * emax && hi > margin * emax) return 0;
  return 99;
}

// Maps null-space coefficients to the 2x2 curvature matrix G of a single
// hidden unit with scalar input; G is linear in the residual.
Matrix curvature_map(const NullFrame& frame) {
  const std::size_t n = frame.inputs.rows, M = frame.net.output_dim;
  const std::size_t K = frame.null_basis.size();
  Matrix L(3, K);
  for (std::size_t k = 0; k < K; ++k) {
    Matrix Gk(2, 2);
    for (std::size_t nu = 0; nu < n; ++nu) {
      Vec x = frame.inputs.row(nu);
      double coeff = 0.0;
      for (std::size_t m = 0; m < M; ++m)
        coeff += frame.null_basis[k][nu * M + m] * frame.net.v(0, m);
      coeff *= frame.net.activation.ddphi(frame.net.preactivation(0, x));
      double xt[2] = {x[0], -1.0};
      for (std::size_t d = 0; d < 2; ++d)
        for (std::size_t d2 = 0; d2 < 2; ++d2) Gk(d, d2) += coeff * xt[d] * xt[d2];
    }
    L(0, k) = Gk(0, 0);
    L(1, k) = Gk(0, 1);
    L(2, k) = Gk(1, 1);
  }
  return L;
}

// Scans the ellipse of curvature targets reachable at residual norm <= 2 for
// one with the wanted definiteness and a healthy eigenvalue split.
bool pencil_target(const Matrix& L, int want, Matrix& target) {
  SymEig se = sym_eig(L * L.transpose());
  double s1 = std::sqrt(std::max(0.0, se.eigenvalues[2]));
  double s2 = std::sqrt(std::max(0.0, se.eigenvalues[1]));
  if (s2 < 1e-9 * s1) return false;
  Vec y1 = se.eigenvectors.col(2), y2 = se.eigenvectors.col(1);
  const double budget = 2.0;
  double best = -2.0, bestscale = 0.0;
  Vec bestg;
  for (int step = 0; step < 720; ++step) {
    double th = step * 3.14159265358979 / 360.0;
    Vec g = (budget * s1 * std::cos(th)) * y1 + (budget * s2 * std::sin(th)) * y2;
    double tr = g[0] + g[2], det = g[0] * g[2] - g[1] * g[1];
    double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
    double lo = tr / 2 - disc, hi = tr / 2 + disc;
    double scale = std::max(std::fabs(lo), std::fabs(hi));
    if (scale < 1e-12) continue;
    double quality = want == 0 ? -(lo * hi) / (scale * scale) : lo / scale;
    if (quality > best) {
      best = quality;
      bestg = g;
      bestscale = scale;
    }
  }
  if (best < (want == 0 ? 0.0025 : 0.05)) return false;
  if (bestscale < 1e-4) return false;
  double shrink = bestscale > 0.3 ? 0.3 / bestscale : 1.0;
  target = Matrix(2, 2);
  double sign = want == -1 ? -1.0 : 1.0;
  target(0, 0) = sign * shrink * bestg[0];
  target(0, 1) = target(1, 0) = sign * shrink * bestg[1];
  target(1, 1) = sign * shrink * bestg[2];
  return true;
}

// Least-norm residual realizing the curvature target; a nonzero fuzz_seed
// adds a curvature-neutral component that pushes the output-coupling block
// away from zero.
bool realize_targeted_G(const NullFrame& frame, const Matrix& target, Instance& out,
                        std::uint64_t fuzz_seed = 0) {
  const std::size_t n = frame.inputs.rows, M = frame.net.output_dim;
  const std::size_t K = frame.null_basis.size();
  Matrix L = curvature_map(frame);
  Vec t = {target(0, 0), target(0, 1), target(1, 1)};
  for (std::size_t i = 0; i < 3; ++i) {
    double rn = norm2(L.row(i));
    if (rn < 1e-12) return false;
    for (std::size_t k = 0; k < K; ++k) L(i, k) /= rn;
    t[i] /= rn;
  }
  Vec q(K, 0.0);
  try {
    Matrix LLt = L * L.transpose();
    for (int round = 0; round < 2; ++round) {
      Matrix rhs(3, 1);
      rhs.set_col(0, t - mat_vec(L, q));
      Vec dq = mat_vec(L.transpose(), lu_solve(LLt, rhs).col(0));
      for (std::size_t k = 0; k < K; ++k) q[k] += dq[k];
    }
  } catch (const Error&) {
    return false;
  }
  if (fuzz_seed != 0 && K > 3) {
    std::vector<Vec> rows;
    for (std::size_t i = 0; i < 3; ++i) {
      Vec r = L.row(i);
      for (int pass = 0; pass < 2; ++pass)
        for (const Vec& b : rows) {
          double proj = dot(r, b);
          for (std::size_t k = 0; k < K; ++k) r[k] -= proj * b[k];
        }
      double nr = norm2(r);
      if (nr > 1e-10) {
        for (double& e : r) e /= nr;
        rows.push_back(std::move(r));
      }
    }
    RngStream frng(fuzz_seed, {0xF022});
    Vec extra(K);
    for (double& e : extra) e = frng.normal();
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& b : rows) {
        double proj = dot(extra, b);
        for (std::size_t k = 0; k < K; ++k) extra[k] -= proj * b[k];
      }
    double en = norm2(extra);
    if (en > 1e-8) {
      for (std::size_t k = 0; k < K; ++k) q[k] += extra[k] / en;
    }
  }
  if (norm_inf(mat_vec(L, q) - t) > 1e-6) return false;
  Vec u(n * M, 0.0);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += q[k] * frame.null_basis[k][i];
  double nrm = norm2(u);
  if (nrm < 0.005 || nrm > 5.0) return false;
  return realize_residual(frame, u, out);
}

// Stationary single-output instance with a positive-definite narrow Hessian
// and a curvature matrix of the wanted definiteness; saturated units
// (weights up to 3) keep definite targets reachable.
bool find_M1_instance(int want, std::uint64_t base, Instance& out, std::size_t n = 6) {
  for (std::uint64_t offset = 1; offset < 300; ++offset) {
    const std::uint64_t seed = base + offset;
    NullFrame frame;
    if (!build_null_frame(1, 1, 1, n, ActivationKind::Tanh, seed, frame, 3.0)) continue;
    if (std::fabs(frame.net.v(0, 0)) < 0.1) continue;
    Matrix target;
    if (!pencil_target(curvature_map(frame), want, target)) continue;
    Instance inst;
    if (!realize_targeted_G(frame, target, inst)) continue;
    if (!narrow_hessian_pd(inst)) continue;
    GFPair gf = compute_GF(inst.net, inst.data);
    if (definiteness(gf.G) != want) continue;
    out = inst;
    return true;
  }
  return false;
}

EmbedSpec replicate_spec(std::size_t target, Vec lambda) {
  EmbedSpec spec;
  spec.kind = EmbedKind::Replicate;
  spec.target_hidden = target;
  spec.lambda = std::move(lambda);
  return spec;
}

PointClass numerical_class(const Instance& inst, const EmbedSpec& spec, std::uint64_t seed) {
  HessianReport report = assemble_embedded_hessian(inst.net, inst.data, spec);
  FlatProbeConfig cfg;
  cfg.net = embed(inst.net, spec);
  cfg.data = inst.data;
  cfg.seed = seed;
  return classify(report, &cfg).cls;
}

const char* class_name(PointClass cls) {
  switch (cls) {
    case PointClass::Minimum: return "Minimum";
    case PointClass::SemiFlatMinimum: return "SemiFlatMinimum";
    case PointClass::Saddle: return "Saddle";
    default: return "Degenerate";
  }
}

// Zero-error instance: random net, targets equal to its own outputs, ReLU
// preactivations kept clear of the kink.
bool zero_error_instance(std::size_t D, std::size_t H, std::size_t n, ActivationKind act,
                         std::uint64_t seed, std::uint64_t stream, double xscale,
                         Instance& out) {
  RngStream nrng(seed, {stream});
  NetworkParams net = rand_net(D, H, 1, act, nrng);
  Dataset data;
  data.inputs = Matrix(n, D);
  for (double& e : data.inputs.a) e = nrng.uniform(-xscale, xscale);
  if (act == ActivationKind::ReLU)
    for (std::size_t nu = 0; nu < n; ++nu)
      for (std::size_t j = 0; j < H; ++j)
        if (std::fabs(net.preactivation(j, data.inputs.row(nu))) < 0.05) return false;
  data.targets = Matrix(n, 1);
  for (std::size_t nu = 0; nu < n; ++nu)
    data.targets.set_row(nu, forward(net, data.inputs.row(nu)));
  out = {std::move(net), std::move(data)};
  return true;
}

// ---------------------------------------------------------------------------
// Checks. Each returns its evidence object and sets pass; any thrown Error
// is recorded as evidence instead of escaping the suite.
// ---------------------------------------------------------------------------

struct CheckResult {
  bool pass = false;
  Json evidence = Json::object();
};

CheckResult check_function_preservation(std::uint64_t seed) {
  CheckResult res;
  RngStream rng(seed, {0xE4BED});
  double worst = 0.0;
  int specs_run = 0;
  for (int rep = 0; rep < 12; ++rep) {
    std::size_t D = 1 + rng.next_u64() % 3;
    std::size_t H0 = 1 + rng.next_u64() % 3;
    std::size_t M = 1 + rng.next_u64() % 3;
    std::size_t E = 1 + rng.next_u64() % 3;
    ActivationKind act = (rep % 2 == 0) ? ActivationKind::Tanh : ActivationKind::ReLU;
    NetworkParams narrow = rand_net(D, H0, M, act, rng);

    std::vector<EmbedSpec> specs;
    {
      EmbedSpec s = replicate_spec(H0 + E, Vec(E + 1, 1.0 / static_cast<double>(E + 1)));
      s.unit = rng.next_u64() % H0;
      specs.push_back(s);
    }
    {
      EmbedSpec s;
      s.kind = EmbedKind::InactiveUnits;
      s.target_hidden = H0 + E;
      s.v_extra = Matrix(E, M);
      for (double& e : s.v_extra.a) e = rng.uniform(-1.0, 1.0);
      specs.push_back(s);
    }
    {
      EmbedSpec s;
      s.kind = EmbedKind::InactiveProp;
      s.target_hidden = H0 + E;
      s.w_extra = Matrix(E, D + 1);
      for (double& e : s.w_extra.a) e = rng.uniform(-1.0, 1.0);
      specs.push_back(s);
    }
    {
      EmbedSpec s;
      s.kind = EmbedKind::InactiveBoth;
      s.target_hidden = H0 + E;
      specs.push_back(s);
    }
    if (act == ActivationKind::ReLU) {
      EmbedSpec s;
      s.kind = EmbedKind::ReplicateReLU;
      s.target_hidden = H0 + E;
      s.beta.assign(E + 1, 0.0);
      s.gamma.assign(E + 1, 0.0);
      double wsum = 0.0;
      for (std::size_t j = 0; j <= E; ++j) {
        s.beta[j] = rng.uniform(0.2, 2.0);
        s.gamma[j] = rng.uniform(-1.0, 1.0);
        wsum += s.beta[j] * s.gamma[j];
      }
      if (std::fabs(wsum) < 0.2) {
        s.gamma[0] += 1.0 / s.beta[0];
        wsum += 1.0;
      }
      for (std::size_t j = 0; j <= E; ++j) s.gamma[j] /= wsum;
      specs.push_back(s);

      EmbedSpec t;
      t.kind = EmbedKind::InactiveUnitsReLU;
      t.target_hidden = H0 + E;
      t.box_scale = 1.5 + rng.uniform();
      t.v_extra = Matrix(E, M);
      for (double& e : t.v_extra.a) e = rng.uniform(-1.0, 1.0);
      specs.push_back(t);
    }
    for (const EmbedSpec& s : specs) {
      NetworkParams wide = embed(narrow, s);
      worst = std::max(worst, verify_function_equality(narrow, wide, 64, seed + 1000 + rep));
      ++specs_run;
    }
  }
  res.pass = worst <= 1e-12;
  res.evidence = {{"max_deviation", worst}, {"embeddings_checked", specs_run}};
  return res;
}

CheckResult check_stationarity(std::uint64_t seed) {
  CheckResult res;
  EmbedSpec units;
  units.kind = EmbedKind::InactiveUnits;
  units.target_hidden = 3;
  units.v_extra = Matrix(1, 1);
  units.v_extra(0, 0) = 1.0;

  // Nonzero-error stationary point of a width-2 net whose inactive-units
  // widening with biased surplus output weights is NOT stationary.
  Instance inst;
  bool found = false;
  for (std::uint64_t offset = 1; offset < 60 && !found; ++offset) {
    NullFrame frame;
    if (!build_null_frame(1, 2, 1, 8, ActivationKind::Tanh, seed + offset, frame, 2.5)) continue;
    RngStream qrng(seed + offset, {0xD1CE});
    Vec u(8, 0.0);
    for (const Vec& b : frame.null_basis) {
      double qk = qrng.normal();
      for (std::size_t i = 0; i < 8; ++i) u[i] += qk * b[i];
    }
    double nrm = norm2(u);
    if (nrm < 1e-12) continue;
    for (double& e : u) e *= 0.4 / nrm;
    if (!realize_residual(frame, u, inst)) continue;
    found = verify_stationary(embed(inst.net, units), inst.data).grad_inf > 1e-3;
  }
  if (!found) {
    res.evidence = {{"error", "no stationary instance found in the scan range"}};
    return res;
  }

  StationaryCheck narrow = verify_stationary(inst.net, inst.data);
  StationaryCheck rep =
      verify_stationary(embed(inst.net, replicate_spec(4, {0.6, 0.7, -0.3})), inst.data);
  EmbedSpec both;
  both.kind = EmbedKind::InactiveBoth;
  both.target_hidden = 4;
  StationaryCheck both_check = verify_stationary(embed(inst.net, both), inst.data);
  StationaryCheck biased = verify_stationary(embed(inst.net, units), inst.data);
  units.v_extra(0, 0) = 0.0;
  StationaryCheck unbiased = verify_stationary(embed(inst.net, units), inst.data);

  res.pass = narrow.pass && rep.pass && both_check.pass && !biased.pass && unbiased.pass;
  res.evidence = {{"narrow_grad_inf", narrow.grad_inf},
                  {"replicate_grad_inf", rep.grad_inf},
                  {"inactive_both_grad_inf", both_check.grad_inf},
                  {"biased_surplus_grad_inf", biased.grad_inf},
                  {"zero_surplus_grad_inf", unbiased.grad_inf}};
  return res;
}

CheckResult check_smooth_coupling_saddle(std::uint64_t seed) {
  CheckResult res;
  Instance inst;
  GFPair gf;
  bool found = false;
  for (std::uint64_t offset = 1; offset < 300 && !found; ++offset) {
    NullFrame frame;
    if (!build_null_frame(1, 1, 2, 6, ActivationKind::Tanh, seed + offset, frame, 3.0)) continue;
    Matrix target;
    if (!pencil_target(curvature_map(frame), 1, target)) continue;
    if (!realize_targeted_G(frame, target, inst, seed + offset)) continue;
    gf = compute_GF(inst.net, inst.data);
    if (definiteness(gf.G) != 1) continue;
    if (max_abs(gf.F) < 1e-3) continue;
    found = true;
  }
  if (!found) {
    res.evidence = {{"error", "no positive-definite instance with output coupling found"}};
    return res;
  }

  EmbedSpec spec = replicate_spec(2, {0.5, 0.5});
  HessianReport report = assemble_embedded_hessian(inst.net, inst.data, spec);
  LandscapeVerdict verdict = classify(report);

  // Descent along the Schur-complement direction of the coupling block.
  const std::size_t P = report.full.rows;
  Vec omega(P, 0.0);
  const std::size_t exi = report.tildeF.rows, eeta = report.tildeF.cols;
  Matrix xi(exi, 1);
  xi(0, 0) = 1.0;
  Matrix eta = lu_solve(report.tildeG, report.tildeF.transpose() * xi);
  for (std::size_t i = 0; i < exi; ++i) omega[report.xi_off + i] = xi(i, 0);
  for (std::size_t i = 0; i < eeta; ++i) omega[report.eta_off + i] = -eta(i, 0);
  Vec dir = mat_vec(report.to_original, omega);
  double dn = norm2(dir);
  bool decreased = false;
  double base = 0.0, best = 0.0;
  if (dn > 0.0) {
    for (double& e : dir) e /= dn;
    NetworkParams wide = embed(inst.net, spec);
    base = loss_total(wide, inst.data);
    best = base;
    Vec theta = wide.flatten();
    NetworkParams probe = wide;
    for (double t : {1e-2, 1e-3, 1e-4}) {
      Vec moved = theta;
      for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += t * dir[i];
      probe.unflatten(moved);
      best = std::min(best, loss_total(probe, inst.data));
    }
    decreased = best < base - 1e-12;
  }

  res.pass = verdict.cls == PointClass::Saddle && decreased;
  res.evidence = {{"max_abs_coupling", max_abs(gf.F)},
                  {"class", class_name(verdict.cls)},
                  {"loss_at_point", base},
                  {"loss_after_descent", best}};
  return res;
}

CheckResult check_relu_coupling_saddle(std::uint64_t seed) {
  CheckResult res;
  Instance inst;
  GFPair gf;
  bool found = false;
  for (std::uint64_t offset = 1; offset < 600 && !found; ++offset) {
    if (!make_stationary(1, 1, 2, 6, ActivationKind::ReLU, seed + offset, 0.4, inst)) continue;
    gf = compute_GF(inst.net, inst.data);
    if (max_abs(gf.F) < 1e-3) continue;
    found = true;
  }
  if (!found) {
    res.evidence = {{"error", "no stationary relu instance with output coupling found"}};
    return res;
  }

  EmbedSpec spec;
  spec.kind = EmbedKind::ReplicateReLU;
  spec.target_hidden = 2;
  spec.beta = {0.8, 1.6};
  spec.gamma = {0.5, 0.375};  // beta . gamma = 1 preserves the function
  HessianReport report = assemble_embedded_hessian(inst.net, inst.data, spec);
  LandscapeVerdict verdict = classify(report);

  res.pass = max_abs(gf.G) == 0.0 && max_abs(report.tildeG) == 0.0 &&
             verdict.cls == PointClass::Saddle;
  res.evidence = {{"max_abs_coupling", max_abs(gf.F)},
                  {"max_abs_eta_curvature", max_abs(report.tildeG)},
                  {"class", class_name(verdict.cls)}};
  return res;
}

CheckResult check_relu_semi_flat(std::uint64_t seed) {
  CheckResult res;
  Instance inst;
  bool found = false;
  for (std::uint64_t offset = 1; offset < 200 && !found; ++offset)
    found = zero_error_instance(1, 2, 6, ActivationKind::ReLU, seed + offset, 0xF00D, 1.0, inst);
  if (!found) {
    res.evidence = {{"error", "no off-kink zero-error relu instance found"}};
    return res;
  }

  // Replication of a zero-error point: every surplus direction is exactly
  // flat inside the certified radius.
  EmbedSpec rep = replicate_spec(4, {0.5, 0.3, 0.2});
  HessianReport report = assemble_embedded_hessian(inst.net, inst.data, rep);
  FlatProbeConfig cfg;
  cfg.net = embed(inst.net, rep);
  cfg.data = inst.data;
  cfg.seed = seed + 11;
  cfg.radius =
      std::min(1e-3, 0.5 * compute_flat_radius(cfg.net, inst.data, build_reparam_basis(rep)));
  LandscapeVerdict rep_verdict = classify(report, &cfg);

  // Silenced surplus units (bias outside the data range): the loss is
  // constant on the whole surplus box, so the spectrum gains exact zeros.
  EmbedSpec box;
  box.kind = EmbedKind::InactiveUnitsReLU;
  box.target_hidden = 4;
  box.v_extra = Matrix(2, 1);
  box.v_extra(0, 0) = 0.7;
  box.v_extra(1, 0) = -0.4;
  FlatProbeConfig box_cfg;
  box_cfg.net = embed(inst.net, box);
  box_cfg.data = inst.data;
  box_cfg.seed = seed + 12;
  // At zero error the exact Hessian is the Gauss-Newton matrix J^T J, whose
  // silenced rows are exactly zero (finite differences would smear them).
  ResidualJacobian rj = residual_jacobian(box_cfg.net, inst.data, KinkPolicy::ZeroSubgradient);
  LandscapeVerdict box_verdict =
      classify(analyze_hessian(rj.J.transpose() * rj.J), &box_cfg);

  res.pass = max_abs(report.tildeF) == 0.0 && rep_verdict.cls == PointClass::SemiFlatMinimum &&
             rep_verdict.n_zero >= 6 && box_verdict.cls == PointClass::SemiFlatMinimum &&
             box_verdict.n_zero >= 6;
  res.evidence = {{"replication_class", class_name(rep_verdict.cls)},
                  {"replication_zero_directions", rep_verdict.n_zero},
                  {"silenced_class", class_name(box_verdict.cls)},
                  {"silenced_zero_directions", box_verdict.n_zero}};
  return res;
}

CheckResult check_case_table(std::uint64_t seed) {
  CheckResult res;
  Instance pos, neg, indef;
  if (!find_M1_instance(1, seed, pos) || !find_M1_instance(-1, seed, neg) ||
      !find_M1_instance(0, seed, indef)) {
    res.evidence = {{"error", "case-table instance construction failed"}};
    return res;
  }

  struct Case {
    const char* label;
    const Instance* inst;
    Vec lambda;
    PointClass expect;
  };
  const Case cases[] = {
      {"1a", &pos, {0.3, 0.7}, PointClass::Minimum},
      {"1b", &pos, {1.5, -0.5}, PointClass::Saddle},
      {"2a", &neg, {2.0, -1.0}, PointClass::Minimum},
      {"2b", &neg, {0.6, 0.7, -0.3}, PointClass::Saddle},
      {"3", &indef, {0.5, 0.5}, PointClass::Saddle},
  };

  bool all = true;
  Json rows = Json::array();
  std::uint64_t probe_seed = seed + 90;
  for (const Case& c : cases) {
    GFPair gf = compute_GF(c.inst->net, c.inst->data);
    PointClass predicted = classify_unit_replication_M1(gf.G, c.lambda, true);
    PointClass numerical =
        numerical_class(*c.inst, replicate_spec(c.lambda.size(), c.lambda), probe_seed++);
    // Predicted minima keep exactly-flat replication directions, which the
    // numerical verdict reports as a semi-flat minimum.
    PointClass mapped =
        numerical == PointClass::SemiFlatMinimum ? PointClass::Minimum : numerical;
    const bool match = predicted == c.expect && mapped == c.expect;
    all = all && match;
    rows.push_back({{"case", c.label},
                    {"predicted", class_name(predicted)},
                    {"numerical", class_name(numerical)},
                    {"expected", class_name(c.expect)},
                    {"match", match}});
  }
  res.pass = all;
  res.evidence = {{"cases", rows}};
  return res;
}

CheckResult check_zero_error_blocks(std::uint64_t seed) {
  CheckResult res;
  Instance tanh_inst, relu_inst;
  bool ok_tanh = false, ok_relu = false;
  for (std::uint64_t offset = 1; offset < 100 && !ok_tanh; ++offset)
    ok_tanh = zero_error_instance(1, 2, 7, ActivationKind::Tanh, seed + offset, 0xBEEF, 1.0,
                                  tanh_inst);
  for (std::uint64_t offset = 1; offset < 100 && !ok_relu; ++offset)
    ok_relu = zero_error_instance(2, 2, 8, ActivationKind::ReLU, seed + offset, 0xCAFE, 0.7,
                                  relu_inst);
  if (!ok_tanh || !ok_relu) {
    res.evidence = {{"error", "zero-error instance construction failed"}};
    return res;
  }

  // Smooth inactive units: only the surplus input-weight block survives.
  EmbedSpec units;
  units.kind = EmbedKind::InactiveUnits;
  units.target_hidden = 4;
  units.v_extra = Matrix(2, 1);
  units.v_extra(0, 0) = 0.9;
  units.v_extra(1, 0) = -0.6;
  SurplusBlocks s1 = surplus_hessian_blocks(embed(tanh_inst.net, units), tanh_inst.data,
                                            units, 2);

  // Inactive propagation: only the surplus activation Gram block survives.
  EmbedSpec prop;
  prop.kind = EmbedKind::InactiveProp;
  prop.target_hidden = 4;
  prop.w_extra = Matrix(2, 2);
  prop.w_extra.set_row(0, {0.8, -0.3});
  prop.w_extra.set_row(1, {-0.5, 0.2});
  SurplusBlocks s2 = surplus_hessian_blocks(embed(tanh_inst.net, prop), tanh_inst.data,
                                            prop, 2);
  EmbedSpec prop3 = prop;
  prop3.w_extra = Matrix(2, 3);
  prop3.w_extra.set_row(0, {0.8, -0.3, 0.1});
  prop3.w_extra.set_row(1, {-0.5, 0.2, 0.4});
  SurplusBlocks s3 = surplus_hessian_blocks(embed(relu_inst.net, prop3), relu_inst.data,
                                            prop3, 2);

  // Silenced relu units and relu replication: every surplus block vanishes.
  EmbedSpec box;
  box.kind = EmbedKind::InactiveUnitsReLU;
  box.target_hidden = 4;
  box.v_extra = Matrix(2, 1);
  box.v_extra(0, 0) = 0.7;
  box.v_extra(1, 0) = -0.4;
  SurplusBlocks silenced = surplus_hessian_blocks(embed(relu_inst.net, box), relu_inst.data,
                                                  box, 2);
  EmbedSpec rep = replicate_spec(4, {0.5, 0.3, 0.2});
  SurplusBlocks replicated = surplus_hessian_blocks(embed(relu_inst.net, rep), relu_inst.data,
                                                    rep, 2);

  res.pass = s1.zero_violation <= 1e-7 && max_abs(s1.in_in) > 0.1 &&
             s2.zero_violation <= 1e-7 && max_abs(s2.out_out) > 1e-3 &&
             s3.zero_violation <= 1e-7 && silenced.zero_violation <= 1e-8 &&
             replicated.zero_violation <= 1e-7;
  res.evidence = {{"smooth_inactive_zero_violation", s1.zero_violation},
                  {"smooth_inactive_live_block", max_abs(s1.in_in)},
                  {"smooth_prop_zero_violation", s2.zero_violation},
                  {"relu_prop_zero_violation", s3.zero_violation},
                  {"relu_silenced_zero_violation", silenced.zero_violation},
                  {"relu_replication_zero_violation", replicated.zero_violation}};
  return res;
}

CheckResult check_tamper_rejection(std::uint64_t seed) {
  CheckResult res;
  RngStream rng(seed, {0x7A3B});
  NetworkParams net = rand_net(1, 2, 1, ActivationKind::Tanh, rng);

  // A zero replication coefficient is function-preserving but outside the
  // classification theory; both verdict paths must refuse it cleanly.
  std::string zero_code = "none", basis_code = "none", sum_code = "none";
  try {
    classify_unit_replication_M1(Matrix::identity(2), {0.5, 0.5, 0.0}, true);
  } catch (const Error& e) {
    zero_code = e.code();
  }
  try {
    build_reparam_basis(replicate_spec(4, {0.5, 0.5, 0.0}));
  } catch (const Error& e) {
    basis_code = e.code();
  }
  try {
    embed(net, replicate_spec(3, {0.5, 0.4}));
  } catch (const Error& e) {
    sum_code = e.code();
  }
  res.pass = zero_code == "SpecInvariantViolated" && basis_code == "ZeroWeight" &&
             sum_code == "SpecInvariantViolated";
  res.evidence = {{"zero_coefficient_code", zero_code},
                  {"zero_coefficient_basis_code", basis_code},
                  {"bad_sum_code", sum_code}};
  return res;
}

}  // namespace

Json run_classification_suite(std::uint64_t seed) {
  struct Entry {
    const char* name;
    CheckResult (*fn)(std::uint64_t);
  };
  const Entry entries[] = {
      {"function_preserving_embeddings", check_function_preservation},
      {"surplus_embeddings_preserve_stationarity", check_stationarity},
      {"output_coupling_creates_saddle", check_smooth_coupling_saddle},
      {"relu_replication_coupling_creates_saddle", check_relu_coupling_saddle},
      {"relu_zero_error_embeds_to_semi_flat_minimum", check_relu_semi_flat},
      {"unit_replication_case_table", check_case_table},
      {"zero_error_surplus_block_structure", check_zero_error_blocks},
      {"tampered_replication_spec_rejected", check_tamper_rejection},
  };

  Json checks = Json::array();
  bool all_pass = true;
  for (const Entry& entry : entries) {
    CheckResult result;
    try {
      result = entry.fn(seed);
    } catch (const Error& e) {
      result.pass = false;
      result.evidence = {{"error", e.what()}};
    }
    all_pass = all_pass && result.pass;
    checks.push_back({{"name", entry.name}, {"pass", result.pass}, {"evidence", result.evidence}});
  }
  return Json{{"seed", seed}, {"all_pass", all_pass}, {"checks", checks}};
}

}  // namespace embedlab
