#include "embedlab/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "embedlab/errors.hpp"
#include "embedlab/rng.hpp"

namespace embedlab {
namespace {

void check_dims(const NetworkParams& net, const Dataset& data) {
  if (data.inputs.cols != net.input_dim || data.targets.cols != net.output_dim ||
      data.inputs.rows != data.targets.rows)
    fail("DimMismatch", "dataset shape disagrees with the network");
}

bool is_replication(EmbedKind kind) {
  return kind == EmbedKind::Replicate || kind == EmbedKind::ReplicateReLU;
}

NetworkParams move_unit_last(const NetworkParams& net, std::size_t unit) {
  NetworkParams out = net;
  if (unit + 1 == net.hidden) return out;
  std::size_t slot = 0;
  for (std::size_t i = 0; i < net.hidden; ++i) {
    if (i == unit) continue;
    out.w.set_row(slot, net.w.row(i));
    out.v.set_row(slot, net.v.row(i));
    ++slot;
  }
  out.w.set_row(slot, net.w.row(unit));
  out.v.set_row(slot, net.v.row(unit));
  return out;
}

// Orthonormalize the columns, dropping near-dependent ones. Two passes of
// modified Gram-Schmidt keep the result orthonormal to machine precision.
std::vector<Vec> orthonormal_columns(const Matrix& directions) {
  std::vector<Vec> basis;
  for (std::size_t j = 0; j < directions.cols; ++j) {
    Vec v = directions.col(j);
    double orig = norm2(v);
    if (orig == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& b : basis) {
        double proj = dot(v, b);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= proj * b[i];
      }
    double nrm = norm2(v);
    if (nrm <= 1e-10 * orig) continue;
    for (double& e : v) e /= nrm;
    basis.push_back(std::move(v));
  }
  return basis;
}

Matrix congruence(const Matrix& T, const Matrix& H) { return T.transpose() * H * T; }

}  // namespace

const char* point_class_name(PointClass cls) {
  switch (cls) {
    case PointClass::Minimum: return "Minimum";
    case PointClass::SemiFlatMinimum: return "SemiFlatMinimum";
    case PointClass::Saddle: return "Saddle";
    default: return "Degenerate";
  }
}

GFPair compute_GF(const NetworkParams& narrow, const Dataset& data, std::size_t unit) {
  narrow.validate();
  check_dims(narrow, data);
  const std::size_t D = narrow.input_dim;
  const std::size_t M = narrow.output_dim;
  std::size_t r = (unit == kDefaultUnit) ? narrow.hidden - 1 : unit;
  if (r >= narrow.hidden) fail("BadIndex", "unit index out of range");

  Vec zeta = narrow.v.row(r);
  GFPair gf{Matrix(D + 1, D + 1), Matrix(M, D + 1)};
  for (std::size_t nu = 0; nu < data.size(); ++nu) {
    Vec x = data.inputs.row(nu);
    if (!narrow.activation.smooth() && on_kink(narrow, r, x))
      fail("KinkHit", "preactivation of the analyzed unit sits on a kink");
    Vec f = forward(narrow, x);
    Vec delta = loss_delta(data, f, nu);
    double z = narrow.preactivation(r, x);
    double dphi = narrow.activation.dphi(z);
    double ddphi = narrow.activation.ddphi(z);
    Vec xt = x;
    xt.push_back(-1.0);
    double dz = dot(delta, zeta);
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t d = 0; d <= D; ++d) gf.F(m, d) += delta[m] * dphi * xt[d];
    if (ddphi != 0.0)
      for (std::size_t d = 0; d <= D; ++d)
        for (std::size_t d2 = 0; d2 <= D; ++d2) gf.G(d, d2) += dz * ddphi * xt[d] * xt[d2];
  }
  return gf;
}

HessianReport assemble_embedded_hessian(const NetworkParams& narrow, const Dataset& data,
                                        const EmbedSpec& spec, bool fd_check) {
  if (!is_replication(spec.kind))
    fail("SpecInvariantViolated", "embedded Hessian assembly requires a replication spec");
  check_dims(narrow, data);

  GradReport at_point = backprop(narrow, data);
  if (norm_inf(at_point.grad) > kStationaryTol * (1.0 + at_point.loss))
    fail("NotStationary", "the source network is not a stationary point");

  const std::size_t H0 = narrow.hidden;
  const std::size_t D = narrow.input_dim;
  const std::size_t M = narrow.output_dim;
  std::size_t r = (spec.unit == kDefaultUnit) ? H0 - 1 : spec.unit;

  NetworkParams wide = embed(narrow, spec);
  ReparamBasis basis = build_reparam_basis(spec);
  const std::size_t E = basis.surplus();

  HessianReport report;
  report.coords = CoordFrame::Reparam;
  report.input_dim = D;
  report.output_dim = M;
  report.narrow_hidden = H0;
  report.surplus = E;

  report.alat = Matrix(E, E);
  for (std::size_t c = 0; c < E; ++c)
    for (std::size_t c2 = 0; c2 < E; ++c2) {
      double s = 0.0;
      for (std::size_t j = 0; j <= E; ++j) s += basis.A(c, j) * basis.weights[j] * basis.A(c2, j);
      report.alat(c, c2) = s;
    }

  GFPair gf = compute_GF(narrow, data, r);
  report.tildeF = kron(report.alat, gf.F);
  report.tildeG = kron(report.alat, gf.G);
  report.narrow_hessian = fd_hessian(move_unit_last(narrow, r), data);

  const std::size_t wsz = D + 1;
  const std::size_t wtotal = wide.hidden * wsz;
  const std::size_t eta_off = H0 * wsz;
  const std::size_t xi_off = wtotal + H0 * M;
  report.eta_off = eta_off;
  report.xi_off = xi_off;

  const std::size_t P = wide.param_count();
  report.full = Matrix(P, P);
  // The narrow block keeps its own layout except that the input-side and
  // output-side halves are spliced around the eta and xi slots.
  auto omap = [&](std::size_t n) { return n < H0 * wsz ? n : wtotal + (n - H0 * wsz); };
  for (std::size_t i = 0; i < report.narrow_hessian.rows; ++i)
    for (std::size_t j = 0; j < report.narrow_hessian.cols; ++j)
      report.full(omap(i), omap(j)) = report.narrow_hessian(i, j);
  for (std::size_t i = 0; i < E * wsz; ++i)
    for (std::size_t j = 0; j < E * wsz; ++j)
      report.full(eta_off + i, eta_off + j) = report.tildeG(i, j);
  for (std::size_t i = 0; i < E * M; ++i)
    for (std::size_t j = 0; j < E * wsz; ++j) {
      report.full(xi_off + i, eta_off + j) = report.tildeF(i, j);
      report.full(eta_off + j, xi_off + i) = report.tildeF(i, j);
    }

  report.eig = sym_eig(report.full);
  report.to_original = reparam_jacobian(basis, wide);

  if (fd_check) {
    try {
      Matrix transported = congruence(report.to_original, fd_hessian(wide, data));
      report.fd_max_diff = max_abs(report.full - transported);
      // Lemma-2 structure: cross blocks between the narrow coordinates and
      // (xi, eta) vanish, as does the xi-xi block.
      double cross = 0.0;
      auto in_surplus = [&](std::size_t i) {
        return (i >= eta_off && i < eta_off + E * wsz) || i >= xi_off;
      };
      for (std::size_t i = 0; i < P; ++i)
        for (std::size_t j = 0; j < P; ++j) {
          bool si = in_surplus(i), sj = in_surplus(j);
          bool structural_zero = (si != sj) || (i >= xi_off && j >= xi_off);
          if (structural_zero) cross = std::max(cross, std::fabs(transported(i, j)));
        }
      report.cross_violation = cross;
      report.fd_checked = true;
    } catch (const Error&) {
      report.fd_checked = false;  // FD stencil straddled a relu kink
    }
  }
  return report;
}

HessianReport analyze_hessian(const Matrix& full) {
  HessianReport report;
  report.coords = CoordFrame::Original;
  report.full = full;
  report.eig = sym_eig(full);
  report.to_original = Matrix::identity(full.rows);
  return report;
}

StationaryCheck verify_stationary(const NetworkParams& net, const Dataset& data, double tol) {
  GradReport rep = backprop(net, data);
  StationaryCheck check;
  check.grad_inf = norm_inf(rep.grad);
  check.loss = rep.loss;
  check.pass = check.grad_inf <= tol * (1.0 + rep.loss);
  return check;
}

LandscapeVerdict classify(const HessianReport& report, const FlatProbeConfig* probe) {
  const Vec& ev = report.eig.eigenvalues;
  double emax = 0.0;
  for (double e : ev) emax = std::max(emax, std::fabs(e));
  LandscapeVerdict verdict;
  verdict.epsilon = 1e-8 * std::max(1.0, emax);
  for (double e : ev) {
    if (e > verdict.epsilon)
      ++verdict.n_pos;
    else if (e < -verdict.epsilon)
      ++verdict.n_neg;
    else
      ++verdict.n_zero;
  }

  if (verdict.n_neg >= 1 && verdict.n_pos >= 1) {
    verdict.cls = PointClass::Saddle;
    return verdict;
  }
  if (verdict.n_neg >= 1) {
    verdict.cls = PointClass::Degenerate;  // nonpositive curvature only
    return verdict;
  }
  if (verdict.n_zero == 0) {
    verdict.cls = PointClass::Minimum;
    return verdict;
  }

  // Nonnegative spectrum with zero directions: second order cannot certify a
  // minimum, so only probe-confirmed exact flatness upgrades the verdict.
  Matrix zero_dirs(ev.size(), verdict.n_zero);
  std::size_t col = 0;
  for (std::size_t j = 0; j < ev.size(); ++j)
    if (std::fabs(ev[j]) <= verdict.epsilon) zero_dirs.set_col(col++, report.eig.eigenvectors.col(j));
  verdict.flat_basis = report.to_original * zero_dirs;
  verdict.cls = PointClass::Degenerate;
  if (probe != nullptr) {
    double base = loss_total(probe->net, probe->data);
    verdict.probe_residual = probe_flat_subspace(probe->net, probe->data, verdict.flat_basis,
                                                 probe->radius, probe->samples, probe->seed);
    if (verdict.probe_residual <= 1e-12 * (1.0 + std::fabs(base)))
      verdict.cls = PointClass::SemiFlatMinimum;
  }
  return verdict;
}

PointClass classify_unit_replication_M1(const Matrix& G, const Vec& lambda,
                                        bool narrow_hessian_pd) {
  double sum = 0.0;
  for (double l : lambda) {
    if (l == 0.0) fail("SpecInvariantViolated", "lambda entries must be nonzero");
    sum += l;
  }
  if (std::fabs(sum - 1.0) > 1e-12) fail("SpecInvariantViolated", "lambda entries must sum to 1");
  if (!narrow_hessian_pd) return PointClass::Degenerate;

  SymEig eig = sym_eig(G);
  double emax = 0.0;
  for (double e : eig.eigenvalues) emax = std::max(emax, std::fabs(e));
  double eps = 1e-8 * std::max(1.0, emax);
  bool all_pos = true, all_neg = true;
  for (double e : eig.eigenvalues) {
    if (std::fabs(e) <= eps)
      fail("ZeroEigenvalueG", "G is singular at the sign threshold");
    all_pos = all_pos && e > 0.0;
    all_neg = all_neg && e < 0.0;
  }
  std::size_t pos_lambda = 0;
  for (double l : lambda)
    if (l > 0.0) ++pos_lambda;

  if (all_pos) return pos_lambda == lambda.size() ? PointClass::Minimum : PointClass::Saddle;
  if (all_neg) return pos_lambda == 1 ? PointClass::Minimum : PointClass::Saddle;
  return PointClass::Saddle;
}

double probe_flat_subspace(const NetworkParams& net, const Dataset& data,
                           const Matrix& directions, double radius, std::size_t samples,
                           std::uint64_t seed) {
  std::vector<Vec> basis = orthonormal_columns(directions);
  if (basis.empty()) return 0.0;
  double base = loss_total(net, data);
  Vec theta = net.flatten();
  NetworkParams probe = net;
  RngStream rng(seed, {0x666C6174u});
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Vec coeff(basis.size());
    for (double& c : coeff) c = rng.normal();
    double nrm = norm2(coeff);
    if (nrm == 0.0) continue;
    Vec point = theta;
    for (std::size_t k = 0; k < basis.size(); ++k) {
      double scale = radius * coeff[k] / nrm;
      for (std::size_t i = 0; i < point.size(); ++i) point[i] += scale * basis[k][i];
    }
    probe.unflatten(point);
    worst = std::max(worst, std::fabs(loss_total(probe, data) - base));
  }
  return worst;
}

double compute_flat_radius(const NetworkParams& wide, const Dataset& data,
                           const ReparamBasis& basis) {
  check_dims(wide, data);
  ReparamCoords coords = to_reparam(wide, basis);
  const std::size_t E = basis.surplus();
  Vec row_sums(E + 1, 0.0);
  for (std::size_t j = 0; j <= E; ++j)
    for (std::size_t c = 0; c < E; ++c) row_sums[j] += std::fabs(basis.A(c, j));

  double bnorm = norm2(coords.b);
  double delta = std::numeric_limits<double>::infinity();
  for (std::size_t nu = 0; nu < data.size(); ++nu) {
    Vec xt = data.inputs.row(nu);
    xt.push_back(-1.0);
    double z = dot(coords.b, xt);
    double xnorm = norm2(xt);
    if (std::fabs(z) <= 1e-12 * (1.0 + bnorm * xnorm))
      fail("KinkHit", "a sample preactivation vanishes, no flat radius exists");
    for (std::size_t j = 0; j <= E; ++j)
      delta = std::min(delta, std::fabs(z) / (xnorm * row_sums[j] + 1e-300));
  }
  return delta;
}

SurplusBlocks surplus_hessian_blocks(const NetworkParams& wide, const Dataset& data,
                                     const EmbedSpec& spec, std::size_t narrow_hidden) {
  check_dims(wide, data);
  double loss = loss_total(wide, data);
  if (loss > 1e-10 * (1.0 + max_abs(data.targets)))
    fail("NotZeroError", "surplus block structure requires zero training error");
  if (narrow_hidden == 0 || narrow_hidden > wide.hidden)
    fail("DimMismatch", "narrow hidden count out of range");

  const std::size_t D = wide.input_dim;
  const std::size_t M = wide.output_dim;
  const std::size_t H0 = narrow_hidden;
  const std::size_t E = wide.hidden - H0;
  const std::size_t wsz = D + 1;
  const std::size_t wtotal = wide.hidden * wsz;

  SurplusBlocks blocks;
  std::size_t out_off, in_off;
  Matrix H;
  if (is_replication(spec.kind)) {
    ReparamBasis basis = build_reparam_basis(spec);
    if (basis.surplus() != E) fail("DimMismatch", "basis size disagrees with the networks");
    H = congruence(reparam_jacobian(basis, wide), fd_hessian(wide, data));
    out_off = wtotal + H0 * M;  // xi
    in_off = H0 * wsz;          // eta
  } else {
    H = fd_hessian(wide, data);
    out_off = wtotal + H0 * M;  // surplus v rows
    in_off = H0 * wsz;          // surplus w rows
  }

  auto extract = [&](std::size_t roff, std::size_t rn, std::size_t coff, std::size_t cn) {
    Matrix sub(rn, cn);
    for (std::size_t i = 0; i < rn; ++i)
      for (std::size_t j = 0; j < cn; ++j) sub(i, j) = H(roff + i, coff + j);
    return sub;
  };
  blocks.out_out = extract(out_off, E * M, out_off, E * M);
  blocks.out_in = extract(out_off, E * M, in_off, E * wsz);
  blocks.in_in = extract(in_off, E * wsz, in_off, E * wsz);

  double violation = 0.0;
  auto track = [&](const Matrix& m) { violation = std::max(violation, max_abs(m)); };
  switch (spec.kind) {
    case EmbedKind::InactiveUnits:
      track(blocks.out_out);
      track(blocks.out_in);
      break;  // in_in is S1
    case EmbedKind::InactiveProp:
      track(blocks.out_in);
      track(blocks.in_in);
      break;  // out_out is S2 (smooth) or S3 (relu)
    default:
      track(blocks.out_out);  // silenced or replicated at zero error: all flat
      track(blocks.out_in);
      track(blocks.in_in);
      break;
  }
  blocks.zero_violation = violation;
  return blocks;
}

Json verdict_to_json(const LandscapeVerdict& verdict) {
  Json j;
  j["class"] = point_class_name(verdict.cls);
  j["n_pos"] = verdict.n_pos;
  j["n_neg"] = verdict.n_neg;
  j["n_zero"] = verdict.n_zero;
  j["epsilon"] = verdict.epsilon;
  j["flat_dim"] = verdict.flat_basis.cols;
  if (verdict.probe_residual >= 0.0)
    j["probe_residual"] = verdict.probe_residual;
  else
    j["probe_residual"] = nullptr;
  return j;
}

Json hessian_report_to_json(const HessianReport& report) {
  Json j;
  j["coords"] = report.coords == CoordFrame::Reparam ? "reparam" : "original";
  j["dim"] = report.full.rows;
  j["eigenvalues"] = report.eig.eigenvalues;
  if (report.coords == CoordFrame::Reparam) {
    j["narrow_hidden"] = report.narrow_hidden;
    j["surplus"] = report.surplus;
    j["alat"] = matrix_to_json(report.alat);
    j["tildeF_max"] = max_abs(report.tildeF);
    j["tildeG_max"] = max_abs(report.tildeG);
  }
  j["fd_checked"] = report.fd_checked;
  if (report.fd_checked) {
    j["fd_max_diff"] = report.fd_max_diff;
    j["cross_violation"] = report.cross_violation;
  }
  return j;
}

}  // namespace embedlab
