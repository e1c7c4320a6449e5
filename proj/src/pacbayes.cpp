#include "embedlab/pacbayes.hpp"

#include <cmath>
#include <cstddef>
#include <string>

#include "embedlab/errors.hpp"

namespace embedlab {

namespace {

// Relative spectral floor: eigenvalues of a curvature matrix below this
// (times max(1, lambda_max)) count as flat directions and are raised to the
// floor. Set above finite-difference truncation noise (~1e-7 relative), the
// roughest source these matrices come from, and below any genuine curvature
// seen at trained minima, so rank-deficient spectra split cleanly.
constexpr double kEigenFloorScale = 1e-6;

// Spectral summary of a symmetric positive semi-definite curvature matrix
// with small/zero eigenvalues raised to a relative floor. An eigenvalue below
// -floor signals a genuinely indefinite matrix and is rejected.
struct PdSummary {
  double logdet = 0.0;
  double trace_inverse = 0.0;
  std::size_t floored = 0;
};

PdSummary pd_summary(const Matrix& m, const std::string& what) {
  if (m.rows != m.cols) {
    fail("DimMismatch", what + " must be square, got " +
                            std::to_string(m.rows) + "x" +
                            std::to_string(m.cols));
  }
  if (m.rows == 0) return PdSummary{};  // no surplus block at all
  // Symmetrize first: callers hand in finite-difference Hessians whose
  // off-diagonal pairs agree only to truncation error.
  Matrix sym(m.rows, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      sym(i, j) = 0.5 * (m(i, j) + m(j, i));
    }
  }
  const SymEig eig = sym_eig(sym);
  double max_eig = 0.0;
  for (double ev : eig.eigenvalues) max_eig = std::max(max_eig, ev);
  const double floor = kEigenFloorScale * std::max(1.0, max_eig);

  PdSummary out;
  for (double ev : eig.eigenvalues) {
    if (ev < -floor) {
      fail("SingularCovariance",
           what + " has negative eigenvalue " + format_double(ev));
    }
    double lam = ev;
    if (lam < floor) {
      lam = floor;
      ++out.floored;
    }
    out.logdet += std::log(lam);
    out.trace_inverse += 1.0 / lam;
  }
  return out;
}

double sum_terms(const std::map<std::string, double>& terms) {
  double total = 0.0;
  for (const auto& [key, value] : terms) {
    (void)key;
    total += value;
  }
  return total;
}

}  // namespace

void PacBayesConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    fail("SpecInvariantViolated",
         "tau must be positive and finite, got " + format_double(tau));
  }
  if (!(sigma >= tau) || !std::isfinite(sigma)) {
    fail("SpecInvariantViolated", "sigma must be finite and >= tau, got "
                                      "sigma=" +
                                      format_double(sigma) +
                                      " tau=" + format_double(tau));
  }
  if (!(box_half_width > 1.0) || !std::isfinite(box_half_width)) {
    fail("SpecInvariantViolated", "box_half_width must be > 1, got " +
                                      format_double(box_half_width));
  }
  if (!(delta > 0.0) || !(delta <= 1.0)) {
    fail("SpecInvariantViolated",
         "delta must lie in (0, 1], got " + format_double(delta));
  }
  if (n < 1) {
    fail("SpecInvariantViolated", "n must be at least 1");
  }
}

KLBreakdown kl_smooth(const Matrix& core_curvature,
                      const Matrix& surplus_curvature, double theta_norm,
                      std::size_t d0, std::size_t d1,
                      const PacBayesConfig& cfg) {
  cfg.validate();
  if (core_curvature.rows != d0) {
    fail("DimMismatch", "core curvature is " +
                            std::to_string(core_curvature.rows) +
                            "-dimensional but d0=" + std::to_string(d0));
  }
  if (surplus_curvature.rows != d1) {
    fail("DimMismatch", "surplus curvature is " +
                            std::to_string(surplus_curvature.rows) +
                            "-dimensional but d1=" + std::to_string(d1));
  }
  if (!std::isfinite(theta_norm) || theta_norm < 0.0) {
    fail("BadRange",
         "theta_norm must be a finite nonnegative number, got " +
             format_double(theta_norm));
  }
  const PdSummary core = pd_summary(core_curvature, "core curvature");
  const PdSummary surplus =
      pd_summary(surplus_curvature, "surplus curvature");

  const double log_ratio = 2.0 * (std::log(cfg.sigma) - std::log(cfg.tau));
  const double shrink = (cfg.tau / cfg.sigma) * (cfg.tau / cfg.sigma);

  KLBreakdown out;
  out.floored_core = core.floored;
  out.floored_surplus = surplus.floored;
  out.terms["dim_log_ratio_core"] = 0.5 * static_cast<double>(d0) * log_ratio;
  out.terms["dim_log_ratio_surplus"] =
      0.5 * static_cast<double>(d1) * log_ratio;
  out.terms["logdet_H"] = 0.5 * core.logdet;
  out.terms["logdet_S"] = 0.5 * surplus.logdet;
  out.terms["trace_term"] =
      0.5 * shrink * (core.trace_inverse + surplus.trace_inverse);
  out.terms["norm_term"] =
      0.5 * theta_norm * theta_norm / (cfg.sigma * cfg.sigma);
  out.terms["dim_offset"] = -0.5 * static_cast<double>(d0 + d1);
  out.total = sum_terms(out.terms);
  return out;
}

KLBreakdown kl_relu(const Matrix& core_curvature, double theta_norm,
                    std::size_t d0, const PacBayesConfig& cfg) {
  cfg.validate();
  if (core_curvature.rows != d0) {
    fail("DimMismatch", "core curvature is " +
                            std::to_string(core_curvature.rows) +
                            "-dimensional but d0=" + std::to_string(d0));
  }
  if (!std::isfinite(theta_norm) || theta_norm < 0.0) {
    fail("BadRange",
         "theta_norm must be a finite nonnegative number, got " +
             format_double(theta_norm));
  }
  const PdSummary core = pd_summary(core_curvature, "core curvature");

  const double log_ratio = 2.0 * (std::log(cfg.sigma) - std::log(cfg.tau));
  const double shrink = (cfg.tau / cfg.sigma) * (cfg.tau / cfg.sigma);

  KLBreakdown out;
  out.floored_core = core.floored;
  out.terms["dim_log_ratio_core"] = 0.5 * static_cast<double>(d0) * log_ratio;
  out.terms["logdet_H"] = 0.5 * core.logdet;
  out.terms["trace_term"] = 0.5 * shrink * core.trace_inverse;
  out.terms["norm_term"] =
      0.5 * theta_norm * theta_norm / (cfg.sigma * cfg.sigma);
  out.terms["dim_offset"] = -0.5 * static_cast<double>(d0);
  out.total = sum_terms(out.terms);
  return out;
}

double pac_bayes_bound(double train_loss_mean, const KLBreakdown& kl,
                       const PacBayesConfig& cfg) {
  cfg.validate();
  if (cfg.n < 2) {
    fail("BadRange", "bound needs n >= 2, got n=" + std::to_string(cfg.n));
  }
  if (!(train_loss_mean >= 0.0) || !(train_loss_mean <= 1.0)) {
    fail("BadRange", "train_loss_mean must lie in [0, 1], got " +
                         format_double(train_loss_mean));
  }
  const double nn = static_cast<double>(cfg.n);
  const double inner =
      2.0 * (kl.total + std::log(nn / cfg.delta)) / (nn - 1.0);
  if (!(inner >= 0.0)) {
    fail("BadRange", "divergence plus confidence term is negative: " +
                         format_double(inner));
  }
  return train_loss_mean + 2.0 * std::sqrt(inner);
}

Matrix optimal_posterior_covariance(const Matrix& curvature, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    fail("BadRange",
         "tau must be positive and finite, got " + format_double(tau));
  }
  if (curvature.rows != curvature.cols) {
    fail("DimMismatch", "curvature must be square, got " +
                            std::to_string(curvature.rows) + "x" +
                            std::to_string(curvature.cols));
  }
  Matrix sym(curvature.rows, curvature.cols);
  for (std::size_t i = 0; i < curvature.rows; ++i) {
    for (std::size_t j = 0; j < curvature.cols; ++j) {
      sym(i, j) = 0.5 * (curvature(i, j) + curvature(j, i));
    }
  }
  const SymEig eig = sym_eig(sym);
  double max_eig = 0.0;
  for (double ev : eig.eigenvalues) max_eig = std::max(max_eig, ev);
  const double floor = kEigenFloorScale * std::max(1.0, max_eig);

  const std::size_t d = curvature.rows;
  Matrix cov(d, d);
  for (std::size_t k = 0; k < d; ++k) {
    double ev = eig.eigenvalues[k];
    if (ev < -floor) {
      fail("SingularCovariance",
           "curvature has negative eigenvalue " + format_double(ev));
    }
    const double lam = std::max(ev, floor);
    const double scale = tau * tau / lam;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        cov(i, j) += scale * eig.eigenvectors(i, k) * eig.eigenvectors(j, k);
      }
    }
  }
  // Clean up rounding asymmetry from the eigenvector outer products.
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const double avg = 0.5 * (cov(i, j) + cov(j, i));
      cov(i, j) = avg;
      cov(j, i) = avg;
    }
  }
  return cov;
}

double rescale_unit_interval(double loss) {
  if (std::isnan(loss) || loss < 0.0) {
    fail("BadRange",
         "loss must be nonnegative, got " + format_double(loss));
  }
  if (std::isinf(loss)) return 1.0;
  return loss / (1.0 + loss);
}

Json kl_breakdown_to_json(const KLBreakdown& kl) {
  Json j;
  j["total"] = kl.total;
  Json terms = Json::object();
  for (const auto& [key, value] : kl.terms) terms[key] = value;
  j["terms"] = terms;
  j["floored_core"] = kl.floored_core;
  j["floored_surplus"] = kl.floored_surplus;
  return j;
}

}  // namespace embedlab
