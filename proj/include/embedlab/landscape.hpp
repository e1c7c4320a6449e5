#pragma once

#include <cstdint>

#include "embedlab/embedding.hpp"
#include "embedlab/matrix.hpp"
#include "embedlab/network.hpp"
#include "embedlab/serialize.hpp"

namespace embedlab {

// Curvature data of one hidden unit against a dataset:
//   F = sum_nu delta_nu (phi'(z_nu) xt_nu)^T          (M x (D+1))
//   G = sum_nu (delta_nu . zeta) phi''(z_nu) xt xt^T  ((D+1) x (D+1))
// where delta_nu is the loss derivative at the network output, z_nu the
// unit's preactivation, zeta its output weight row, and xt = (x, -1).
struct GFPair {
  Matrix G;
  Matrix F;
};

enum class CoordFrame { Original, Reparam };

// Hessian of the widened loss at an embedded replication point, expressed in
// the replication coordinates (w_rest, b, eta | v_rest, a, xi). The analytic
// structure is block-diagonal: the narrow Hessian over (w_rest, b, v_rest, a)
// and [[0, tildeF], [tildeF^T, tildeG]] over (xi, eta), with
// tildeF = (A Lambda A^T) kron F and tildeG = (A Lambda A^T) kron G.
struct HessianReport {
  CoordFrame coords = CoordFrame::Original;
  Matrix full;
  SymEig eig;
  Matrix narrow_hessian;
  Matrix alat;    // A Lambda A^T, E x E
  Matrix tildeF;  // E*M x E*(D+1)
  Matrix tildeG;  // E*(D+1) x E*(D+1)
  Matrix to_original;  // theta = to_original * coords-vector

  // Layout bookkeeping for the Reparam frame.
  std::size_t input_dim = 0, output_dim = 0, narrow_hidden = 0, surplus = 0;
  std::size_t eta_off = 0, xi_off = 0;

  // Finite-difference cross-check of the analytic assembly (skipped when the
  // FD stencil would straddle a relu kink).
  bool fd_checked = false;
  double fd_max_diff = 0.0;
  double cross_violation = 0.0;  // largest FD entry in structurally-zero blocks
};

enum class PointClass { Minimum, SemiFlatMinimum, Saddle, Degenerate };
const char* point_class_name(PointClass cls);

struct LandscapeVerdict {
  PointClass cls = PointClass::Degenerate;
  std::size_t n_pos = 0, n_neg = 0, n_zero = 0;
  double epsilon = 0.0;     // zero-eigenvalue threshold used
  Matrix flat_basis;        // columns, original network coordinates
  double probe_residual = -1.0;  // max loss deviation over probes; -1 if unprobed
};

struct StationaryCheck {
  double grad_inf = 0.0;
  double loss = 0.0;
  bool pass = false;
};

struct FlatProbeConfig {
  NetworkParams net;
  Dataset data;
  double radius = 1e-3;
  std::size_t samples = 32;
  std::uint64_t seed = 0;
};

// Blocks of the Hessian over the surplus parameters of an embedding, in
// (output-side, input-side) order: raw (v, w) for inactive embeddings and
// (xi, eta) for replications. zero_violation is the largest entry found in
// the blocks the zero-training-error theory predicts to vanish.
struct SurplusBlocks {
  Matrix out_out;
  Matrix out_in;
  Matrix in_in;
  double zero_violation = 0.0;
};

constexpr double kStationaryTol = 1e-7;

// F and G for the given unit (default: the last one). ReLU preactivations on
// a kink raise KinkHit; off kinks G is exactly zero there.
GFPair compute_GF(const NetworkParams& narrow, const Dataset& data,
                  std::size_t unit = kDefaultUnit);

// Requires `narrow` stationary to kStationaryTol*(1+loss) (NotStationary
// otherwise) and a replication spec. fd_check transports a finite-difference
// Hessian of the widened loss into the same frame and records the deviation.
HessianReport assemble_embedded_hessian(const NetworkParams& narrow, const Dataset& data,
                                        const EmbedSpec& spec, bool fd_check = true);

// Wraps an already-computed Hessian in original coordinates.
HessianReport analyze_hessian(const Matrix& full);

StationaryCheck verify_stationary(const NetworkParams& net, const Dataset& data,
                                  double tol = kStationaryTol);

// Eigenvalue-sign classification with zero threshold 1e-8*max(1, max|eig|).
// Mixed signs give Saddle. Zero directions are certified by exact flat
// probing when a probe configuration is supplied; otherwise (or when the
// probe detects curvature) the verdict stays Degenerate.
LandscapeVerdict classify(const HessianReport& report, const FlatProbeConfig* probe = nullptr);

// Second-order prediction for replicating one unit of a single-output
// network: sign-definite G and the signs of lambda decide minimum vs saddle.
// narrow_hessian_pd reports whether the narrow point is a strict minimum;
// without it no prediction is made. A singular G raises ZeroEigenvalueG.
PointClass classify_unit_replication_M1(const Matrix& G, const Vec& lambda,
                                        bool narrow_hessian_pd);

// Max |L(theta + d) - L(theta)| over random unit vectors d in the span of
// the direction columns, scaled to the given radius.
double probe_flat_subspace(const NetworkParams& net, const Dataset& data,
                           const Matrix& directions, double radius, std::size_t samples,
                           std::uint64_t seed);

// Certified flatness radius for the eta directions of a relu replication:
// min over samples nu and copies j of |b.xt_nu| / (||xt_nu|| sum_c |A(c,j)|).
// Any eta with stacked norm below this preserves every activation sign.
// Raises KinkHit when some preactivation is already zero.
double compute_flat_radius(const NetworkParams& wide, const Dataset& data,
                           const ReparamBasis& basis);

// Requires a zero-training-error point (NotZeroError otherwise).
SurplusBlocks surplus_hessian_blocks(const NetworkParams& wide, const Dataset& data,
                                     const EmbedSpec& spec, std::size_t narrow_hidden);

Json verdict_to_json(const LandscapeVerdict& verdict);
Json hessian_report_to_json(const HessianReport& report);

}  // namespace embedlab
