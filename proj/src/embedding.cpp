#include "embedlab/embedding.hpp"

#include <cmath>
#include <cstring>

#include "embedlab/errors.hpp"
#include "embedlab/rng.hpp"

namespace embedlab {
namespace {

constexpr double kSumTol = 1e-12;

const char* const kKindNames[] = {"replicate",          "replicate_relu", "inactive_units",
                                  "inactive_units_relu", "inactive_prop",  "inactive_both"};

bool is_relu_kind(EmbedKind kind) {
  return kind == EmbedKind::ReplicateReLU || kind == EmbedKind::InactiveUnitsReLU;
}

bool is_replication(EmbedKind kind) {
  return kind == EmbedKind::Replicate || kind == EmbedKind::ReplicateReLU;
}

std::size_t resolve_unit(const EmbedSpec& spec, std::size_t narrow_hidden) {
  std::size_t unit = (spec.unit == kDefaultUnit) ? narrow_hidden - 1 : spec.unit;
  if (unit >= narrow_hidden)
    fail("BadIndex", "replicated unit " + std::to_string(unit) + " out of range for hidden size " +
                         std::to_string(narrow_hidden));
  return unit;
}

// Returns the per-copy (input factor, output factor) pairs for a replication
// spec, checking the defining constraints.
void replication_factors(const EmbedSpec& spec, std::size_t copies, Vec& beta, Vec& gamma) {
  if (spec.kind == EmbedKind::Replicate) {
    if (spec.lambda.size() != copies)
      fail("SpecInvariantViolated", "lambda has " + std::to_string(spec.lambda.size()) +
                                        " entries, expected " + std::to_string(copies));
    double sum = 0.0;
    for (double l : spec.lambda) sum += l;
    if (std::fabs(sum - 1.0) > kSumTol)
      fail("SpecInvariantViolated", "lambda entries must sum to 1");
    beta.assign(copies, 1.0);
    gamma = spec.lambda;
    return;
  }
  if (spec.gamma.size() != copies || spec.beta.size() != copies)
    fail("SpecInvariantViolated", "gamma and beta must each have " + std::to_string(copies) +
                                      " entries");
  double weighted = 0.0;
  for (std::size_t j = 0; j < copies; ++j) {
    if (!(spec.beta[j] > 0.0)) fail("SpecInvariantViolated", "beta entries must be positive");
    weighted += spec.gamma[j] * spec.beta[j];
  }
  if (std::fabs(weighted - 1.0) > kSumTol)
    fail("SpecInvariantViolated", "gamma . beta must sum to 1");
  beta = spec.beta;
  gamma = spec.gamma;
}

Matrix surplus_or_default(const Matrix& supplied, std::size_t rows, std::size_t cols,
                          const char* what) {
  if (supplied.empty()) return Matrix(rows, cols);
  if (supplied.rows != rows || supplied.cols != cols)
    fail("SpecInvariantViolated", std::string(what) + " must be " + std::to_string(rows) + "x" +
                                      std::to_string(cols));
  return supplied;
}

}  // namespace

const char* embed_kind_name(EmbedKind kind) { return kKindNames[static_cast<int>(kind)]; }

EmbedKind embed_kind_from_name(const std::string& name) {
  for (int k = 0; k < 6; ++k)
    if (name == kKindNames[k]) return static_cast<EmbedKind>(k);
  fail("ParseError", "unknown embedding kind '" + name + "'");
}

Json embed_spec_to_json(const EmbedSpec& spec) {
  Json j;
  j["kind"] = embed_kind_name(spec.kind);
  j["target_hidden"] = spec.target_hidden;
  if (!spec.lambda.empty()) j["lambda"] = spec.lambda;
  if (!spec.gamma.empty()) j["gamma"] = spec.gamma;
  if (!spec.beta.empty()) j["beta"] = spec.beta;
  if (spec.kind == EmbedKind::InactiveUnitsReLU) j["K"] = spec.box_scale;
  if (spec.unit != kDefaultUnit) j["unit"] = spec.unit;
  if (!spec.v_extra.empty()) j["v_extra"] = matrix_to_json(spec.v_extra);
  if (!spec.w_extra.empty()) j["w_extra"] = matrix_to_json(spec.w_extra);
  return j;
}

EmbedSpec embed_spec_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.contains("target_hidden"))
    fail("ParseError", "embed spec needs 'kind' and 'target_hidden'");
  EmbedSpec spec;
  if (!j["kind"].is_string()) fail("ParseError", "'kind' must be a string");
  spec.kind = embed_kind_from_name(j["kind"].get<std::string>());
  if (!j["target_hidden"].is_number_unsigned())
    fail("ParseError", "'target_hidden' must be a non-negative integer");
  spec.target_hidden = j["target_hidden"].get<std::size_t>();
  auto read_vec = [&](const char* key, Vec& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_array()) fail("ParseError", std::string("'") + key + "' must be an array");
    out = j[key].get<Vec>();
  };
  read_vec("lambda", spec.lambda);
  read_vec("gamma", spec.gamma);
  read_vec("beta", spec.beta);
  if (j.contains("K")) {
    if (!j["K"].is_number()) fail("ParseError", "'K' must be a number");
    spec.box_scale = j["K"].get<double>();
  }
  if (j.contains("unit")) {
    if (!j["unit"].is_number_unsigned()) fail("ParseError", "'unit' must be a non-negative integer");
    spec.unit = j["unit"].get<std::size_t>();
  }
  if (j.contains("v_extra")) spec.v_extra = matrix_from_json(j["v_extra"], "v_extra");
  if (j.contains("w_extra")) spec.w_extra = matrix_from_json(j["w_extra"], "w_extra");
  return spec;
}

NetworkParams embed(const NetworkParams& narrow, const EmbedSpec& spec) {
  narrow.validate();
  const std::size_t H0 = narrow.hidden;
  const std::size_t D = narrow.input_dim;
  const std::size_t M = narrow.output_dim;
  if (spec.target_hidden < H0)
    fail("SpecInvariantViolated", "target hidden size " + std::to_string(spec.target_hidden) +
                                      " is below the source size " + std::to_string(H0));
  if (is_relu_kind(spec.kind) && narrow.activation.kind != ActivationKind::ReLU)
    fail("ActivationMismatch", std::string(embed_kind_name(spec.kind)) +
                                   " applies only to relu networks");
  const std::size_t E = spec.target_hidden - H0;

  NetworkParams wide;
  wide.input_dim = D;
  wide.hidden = spec.target_hidden;
  wide.output_dim = M;
  wide.activation = narrow.activation;
  wide.w = Matrix(wide.hidden, D + 1);
  wide.v = Matrix(wide.hidden, M);

  if (is_replication(spec.kind)) {
    const std::size_t unit = resolve_unit(spec, H0);
    Vec beta, gamma;
    replication_factors(spec, E + 1, beta, gamma);
    std::size_t slot = 0;
    for (std::size_t i = 0; i < H0; ++i) {
      if (i == unit) continue;
      wide.w.set_row(slot, narrow.w.row(i));
      wide.v.set_row(slot, narrow.v.row(i));
      ++slot;
    }
    Vec u = narrow.w.row(unit);
    Vec zeta = narrow.v.row(unit);
    for (std::size_t j = 0; j < E + 1; ++j) {
      wide.w.set_row(slot + j, beta[j] * u);
      wide.v.set_row(slot + j, gamma[j] * zeta);
    }
    return wide;
  }

  // Surplus-unit kinds: the original units are kept verbatim up front.
  for (std::size_t i = 0; i < H0; ++i) {
    wide.w.set_row(i, narrow.w.row(i));
    wide.v.set_row(i, narrow.v.row(i));
  }
  switch (spec.kind) {
    case EmbedKind::InactiveUnits: {
      Matrix v_extra = surplus_or_default(spec.v_extra, E, M, "v_extra");
      for (std::size_t j = 0; j < E; ++j) wide.v.set_row(H0 + j, v_extra.row(j));
      break;  // surplus w stays zero, where both activations vanish
    }
    case EmbedKind::InactiveUnitsReLU: {
      if (!(spec.box_scale > 1.0)) fail("SpecInvariantViolated", "K must exceed 1");
      Matrix v_extra = surplus_or_default(spec.v_extra, E, M, "v_extra");
      for (std::size_t j = 0; j < E; ++j) {
        wide.w(H0 + j, D) = 2.0 * spec.box_scale;  // bias, kills inputs with norm <= 1
        wide.v.set_row(H0 + j, v_extra.row(j));
      }
      break;
    }
    case EmbedKind::InactiveProp: {
      Matrix w_extra = surplus_or_default(spec.w_extra, E, D + 1, "w_extra");
      for (std::size_t j = 0; j < E; ++j) wide.w.set_row(H0 + j, w_extra.row(j));
      break;  // surplus v stays zero
    }
    case EmbedKind::InactiveBoth:
      break;  // both sides stay zero
    default:
      break;
  }
  return wide;
}

double verify_function_equality(const NetworkParams& narrow, const NetworkParams& wide,
                                std::size_t probes, std::uint64_t seed) {
  if (narrow.input_dim != wide.input_dim || narrow.output_dim != wide.output_dim)
    fail("DimMismatch", "networks disagree on input or output dimension");
  RngStream rng(seed, {0x70726F6265u});  // distinct stream per probe draw
  Matrix inputs(probes, narrow.input_dim);
  for (double& e : inputs.a) e = rng.uniform(-1.0, 1.0);
  return verify_function_equality(narrow, wide, inputs);
}

double verify_function_equality(const NetworkParams& narrow, const NetworkParams& wide,
                                const Matrix& inputs) {
  if (narrow.input_dim != wide.input_dim || narrow.output_dim != wide.output_dim)
    fail("DimMismatch", "networks disagree on input or output dimension");
  if (inputs.cols != narrow.input_dim)
    fail("DimMismatch", "probe inputs have the wrong dimension");
  double worst = 0.0;
  for (std::size_t nu = 0; nu < inputs.rows; ++nu) {
    Vec x = inputs.row(nu);
    Vec fn = forward(narrow, x);
    Vec fw = forward(wide, x);
    for (std::size_t m = 0; m < fn.size(); ++m)
      worst = std::max(worst, std::fabs(fw[m] - fn[m]));
  }
  return worst;
}

ReparamBasis build_reparam_basis(const EmbedSpec& spec) {
  if (!is_replication(spec.kind))
    fail("SpecInvariantViolated", "reparameterization requires a replication spec");
  ReparamBasis basis;
  if (spec.kind == EmbedKind::Replicate) {
    basis.weights = spec.lambda;
    basis.gamma = spec.lambda;
    basis.beta.assign(spec.lambda.size(), 1.0);
  } else {
    if (spec.gamma.size() != spec.beta.size())
      fail("SpecInvariantViolated", "gamma and beta must have equal length");
    basis.gamma = spec.gamma;
    basis.beta = spec.beta;
    basis.weights.resize(spec.gamma.size());
    for (std::size_t j = 0; j < spec.gamma.size(); ++j) {
      if (!(spec.beta[j] > 0.0)) fail("SpecInvariantViolated", "beta entries must be positive");
      basis.weights[j] = spec.gamma[j] * spec.beta[j];
    }
  }
  for (double wgt : basis.weights)
    if (wgt == 0.0) fail("ZeroWeight", "replication weights must all be nonzero");
  basis.A = null_space_complement(basis.weights);
  const std::size_t copies = basis.weights.size();
  if (spec.unit != kDefaultUnit)
    basis.replicated_unit = spec.unit;
  else if (spec.target_hidden >= copies)
    basis.replicated_unit = spec.target_hidden - copies;  // last narrow slot
  return basis;
}

ReparamCoords to_reparam(const NetworkParams& wide, const ReparamBasis& basis) {
  const std::size_t E = basis.surplus();
  const std::size_t copies = E + 1;
  if (basis.weights.size() != copies || basis.gamma.size() != copies ||
      basis.beta.size() != copies)
    fail("DimMismatch", "basis vectors disagree with the basis matrix");
  if (wide.hidden < copies) fail("DimMismatch", "network too small for this basis");
  const std::size_t H0 = wide.hidden - E;
  const std::size_t D = wide.input_dim;
  const std::size_t M = wide.output_dim;

  // stack(1^T, A), whose transpose carries (b, eta) to the scaled block rows.
  Matrix P(copies, copies);
  for (std::size_t j = 0; j < copies; ++j) P(0, j) = 1.0;
  for (std::size_t c = 0; c < E; ++c)
    for (std::size_t j = 0; j < copies; ++j) P(c + 1, j) = basis.A(c, j);

  Matrix w_scaled(copies, D + 1);
  Matrix v_scaled(copies, M);
  for (std::size_t j = 0; j < copies; ++j) {
    for (std::size_t d = 0; d <= D; ++d)
      w_scaled(j, d) = wide.w(H0 - 1 + j, d) / basis.beta[j];
    for (std::size_t m = 0; m < M; ++m)
      v_scaled(j, m) = wide.v(H0 - 1 + j, m) / basis.gamma[j];
  }
  Matrix b_eta = lu_solve(P.transpose(), w_scaled);
  Matrix a_xi = lu_solve(P.transpose(), v_scaled);

  ReparamCoords coords;
  coords.b = b_eta.row(0);
  coords.a = a_xi.row(0);
  coords.eta = Matrix(E, D + 1);
  coords.xi = Matrix(E, M);
  for (std::size_t c = 0; c < E; ++c) {
    coords.eta.set_row(c, b_eta.row(c + 1));
    coords.xi.set_row(c, a_xi.row(c + 1));
  }
  coords.w_rest = Matrix(H0 - 1, D + 1);
  coords.v_rest = Matrix(H0 - 1, M);
  for (std::size_t i = 0; i + 1 < H0; ++i) {
    coords.w_rest.set_row(i, wide.w.row(i));
    coords.v_rest.set_row(i, wide.v.row(i));
  }
  return coords;
}

NetworkParams from_reparam(const ReparamCoords& coords, const ReparamBasis& basis,
                           const NetworkParams& tmpl) {
  const std::size_t E = basis.surplus();
  const std::size_t copies = E + 1;
  const std::size_t H0 = coords.w_rest.rows + 1;
  const std::size_t D = coords.b.size() - 1;
  const std::size_t M = coords.a.size();
  if (tmpl.input_dim != D || tmpl.output_dim != M || tmpl.hidden != H0 + E)
    fail("DimMismatch", "template network disagrees with the coordinates");
  if (coords.eta.rows != E || coords.xi.rows != E)
    fail("DimMismatch", "coordinate block count disagrees with the basis");

  NetworkParams net = tmpl;
  net.w = Matrix(net.hidden, D + 1);
  net.v = Matrix(net.hidden, M);
  for (std::size_t i = 0; i + 1 < H0; ++i) {
    net.w.set_row(i, coords.w_rest.row(i));
    net.v.set_row(i, coords.v_rest.row(i));
  }
  for (std::size_t j = 0; j < copies; ++j) {
    for (std::size_t d = 0; d <= D; ++d) {
      double s = coords.b[d];
      for (std::size_t c = 0; c < E; ++c) s += basis.A(c, j) * coords.eta(c, d);
      net.w(H0 - 1 + j, d) = basis.beta[j] * s;
    }
    for (std::size_t m = 0; m < M; ++m) {
      double s = coords.a[m];
      for (std::size_t c = 0; c < E; ++c) s += basis.A(c, j) * coords.xi(c, m);
      net.v(H0 - 1 + j, m) = basis.gamma[j] * s;
    }
  }
  return net;
}

double embedding_norm(const NetworkParams& net) { return norm2(net.flatten()); }

Matrix reparam_jacobian(const ReparamBasis& basis, const NetworkParams& tmpl) {
  const std::size_t E = basis.surplus();
  const std::size_t copies = E + 1;
  if (tmpl.hidden < copies) fail("DimMismatch", "network too small for this basis");
  const std::size_t H0 = tmpl.hidden - E;
  const std::size_t D = tmpl.input_dim;
  const std::size_t M = tmpl.output_dim;
  const std::size_t wsz = (D + 1);
  const std::size_t wtotal = tmpl.hidden * wsz;
  Matrix T(tmpl.param_count(), tmpl.param_count());

  for (std::size_t i = 0; i + 1 < H0; ++i) {
    for (std::size_t d = 0; d < wsz; ++d) T(i * wsz + d, i * wsz + d) = 1.0;
    for (std::size_t m = 0; m < M; ++m) T(wtotal + i * M + m, wtotal + i * M + m) = 1.0;
  }
  const std::size_t b_off = (H0 - 1) * wsz;
  const std::size_t eta_off = H0 * wsz;
  const std::size_t a_off = wtotal + (H0 - 1) * M;
  const std::size_t xi_off = wtotal + H0 * M;
  for (std::size_t j = 0; j < copies; ++j) {
    for (std::size_t d = 0; d < wsz; ++d) {
      std::size_t trow = (H0 - 1 + j) * wsz + d;
      T(trow, b_off + d) = basis.beta[j];
      for (std::size_t c = 0; c < E; ++c) T(trow, eta_off + c * wsz + d) = basis.beta[j] * basis.A(c, j);
    }
    for (std::size_t m = 0; m < M; ++m) {
      std::size_t trow = wtotal + (H0 - 1 + j) * M + m;
      T(trow, a_off + m) = basis.gamma[j];
      for (std::size_t c = 0; c < E; ++c) T(trow, xi_off + c * M + m) = basis.gamma[j] * basis.A(c, j);
    }
  }
  return T;
}

Vec reparam_flatten(const ReparamCoords& coords) {
  Vec out;
  out.reserve((coords.w_rest.rows + 1 + coords.eta.rows) * coords.b.size() +
              (coords.v_rest.rows + 1 + coords.xi.rows) * coords.a.size());
  out.insert(out.end(), coords.w_rest.a.begin(), coords.w_rest.a.end());
  out.insert(out.end(), coords.b.begin(), coords.b.end());
  out.insert(out.end(), coords.eta.a.begin(), coords.eta.a.end());
  out.insert(out.end(), coords.v_rest.a.begin(), coords.v_rest.a.end());
  out.insert(out.end(), coords.a.begin(), coords.a.end());
  out.insert(out.end(), coords.xi.a.begin(), coords.xi.a.end());
  return out;
}

ReparamCoords reparam_unflatten(const Vec& omega, std::size_t input_dim, std::size_t output_dim,
                                std::size_t narrow_hidden, std::size_t surplus) {
  const std::size_t D = input_dim, M = output_dim, H0 = narrow_hidden, E = surplus;
  const std::size_t wsz = D + 1;
  if (omega.size() != (H0 + E) * (wsz + M))
    fail("DimMismatch", "coordinate vector has the wrong length");
  ReparamCoords coords;
  coords.w_rest = Matrix(H0 - 1, wsz);
  coords.eta = Matrix(E, wsz);
  coords.v_rest = Matrix(H0 - 1, M);
  coords.xi = Matrix(E, M);
  std::size_t pos = 0;
  auto take = [&](double* dst, std::size_t count) {
    std::memcpy(dst, omega.data() + pos, count * sizeof(double));
    pos += count;
  };
  if (H0 > 1) take(coords.w_rest.a.data(), (H0 - 1) * wsz);
  coords.b.resize(wsz);
  take(coords.b.data(), wsz);
  if (E > 0) take(coords.eta.a.data(), E * wsz);
  if (H0 > 1) take(coords.v_rest.a.data(), (H0 - 1) * M);
  coords.a.resize(M);
  take(coords.a.data(), M);
  if (E > 0) take(coords.xi.a.data(), E * M);
  return coords;
}

}  // namespace embedlab
