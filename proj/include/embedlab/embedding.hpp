#pragma once

#include <cstdint>
#include <string>

#include "embedlab/matrix.hpp"
#include "embedlab/network.hpp"
#include "embedlab/serialize.hpp"

namespace embedlab {

// The six ways of realizing a trained H0-unit network inside a wider one
// without changing the function it computes.
enum class EmbedKind {
  Replicate,         // split one unit into copies sharing its input weights
  ReplicateReLU,     // relu-only: copies may also rescale the input weights
  InactiveUnits,     // surplus units whose activation is identically zero
  InactiveUnitsReLU, // relu-only: surplus units silenced by a large bias
  InactiveProp,      // surplus units with zero output weights
  InactiveBoth,      // surplus units silenced on both sides
};

constexpr std::size_t kDefaultUnit = static_cast<std::size_t>(-1);

struct EmbedSpec {
  EmbedKind kind = EmbedKind::Replicate;
  std::size_t target_hidden = 0;
  Vec lambda;              // Replicate: output-weight split, must sum to 1
  Vec gamma;               // ReplicateReLU: output-weight factors
  Vec beta;                // ReplicateReLU: input-weight factors, all > 0
  double box_scale = 2.0;  // InactiveUnitsReLU: silencing bias is 2*box_scale
  std::size_t unit = kDefaultUnit;  // replicated unit, defaults to the last
  Matrix v_extra;          // optional surplus output weights (inactive units)
  Matrix w_extra;          // optional surplus input weights (inactive prop)
};

const char* embed_kind_name(EmbedKind kind);
EmbedKind embed_kind_from_name(const std::string& name);
Json embed_spec_to_json(const EmbedSpec& spec);
EmbedSpec embed_spec_from_json(const Json& j);

// Basis for the linear change of coordinates around a replicated unit. The
// rows of A are orthonormal, each orthogonal to the weight vector, and
// stack(1^T, A) is invertible, so (a, b, xi, eta) below is a bijection.
struct ReparamBasis {
  Vec weights;  // lambda, or gamma*beta elementwise for relu
  Vec gamma;    // output-weight factors (lambda again in the smooth case)
  Vec beta;     // input-weight factors (all ones in the smooth case)
  Matrix A;     // E x (E+1) where E is the surplus count
  std::size_t replicated_unit = 0;

  std::size_t surplus() const { return A.rows; }
};

// Coordinates adapted to the replicated block: the block's input rows are
// beta_j * (b + sum_c A(c,j) eta_c) and its output rows are
// gamma_j * (a + sum_c A(c,j) xi_c). Untouched units ride along unchanged.
struct ReparamCoords {
  Vec a;          // M
  Vec b;          // D+1
  Matrix xi;      // E x M
  Matrix eta;     // E x (D+1)
  Matrix w_rest;  // (H0-1) x (D+1)
  Matrix v_rest;  // (H0-1) x M
};

// Widen `narrow` to spec.target_hidden units, preserving the computed
// function exactly. The replicated or surplus block occupies the last slots.
NetworkParams embed(const NetworkParams& narrow, const EmbedSpec& spec);

// Max absolute output deviation over `probes` inputs drawn uniformly from
// [-1,1]^D with the given seed, or over the supplied input rows.
double verify_function_equality(const NetworkParams& narrow, const NetworkParams& wide,
                                std::size_t probes, std::uint64_t seed);
double verify_function_equality(const NetworkParams& narrow, const NetworkParams& wide,
                                const Matrix& inputs);

// Requires a replication spec with all weights nonzero.
ReparamBasis build_reparam_basis(const EmbedSpec& spec);

ReparamCoords to_reparam(const NetworkParams& wide, const ReparamBasis& basis);
NetworkParams from_reparam(const ReparamCoords& coords, const ReparamBasis& basis,
                           const NetworkParams& tmpl);

// Euclidean norm of the full parameter vector.
double embedding_norm(const NetworkParams& net);

// The matrix T with flatten(net) = T * reparam_flatten(coords); T is square
// and invertible, so Hessians transport by congruence with it.
Matrix reparam_jacobian(const ReparamBasis& basis, const NetworkParams& tmpl);

// Canonical coordinate order: untouched input rows, b, eta rows, untouched
// output rows, a, xi rows. Mirrors the network's own flatten layout.
Vec reparam_flatten(const ReparamCoords& coords);
ReparamCoords reparam_unflatten(const Vec& omega, std::size_t input_dim, std::size_t output_dim,
                                std::size_t narrow_hidden, std::size_t surplus);

}  // namespace embedlab
