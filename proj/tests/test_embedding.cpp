#include "embedlab/embedding.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>

#include "embedlab/errors.hpp"
#include "embedlab/network.hpp"
#include "embedlab/rng.hpp"

using namespace embedlab;

namespace {

NetworkParams rand_net(std::size_t D, std::size_t H, std::size_t M, ActivationKind kind,
                       RngStream& rng) {
  NetworkParams net;
  net.input_dim = D;
  net.hidden = H;
  net.output_dim = M;
  net.activation.kind = kind;
  net.w = Matrix(H, D + 1);
  net.v = Matrix(H, M);
  for (double& e : net.w.a) e = rng.uniform(-1.0, 1.0);
  for (double& e : net.v.a) e = rng.uniform(-1.0, 1.0);
  return net;
}

Matrix rand_matrix(std::size_t r, std::size_t c, RngStream& rng) {
  Matrix m(r, c);
  for (double& e : m.a) e = rng.uniform(-1.0, 1.0);
  return m;
}

Vec normalized_lambda(std::size_t n, RngStream& rng) {
  Vec lambda(n);
  double sum = 0.0;
  for (double& l : lambda) {
    l = rng.uniform(0.2, 1.0) * (rng.uniform() < 0.3 ? -1.0 : 1.0);
    sum += l;
  }
  if (std::fabs(sum) < 0.2) {
    lambda[0] += 1.0;
    sum += 1.0;
  }
  for (double& l : lambda) l /= sum;
  return lambda;
}

std::string code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& err) {
    return err.code();
  }
  return "";
}

}  // namespace

TEST_CASE("embed replicate: hand-checked split of a single unit") {
  NetworkParams narrow;
  narrow.input_dim = 1;
  narrow.hidden = 1;
  narrow.output_dim = 1;
  narrow.activation.kind = ActivationKind::Tanh;
  narrow.w = Matrix(1, 2);
  narrow.w.set_row(0, {0.7, -0.2});
  narrow.v = Matrix(1, 1);
  narrow.v(0, 0) = 2.0;

  EmbedSpec spec;
  spec.kind = EmbedKind::Replicate;
  spec.target_hidden = 2;
  spec.lambda = {0.5, 0.5};
  NetworkParams wide = embed(narrow, spec);
  CHECK(wide.hidden == 2);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(wide.w(j, 0) == 0.7);
    CHECK(wide.w(j, 1) == -0.2);
    CHECK(wide.v(j, 0) == 1.0);
  }
}

TEST_CASE("embed: zero surplus is the identity") {
  RngStream rng(201, {1});
  NetworkParams narrow = rand_net(2, 1, 1, ActivationKind::Tanh, rng);
  EmbedSpec spec;
  spec.kind = EmbedKind::Replicate;
  spec.target_hidden = 1;
  spec.lambda = {1.0};
  NetworkParams wide = embed(narrow, spec);
  CHECK(norm_inf(wide.flatten() - narrow.flatten()) == 0.0);

  EmbedSpec inact;
  inact.kind = EmbedKind::InactiveBoth;
  inact.target_hidden = 1;
  CHECK(norm_inf(embed(narrow, inact).flatten() - narrow.flatten()) == 0.0);
}

TEST_CASE("embed: function equality across kinds, activations, and sizes") {
  RngStream rng(202, {2});
  for (int rep = 0; rep < 50; ++rep) {
    std::size_t D = 1 + rng.next_u64() % 3;
    std::size_t H0 = 1 + rng.next_u64() % 3;
    std::size_t M = 1 + rng.next_u64() % 2;
    std::size_t E = 1 + rng.next_u64() % 3;
    ActivationKind act = (rep % 2 == 0) ? ActivationKind::Tanh : ActivationKind::ReLU;
    NetworkParams narrow = rand_net(D, H0, M, act, rng);

    std::vector<EmbedSpec> specs;
    {
      EmbedSpec s;
      s.kind = EmbedKind::Replicate;
      s.target_hidden = H0 + E;
      s.lambda = normalized_lambda(E + 1, rng);
      s.unit = rng.next_u64() % H0;
      specs.push_back(s);
    }
    {
      EmbedSpec s;
      s.kind = EmbedKind::InactiveUnits;
      s.target_hidden = H0 + E;
      s.v_extra = rand_matrix(E, M, rng);
      specs.push_back(s);
    }
    {
      EmbedSpec s;
      s.kind = EmbedKind::InactiveProp;
      s.target_hidden = H0 + E;
      s.w_extra = rand_matrix(E, D + 1, rng);
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
      s.beta.resize(E + 1);
      s.gamma.resize(E + 1);
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
      t.v_extra = rand_matrix(E, M, rng);
      specs.push_back(t);
    }

    for (const EmbedSpec& s : specs) {
      NetworkParams wide = embed(narrow, s);
      CHECK(wide.hidden == s.target_hidden);
      double dev = verify_function_equality(narrow, wide, 64, 1000 + rep);
      CHECK(dev <= 1e-12);
    }
  }
}

TEST_CASE("embed: perturbing surplus input weights breaks smooth inactivity") {
  RngStream rng(203, {3});
  NetworkParams narrow = rand_net(2, 2, 1, ActivationKind::Tanh, rng);
  EmbedSpec spec;
  spec.kind = EmbedKind::InactiveUnits;
  spec.target_hidden = 3;
  spec.v_extra = Matrix(1, 1);
  spec.v_extra(0, 0) = 0.8;
  NetworkParams wide = embed(narrow, spec);
  CHECK(verify_function_equality(narrow, wide, 64, 7) <= 1e-12);
  wide.w(2, 0) += 0.1;  // tanh of a nonzero preactivation is nonzero
  CHECK(verify_function_equality(narrow, wide, 64, 7) > 1e-6);
}

TEST_CASE("embed relu inactive units: on-sample equality survives in-box surplus weights") {
  // Inputs are scaled into the unit ball; any surplus unit with weight norm
  // at most K and bias in [K, 3K] then has a nonpositive preactivation, so
  // its output is identically zero on the sample regardless of v.
  RngStream rng(204, {4});
  NetworkParams narrow = rand_net(2, 2, 1, ActivationKind::ReLU, rng);
  const double K = 2.0;

  Matrix inputs(20, 2);
  for (std::size_t nu = 0; nu < 20; ++nu) {
    double x0 = rng.uniform(-1.0, 1.0), x1 = rng.uniform(-1.0, 1.0);
    double norm = std::sqrt(x0 * x0 + x1 * x1);
    if (norm > 1.0) {
      x0 /= norm;
      x1 /= norm;
    }
    inputs(nu, 0) = x0;
    inputs(nu, 1) = x1;
  }

  EmbedSpec spec;
  spec.kind = EmbedKind::InactiveUnitsReLU;
  spec.target_hidden = 4;
  spec.box_scale = K;
  spec.v_extra = rand_matrix(2, 1, rng);
  NetworkParams wide = embed(narrow, spec);
  CHECK(verify_function_equality(narrow, wide, inputs) <= 1e-12);

  Dataset data;
  data.inputs = inputs;
  data.targets = Matrix(20, 1);
  for (double& y : data.targets.a) y = rng.uniform(-1.0, 1.0);
  double base = loss_total(wide, data);

  for (int rep = 0; rep < 25; ++rep) {
    NetworkParams moved = wide;
    for (std::size_t j = 2; j < 4; ++j) {
      double a0 = rng.uniform(-1.0, 1.0), a1 = rng.uniform(-1.0, 1.0);
      double norm = std::sqrt(a0 * a0 + a1 * a1) + 1e-12;
      double radius = rng.uniform() * K;
      moved.w(j, 0) = a0 / norm * radius;
      moved.w(j, 1) = a1 / norm * radius;
      moved.w(j, 2) = rng.uniform(K, 3.0 * K);
      moved.v(j, 0) = rng.uniform(-2.0, 2.0);
    }
    CHECK(verify_function_equality(narrow, moved, inputs) <= 1e-12);
    CHECK(std::fabs(loss_total(moved, data) - base) <= 1e-12 * (1.0 + base));
  }

  // Off-sample the function may genuinely differ once surplus units carry
  // nonzero v and an in-box but active weight: probe far outside the ball.
  NetworkParams moved = wide;
  moved.w(2, 0) = K;
  moved.w(2, 1) = 0.0;
  moved.w(2, 2) = K;
  moved.v(2, 0) = 1.0;
  Matrix far(1, 2);
  far(0, 0) = 3.0;  // preactivation K*3 - K > 0
  CHECK(verify_function_equality(narrow, moved, far) > 1e-3);
}

TEST_CASE("build_reparam_basis: forced and verified cases") {
  EmbedSpec solo;
  solo.kind = EmbedKind::Replicate;
  solo.target_hidden = 1;
  solo.lambda = {1.0};
  ReparamBasis b1 = build_reparam_basis(solo);
  CHECK(b1.A.rows == 0);
  CHECK(b1.A.cols == 1);
  CHECK(b1.replicated_unit == 0);

  EmbedSpec half;
  half.kind = EmbedKind::Replicate;
  half.target_hidden = 2;
  half.lambda = {0.5, 0.5};
  ReparamBasis b2 = build_reparam_basis(half);
  REQUIRE(b2.A.rows == 1);
  double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(std::fabs(std::fabs(b2.A(0, 0)) - inv_sqrt2) <= 1e-14);
  CHECK(std::fabs(b2.A(0, 0) + b2.A(0, 1)) <= 1e-14);  // orthogonal to (.5,.5)

  EmbedSpec relu;
  relu.kind = EmbedKind::ReplicateReLU;
  relu.target_hidden = 3;
  relu.gamma = {1.0, 1.0, -1.0};
  relu.beta = {0.5, 0.25, 0.25};
  ReparamBasis b3 = build_reparam_basis(relu);
  CHECK(b3.weights == Vec{0.5, 0.25, -0.25});
  REQUIRE(b3.A.rows == 2);
  REQUIRE(b3.A.cols == 3);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(std::fabs(dot(b3.A.row(c), b3.weights)) <= 1e-12);
    for (std::size_t d = 0; d < 2; ++d) {
      double expect = (c == d) ? 1.0 : 0.0;
      CHECK(std::fabs(dot(b3.A.row(c), b3.A.row(d)) - expect) <= 1e-12);
    }
  }
  Matrix stack(3, 3);
  for (std::size_t j = 0; j < 3; ++j) stack(0, j) = 1.0;
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t j = 0; j < 3; ++j) stack(c + 1, j) = b3.A(c, j);
  CHECK(std::fabs(lu_det(stack)) > 1e-12);
}

TEST_CASE("build_reparam_basis: zero weights and degenerate sums are rejected") {
  EmbedSpec zero;
  zero.kind = EmbedKind::Replicate;
  zero.target_hidden = 2;
  zero.lambda = {0.0, 1.0};
  CHECK(code_of([&] { build_reparam_basis(zero); }) == "ZeroWeight");

  EmbedSpec degen;
  degen.kind = EmbedKind::Replicate;
  degen.target_hidden = 2;
  degen.lambda = {1.0, -1.0};  // weights sum to zero: stack(1^T, A) singular
  CHECK(code_of([&] { build_reparam_basis(degen); }) == "DegenerateStack");

  EmbedSpec wrong;
  wrong.kind = EmbedKind::InactiveUnits;
  wrong.target_hidden = 2;
  CHECK(code_of([&] { build_reparam_basis(wrong); }) == "SpecInvariantViolated");
}

TEST_CASE("to_reparam: the embedded point sits at (zeta, u, 0, 0)") {
  RngStream rng(205, {5});
  for (ActivationKind act : {ActivationKind::Tanh, ActivationKind::ReLU}) {
    NetworkParams narrow = rand_net(2, 2, 2, act, rng);
    EmbedSpec spec;
    if (act == ActivationKind::Tanh) {
      spec.kind = EmbedKind::Replicate;
      spec.lambda = normalized_lambda(3, rng);
    } else {
      spec.kind = EmbedKind::ReplicateReLU;
      spec.beta = {0.5, 1.5, 2.0};
      spec.gamma = {0.4, 0.3, 0.6};
      double wsum = 0.5 * 0.4 + 1.5 * 0.3 + 2.0 * 0.6;
      for (double& g : spec.gamma) g /= wsum;
    }
    spec.target_hidden = 4;
    spec.unit = 0;  // replicate the first unit, not the default last
    NetworkParams wide = embed(narrow, spec);
    ReparamBasis basis = build_reparam_basis(spec);
    CHECK(basis.replicated_unit == 0);
    ReparamCoords coords = to_reparam(wide, basis);

    CHECK(norm_inf(coords.a - narrow.v.row(0)) <= 1e-12);
    CHECK(norm_inf(coords.b - narrow.w.row(0)) <= 1e-12);
    CHECK(max_abs(coords.xi) <= 1e-12);
    CHECK(max_abs(coords.eta) <= 1e-12);
    CHECK(norm_inf(coords.w_rest.row(0) - narrow.w.row(1)) == 0.0);
    CHECK(norm_inf(coords.v_rest.row(0) - narrow.v.row(1)) == 0.0);
  }
}

TEST_CASE("reparam round-trip: network -> coords -> network is the identity") {
  RngStream rng(206, {6});
  for (int rep = 0; rep < 20; ++rep) {
    std::size_t D = 1 + rng.next_u64() % 3;
    std::size_t H0 = 1 + rng.next_u64() % 3;
    std::size_t M = 1 + rng.next_u64() % 2;
    std::size_t E = 1 + rng.next_u64() % 3;
    EmbedSpec spec;
    spec.kind = EmbedKind::Replicate;
    spec.target_hidden = H0 + E;
    spec.lambda = normalized_lambda(E + 1, rng);
    ReparamBasis basis = build_reparam_basis(spec);

    NetworkParams wide = rand_net(D, H0 + E, M, ActivationKind::Tanh, rng);
    ReparamCoords coords = to_reparam(wide, basis);
    NetworkParams back = from_reparam(coords, basis, wide);
    CHECK(norm_inf(back.flatten() - wide.flatten()) <= 1e-12);

    // Flat vector round-trip in the canonical coordinate order.
    Vec omega = reparam_flatten(coords);
    CHECK(omega.size() == wide.param_count());
    ReparamCoords coords2 = reparam_unflatten(omega, D, M, H0, E);
    CHECK(norm_inf(reparam_flatten(coords2) - omega) == 0.0);
  }
}

TEST_CASE("reparam_jacobian: matches from_reparam and is invertible") {
  RngStream rng(207, {7});
  EmbedSpec spec;
  spec.kind = EmbedKind::ReplicateReLU;
  spec.target_hidden = 4;
  spec.beta = {0.5, 1.0, 2.0};
  spec.gamma = {0.8, 0.4, 0.3};
  double wsum = 0.5 * 0.8 + 1.0 * 0.4 + 2.0 * 0.3;
  for (double& g : spec.gamma) g /= wsum;
  ReparamBasis basis = build_reparam_basis(spec);

  NetworkParams tmpl = rand_net(2, 4, 2, ActivationKind::ReLU, rng);
  Matrix T = reparam_jacobian(basis, tmpl);
  REQUIRE(T.rows == tmpl.param_count());
  CHECK(std::fabs(lu_det(T)) > 1e-12);

  for (int rep = 0; rep < 10; ++rep) {
    Vec omega(tmpl.param_count());
    for (double& e : omega) e = rng.uniform(-1.0, 1.0);
    ReparamCoords coords = reparam_unflatten(omega, 2, 2, 2, 2);
    NetworkParams net = from_reparam(coords, basis, tmpl);
    CHECK(norm_inf(net.flatten() - mat_vec(T, omega)) <= 1e-12);
  }
}

TEST_CASE("xi variation: block output weights keep summing to a") {
  RngStream rng(208, {8});
  EmbedSpec spec;
  spec.kind = EmbedKind::Replicate;
  spec.target_hidden = 3;
  spec.lambda = normalized_lambda(3, rng);
  ReparamBasis basis = build_reparam_basis(spec);
  NetworkParams narrow = rand_net(2, 1, 2, ActivationKind::Tanh, rng);
  NetworkParams wide = embed(narrow, spec);
  ReparamCoords coords = to_reparam(wide, basis);

  for (double& e : coords.xi.a) e = rng.uniform(-1.0, 1.0);
  NetworkParams moved = from_reparam(coords, basis, wide);
  for (std::size_t m = 0; m < 2; ++m) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 3; ++j) sum += moved.v(j, m);
    CHECK(sum == doctest::Approx(coords.a[m]).epsilon(1e-12));
  }
}

TEST_CASE("xi directions are exactly flat for replication embeddings") {
  RngStream rng(209, {9});
  for (ActivationKind act : {ActivationKind::Tanh, ActivationKind::ReLU}) {
    NetworkParams narrow = rand_net(2, 2, 2, act, rng);
    EmbedSpec spec;
    if (act == ActivationKind::Tanh) {
      spec.kind = EmbedKind::Replicate;
      spec.lambda = normalized_lambda(3, rng);
    } else {
      spec.kind = EmbedKind::ReplicateReLU;
      spec.beta = {0.7, 1.2, 0.9};
      spec.gamma = {0.5, -0.2, 0.4};
      double wsum = 0.7 * 0.5 + 1.2 * -0.2 + 0.9 * 0.4;
      for (double& g : spec.gamma) g /= wsum;
    }
    spec.target_hidden = 4;
    NetworkParams wide = embed(narrow, spec);
    ReparamBasis basis = build_reparam_basis(spec);

    Dataset data;
    data.inputs = rand_matrix(12, 2, rng);
    data.targets = rand_matrix(12, 2, rng);
    double base = loss_total(wide, data);

    for (int rep = 0; rep < 10; ++rep) {
      ReparamCoords coords = to_reparam(wide, basis);
      for (double& e : coords.xi.a) e = rng.uniform(-2.0, 2.0);
      NetworkParams moved = from_reparam(coords, basis, wide);
      CHECK(std::fabs(loss_total(moved, data) - base) <= 1e-12 * (1.0 + base));
    }
  }
}

TEST_CASE("embedding_norm: hand values and the inactive-vs-replicate comparison") {
  NetworkParams zero;
  zero.input_dim = 1;
  zero.hidden = 2;
  zero.output_dim = 1;
  zero.w = Matrix(2, 2);
  zero.v = Matrix(2, 1);
  CHECK(embedding_norm(zero) == 0.0);

  NetworkParams pyth;
  pyth.input_dim = 1;
  pyth.hidden = 1;
  pyth.output_dim = 1;
  pyth.w = Matrix(1, 2);
  pyth.w.set_row(0, {3.0, 4.0});
  pyth.v = Matrix(1, 1);
  CHECK(embedding_norm(pyth) == 5.0);

  // A trained unit typically has |u| comparable to or larger than |zeta|;
  // there replication (which duplicates u) costs more norm than padding
  // with silent units.
  NetworkParams narrow;
  narrow.input_dim = 2;
  narrow.hidden = 1;
  narrow.output_dim = 1;
  narrow.activation.kind = ActivationKind::Tanh;
  narrow.w = Matrix(1, 3);
  narrow.w.set_row(0, {0.8, -0.5, 0.3});
  narrow.v = Matrix(1, 1);
  narrow.v(0, 0) = 0.9;

  EmbedSpec rep;
  rep.kind = EmbedKind::Replicate;
  rep.target_hidden = 3;
  rep.lambda = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  EmbedSpec inact;
  inact.kind = EmbedKind::InactiveBoth;
  inact.target_hidden = 3;
  CHECK(embedding_norm(embed(narrow, inact)) < embedding_norm(embed(narrow, rep)));
  CHECK(embedding_norm(embed(narrow, inact)) == embedding_norm(narrow));
}

TEST_CASE("embed: spec violations raise typed errors") {
  RngStream rng(210, {10});
  NetworkParams tanh_net = rand_net(1, 2, 1, ActivationKind::Tanh, rng);
  NetworkParams relu_net = rand_net(1, 2, 1, ActivationKind::ReLU, rng);

  EmbedSpec bad_sum;
  bad_sum.kind = EmbedKind::Replicate;
  bad_sum.target_hidden = 3;
  bad_sum.lambda = {0.5, 0.6};
  CHECK(code_of([&] { embed(tanh_net, bad_sum); }) == "SpecInvariantViolated");

  EmbedSpec bad_len;
  bad_len.kind = EmbedKind::Replicate;
  bad_len.target_hidden = 4;
  bad_len.lambda = {0.5, 0.5};
  CHECK(code_of([&] { embed(tanh_net, bad_len); }) == "SpecInvariantViolated");

  EmbedSpec shrink;
  shrink.kind = EmbedKind::InactiveBoth;
  shrink.target_hidden = 1;
  CHECK(code_of([&] { embed(tanh_net, shrink); }) == "SpecInvariantViolated");

  EmbedSpec relu_only;
  relu_only.kind = EmbedKind::ReplicateReLU;
  relu_only.target_hidden = 3;
  relu_only.gamma = {0.5, 0.5};
  relu_only.beta = {1.0, 1.0};
  CHECK(code_of([&] { embed(tanh_net, relu_only); }) == "ActivationMismatch");

  EmbedSpec bad_beta = relu_only;
  bad_beta.beta = {1.0, -1.0};
  bad_beta.gamma = {0.5, 0.5};
  CHECK(code_of([&] { embed(relu_net, bad_beta); }) == "SpecInvariantViolated");

  EmbedSpec small_K;
  small_K.kind = EmbedKind::InactiveUnitsReLU;
  small_K.target_hidden = 3;
  small_K.box_scale = 1.0;
  CHECK(code_of([&] { embed(relu_net, small_K); }) == "SpecInvariantViolated");

  EmbedSpec bad_unit;
  bad_unit.kind = EmbedKind::Replicate;
  bad_unit.target_hidden = 3;
  bad_unit.lambda = {0.5, 0.5};
  bad_unit.unit = 2;
  CHECK(code_of([&] { embed(tanh_net, bad_unit); }) == "BadIndex");

  NetworkParams other = rand_net(3, 2, 1, ActivationKind::Tanh, rng);
  CHECK(code_of([&] { verify_function_equality(tanh_net, other, 8, 0); }) == "DimMismatch");
}

TEST_CASE("embed spec json: round-trip and parse errors") {
  EmbedSpec spec;
  spec.kind = EmbedKind::ReplicateReLU;
  spec.target_hidden = 5;
  spec.gamma = {0.25, 0.5, 0.75};
  spec.beta = {1.0, 0.5, 1.5};
  spec.unit = 1;
  EmbedSpec back = embed_spec_from_json(Json::parse(dump_json(embed_spec_to_json(spec))));
  CHECK(back.kind == EmbedKind::ReplicateReLU);
  CHECK(back.target_hidden == 5);
  CHECK(back.gamma == spec.gamma);
  CHECK(back.beta == spec.beta);
  CHECK(back.unit == 1);

  EmbedSpec boxed;
  boxed.kind = EmbedKind::InactiveUnitsReLU;
  boxed.target_hidden = 4;
  boxed.box_scale = 3.0;
  boxed.v_extra = Matrix(2, 1);
  boxed.v_extra(0, 0) = 0.5;
  EmbedSpec back2 = embed_spec_from_json(Json::parse(dump_json(embed_spec_to_json(boxed))));
  CHECK(back2.box_scale == 3.0);
  CHECK(back2.v_extra(0, 0) == 0.5);
  CHECK(back2.unit == kDefaultUnit);

  CHECK(code_of([&] { embed_spec_from_json(Json::parse(R"({"kind":"mystery","target_hidden":2})")); }) ==
        "ParseError");
  CHECK(code_of([&] { embed_spec_from_json(Json::parse(R"({"kind":"replicate"})")); }) ==
        "ParseError");
}
