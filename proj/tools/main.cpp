// Command-line front end: every pipeline (training, widening, verification,
// curvature analysis, classification, flat probing, PAC-Bayes bounds, the
// generalization experiment, and the demonstration suite) behind one binary.
// Exit codes: 0 success, 1 domain error (one stderr line `code=NAME
// detail=...`), 2 usage error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "embedlab/embedding.hpp"
#include "embedlab/errors.hpp"
#include "embedlab/experiment.hpp"
#include "embedlab/landscape.hpp"
#include "embedlab/matrix.hpp"
#include "embedlab/network.hpp"
#include "embedlab/pacbayes.hpp"
#include "embedlab/rng.hpp"
#include "embedlab/serialize.hpp"
#include "embedlab/trainer.hpp"

namespace {

using namespace embedlab;

Activation parse_activation(const std::string& name) {
  Activation act;
  act.kind = name == "relu" ? ActivationKind::ReLU : ActivationKind::Tanh;
  return act;
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::fputs(content.c_str(), stdout);
    return;
  }
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) fail("IoError", "cannot open " + path + " for writing");
  std::fwrite(content.data(), 1, content.size(), f);
  std::fclose(f);
}

void emit_json(const std::string& path, const Json& j) {
  if (path.empty())
    std::printf("%s\n", dump_json(j).c_str());
  else
    write_json_file(path, j);
}

// Curvature report at the widened point. Replication specs get the analytic
// block assembly in adapted coordinates; inactive-unit specs get the generic
// finite-difference route on the widened network.
HessianReport embedded_report(const NetworkParams& narrow, const Dataset& data,
                              const EmbedSpec& spec) {
  if (spec.kind == EmbedKind::Replicate || spec.kind == EmbedKind::ReplicateReLU)
    return assemble_embedded_hessian(narrow, data, spec);
  NetworkParams wide = embed(narrow, spec);
  // At interpolation-level loss the residual term of the Hessian vanishes and
  // the Gauss-Newton matrix J^T J is the exact curvature; it keeps silenced
  // rows exactly zero where finite differences refuse to step near a kink.
  const double interp = 1e-20 * static_cast<double>(std::max<std::size_t>(1, data.size()));
  if (loss_total(wide, data) <= interp) {
    ResidualJacobian rj = residual_jacobian(wide, data, KinkPolicy::ZeroSubgradient);
    return analyze_hessian(rj.J.transpose() * rj.J);
  }
  return analyze_hessian(fd_hessian(wide, data));
}

struct TrainArgs {
  std::string data, out, activation = "tanh";
  std::size_t hidden = 1, restarts = 20, max_iters = 20000;
  double target = 1e-12, grad_tol = 1e-10, scale = 1.0;
  std::uint64_t seed = 0;
};

void run_train(const TrainArgs& a) {
  Dataset data = dataset_from_json(read_json_file(a.data));
  TrainConfig cfg;
  cfg.target_loss = a.target;
  cfg.grad_tol = a.grad_tol;
  cfg.restarts = a.restarts;
  cfg.max_iters = a.max_iters;
  cfg.seed = a.seed;
  cfg.init_scale = a.scale;
  NetworkParams init = init_params(data.inputs.cols, a.hidden, data.targets.cols,
                                   parse_activation(a.activation), a.seed, a.scale);
  TrainResult res = train(init, data, cfg);
  emit_json(a.out, network_to_json(res.params));
  std::printf("%s\n", format_double(res.final_loss).c_str());
}

struct EmbedArgs {
  std::string net, spec, out;
};

void run_embed(const EmbedArgs& a) {
  NetworkParams narrow = network_from_json(read_json_file(a.net));
  EmbedSpec spec = embed_spec_from_json(read_json_file(a.spec));
  emit_json(a.out, network_to_json(embed(narrow, spec)));
}

struct VerifyEqualArgs {
  std::string narrow, wide;
  std::size_t probes = 64;
  std::uint64_t seed = 0;
  double tol = -1.0;  // negative: report only
};

void run_verify_equal(const VerifyEqualArgs& a) {
  NetworkParams narrow = network_from_json(read_json_file(a.narrow));
  NetworkParams wide = network_from_json(read_json_file(a.wide));
  double dev = verify_function_equality(narrow, wide, a.probes, a.seed);
  std::printf("%s\n", format_double(dev).c_str());
  if (a.tol >= 0.0 && dev > a.tol)
    fail("NotEqual", "deviation " + format_double(dev) + " exceeds tol " + format_double(a.tol));
}

struct VerifyStationaryArgs {
  std::string net, data;
  double tol = kStationaryTol;
};

void run_verify_stationary(const VerifyStationaryArgs& a) {
  NetworkParams net = network_from_json(read_json_file(a.net));
  Dataset data = dataset_from_json(read_json_file(a.data));
  StationaryCheck check = verify_stationary(net, data, a.tol);
  std::printf("%s\n", format_double(check.grad_inf).c_str());
  if (!check.pass)
    fail("NotStationary", "gradient inf-norm " + format_double(check.grad_inf) +
                              " exceeds tol " + format_double(a.tol));
}

struct HessianArgs {
  std::string net, data, spec, out;
};

void run_hessian(const HessianArgs& a) {
  NetworkParams net = network_from_json(read_json_file(a.net));
  Dataset data = dataset_from_json(read_json_file(a.data));
  HessianReport report;
  if (a.spec.empty()) {
    report = analyze_hessian(fd_hessian(net, data));
  } else {
    EmbedSpec spec = embed_spec_from_json(read_json_file(a.spec));
    report = embedded_report(net, data, spec);
  }
  emit_json(a.out, hessian_report_to_json(report));
}

struct ClassifyArgs {
  std::string net, data, spec, out;
  double radius = 1e-3;
  std::size_t samples = 32;
  std::uint64_t seed = 0;
};

void run_classify(const ClassifyArgs& a) {
  NetworkParams net = network_from_json(read_json_file(a.net));
  Dataset data = dataset_from_json(read_json_file(a.data));
  EmbedSpec spec = embed_spec_from_json(read_json_file(a.spec));
  HessianReport report = embedded_report(net, data, spec);
  FlatProbeConfig probe;
  probe.net = embed(net, spec);
  probe.data = data;
  probe.radius = a.radius;
  probe.samples = a.samples;
  probe.seed = a.seed;
  LandscapeVerdict verdict = classify(report, &probe);
  Json vj = verdict_to_json(verdict);
  std::printf("%s\n", vj["class"].get<std::string>().c_str());
  if (!a.out.empty()) write_json_file(a.out, vj);
}

struct FlatProbeArgs {
  std::string net, data, spec;
  double radius = -1.0;  // default chosen from the certified bound when available
  std::size_t samples = 32;
  std::uint64_t seed = 0;
};

void run_flat_probe(const FlatProbeArgs& a) {
  NetworkParams net = network_from_json(read_json_file(a.net));
  Dataset data = dataset_from_json(read_json_file(a.data));
  EmbedSpec spec = embed_spec_from_json(read_json_file(a.spec));
  NetworkParams wide = embed(net, spec);
  HessianReport report = embedded_report(net, data, spec);
  LandscapeVerdict verdict = classify(report);

  // ReLU replications come with an exactly-flat eta subspace and a certified
  // radius inside which every activation sign is preserved; probe that.
  // Everything else probes the numerically flat eigenspace.
  Matrix dirs = verdict.flat_basis;
  double certified = 0.0;
  if (report.coords == CoordFrame::Reparam &&
      wide.activation.kind == ActivationKind::ReLU && report.surplus > 0) {
    certified = compute_flat_radius(wide, data, build_reparam_basis(spec));
    const std::size_t ecols = report.surplus * (report.input_dim + 1);
    dirs = Matrix(report.to_original.rows, ecols);
    for (std::size_t r = 0; r < dirs.rows; ++r)
      for (std::size_t c = 0; c < ecols; ++c)
        dirs(r, c) = report.to_original(r, report.eta_off + c);
  }

  double radius = a.radius;
  if (radius < 0.0) radius = certified > 0.0 ? 0.99 * certified : 1e-3;

  double residual = 0.0;
  if (!dirs.empty())
    residual = probe_flat_subspace(wide, data, dirs, radius, a.samples, a.seed);
  std::printf("n_zero=%zu\n", verdict.n_zero);
  if (certified > 0.0) std::printf("certified_radius=%s\n", format_double(certified).c_str());
  std::printf("radius=%s\n", format_double(radius).c_str());
  std::printf("residual=%s\n", format_double(residual).c_str());
}

struct PacBayesArgs {
  std::string net, data, out;
  double sigma = 1e3, tau = 1e-2, delta = 0.05;
  std::size_t h_max = 0;  // 0: narrow width + 5
  std::uint64_t seed = 0;
};

void run_pacbayes(const PacBayesArgs& a) {
  NetworkParams net = network_from_json(read_json_file(a.net));
  Dataset data = dataset_from_json(read_json_file(a.data));
  PacBayesConfig cfg;
  cfg.sigma = a.sigma;
  cfg.tau = a.tau;
  cfg.delta = a.delta;
  cfg.n = data.size();
  const std::size_t H0 = net.hidden;
  const std::size_t h_max = a.h_max == 0 ? H0 + 5 : a.h_max;
  if (h_max < H0)
    fail("SpecInvariantViolated", "--h-max " + std::to_string(h_max) +
                                      " is below the model width " + std::to_string(H0));

  ResidualJacobian rj = residual_jacobian(net, data, KinkPolicy::ZeroSubgradient);
  Matrix core = rj.J.transpose() * rj.J;  // exact Hessian at a zero-error point
  const double mean_loss =
      rescale_unit_interval(loss_total(net, data) / static_cast<double>(data.size()));
  double narrow_sq = 0.0;
  for (double t : net.flatten()) narrow_sq += t * t;

  std::string csv = "E,activation,kl_total,bound\n";
  for (std::size_t E = 0; E + H0 <= h_max; ++E) {
    EmbedSpec spec;
    spec.kind = net.activation.smooth() ? EmbedKind::InactiveUnits
                                        : EmbedKind::InactiveUnitsReLU;
    spec.target_hidden = H0 + E;
    double extra_sq = 0.0;
    if (E > 0) {
      RngStream rng(a.seed, {0xECC0, static_cast<std::uint64_t>(E)});
      spec.v_extra = Matrix(E, net.output_dim);
      for (double& e : spec.v_extra.a) {
        e = rng.uniform(-1.0, 1.0);
        extra_sq += e * e;
      }
    }
    NetworkParams wide = embed(net, spec);

    KLBreakdown kl;
    if (net.activation.smooth()) {
      Matrix surplus(0, 0);
      if (E > 0) surplus = surplus_hessian_blocks(wide, data, spec, H0).in_in;
      kl = kl_smooth(core, surplus, embedding_norm(wide), net.param_count(),
                     E * (net.input_dim + 1), cfg);
    } else {
      // The box-uniform surplus block drops out; only the Gaussian-block
      // means (narrow parameters and surplus output weights) remain.
      kl = kl_relu(core, std::sqrt(narrow_sq + extra_sq), net.param_count(), cfg);
    }
    const double bound = pac_bayes_bound(mean_loss, kl, cfg);
    csv += std::to_string(E) + "," + net.activation.name() + "," + format_double(kl.total) +
           "," + format_double(bound) + "\n";
  }
  emit(a.out, csv);
}

struct ExperimentArgs {
  std::string activation = "tanh", out;
  std::size_t teacher_hidden = 1, student_hidden = 5, n_train = 10, n_test = 1000;
  std::size_t h_max = 20, trials = 1000, threads = 0;
  double noise = 0.1, perturb_ratio = 0.01;
  std::uint64_t seed = 0;
  bool no_perturb_baseline = false, surplus_zero = false;
};

void run_experiment(const ExperimentArgs& a) {
  ExperimentConfig cfg;
  cfg.activation = parse_activation(a.activation);
  cfg.teacher_hidden = a.teacher_hidden;
  cfg.student_hidden = a.student_hidden;
  cfg.n_train = a.n_train;
  cfg.n_test = a.n_test;
  cfg.noise_std = a.noise;
  cfg.perturb_ratio = a.perturb_ratio;
  cfg.trials = a.trials;
  cfg.seed = a.seed;
  cfg.perturb_baseline = !a.no_perturb_baseline;
  cfg.surplus_zero = a.surplus_zero;
  cfg.threads = a.threads > 0 ? a.threads
                              : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  for (std::size_t H = cfg.student_hidden; H <= a.h_max; ++H) cfg.h_sweep.push_back(H);
  emit(a.out, experiment_csv(run_generalization_experiment(cfg)));
}

struct SuiteArgs {
  std::string out;
  std::uint64_t seed = 0;
};

void run_suite(const SuiteArgs& a) { emit_json(a.out, run_classification_suite(a.seed)); }

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network-widening laboratory: training, function-preserving embeddings, "
               "loss-landscape verdicts, PAC-Bayes bounds, and generalization experiments"};
  app.require_subcommand(1);

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a network on a dataset");
  train_cmd->add_option("--data", train_args.data, "dataset JSON")->required();
  train_cmd->add_option("--hidden", train_args.hidden, "hidden width")->required();
  train_cmd->add_option("--activation", train_args.activation, "tanh|relu")
      ->check(CLI::IsMember({"tanh", "relu"}));
  train_cmd->add_option("--target", train_args.target, "target loss");
  train_cmd->add_option("--grad-tol", train_args.grad_tol, "gradient tolerance");
  train_cmd->add_option("--restarts", train_args.restarts, "attempt budget");
  train_cmd->add_option("--max-iters", train_args.max_iters, "iterations per attempt");
  train_cmd->add_option("--scale", train_args.scale, "init scale");
  train_cmd->add_option("--seed", train_args.seed, "rng seed");
  train_cmd->add_option("--out", train_args.out, "output network JSON");

  EmbedArgs embed_args;
  CLI::App* embed_cmd = app.add_subcommand("embed", "Widen a network function-preservingly");
  embed_cmd->add_option("--net", embed_args.net, "narrow network JSON")->required();
  embed_cmd->add_option("--spec", embed_args.spec, "embedding spec JSON")->required();
  embed_cmd->add_option("--out", embed_args.out, "output network JSON");

  VerifyEqualArgs veq_args;
  CLI::App* veq_cmd = app.add_subcommand("verify-equal", "Probe two networks for equality");
  veq_cmd->add_option("--narrow", veq_args.narrow, "network JSON")->required();
  veq_cmd->add_option("--wide", veq_args.wide, "network JSON")->required();
  veq_cmd->add_option("--probes", veq_args.probes, "probe count");
  veq_cmd->add_option("--seed", veq_args.seed, "rng seed");
  veq_cmd->add_option("--tol", veq_args.tol, "fail when deviation exceeds this");

  VerifyStationaryArgs vst_args;
  CLI::App* vst_cmd = app.add_subcommand("verify-stationary", "Check the gradient at a point");
  vst_cmd->add_option("--net", vst_args.net, "network JSON")->required();
  vst_cmd->add_option("--data", vst_args.data, "dataset JSON")->required();
  vst_cmd->add_option("--tol", vst_args.tol, "gradient inf-norm tolerance");

  HessianArgs hes_args;
  CLI::App* hes_cmd = app.add_subcommand("hessian", "Curvature report (widened when --spec given)");
  hes_cmd->add_option("--net", hes_args.net, "network JSON")->required();
  hes_cmd->add_option("--data", hes_args.data, "dataset JSON")->required();
  hes_cmd->add_option("--spec", hes_args.spec, "embedding spec JSON");
  hes_cmd->add_option("--out", hes_args.out, "output report JSON");

  ClassifyArgs cls_args;
  CLI::App* cls_cmd = app.add_subcommand("classify", "Classify an embedded stationary point");
  cls_cmd->add_option("--net", cls_args.net, "narrow network JSON")->required();
  cls_cmd->add_option("--data", cls_args.data, "dataset JSON")->required();
  cls_cmd->add_option("--spec", cls_args.spec, "embedding spec JSON")->required();
  cls_cmd->add_option("--radius", cls_args.radius, "flat-probe radius");
  cls_cmd->add_option("--samples", cls_args.samples, "flat-probe samples");
  cls_cmd->add_option("--seed", cls_args.seed, "rng seed");
  cls_cmd->add_option("--out", cls_args.out, "output verdict JSON");

  FlatProbeArgs fp_args;
  CLI::App* fp_cmd = app.add_subcommand("flat-probe", "Probe the flat subspace of an embedding");
  fp_cmd->add_option("--net", fp_args.net, "narrow network JSON")->required();
  fp_cmd->add_option("--data", fp_args.data, "dataset JSON")->required();
  fp_cmd->add_option("--spec", fp_args.spec, "embedding spec JSON")->required();
  fp_cmd->add_option("--radius", fp_args.radius, "probe radius (default: certified)");
  fp_cmd->add_option("--samples", fp_args.samples, "probe samples");
  fp_cmd->add_option("--seed", fp_args.seed, "rng seed");

  PacBayesArgs pb_args;
  CLI::App* pb_cmd = app.add_subcommand("pacbayes", "KL and bound sweep over surplus widths");
  pb_cmd->add_option("--net", pb_args.net, "zero-error network JSON")->required();
  pb_cmd->add_option("--data", pb_args.data, "dataset JSON")->required();
  pb_cmd->add_option("--sigma", pb_args.sigma, "prior scale");
  pb_cmd->add_option("--tau", pb_args.tau, "posterior scale");
  pb_cmd->add_option("--delta", pb_args.delta, "confidence level");
  pb_cmd->add_option("--h-max", pb_args.h_max, "largest widened width");
  pb_cmd->add_option("--seed", pb_args.seed, "rng seed");
  pb_cmd->add_option("--out", pb_args.out, "output CSV");

  ExperimentArgs exp_args;
  CLI::App* exp_cmd = app.add_subcommand("experiment", "Generalization-ratio sweep");
  exp_cmd->add_option("--activation", exp_args.activation, "tanh|relu")
      ->check(CLI::IsMember({"tanh", "relu"}));
  exp_cmd->add_option("--teacher-hidden", exp_args.teacher_hidden, "teacher width");
  exp_cmd->add_option("--student-hidden", exp_args.student_hidden, "trained width");
  exp_cmd->add_option("--n-train", exp_args.n_train, "training samples");
  exp_cmd->add_option("--n-test", exp_args.n_test, "test samples");
  exp_cmd->add_option("--noise", exp_args.noise, "training noise std");
  exp_cmd->add_option("--perturb-ratio", exp_args.perturb_ratio, "jitter scale / param norm");
  exp_cmd->add_option("--h-max", exp_args.h_max, "largest widened width");
  exp_cmd->add_option("--trials", exp_args.trials, "jitter trials per width");
  exp_cmd->add_option("--threads", exp_args.threads, "worker count (default: cores)");
  exp_cmd->add_option("--seed", exp_args.seed, "rng seed");
  exp_cmd->add_flag("--no-perturb-baseline", exp_args.no_perturb_baseline,
                    "leave the narrow denominator model unjittered");
  exp_cmd->add_flag("--surplus-zero", exp_args.surplus_zero,
                    "pin surplus output weights at exactly zero");
  exp_cmd->add_option("--out", exp_args.out, "output CSV");

  SuiteArgs suite_args;
  CLI::App* suite_cmd = app.add_subcommand("suite", "Run the demonstration suite");
  suite_cmd->add_option("--seed", suite_args.seed, "rng seed");
  suite_cmd->add_option("--out", suite_args.out, "output report JSON");

  try {
    app.parse(argc, argv);
    if (train_cmd->parsed()) run_train(train_args);
    if (embed_cmd->parsed()) run_embed(embed_args);
    if (veq_cmd->parsed()) run_verify_equal(veq_args);
    if (vst_cmd->parsed()) run_verify_stationary(vst_args);
    if (hes_cmd->parsed()) run_hessian(hes_args);
    if (cls_cmd->parsed()) run_classify(cls_args);
    if (fp_cmd->parsed()) run_flat_probe(fp_args);
    if (pb_cmd->parsed()) run_pacbayes(pb_args);
    if (exp_cmd->parsed()) run_experiment(exp_args);
    if (suite_cmd->parsed()) run_suite(suite_args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "code=%s detail=%s\n", e.code().c_str(), one_line(e.detail()).c_str());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "code=Internal detail=%s\n", one_line(e.what()).c_str());
    return 1;
  }
  return 0;
}
