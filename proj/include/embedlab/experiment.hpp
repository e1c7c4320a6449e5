#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "embedlab/network.hpp"
#include "embedlab/serialize.hpp"

namespace embedlab {

// Generalization study around a widened interpolant: a narrow student is
// trained to zero error on noisy scalar teacher data, widened with inactive
// units to each H in the sweep, and both the widened and the narrow model are
// jittered with isotropic parameter noise of scale rho = perturb_ratio times
// the trained parameter norm. Each row reports the across-trial mean and
// standard error of (widened test error) / (narrow test error).
struct ExperimentConfig {
  std::size_t teacher_hidden = 1;
  std::size_t student_hidden = 5;
  std::size_t n_train = 10;
  double noise_std = 0.1;
  std::vector<std::size_t> h_sweep;
  std::size_t trials = 1000;
  double perturb_ratio = 0.01;
  std::size_t n_test = 1000;
  std::uint64_t seed = 0;
  Activation activation;
  bool perturb_baseline = true;  // jitter the narrow denominator model too
  bool surplus_zero = false;     // pin surplus output weights at exactly zero
  std::size_t threads = 1;       // worker count; results are independent of it

  void validate() const;
};

struct ExperimentData {
  Dataset train;
  Dataset test;  // noiseless teacher outputs on fresh inputs
  NetworkParams teacher;
};

struct ExperimentRow {
  std::size_t H = 0;
  double ratio_mean = 0.0;
  double ratio_stderr = 0.0;
  double base_gen_error = 0.0;  // mean denominator (narrow-model test error)
};

struct ExperimentReport {
  std::vector<ExperimentRow> rows;
  NetworkParams student;  // the trained zero-error narrow model
  double train_loss = 0.0;
  double rho = 0.0;  // absolute perturbation scale used
  Activation activation;
};

// Teacher, noisy training set, and noiseless test set, all deterministic in
// (cfg, seed). Training inputs are uniform on [-1, 1].
ExperimentData generate_data(const ExperimentConfig& cfg, std::uint64_t seed);

// Full sweep. Trials derive independent RNG streams from (seed, H, trial), so
// the output is bit-identical regardless of thread count or scheduling.
// Errors: TrainingFailed when the student cannot reach zero training error.
ExperimentReport run_generalization_experiment(const ExperimentConfig& cfg);

// Squared-error test loss per sample: sum ||y - f||^2 / 2 over the test set,
// divided by its size.
double mean_test_error(const NetworkParams& net, const Dataset& test);

// CSV with the exact header H,activation,ratio_mean,ratio_stderr,
// base_gen_error and 17-significant-digit floats.
std::string experiment_csv(const ExperimentReport& report);

// Kendall rank-correlation trend test with the normal approximation
// z = 3 tau sqrt(n(n-1)) / sqrt(2(2n+5)); significance is one-sided at 5%
// (z > 1.645). Ties count toward neither concordant nor discordant.
struct TrendTest {
  double tau = 0.0;
  double z = 0.0;
  bool significantly_positive = false;
};
TrendTest kendall_trend(const Vec& x, const Vec& y);

Json experiment_report_to_json(const ExperimentReport& report);

// One-shot demonstration suite: builds stationary instances for every
// landscape claim (function preservation, stationarity of surplus
// embeddings, saddle creation from output coupling, ReLU semi-flat minima,
// the five-way unit-replication case split, zero-error surplus block
// structure, and rejection of tampered specs), runs each verdict, and
// returns {seed, all_pass, checks:[{name, pass, evidence}]}. Never throws:
// instance-construction failures surface as failing checks with the error
// text as evidence. Output is bit-identical for a given seed.
Json run_classification_suite(std::uint64_t seed);

}  // namespace embedlab
