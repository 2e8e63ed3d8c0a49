#pragma once

// Experiment configuration and the run / compare / sweep / validate commands.
//
// Config is INI text:
//
//   [experiment]  seed, regime, horizon, algorithm, estimator, repetitions,
//                 eps_f, theta_grid_points
//   [network]     family (ring|path|complete|erdos|edges|matrix), agents,
//                 edge_probability, graph_seed, edges = "1-2, 2-3",
//                 weights = "0.5 0.5; 0.5 0.5"
//   [scenario]    name, dim, anchor, spread, orbit_radius, drift,
//                 drift_decay, kappa, ripple_freq, offset, weights,
//                 demand_amplitude, lipschitz_margin
//   [constraints] kind (ball|box|budget), radius, lower, upper, budget
//   [sweep]       horizons = "500, 2000, 8000", synthetic_exponent,
//                 synthetic_scale
//   [validate]    delta, samples, probes, t_max

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "orfnet/algorithms.hpp"
#include "orfnet/objectives.hpp"
#include "orfnet/topology.hpp"

namespace orfnet {

struct NetworkSpec {
  std::string family = "ring";
  int n_agents = 0;
  double edge_probability = 0.5;
  std::uint64_t graph_seed = 0;
  std::vector<CommGraph::Edge> edges;  // zero-based
  std::optional<Matrix> weights;       // raw, validated only when built
};

struct ConstraintSpec {
  std::string kind = "ball";
  double radius = 1.0;
  std::vector<double> lower;
  std::vector<double> upper;
  double budget = 0.0;
};

struct SweepSpec {
  std::vector<int> horizons;
  std::optional<double> synthetic_exponent;  // test mode: injected power law
  double synthetic_scale = 1.0;
};

struct ValidateSpec {
  double delta = 0.1;
  int samples = 100000;
  int probes = 200;
  int t_max = 200;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  Regime regime = Regime::ConvexLipschitz;
  Algorithm algorithm = Algorithm::One;
  EstimatorKind estimator = EstimatorKind::Orf;
  int repetitions = 20;
  std::optional<double> eps_f;
  int theta_grid_points = 10000;

  NetworkSpec network;
  ScenarioParams scenario;  // n_agents, dim and horizon are filled in
  ConstraintSpec constraints;
  SweepSpec sweep;
  ValidateSpec validate;
};

/// Collects every violation into one ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

ConstraintSet build_constraints(const ConstraintSpec& spec, int dim);
MixingMatrix build_mixing(const NetworkSpec& spec);

struct CommandOptions {
  std::string out_dir = "out";
  int workers = 1;
  bool quiet = false;
};

/// Exit status values shared with the CLI.
enum class Status { Ok = 0, Config = 1, Validation = 2, Runtime = 3 };

struct CommandResult {
  Status status = Status::Ok;
  std::string message;
};

/// Runs fn(k) for k in [0, count) on up to `workers` threads. The first
/// exception is rethrown after all workers stop.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

/// Shortest round-trip decimal form.
std::string format_double(double v);

CommandResult cmd_run(const ExperimentConfig& cfg, const CommandOptions& opts);
CommandResult cmd_compare(const ExperimentConfig& cfg,
                          const CommandOptions& opts);
CommandResult cmd_sweep(const ExperimentConfig& cfg, const CommandOptions& opts);

struct SuiteResult {
  std::string name;
  bool passed = false;
  double margin = 0.0;  // slack in the tightest check; negative on failure
  std::string detail;
};

/// "lemma1-mixing", "lemma2-smoothing", "lemma4-unbiasedness",
/// "lemma5-second-moment", "sphere-isotropy".
const std::vector<std::string>& suite_names();
SuiteResult validate_suite(const ExperimentConfig& cfg, const std::string& name,
                           int workers);
std::vector<SuiteResult> validate_suites(const ExperimentConfig& cfg,
                                         int workers);
CommandResult cmd_validate(const ExperimentConfig& cfg,
                           const CommandOptions& opts);

/// Mixing-bound check of a raw weight matrix: doubly stochastic and
/// max |A^t - 1/N| <= gamma^(t-1) for t = 1..t_max.
SuiteResult mixing_bound_suite(const Matrix& weights, int t_max);

}  // namespace orfnet
