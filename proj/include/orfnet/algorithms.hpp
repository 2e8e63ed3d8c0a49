#pragma once

// Projected consensus updates, the run loop, and the (eta, delta) schedules.
//
// Algorithm 1: x_i+ = P[ sum_j a_ij (x_j - eta g_j) ]
// Algorithm 2: x_i+ = P[ sum_j a_ij x_j - eta g_i ]

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "orfnet/linalg.hpp"
#include "orfnet/objectives.hpp"
#include "orfnet/topology.hpp"

namespace orfnet {

enum class Regime {
  ConvexLipschitz,
  ConvexSmooth,
  NonconvexLipschitz,
  NonconvexSmooth,
};

const char* to_string(Regime r) noexcept;
std::optional<Regime> regime_from_string(const std::string& s);

enum class Algorithm { One = 1, Two = 2 };
enum class EstimatorKind { Orf, OnePoint };

const char* to_string(EstimatorKind e) noexcept;
std::optional<EstimatorKind> estimator_from_string(const std::string& s);

struct Schedule {
  double eta = 0.0;
  double delta = 0.0;
  double beta = 0.0;  // 3 alpha d^2 L0^2 eta^2 / delta^2
  Regime regime = Regime::ConvexLipschitz;
  MixingConstants constants{};
  int horizon = 0;
};

/// beta for a regime at horizon T; smaller T gives larger beta.
double schedule_beta(Regime regime, double horizon, int d, double l0,
                     std::optional<double> eps_f);

/// eta, delta and beta from the formulas alone; beta may be >= 1.
Schedule evaluate_schedule(Regime regime, int horizon, int d, double l0,
                           const MixingConstants& constants,
                           std::optional<double> eps_f = std::nullopt);

/// Throws "schedule violates β<1 ..." naming the smallest valid T.
Schedule make_schedule(Regime regime, int horizon, int d, double l0,
                       const MixingConstants& constants,
                       std::optional<double> eps_f = std::nullopt);

/// Rows of `points` and `estimates` are agents.
Matrix algorithm1_step(const Matrix& points, const Matrix& mix,
                       const Matrix& estimates, double eta,
                       const ConstraintSet& set);
Matrix algorithm2_step(const Matrix& points, const Matrix& mix,
                       const Matrix& estimates, double eta,
                       const ConstraintSet& set);

struct TraceRow {
  int t = 0;
  int agent = 0;
  Vector x;
  Vector estimate;
  double estimate_norm = 0.0;
  double queried_value = 0.0;
  double consensus_error = 0.0;
  double cum_loss = 0.0;  // network loss summed over rounds 0..t
};

struct RunTrace {
  int n_agents = 0;
  int dim = 0;
  int horizon = 0;
  int stride = 1;  // rows are recorded for t % stride == 0 and t = T - 1

  std::vector<TraceRow> rows;
  std::vector<double> round_loss;  // sum_i f_t^i(x_t^i)
  std::vector<double> cum_loss;
  /// Every iterate, round-major then agent, when kept.
  std::vector<double> iterates;
  /// Squared estimate norms, round-major then agent, when kept.
  std::vector<double> estimate_sq;
  /// sum_t sum_i ||g_t^i||^2, always accumulated.
  double estimate_sq_total = 0.0;

  // sum_t sum_i ||grad f_delta(x_t^i)||^2 and ||grad f(x_t^i)||^2,
  // accumulated in the loop when analytic gradients exist.
  std::optional<double> grad_regret_smoothed;
  std::optional<double> grad_regret_true;

  Matrix initial_points;
  Matrix final_points;
  std::uint64_t evaluations = 0;

  Vector iterate(int t, int i) const;
};

struct RunOptions {
  Algorithm algorithm = Algorithm::One;
  EstimatorKind estimator = EstimatorKind::Orf;
  std::optional<Matrix> initial;  // N x d, default origin
  bool keep_iterates = true;
  bool record_rows = true;
  int stride = 0;  // 0 -> 1 for T <= 1e4, else ceil(T / 1e4)
};

int default_stride(int horizon);

/// Per-agent randomness: RngStream(seed, i).
RunTrace run(const ObjectiveSequence& seq, const MixingMatrix& mix,
             const ConstraintSet& set, const Schedule& schedule,
             std::uint64_t seed, const RunOptions& options = {});

}  // namespace orfnet
