#include "orfnet/algorithms.hpp"

#include <cmath>
#include <limits>

#include "orfnet/error.hpp"
#include "orfnet/estimators.hpp"

namespace orfnet {
namespace {

double eta_exponent(Regime r) {
  switch (r) {
    case Regime::ConvexLipschitz: return 2.0 / 3.0;
    case Regime::ConvexSmooth: return 0.5;
    default: return 0.25;
  }
}

double schedule_delta(Regime r, double horizon, int d, double l0,
                      std::optional<double> eps_f) {
  switch (r) {
    case Regime::ConvexLipschitz: return 2.0 / std::cbrt(horizon);
    case Regime::ConvexSmooth: return 2.0 / std::pow(horizon, 0.25);
    case Regime::NonconvexLipschitz: return *eps_f / l0;
    case Regime::NonconvexSmooth: return d / std::pow(horizon, 0.125);
  }
  return 0.0;
}

void check_step_args(const Matrix& points, const Matrix& mix,
                     const Matrix& estimates, const ConstraintSet& set) {
  if (mix.rows() != mix.cols() || mix.rows() != points.rows()) {
    throw_invalid("mixing matrix does not match the number of agents");
  }
  if (estimates.rows() != points.rows() || estimates.cols() != points.cols()) {
    throw_invalid("estimates do not match the iterate shape");
  }
  if (points.cols() != set.dim()) throw_invalid("constraint set dimension mismatch");
}

Matrix project_rows(Matrix m, const ConstraintSet& set) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    m.row(i) = set.project(m.row(i).transpose()).transpose();
  }
  return m;
}

}  // namespace

const char* to_string(Regime r) noexcept {
  switch (r) {
    case Regime::ConvexLipschitz: return "ConvexLipschitz";
    case Regime::ConvexSmooth: return "ConvexSmooth";
    case Regime::NonconvexLipschitz: return "NonconvexLipschitz";
    case Regime::NonconvexSmooth: return "NonconvexSmooth";
  }
  return "?";
}

std::optional<Regime> regime_from_string(const std::string& s) {
  for (Regime r : {Regime::ConvexLipschitz, Regime::ConvexSmooth,
                   Regime::NonconvexLipschitz, Regime::NonconvexSmooth}) {
    if (s == to_string(r)) return r;
  }
  return std::nullopt;
}

const char* to_string(EstimatorKind e) noexcept {
  return e == EstimatorKind::Orf ? "orf" : "one-point";
}

std::optional<EstimatorKind> estimator_from_string(const std::string& s) {
  if (s == "orf") return EstimatorKind::Orf;
  if (s == "one-point") return EstimatorKind::OnePoint;
  return std::nullopt;
}

double schedule_beta(Regime regime, double horizon, int d, double l0,
                     std::optional<double> eps_f) {
  // With eta = 1 / (sqrt(3 alpha) d L0 T^p), beta = 1 / (T^{2p} delta^2).
  const double delta = schedule_delta(regime, horizon, d, l0, eps_f);
  return 1.0 / (std::pow(horizon, 2.0 * eta_exponent(regime)) * delta * delta);
}

Schedule evaluate_schedule(Regime regime, int horizon, int d, double l0,
                           const MixingConstants& constants,
                           std::optional<double> eps_f) {
  if (horizon < 1) throw_invalid("horizon must be >= 1");
  if (d < 1) throw_invalid("dimension must be >= 1");
  if (!(l0 > 0.0)) throw_invalid("L0 must be positive");
  if (!(constants.alpha > 0.0)) throw_invalid("alpha must be positive");
  const bool needs_eps = regime == Regime::NonconvexLipschitz;
  if (needs_eps && !eps_f) throw_invalid("eps_f is required for NonconvexLipschitz");
  if (!needs_eps && eps_f) throw_invalid("eps_f applies only to NonconvexLipschitz");
  if (eps_f && !(*eps_f > 0.0)) throw_invalid("eps_f must be positive");

  const double T = horizon;
  Schedule s;
  s.regime = regime;
  s.constants = constants;
  s.horizon = horizon;
  s.eta = 1.0 / (std::sqrt(3.0 * constants.alpha) * d * l0 *
                 std::pow(T, eta_exponent(regime)));
  s.delta = schedule_delta(regime, T, d, l0, eps_f);
  s.beta = 3.0 * constants.alpha * d * d * l0 * l0 * s.eta * s.eta /
           (s.delta * s.delta);
  return s;
}

Schedule make_schedule(Regime regime, int horizon, int d, double l0,
                       const MixingConstants& constants,
                       std::optional<double> eps_f) {
  const Schedule s = evaluate_schedule(regime, horizon, d, l0, constants, eps_f);
  if (!(s.beta < 1.0)) {
    // beta is decreasing in T for every regime; find the first valid T.
    std::int64_t hi = horizon;
    while (hi < (std::int64_t{1} << 62) &&
           !(schedule_beta(regime, double(hi), d, l0, eps_f) < 1.0)) {
      hi *= 2;
    }
    std::int64_t lo = horizon;
    while (lo < hi) {
      const std::int64_t mid = lo + (hi - lo) / 2;
      if (schedule_beta(regime, double(mid), d, l0, eps_f) < 1.0) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    throw_invalid("schedule violates β<1 (beta = " + std::to_string(s.beta) +
                  "); minimum valid T is " + std::to_string(lo));
  }
  return s;
}

Matrix algorithm1_step(const Matrix& points, const Matrix& mix,
                       const Matrix& estimates, double eta,
                       const ConstraintSet& set) {
  check_step_args(points, mix, estimates, set);
  return project_rows(mix * (points - eta * estimates), set);
}

Matrix algorithm2_step(const Matrix& points, const Matrix& mix,
                       const Matrix& estimates, double eta,
                       const ConstraintSet& set) {
  check_step_args(points, mix, estimates, set);
  return project_rows(mix * points - eta * estimates, set);
}

Vector RunTrace::iterate(int t, int i) const {
  if (iterates.empty()) throw_invalid("trace does not keep iterates");
  if (t < 0 || t >= horizon || i < 0 || i >= n_agents) {
    throw_invalid("trace index out of range");
  }
  const auto off = (static_cast<std::size_t>(t) * n_agents + i) * dim;
  return Eigen::Map<const Vector>(iterates.data() + off, dim);
}

int default_stride(int horizon) {
  if (horizon <= 10000) return 1;
  return static_cast<int>((static_cast<std::int64_t>(horizon) + 9999) / 10000);
}

RunTrace run(const ObjectiveSequence& seq, const MixingMatrix& mix,
             const ConstraintSet& set, const Schedule& schedule,
             std::uint64_t seed, const RunOptions& options) {
  const int n = seq.n_agents();
  const int d = seq.dim();
  const int T = seq.horizon();
  if (mix.size() != n) throw_invalid("mixing matrix does not match N");
  if (set.dim() != d) throw_invalid("constraint set dimension mismatch");
  if (schedule.horizon != T) throw_invalid("schedule horizon does not match T");
  if (!(schedule.delta > 0.0) || !(schedule.eta > 0.0)) {
    throw_invalid("schedule must have positive eta and delta");
  }

  Matrix x = Matrix::Zero(n, d);
  if (options.initial) {
    if (options.initial->rows() != n || options.initial->cols() != d) {
      throw_invalid("initial points must be N x d");
    }
    x = *options.initial;
    for (int i = 0; i < n; ++i) {
      if (!set.contains(x.row(i).transpose(), 1e-12)) {
        throw_invalid("initial point outside the constraint set");
      }
    }
  }

  RunTrace tr;
  tr.n_agents = n;
  tr.dim = d;
  tr.horizon = T;
  tr.stride = options.stride > 0 ? options.stride : default_stride(T);
  tr.initial_points = x;
  tr.round_loss.resize(static_cast<std::size_t>(T));
  tr.cum_loss.resize(static_cast<std::size_t>(T));
  if (options.keep_iterates) {
    tr.iterates.reserve(static_cast<std::size_t>(T) * n * d);
    tr.estimate_sq.reserve(static_cast<std::size_t>(T) * n);
  }

  InstrumentedSequence probe(seq);
  const double delta = schedule.delta;
  std::vector<RngStream> rngs;
  std::vector<EstimatorState> states(static_cast<std::size_t>(n));
  rngs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    rngs.emplace_back(seed, static_cast<std::uint64_t>(i));
    // Both estimators consume the bootstrap draw so that paired runs see the
    // same perturbation directions every round.
    const Vector x0 = x.row(i).transpose();
    if (options.estimator == EstimatorKind::Orf) {
      bootstrap_orf(states[static_cast<std::size_t>(i)], probe, i, x0, delta,
                    rngs.back());
    } else {
      sample_unit_sphere(d, rngs.back());
    }
  }

  bool smoothed_ok = true;
  bool true_ok = true;
  double gr_smoothed = 0.0;
  double gr_true = 0.0;
  double cum = 0.0;
  Matrix g(n, d);
  std::vector<double> queried(static_cast<std::size_t>(n));

  for (int t = 0; t < T; ++t) {
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
      const Vector xi = x.row(i).transpose();
      auto& rng = rngs[static_cast<std::size_t>(i)];
      const GradientEstimate est =
          options.estimator == EstimatorKind::Orf
              ? orf_estimate(states[static_cast<std::size_t>(i)], probe, i, t,
                             xi, delta, rng)
              : one_point_estimate(probe, i, t, xi, delta, rng);
      g.row(i) = est.components.transpose();
      tr.estimate_sq_total += est.components.squaredNorm();
      queried[static_cast<std::size_t>(i)] = est.queried_value;
      loss += seq.value(i, t, xi);

      if (smoothed_ok) {
        if (auto gs = seq.smoothed_gradient(i, t, xi, delta)) {
          gr_smoothed += gs->squaredNorm();
        } else {
          smoothed_ok = false;
        }
      }
      if (true_ok) {
        if (auto gt = seq.gradient(i, t, xi)) {
          gr_true += gt->squaredNorm();
        } else {
          true_ok = false;
        }
      }
    }
    cum += loss;
    tr.round_loss[static_cast<std::size_t>(t)] = loss;
    tr.cum_loss[static_cast<std::size_t>(t)] = cum;

    if (options.keep_iterates) {
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) tr.iterates.push_back(x(i, k));
        tr.estimate_sq.push_back(g.row(i).squaredNorm());
      }
    }
    if (options.record_rows && (t % tr.stride == 0 || t == T - 1)) {
      const Vector mean = x.colwise().mean().transpose();
      for (int i = 0; i < n; ++i) {
        TraceRow row;
        row.t = t;
        row.agent = i;
        row.x = x.row(i).transpose();
        row.estimate = g.row(i).transpose();
        row.estimate_norm = row.estimate.norm();
        row.queried_value = queried[static_cast<std::size_t>(i)];
        row.consensus_error = (row.x - mean).norm();
        row.cum_loss = cum;
        tr.rows.push_back(std::move(row));
      }
    }

    x = options.algorithm == Algorithm::One
            ? algorithm1_step(x, mix.weights(), g, schedule.eta, set)
            : algorithm2_step(x, mix.weights(), g, schedule.eta, set);
  }

  if (smoothed_ok) tr.grad_regret_smoothed = gr_smoothed;
  if (true_ok) tr.grad_regret_true = gr_true;
  tr.final_points = x;
  tr.evaluations = probe.evaluations();
  return tr;
}

}  // namespace orfnet
