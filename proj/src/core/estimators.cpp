#include "orfnet/estimators.hpp"

#include "orfnet/error.hpp"

namespace orfnet {
namespace {

void check_delta(double delta) {
  if (!(delta > 0.0)) throw_invalid("delta must be positive");
}

}  // namespace

void bootstrap_orf(EstimatorState& state, const ObjectiveSequence& seq, int i,
                   const Vector& x0, double delta, RngStream& rng) {
  check_delta(delta);
  state.prev_direction = sample_unit_sphere(seq.dim(), rng);
  state.prev_value = seq.eval(i, 0, x0 + delta * state.prev_direction);
  state.initialized = true;
}

GradientEstimate orf_estimate_along(EstimatorState& state,
                                    const ObjectiveSequence& seq, int i, int t,
                                    const Vector& x, double delta,
                                    const Vector& u) {
  check_delta(delta);
  if (!state.initialized) throw_invalid("estimator state not bootstrapped");
  if (u.size() != seq.dim()) throw_invalid("direction dimension mismatch");
  GradientEstimate g;
  g.queried_value = seq.eval(i, t, x + delta * u);
  const double scale = seq.dim() / delta * (g.queried_value - state.prev_value);
  g.components = scale * u;
  state.prev_value = g.queried_value;
  state.prev_direction = u;
  return g;
}

GradientEstimate orf_estimate(EstimatorState& state,
                              const ObjectiveSequence& seq, int i, int t,
                              const Vector& x, double delta, RngStream& rng) {
  check_delta(delta);
  if (!state.initialized) bootstrap_orf(state, seq, i, x, delta, rng);
  const Vector u = sample_unit_sphere(seq.dim(), rng);
  return orf_estimate_along(state, seq, i, t, x, delta, u);
}

GradientEstimate one_point_estimate_along(const ObjectiveSequence& seq, int i,
                                          int t, const Vector& x, double delta,
                                          const Vector& u) {
  check_delta(delta);
  if (u.size() != seq.dim()) throw_invalid("direction dimension mismatch");
  GradientEstimate g;
  g.queried_value = seq.eval(i, t, x + delta * u);
  g.components = (seq.dim() / delta * g.queried_value) * u;
  return g;
}

GradientEstimate one_point_estimate(const ObjectiveSequence& seq, int i, int t,
                                    const Vector& x, double delta,
                                    RngStream& rng) {
  check_delta(delta);
  const Vector u = sample_unit_sphere(seq.dim(), rng);
  return one_point_estimate_along(seq, i, t, x, delta, u);
}

double second_moment_bound_rhs(int d, double delta, double l0, double step_sq,
                               double theta) {
  check_delta(delta);
  if (d < 1 || l0 < 0.0 || step_sq < 0.0 || theta < 0.0) {
    throw_invalid("second-moment bound arguments must be nonnegative");
  }
  const double dd = static_cast<double>(d) * d;
  const double inv = 1.0 / (delta * delta);
  return 3.0 * dd * l0 * l0 * inv * step_sq + 12.0 * dd * l0 * l0 +
         3.0 * dd * inv * theta * theta;
}

}  // namespace orfnet
