#pragma once

// Zeroth-order gradient estimators.
//
// ORF:       g = (d / delta) (f_t(x_t + delta u_t) - f_{t-1}(x_{t-1} + delta u_{t-1})) u_t
// one-point: g = (d / delta) f_t(x_t + delta u_t) u_t
//
// Both make exactly one objective evaluation per call. The ORF state is
// bootstrapped before round 0 with one extra evaluation f_0(x_0 + delta u_-1).

#include "orfnet/linalg.hpp"
#include "orfnet/objectives.hpp"
#include "orfnet/sampling.hpp"

namespace orfnet {

struct EstimatorState {
  double prev_value = 0.0;
  Vector prev_direction;
  bool initialized = false;
};

struct GradientEstimate {
  Vector components;
  double queried_value = 0.0;
};

/// Draws u_-1 and stores f_0^i(x0 + delta u_-1).
void bootstrap_orf(EstimatorState& state, const ObjectiveSequence& seq, int i,
                   const Vector& x0, double delta, RngStream& rng);

/// Draws u_t from rng; bootstraps an uninitialized state first.
GradientEstimate orf_estimate(EstimatorState& state,
                              const ObjectiveSequence& seq, int i, int t,
                              const Vector& x, double delta, RngStream& rng);
/// Same with a caller-supplied direction (and no bootstrap draw).
GradientEstimate orf_estimate_along(EstimatorState& state,
                                    const ObjectiveSequence& seq, int i, int t,
                                    const Vector& x, double delta,
                                    const Vector& u);

GradientEstimate one_point_estimate(const ObjectiveSequence& seq, int i, int t,
                                    const Vector& x, double delta,
                                    RngStream& rng);
GradientEstimate one_point_estimate_along(const ObjectiveSequence& seq, int i,
                                          int t, const Vector& x, double delta,
                                          const Vector& u);

/// (3 d^2 L0^2 / delta^2) step_sq + 12 d^2 L0^2 + (3 d^2 / delta^2) theta^2.
double second_moment_bound_rhs(int d, double delta, double l0, double step_sq,
                               double theta);

}  // namespace orfnet
