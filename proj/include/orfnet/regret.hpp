#pragma once

// Offline optimum, static and gradient regret, and power-law fits.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "orfnet/algorithms.hpp"
#include "orfnet/objectives.hpp"

namespace orfnet {

struct OptimumOptions {
  double tolerance = 1e-10;
  int starts = 8;
  int max_iterations = 200000;
  bool grid_check = true;  // d <= 2 with a compact aggregate
  double grid_step = 1e-3;
};

struct Optimum {
  Vector point;
  double value = 0.0;
  bool exact = false;
  // Grid cross-check (d <= 2): best grid point and how far apart they are.
  std::optional<Vector> grid_point;
  double grid_value = 0.0;
};

/// argmin over the set of sum_{t<T} sum_i f_t^i. Throws "no oracle available"
/// when neither a closed form nor gradients exist.
Optimum offline_optimum(const ObjectiveSequence& seq, const ConstraintSet& set,
                        const OptimumOptions& options = {});

/// Projected gradient descent with backtracking on an aggregate.
Vector projected_descent(const HorizonAggregate& agg, const ConstraintSet& set,
                         Vector x, double tolerance, int max_iterations);

/// sum_{s<=t} sum_i f_s^i(x) for every t, accumulated in the same order as
/// the run loop so that a trace sitting at x gives exactly zero regret.
std::vector<double> comparator_losses(const ObjectiveSequence& seq,
                                      const Vector& x);

double static_regret(const RunTrace& trace, const ObjectiveSequence& seq,
                     const Vector& comparator);

enum class GradientFlavor { Smoothed, True };

/// sum_t sum_i ||grad f_{delta,t}^i(x_t^i)||^2 (or the unsmoothed gradient).
/// Needs a trace with iterates. Without an analytic smoothed gradient a
/// Monte-Carlo estimate with mc_samples draws per point is used, or an error
/// is raised when mc_samples == 0.
double gradient_regret(const RunTrace& trace, const ObjectiveSequence& seq,
                       double delta,
                       GradientFlavor flavor = GradientFlavor::Smoothed,
                       int mc_samples = 0, std::uint64_t mc_seed = 0);

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  int used = 0;
  std::vector<std::string> warnings;
};

/// Least-squares slope of log R against log T. Nonpositive values are dropped
/// with a warning; fewer than three remaining points is an error.
ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& pairs);

}  // namespace orfnet
