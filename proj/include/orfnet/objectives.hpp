#pragma once

// Time-varying local objectives f_t^i, constraint sets with projection, and
// increasing-rate (theta) accounting.
//
// Built-in scenarios share one center path:
//   c_t^i = anchor + spread * e(2 pi i / N) + rho * e(omega t + 2 pi i / N)
// where e(a) = (cos a, sin a, 0, ...) (just cos a when d = 1) and
// omega = s / rho for a per-round center displacement s = drift * T^-decay.

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "orfnet/linalg.hpp"
#include "orfnet/sampling.hpp"

namespace orfnet {

enum class SmoothClass { C00, C11 };

const char* to_string(SmoothClass c) noexcept;

class ConstraintSet {
 public:
  enum class Kind { Ball, Box, Budget };

  static ConstraintSet ball(int dim, double radius);
  static ConstraintSet box(Vector lo, Vector hi);
  /// Box intersected with the halfspace sum_k x_k <= budget.
  static ConstraintSet budget(Vector lo, Vector hi, double budget);

  Kind kind() const noexcept { return kind_; }
  int dim() const noexcept { return static_cast<int>(lo_.size()); }

  /// Euclidean projection; returns x unchanged when x is already inside.
  Vector project(const Vector& x) const;
  bool contains(const Vector& x, double tol = 1e-12) const;

  /// r_l and r_u with r_l B ⊆ X ⊆ r_u B.
  double inner_radius() const noexcept { return r_inner_; }
  double outer_radius() const noexcept { return r_outer_; }

  /// sup_{x in X} <a, x>.
  double support(const Vector& a) const;
  /// sup over the inflated set X_delta = X + delta B.
  double support(const Vector& a, double delta) const {
    return support(a) + delta * a.norm();
  }

  const Vector& lower() const noexcept { return lo_; }
  const Vector& upper() const noexcept { return hi_; }
  double radius() const noexcept { return radius_; }
  double budget_limit() const noexcept { return budget_; }

 private:
  ConstraintSet() = default;

  Kind kind_ = Kind::Ball;
  Vector lo_;  // bounding box for every kind
  Vector hi_;
  double radius_ = 0.0;
  double budget_ = 0.0;
  double r_inner_ = 0.0;
  double r_outer_ = 0.0;
};

struct SequenceInfo {
  std::string name;
  int n_agents = 1;
  int dim = 1;
  int horizon = 1;  // rounds 0..horizon-1 are played; eval accepts t <= horizon
  SmoothClass smooth_class = SmoothClass::C00;
  bool convex = true;
  double lipschitz_l0 = 0.0;
  double smooth_l1 = 0.0;  // meaningful when smooth_class == C11
};

/// sum_t sum_i f_t^i over the played rounds, used by the offline optimum.
class HorizonAggregate {
 public:
  virtual ~HorizonAggregate() = default;
  virtual double value(const Vector& x) const = 0;
  /// Gradient, or a subgradient at kinks.
  virtual Vector gradient(const Vector& x) const = 0;
  /// Exact constrained minimizer when one is known in closed form.
  virtual std::optional<Vector> exact_minimizer(const ConstraintSet&) const {
    return std::nullopt;
  }
  /// True when value() costs O(d) or O(d log NT); enables grid cross-checks.
  virtual bool compact() const { return false; }
};

class ObjectiveSequence {
 public:
  explicit ObjectiveSequence(SequenceInfo info) : info_(std::move(info)) {}
  virtual ~ObjectiveSequence() = default;

  const SequenceInfo& info() const noexcept { return info_; }
  int n_agents() const noexcept { return info_.n_agents; }
  int dim() const noexcept { return info_.dim; }
  int horizon() const noexcept { return info_.horizon; }

  /// f_t^i(x) with index and dimension checks.
  double eval(int i, int t, const Vector& x) const;

  virtual double value(int i, int t, const Vector& x) const = 0;
  virtual std::optional<Vector> gradient(int /*i*/, int /*t*/,
                                         const Vector& /*x*/) const {
    return std::nullopt;
  }
  /// Closed-form gradient of the sphere-smoothed f_{delta,t}^i.
  virtual std::optional<Vector> smoothed_gradient(int /*i*/, int /*t*/,
                                                  const Vector& /*x*/,
                                                  double /*delta*/) const {
    return std::nullopt;
  }
  /// Closed-form f_{delta,t}^i(x); test oracle only.
  virtual std::optional<double> smoothed_value_exact(int /*i*/, int /*t*/,
                                                     const Vector& /*x*/,
                                                     double /*delta*/) const {
    return std::nullopt;
  }
  /// Analytic upper envelope of sup_{x in X_delta} |f_t - f_{t-1}|, or of
  /// the smoothed functions when smoothing > 0.
  virtual std::optional<double> drift_envelope(int /*i*/, int /*t*/,
                                               const ConstraintSet& /*set*/,
                                               double /*delta*/,
                                               double /*smoothing*/) const {
    return std::nullopt;
  }
  virtual std::unique_ptr<HorizonAggregate> aggregate() const;

 protected:
  void check_indices(int i, int t) const;

 private:
  SequenceInfo info_;
};

/// Library-API sequence built from callables.
class FunctionSequence : public ObjectiveSequence {
 public:
  using ValueFn = std::function<double(int, int, const Vector&)>;
  using GradFn = std::function<Vector(int, int, const Vector&)>;

  FunctionSequence(SequenceInfo info, ValueFn value, GradFn grad = {});

  double value(int i, int t, const Vector& x) const override;
  std::optional<Vector> gradient(int i, int t, const Vector& x) const override;

 private:
  ValueFn value_;
  GradFn grad_;
};

/// Forwards to another sequence and counts value() calls.
class InstrumentedSequence : public ObjectiveSequence {
 public:
  explicit InstrumentedSequence(const ObjectiveSequence& inner);

  double value(int i, int t, const Vector& x) const override;
  std::optional<Vector> gradient(int i, int t, const Vector& x) const override;
  std::optional<Vector> smoothed_gradient(int i, int t, const Vector& x,
                                          double delta) const override;

  std::uint64_t evaluations() const noexcept { return count_.load(); }
  void reset() noexcept { count_ = 0; }

 private:
  const ObjectiveSequence& inner_;
  mutable std::atomic<std::uint64_t> count_{0};
};

struct ScenarioParams {
  std::string name = "drifting-quadratic";
  int n_agents = 1;
  int dim = 1;
  int horizon = 1;
  std::vector<double> anchor;  // empty -> zeros; one value -> broadcast
  double spread = 0.3;
  double orbit_radius = 0.2;
  double drift = 0.0;        // per-round center displacement scale
  double drift_decay = 0.0;  // displacement = drift * horizon^-drift_decay
  double kappa = 0.3;        // ripple amplitude
  double ripple_freq = 5.0;
  double offset = 0.0;       // constant added to quadratic-type objectives
  std::vector<double> weights;  // resource-allocation a_i; empty -> 1
  double demand_amplitude = 0.3;
  double lipschitz_margin = -1.0;  // < 0 -> outer radius of the set
};

/// Names accepted by make_scenario.
const std::vector<std::string>& scenario_names();
/// Smoothness class and convexity a scenario name implies.
SmoothClass scenario_class(const std::string& name);
bool scenario_convex(const std::string& name);

std::unique_ptr<ObjectiveSequence> make_scenario(const ScenarioParams& params,
                                                 const ConstraintSet& set);

/// E_u[cos(a u_1)] for u uniform on the unit sphere in R^d; the factor by
/// which sphere smoothing damps a sinusoid of angular frequency a / delta.
double sphere_cos_average(int d, double a);

struct SmoothedEstimate {
  double value;
  double standard_error;
};

/// Monte-Carlo f_{delta,t}^i(x). Test infrastructure; algorithms never call it.
SmoothedEstimate smoothed_value(const ObjectiveSequence& seq, int i, int t,
                                const Vector& x, double delta, int n_samples,
                                RngStream& rng);

/// L_delta = d L0 / delta.
double smoothed_lipschitz(int d, double delta, double l0);

struct IncreasingRate {
  Matrix theta;  // N x T, column 0 is zero
  double total = 0.0;
  bool smoothed = false;
  bool analytic = false;
  int grid_points_per_axis = 0;  // when computed on a grid
};

enum class ThetaMethod { Auto, Grid };

struct ThetaOptions {
  ThetaMethod method = ThetaMethod::Auto;
  int grid_points = 10000;        // per axis
  std::int64_t grid_cap = 1000000;  // total grid points; axis count shrinks
  double smoothing = 0.0;         // > 0 -> theta of the smoothed functions
};

/// theta_{i,t} over X_delta: analytic envelope when the sequence provides one,
/// otherwise a deterministic grid (a lower estimate of the continuous sup).
IncreasingRate compute_theta(const ObjectiveSequence& seq,
                             const ConstraintSet& set, double delta,
                             const ThetaOptions& options = {});

}  // namespace orfnet
