// Built-in scenario catalog.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "orfnet/error.hpp"
#include "orfnet/objectives.hpp"

namespace orfnet {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void add_circle(Vector& c, double r, double angle) {
  c(0) += r * std::cos(angle);
  if (c.size() > 1) c(1) += r * std::sin(angle);
}

/// sup over X_delta of |<a, x> + b|.
double sup_abs_affine(const ConstraintSet& set, double delta, const Vector& a,
                      double b) {
  return std::max(set.support(a, delta) + b, set.support(-a, delta) - b);
}

struct OrbitPath {
  Vector anchor;
  double spread = 0.0;
  double rho = 0.0;
  double omega = 0.0;
  int n = 1;

  double phase(int i) const { return kTwoPi * i / n; }

  Vector center(int i, int t) const {
    Vector c = anchor;
    add_circle(c, spread, phase(i));
    add_circle(c, rho, omega * t + phase(i));
    return c;
  }

  double bound() const { return anchor.norm() + spread + rho; }
};

Vector make_anchor(const std::vector<double>& v, int d) {
  if (v.empty()) return Vector::Zero(d);
  if (v.size() == 1) return Vector::Constant(d, v[0]);
  if (static_cast<int>(v.size()) != d) {
    throw_invalid("anchor must have 1 or d entries");
  }
  return Eigen::Map<const Vector>(v.data(), d);
}

double per_round_drift(const ScenarioParams& p) {
  if (p.drift < 0.0) throw_invalid("drift must be nonnegative");
  return p.drift * std::pow(static_cast<double>(p.horizon), -p.drift_decay);
}

OrbitPath make_orbit(const ScenarioParams& p, bool stationary) {
  OrbitPath o;
  o.anchor = make_anchor(p.anchor, p.dim);
  o.spread = p.spread;
  o.rho = p.orbit_radius;
  o.n = p.n_agents;
  const double s = stationary ? 0.0 : per_round_drift(p);
  o.omega = (o.rho > 0.0) ? s / o.rho : 0.0;
  return o;
}

double domain_radius(const ScenarioParams& p, const ConstraintSet& set) {
  const double margin =
      p.lipschitz_margin < 0.0 ? set.outer_radius() : p.lipschitz_margin;
  return set.outer_radius() + margin;
}

/// Sum over the played horizon of centers, for isotropic quadratic parts.
struct CenterSums {
  double count = 0.0;
  Vector sum;
  double sum_sq = 0.0;
};

CenterSums center_sums(const OrbitPath& orbit, int n, int horizon, int d) {
  CenterSums s;
  s.sum = Vector::Zero(d);
  for (int t = 0; t < horizon; ++t) {
    for (int i = 0; i < n; ++i) {
      const Vector c = orbit.center(i, t);
      s.sum += c;
      s.sum_sq += c.squaredNorm();
    }
  }
  s.count = static_cast<double>(n) * horizon;
  return s;
}

class QuadraticAggregate : public HorizonAggregate {
 public:
  QuadraticAggregate(CenterSums sums, double offset)
      : s_(std::move(sums)), offset_(offset) {}

  double value(const Vector& x) const override {
    return s_.count * x.squaredNorm() - 2.0 * x.dot(s_.sum) + s_.sum_sq +
           s_.count * offset_;
  }
  Vector gradient(const Vector& x) const override {
    return 2.0 * s_.count * x - 2.0 * s_.sum;
  }
  std::optional<Vector> exact_minimizer(
      const ConstraintSet& set) const override {
    return set.project(s_.sum / s_.count);
  }
  bool compact() const override { return true; }

 protected:
  CenterSums s_;
  double offset_;
};

// ---------------------------------------------------------------------------

class DriftingQuadratic : public ObjectiveSequence {
 public:
  DriftingQuadratic(SequenceInfo info, OrbitPath orbit, double offset)
      : ObjectiveSequence(std::move(info)),
        orbit_(std::move(orbit)),
        offset_(offset) {}

  double value(int i, int t, const Vector& x) const override {
    return (x - orbit_.center(i, t)).squaredNorm() + offset_;
  }
  std::optional<Vector> gradient(int i, int t, const Vector& x) const override {
    return 2.0 * (x - orbit_.center(i, t));
  }
  std::optional<Vector> smoothed_gradient(int i, int t, const Vector& x,
                                          double) const override {
    return gradient(i, t, x);
  }
  std::optional<double> smoothed_value_exact(int i, int t, const Vector& x,
                                             double delta) const override {
    return value(i, t, x) + delta * delta;
  }
  std::optional<double> drift_envelope(int i, int t, const ConstraintSet& set,
                                       double delta, double) const override {
    const Vector c1 = orbit_.center(i, t);
    const Vector c0 = orbit_.center(i, t - 1);
    return sup_abs_affine(set, delta, -2.0 * (c1 - c0),
                          c1.squaredNorm() - c0.squaredNorm());
  }
  std::unique_ptr<HorizonAggregate> aggregate() const override {
    return std::make_unique<QuadraticAggregate>(
        center_sums(orbit_, n_agents(), horizon(), dim()), offset_);
  }

 private:
  OrbitPath orbit_;
  double offset_;
};

// ---------------------------------------------------------------------------

class AbsAggregate : public HorizonAggregate {
 public:
  explicit AbsAggregate(std::vector<std::vector<double>> breaks)
      : breaks_(std::move(breaks)) {
    for (auto& b : breaks_) {
      std::sort(b.begin(), b.end());
      std::vector<double> pre(b.size() + 1, 0.0);
      for (std::size_t k = 0; k < b.size(); ++k) pre[k + 1] = pre[k] + b[k];
      prefix_.push_back(std::move(pre));
    }
  }

  double value(const Vector& x) const override {
    double s = 0.0;
    for (std::size_t k = 0; k < breaks_.size(); ++k) {
      const auto& b = breaks_[k];
      const auto& pre = prefix_[k];
      const double y = x(static_cast<Eigen::Index>(k));
      const auto below = static_cast<std::size_t>(
          std::upper_bound(b.begin(), b.end(), y) - b.begin());
      const double m = static_cast<double>(b.size());
      const double nb = static_cast<double>(below);
      s += y * nb - pre[below] + (pre.back() - pre[below]) - y * (m - nb);
    }
    return s;
  }

  Vector gradient(const Vector& x) const override {
    Vector g(x.size());
    for (std::size_t k = 0; k < breaks_.size(); ++k) {
      const auto& b = breaks_[k];
      const double y = x(static_cast<Eigen::Index>(k));
      const auto lt = std::lower_bound(b.begin(), b.end(), y) - b.begin();
      const auto gt = b.end() - std::upper_bound(b.begin(), b.end(), y);
      g(static_cast<Eigen::Index>(k)) = static_cast<double>(lt - gt);
    }
    return g;
  }

  std::optional<Vector> exact_minimizer(
      const ConstraintSet& set) const override {
    Vector med(static_cast<Eigen::Index>(breaks_.size()));
    for (std::size_t k = 0; k < breaks_.size(); ++k) {
      const auto& b = breaks_[k];
      const std::size_t m = b.size();
      med(static_cast<Eigen::Index>(k)) =
          (m % 2 == 1) ? b[m / 2] : 0.5 * (b[m / 2 - 1] + b[m / 2]);
    }
    // The objective is separable, so a coordinate clamp is exact on boxes.
    if (set.kind() == ConstraintSet::Kind::Box) return set.project(med);
    if (set.contains(med)) return med;
    return std::nullopt;
  }
  bool compact() const override { return true; }

 private:
  std::vector<std::vector<double>> breaks_;
  std::vector<std::vector<double>> prefix_;
};

class AbsDrift : public ObjectiveSequence {
 public:
  AbsDrift(SequenceInfo info, OrbitPath orbit)
      : ObjectiveSequence(std::move(info)), orbit_(std::move(orbit)) {}

  double value(int i, int t, const Vector& x) const override {
    return (x - orbit_.center(i, t)).lpNorm<1>();
  }
  std::optional<Vector> gradient(int i, int t, const Vector& x) const override {
    const Vector diff = x - orbit_.center(i, t);
    return diff.unaryExpr([](double v) {
      return static_cast<double>((v > 0.0) - (v < 0.0));
    });
  }
  std::optional<double> drift_envelope(int i, int t, const ConstraintSet&,
                                       double, double) const override {
    // |f_t - f_{t-1}| <= ||c_t - c_{t-1}||_1 everywhere; smoothing preserves it.
    return (orbit_.center(i, t) - orbit_.center(i, t - 1)).lpNorm<1>();
  }
  std::unique_ptr<HorizonAggregate> aggregate() const override {
    std::vector<std::vector<double>> breaks(static_cast<std::size_t>(dim()));
    for (int t = 0; t < horizon(); ++t) {
      for (int i = 0; i < n_agents(); ++i) {
        const Vector c = orbit_.center(i, t);
        for (int k = 0; k < dim(); ++k) {
          breaks[static_cast<std::size_t>(k)].push_back(c(k));
        }
      }
    }
    return std::make_unique<AbsAggregate>(std::move(breaks));
  }

 private:
  OrbitPath orbit_;
};

// ---------------------------------------------------------------------------

class RippleAggregate : public QuadraticAggregate {
 public:
  RippleAggregate(CenterSums sums, double kappa, double freq, Vector sin_sum,
                  Vector cos_sum)
      : QuadraticAggregate(std::move(sums), 0.0),
        kappa_(kappa),
        freq_(freq),
        sin_sum_(std::move(sin_sum)),
        cos_sum_(std::move(cos_sum)) {}

  // sum sin(w x + phi) = sin(w x) sum cos(phi) + cos(w x) sum sin(phi)
  double value(const Vector& x) const override {
    double r = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      r += std::sin(freq_ * x(k)) * cos_sum_(k) +
           std::cos(freq_ * x(k)) * sin_sum_(k);
    }
    return QuadraticAggregate::value(x) + kappa_ * r;
  }
  Vector gradient(const Vector& x) const override {
    Vector g = QuadraticAggregate::gradient(x);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      g(k) += kappa_ * freq_ *
              (std::cos(freq_ * x(k)) * cos_sum_(k) -
               std::sin(freq_ * x(k)) * sin_sum_(k));
    }
    return g;
  }
  std::optional<Vector> exact_minimizer(const ConstraintSet&) const override {
    return std::nullopt;
  }

 private:
  double kappa_;
  double freq_;
  Vector sin_sum_;
  Vector cos_sum_;
};

class NonconvexRipple : public ObjectiveSequence {
 public:
  NonconvexRipple(SequenceInfo info, OrbitPath orbit, double kappa,
                  double freq)
      : ObjectiveSequence(std::move(info)),
        orbit_(std::move(orbit)),
        kappa_(kappa),
        freq_(freq) {}

  double phase(int i, int t, int k) const {
    return orbit_.phase(i) + orbit_.omega * t + 0.5 * k;
  }

  double ripple(int i, int t, const Vector& x, double damp) const {
    double r = 0.0;
    for (int k = 0; k < dim(); ++k) r += std::sin(freq_ * x(k) + phase(i, t, k));
    return kappa_ * damp * r;
  }

  Vector ripple_grad(int i, int t, const Vector& x, double damp) const {
    Vector g(dim());
    for (int k = 0; k < dim(); ++k) {
      g(k) = kappa_ * freq_ * damp * std::cos(freq_ * x(k) + phase(i, t, k));
    }
    return g;
  }

  double value(int i, int t, const Vector& x) const override {
    return (x - orbit_.center(i, t)).squaredNorm() + ripple(i, t, x, 1.0);
  }
  std::optional<Vector> gradient(int i, int t, const Vector& x) const override {
    return 2.0 * (x - orbit_.center(i, t)) + ripple_grad(i, t, x, 1.0);
  }
  std::optional<Vector> smoothed_gradient(int i, int t, const Vector& x,
                                          double delta) const override {
    const double damp = sphere_cos_average(dim(), freq_ * delta);
    return 2.0 * (x - orbit_.center(i, t)) + ripple_grad(i, t, x, damp);
  }
  std::optional<double> smoothed_value_exact(int i, int t, const Vector& x,
                                             double delta) const override {
    const double damp = sphere_cos_average(dim(), freq_ * delta);
    return (x - orbit_.center(i, t)).squaredNorm() + delta * delta +
           ripple(i, t, x, damp);
  }
  std::optional<double> drift_envelope(int i, int t, const ConstraintSet& set,
                                       double delta,
                                       double smoothing) const override {
    const Vector c1 = orbit_.center(i, t);
    const Vector c0 = orbit_.center(i, t - 1);
    const double quad = sup_abs_affine(set, delta, -2.0 * (c1 - c0),
                                       c1.squaredNorm() - c0.squaredNorm());
    const double damp =
        smoothing > 0.0
            ? std::abs(sphere_cos_average(dim(), freq_ * smoothing))
            : 1.0;
    // |sin(a + p1) - sin(a + p0)| <= 2 |sin((p1 - p0) / 2)| per coordinate.
    const double wave = kappa_ * damp * dim() * 2.0 *
                        std::abs(std::sin(0.5 * orbit_.omega));
    return quad + wave;
  }
  std::unique_ptr<HorizonAggregate> aggregate() const override {
    Vector s = Vector::Zero(dim());
    Vector c = Vector::Zero(dim());
    for (int t = 0; t < horizon(); ++t) {
      for (int i = 0; i < n_agents(); ++i) {
        for (int k = 0; k < dim(); ++k) {
          s(k) += std::sin(phase(i, t, k));
          c(k) += std::cos(phase(i, t, k));
        }
      }
    }
    return std::make_unique<RippleAggregate>(
        center_sums(orbit_, n_agents(), horizon(), dim()), kappa_, freq_, s,
        c);
  }

 private:
  OrbitPath orbit_;
  double kappa_;
  double freq_;
};

// ---------------------------------------------------------------------------

class ResourceAggregate : public HorizonAggregate {
 public:
  ResourceAggregate(Vector a, Vector m, double q)
      : a_(std::move(a)), m_(std::move(m)), q_(q) {}

  double value(const Vector& x) const override {
    return (a_.array() * x.array().square()).sum() - 2.0 * m_.dot(x) + q_;
  }
  Vector gradient(const Vector& x) const override {
    return 2.0 * (a_.array() * x.array()).matrix() - 2.0 * m_;
  }
  std::optional<Vector> exact_minimizer(
      const ConstraintSet& set) const override {
    if (set.kind() == ConstraintSet::Kind::Ball) return std::nullopt;
    const Vector& lo = set.lower();
    const Vector& hi = set.upper();
    auto at = [&](double lambda) {
      Vector x(a_.size());
      for (Eigen::Index k = 0; k < a_.size(); ++k) {
        if (a_(k) > 0.0) {
          x(k) = std::clamp((m_(k) - 0.5 * lambda) / a_(k), lo(k), hi(k));
        } else {
          x(k) = lambda > 0.0 ? lo(k) : std::clamp(0.0, lo(k), hi(k));
        }
      }
      return x;
    };
    Vector x0 = at(0.0);
    if (set.kind() == ConstraintSet::Kind::Box ||
        x0.sum() <= set.budget_limit()) {
      return x0;
    }
    double left = 0.0;
    double right = 1.0;
    while (at(right).sum() > set.budget_limit()) right *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (left + right);
      if (at(mid).sum() > set.budget_limit()) {
        left = mid;
      } else {
        right = mid;
      }
    }
    return at(right);
  }
  bool compact() const override { return true; }

 private:
  Vector a_;
  Vector m_;
  double q_;
};

class ResourceAllocation : public ObjectiveSequence {
 public:
  ResourceAllocation(SequenceInfo info, Vector base, std::vector<double> weights,
                     double amplitude, double omega, double offset)
      : ObjectiveSequence(std::move(info)),
        base_(std::move(base)),
        weights_(std::move(weights)),
        amplitude_(amplitude),
        omega_(omega),
        offset_(offset) {}

  int coord(int i) const { return i % dim(); }
  double weight(int i) const { return weights_[static_cast<std::size_t>(i)]; }
  double demand(int i, int t) const {
    return base_(i) + amplitude_ * std::sin(omega_ * t + kTwoPi * i / n_agents());
  }

  double value(int i, int t, const Vector& x) const override {
    const double r = x(coord(i)) - demand(i, t);
    return weight(i) * r * r + offset_;
  }
  std::optional<Vector> gradient(int i, int t, const Vector& x) const override {
    Vector g = Vector::Zero(dim());
    g(coord(i)) = 2.0 * weight(i) * (x(coord(i)) - demand(i, t));
    return g;
  }
  std::optional<Vector> smoothed_gradient(int i, int t, const Vector& x,
                                          double) const override {
    return gradient(i, t, x);
  }
  std::optional<double> smoothed_value_exact(int i, int t, const Vector& x,
                                             double delta) const override {
    return value(i, t, x) + weight(i) * delta * delta / dim();
  }
  std::optional<double> drift_envelope(int i, int t, const ConstraintSet& set,
                                       double delta, double) const override {
    const double d1 = demand(i, t);
    const double d0 = demand(i, t - 1);
    Vector a = Vector::Zero(dim());
    a(coord(i)) = -2.0 * weight(i) * (d1 - d0);
    return sup_abs_affine(set, delta, a, weight(i) * (d1 * d1 - d0 * d0));
  }
  std::unique_ptr<HorizonAggregate> aggregate() const override {
    Vector a = Vector::Zero(dim());
    Vector m = Vector::Zero(dim());
    double q = 0.0;
    for (int t = 0; t < horizon(); ++t) {
      for (int i = 0; i < n_agents(); ++i) {
        const double dm = demand(i, t);
        a(coord(i)) += weight(i);
        m(coord(i)) += weight(i) * dm;
        q += weight(i) * dm * dm + offset_;
      }
    }
    return std::make_unique<ResourceAggregate>(a, m, q);
  }

 private:
  Vector base_;
  std::vector<double> weights_;
  double amplitude_;
  double omega_;
  double offset_;
};

// ---------------------------------------------------------------------------

class ZeroAggregate : public HorizonAggregate {
 public:
  double value(const Vector&) const override { return 0.0; }
  Vector gradient(const Vector& x) const override {
    return Vector::Zero(x.size());
  }
  std::optional<Vector> exact_minimizer(
      const ConstraintSet& set) const override {
    return Vector::Zero(set.dim());
  }
  bool compact() const override { return true; }
};

class ZeroSequence : public ObjectiveSequence {
 public:
  using ObjectiveSequence::ObjectiveSequence;

  double value(int, int, const Vector&) const override { return 0.0; }
  std::optional<Vector> gradient(int, int, const Vector& x) const override {
    return Vector::Zero(x.size());
  }
  std::optional<Vector> smoothed_gradient(int, int, const Vector& x,
                                          double) const override {
    return Vector::Zero(x.size());
  }
  std::optional<double> smoothed_value_exact(int, int, const Vector&,
                                             double) const override {
    return 0.0;
  }
  std::optional<double> drift_envelope(int, int, const ConstraintSet&, double,
                                       double) const override {
    return 0.0;
  }
  std::unique_ptr<HorizonAggregate> aggregate() const override {
    return std::make_unique<ZeroAggregate>();
  }
};

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "drifting-quadratic", "stationary-quadratic", "abs-drift",
      "nonconvex-ripple",   "resource-allocation",  "zero"};
  return names;
}

SmoothClass scenario_class(const std::string& name) {
  if (name == "abs-drift") return SmoothClass::C00;
  if (std::find(scenario_names().begin(), scenario_names().end(), name) ==
      scenario_names().end()) {
    throw_invalid("unknown scenario '" + name + "'");
  }
  return SmoothClass::C11;
}

bool scenario_convex(const std::string& name) {
  scenario_class(name);
  return name != "nonconvex-ripple";
}

std::unique_ptr<ObjectiveSequence> make_scenario(const ScenarioParams& p,
                                                 const ConstraintSet& set) {
  if (p.n_agents < 1) throw_invalid("scenario needs at least one agent");
  if (p.dim < 1) throw_invalid("scenario dimension must be >= 1");
  if (p.horizon < 1) throw_invalid("scenario horizon must be >= 1");
  if (set.dim() != p.dim) throw_invalid("constraint set dimension mismatch");

  SequenceInfo info;
  info.name = p.name;
  info.n_agents = p.n_agents;
  info.dim = p.dim;
  info.horizon = p.horizon;
  info.smooth_class = scenario_class(p.name);
  info.convex = scenario_convex(p.name);
  const double reach = domain_radius(p, set);

  if (p.name == "drifting-quadratic" || p.name == "stationary-quadratic") {
    auto orbit = make_orbit(p, p.name == "stationary-quadratic");
    info.lipschitz_l0 = 2.0 * (reach + orbit.bound());
    info.smooth_l1 = 2.0;
    return std::make_unique<DriftingQuadratic>(info, std::move(orbit),
                                               p.offset);
  }
  if (p.name == "abs-drift") {
    info.lipschitz_l0 = std::sqrt(static_cast<double>(p.dim));
    return std::make_unique<AbsDrift>(info, make_orbit(p, false));
  }
  if (p.name == "nonconvex-ripple") {
    if (p.kappa < 0.0 || p.ripple_freq <= 0.0) {
      throw_invalid("ripple needs kappa >= 0 and a positive frequency");
    }
    auto orbit = make_orbit(p, false);
    info.lipschitz_l0 = 2.0 * (reach + orbit.bound()) +
                        p.kappa * p.ripple_freq * std::sqrt(double(p.dim));
    info.smooth_l1 = 2.0 + p.kappa * p.ripple_freq * p.ripple_freq;
    return std::make_unique<NonconvexRipple>(info, std::move(orbit), p.kappa,
                                             p.ripple_freq);
  }
  if (p.name == "resource-allocation") {
    std::vector<double> w = p.weights;
    if (w.empty()) w.assign(static_cast<std::size_t>(p.n_agents), 1.0);
    if (w.size() == 1) w.assign(static_cast<std::size_t>(p.n_agents), w[0]);
    if (static_cast<int>(w.size()) != p.n_agents) {
      throw_invalid("resource weights must have 1 or N entries");
    }
    if (std::any_of(w.begin(), w.end(), [](double a) { return !(a > 0.0); })) {
      throw_invalid("resource weights must be positive");
    }
    const Vector anchor = make_anchor(p.anchor, p.dim);
    Vector base(p.n_agents);
    for (int i = 0; i < p.n_agents; ++i) {
      base(i) = anchor(i % p.dim) + p.spread * std::cos(kTwoPi * i / p.n_agents);
    }
    const double amp = p.demand_amplitude;
    const double omega = amp > 0.0 ? per_round_drift(p) / amp : 0.0;
    const double a_max = *std::max_element(w.begin(), w.end());
    info.lipschitz_l0 =
        2.0 * a_max * (reach + base.cwiseAbs().maxCoeff() + std::abs(amp));
    info.smooth_l1 = 2.0 * a_max;
    return std::make_unique<ResourceAllocation>(info, base, std::move(w), amp,
                                                omega, p.offset);
  }
  // zero: any positive constant is a valid Lipschitz bound, and schedules
  // need one.
  info.lipschitz_l0 = 1.0;
  info.smooth_l1 = 1.0;
  return std::make_unique<ZeroSequence>(info);
}

}  // namespace orfnet
