#include "orfnet/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "orfnet/error.hpp"

namespace orfnet {
namespace {

/// Plain summation over every (i, t) of the played horizon.
class SummedAggregate : public HorizonAggregate {
 public:
  explicit SummedAggregate(const ObjectiveSequence& seq) : seq_(seq) {}

  double value(const Vector& x) const override {
    double s = 0.0;
    for (int t = 0; t < seq_.horizon(); ++t) {
      for (int i = 0; i < seq_.n_agents(); ++i) s += seq_.value(i, t, x);
    }
    return s;
  }

  Vector gradient(const Vector& x) const override {
    Vector g = Vector::Zero(x.size());
    for (int t = 0; t < seq_.horizon(); ++t) {
      for (int i = 0; i < seq_.n_agents(); ++i) {
        auto gi = seq_.gradient(i, t, x);
        if (!gi) throw_invalid("no oracle available");
        g += *gi;
      }
    }
    return g;
  }

 private:
  const ObjectiveSequence& seq_;
};

}  // namespace

const char* to_string(SmoothClass c) noexcept {
  return c == SmoothClass::C00 ? "C00" : "C11";
}

void ObjectiveSequence::check_indices(int i, int t) const {
  if (i < 0 || i >= info_.n_agents) {
    throw_invalid("agent index " + std::to_string(i) + " out of range");
  }
  if (t < 0 || t > info_.horizon) {
    throw_invalid("round " + std::to_string(t) + " out of range");
  }
}

double ObjectiveSequence::eval(int i, int t, const Vector& x) const {
  check_indices(i, t);
  if (x.size() != info_.dim) throw_invalid("point dimension mismatch");
  return value(i, t, x);
}

std::unique_ptr<HorizonAggregate> ObjectiveSequence::aggregate() const {
  return std::make_unique<SummedAggregate>(*this);
}

FunctionSequence::FunctionSequence(SequenceInfo info, ValueFn value,
                                   GradFn grad)
    : ObjectiveSequence(std::move(info)),
      value_(std::move(value)),
      grad_(std::move(grad)) {
  if (!value_) throw_invalid("function sequence needs a value callable");
}

double FunctionSequence::value(int i, int t, const Vector& x) const {
  return value_(i, t, x);
}

std::optional<Vector> FunctionSequence::gradient(int i, int t,
                                                 const Vector& x) const {
  if (!grad_) return std::nullopt;
  return grad_(i, t, x);
}

InstrumentedSequence::InstrumentedSequence(const ObjectiveSequence& inner)
    : ObjectiveSequence(inner.info()), inner_(inner) {}

double InstrumentedSequence::value(int i, int t, const Vector& x) const {
  count_.fetch_add(1, std::memory_order_relaxed);
  return inner_.value(i, t, x);
}

std::optional<Vector> InstrumentedSequence::gradient(int i, int t,
                                                     const Vector& x) const {
  return inner_.gradient(i, t, x);
}

std::optional<Vector> InstrumentedSequence::smoothed_gradient(
    int i, int t, const Vector& x, double delta) const {
  return inner_.smoothed_gradient(i, t, x, delta);
}

double sphere_cos_average(int d, double a) {
  if (d < 1) throw_invalid("dimension must be >= 1");
  if (d == 1) return std::cos(a);
  if (std::abs(a) < 1e-12) return 1.0;
  const double nu = 0.5 * d - 1.0;
  const double ax = std::abs(a);
  return std::tgamma(0.5 * d) * std::pow(2.0 / ax, nu) *
         std::cyl_bessel_j(nu, ax);
}

SmoothedEstimate smoothed_value(const ObjectiveSequence& seq, int i, int t,
                                const Vector& x, double delta, int n_samples,
                                RngStream& rng) {
  if (!(delta > 0.0)) throw_invalid("delta must be positive");
  if (n_samples < 1) throw_invalid("need at least one sample");
  double mean = 0.0;
  double m2 = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    const Vector u = sample_unit_sphere(seq.dim(), rng);
    const double v = seq.eval(i, t, x + delta * u);
    const double diff = v - mean;
    mean += diff / (k + 1);
    m2 += diff * (v - mean);
  }
  const double var = n_samples > 1 ? m2 / (n_samples - 1) : 0.0;
  return {mean, std::sqrt(var / n_samples)};
}

double smoothed_lipschitz(int d, double delta, double l0) {
  if (!(delta > 0.0)) throw_invalid("delta must be positive");
  return static_cast<double>(d) * l0 / delta;
}

IncreasingRate compute_theta(const ObjectiveSequence& seq,
                             const ConstraintSet& set, double delta,
                             const ThetaOptions& options) {
  if (delta < 0.0) throw_invalid("delta must be nonnegative");
  const int n = seq.n_agents();
  const int horizon = seq.horizon();
  IncreasingRate out;
  out.theta = Matrix::Zero(n, horizon);
  out.smoothed = options.smoothing > 0.0;

  const bool analytic =
      options.method == ThetaMethod::Auto && horizon > 1 &&
      seq.drift_envelope(0, 1, set, delta, options.smoothing).has_value();

  if (analytic) {
    out.analytic = true;
    for (int i = 0; i < n; ++i) {
      for (int t = 1; t < horizon; ++t) {
        out.theta(i, t) =
            *seq.drift_envelope(i, t, set, delta, options.smoothing);
      }
    }
  } else if (horizon > 1) {
    const int d = seq.dim();
    auto per_axis = static_cast<std::int64_t>(options.grid_points);
    while (per_axis > 2 &&
           std::pow(static_cast<double>(per_axis), d) >
               static_cast<double>(options.grid_cap)) {
      per_axis = static_cast<std::int64_t>(
          std::floor(std::pow(static_cast<double>(options.grid_cap), 1.0 / d)));
    }
    per_axis = std::max<std::int64_t>(per_axis, 2);
    out.grid_points_per_axis = static_cast<int>(per_axis);

    const Vector lo = set.lower().array() - delta;
    const Vector hi = set.upper().array() + delta;
    std::vector<Vector> points;
    std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
    while (true) {
      Vector p(d);
      for (int k = 0; k < d; ++k) {
        p(k) = lo(k) + (hi(k) - lo(k)) * static_cast<double>(idx[k]) /
                           static_cast<double>(per_axis - 1);
      }
      if ((p - set.project(p)).norm() <= delta * (1.0 + 1e-12) + 1e-15) {
        points.push_back(std::move(p));
      }
      int k = 0;
      while (k < d && ++idx[k] == per_axis) idx[k++] = 0;
      if (k == d) break;
    }

    const double smoothing = options.smoothing;
    auto f = [&](int i, int t, const Vector& x) {
      if (smoothing > 0.0) {
        auto v = seq.smoothed_value_exact(i, t, x, smoothing);
        if (!v) throw_invalid("no closed-form smoothed value for grid theta");
        return *v;
      }
      return seq.eval(i, t, x);
    };
    for (int i = 0; i < n; ++i) {
      for (int t = 1; t < horizon; ++t) {
        double best = 0.0;
        for (const auto& p : points) {
          best = std::max(best, std::abs(f(i, t, p) - f(i, t - 1, p)));
        }
        out.theta(i, t) = best;
      }
    }
  }
  out.total = out.theta.sum();
  return out;
}

}  // namespace orfnet
