#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "orfnet/error.hpp"
#include "orfnet/objectives.hpp"

namespace orfnet {
namespace {

double clamp_sum(const Vector& x, const Vector& lo, const Vector& hi,
                 double shift) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    s += std::clamp(x(k) - shift, lo(k), hi(k));
  }
  return s;
}

}  // namespace

ConstraintSet ConstraintSet::ball(int dim, double radius) {
  if (dim < 1) throw_invalid("constraint set dimension must be >= 1");
  if (!(radius > 0.0)) throw_invalid("ball radius must be positive");
  ConstraintSet s;
  s.kind_ = Kind::Ball;
  s.radius_ = radius;
  s.lo_ = Vector::Constant(dim, -radius);
  s.hi_ = Vector::Constant(dim, radius);
  s.r_inner_ = radius;
  s.r_outer_ = radius;
  return s;
}

ConstraintSet ConstraintSet::box(Vector lo, Vector hi) {
  if (lo.size() < 1 || lo.size() != hi.size()) {
    throw_invalid("box bounds must be nonempty and of equal dimension");
  }
  if (!((lo.array() < 0.0).all() && (hi.array() > 0.0).all())) {
    throw_invalid("box must contain the origin in its interior (lo < 0 < hi)");
  }
  ConstraintSet s;
  s.kind_ = Kind::Box;
  s.r_inner_ = std::min((-lo).minCoeff(), hi.minCoeff());
  s.r_outer_ = lo.cwiseAbs().cwiseMax(hi.cwiseAbs()).norm();
  s.lo_ = std::move(lo);
  s.hi_ = std::move(hi);
  return s;
}

ConstraintSet ConstraintSet::budget(Vector lo, Vector hi, double budget) {
  ConstraintSet s = box(std::move(lo), std::move(hi));
  if (!(budget > 0.0)) throw_invalid("resource budget must be positive");
  s.kind_ = Kind::Budget;
  s.budget_ = budget;
  const double to_plane = budget / std::sqrt(static_cast<double>(s.dim()));
  s.r_inner_ = std::min(s.r_inner_, to_plane);
  return s;
}

Vector ConstraintSet::project(const Vector& x) const {
  if (x.size() != lo_.size()) throw_invalid("projection dimension mismatch");
  switch (kind_) {
    case Kind::Ball: {
      const double n = x.norm();
      if (n <= radius_) return x;
      return x * (radius_ / n);
    }
    case Kind::Box:
      return x.cwiseMax(lo_).cwiseMin(hi_);
    case Kind::Budget: {
      Vector y = x.cwiseMax(lo_).cwiseMin(hi_);
      const double tol = 1e-12 * std::max(1.0, std::abs(budget_));
      if (y.sum() <= budget_ + tol) return y;
      // sum_k clamp(x_k - lambda) is piecewise linear and nonincreasing in
      // lambda; walk its breakpoints to the segment that crosses the budget.
      std::vector<double> breaks;
      breaks.reserve(static_cast<std::size_t>(2 * x.size()));
      for (Eigen::Index k = 0; k < x.size(); ++k) {
        breaks.push_back(x(k) - hi_(k));
        breaks.push_back(x(k) - lo_(k));
      }
      std::sort(breaks.begin(), breaks.end());
      double left = 0.0;
      double g_left = clamp_sum(x, lo_, hi_, 0.0);
      for (double b : breaks) {
        if (b <= left) continue;
        const double g_b = clamp_sum(x, lo_, hi_, b);
        if (g_b <= budget_) {
          const double lambda =
              left + (g_left - budget_) * (b - left) / (g_left - g_b);
          Vector out(x.size());
          for (Eigen::Index k = 0; k < x.size(); ++k) {
            out(k) = std::clamp(x(k) - lambda, lo_(k), hi_(k));
          }
          return out;
        }
        left = b;
        g_left = g_b;
      }
      return lo_;
    }
  }
  return x;
}

bool ConstraintSet::contains(const Vector& x, double tol) const {
  if (x.size() != lo_.size()) return false;
  switch (kind_) {
    case Kind::Ball:
      return x.norm() <= radius_ * (1.0 + tol) + tol;
    case Kind::Box:
      return ((x.array() >= lo_.array() - tol) &&
              (x.array() <= hi_.array() + tol))
          .all();
    case Kind::Budget:
      return ((x.array() >= lo_.array() - tol) &&
              (x.array() <= hi_.array() + tol))
                 .all() &&
             x.sum() <= budget_ + tol * std::max(1.0, std::abs(budget_));
  }
  return false;
}

double ConstraintSet::support(const Vector& a) const {
  if (a.size() != lo_.size()) throw_invalid("support dimension mismatch");
  switch (kind_) {
    case Kind::Ball:
      return radius_ * a.norm();
    case Kind::Box: {
      double s = 0.0;
      for (Eigen::Index k = 0; k < a.size(); ++k) {
        s += std::max(a(k) * lo_(k), a(k) * hi_(k));
      }
      return s;
    }
    case Kind::Budget: {
      // Fractional knapsack: start at the box maximizer, then pull the
      // cheapest coordinates down until the budget holds.
      Vector x(a.size());
      for (Eigen::Index k = 0; k < a.size(); ++k) {
        x(k) = a(k) > 0.0 ? hi_(k) : lo_(k);
      }
      double excess = x.sum() - budget_;
      if (excess > 0.0) {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(a.size()));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::sort(order.begin(), order.end(),
                  [&](auto p, auto q) { return a(p) < a(q); });
        for (auto k : order) {
          if (excess <= 0.0) break;
          if (!(a(k) > 0.0)) continue;
          const double cut = std::min(excess, x(k) - lo_(k));
          x(k) -= cut;
          excess -= cut;
        }
      }
      return a.dot(x);
    }
  }
  return 0.0;
}

}  // namespace orfnet
