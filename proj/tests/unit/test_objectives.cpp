#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "orfnet/error.hpp"
#include "orfnet/objectives.hpp"
#include "orfnet/regret.hpp"

using namespace orfnet;

namespace {

ScenarioParams params(const std::string& name, int n, int d, int horizon) {
  ScenarioParams p;
  p.name = name;
  p.n_agents = n;
  p.dim = d;
  p.horizon = horizon;
  return p;
}

std::vector<ConstraintSet> sample_sets(int d) {
  std::vector<ConstraintSet> sets;
  sets.push_back(ConstraintSet::ball(d, 1.0));
  sets.push_back(ConstraintSet::box(Vector::Constant(d, -0.5), Vector::Constant(d, 1.5)));
  sets.push_back(ConstraintSet::budget(Vector::Constant(d, -1.0), Vector::Constant(d, 2.0), 1.0));
  return sets;
}

Vector gaussian(int d, RngStream& rng, double scale) {
  Vector v(d);
  for (int k = 0; k < d; k += 2) {
    double a = 0.0;
    double b = 0.0;
    rng.next_gaussian_pair(a, b);
    v(k) = scale * a;
    if (k + 1 < d) v(k + 1) = scale * b;
  }
  return v;
}

// A point of X_delta: a projected point pushed out by at most delta.
Vector inflated_point(const ConstraintSet& set, double delta, RngStream& rng) {
  const Vector x = set.project(gaussian(set.dim(), rng, 2.0 * set.outer_radius()));
  return x + delta * rng.next_uniform() * sample_unit_sphere(set.dim(), rng);
}

// Budget projection by bisection on the multiplier.
Vector budget_reference(const ConstraintSet& s, const Vector& x) {
  auto at = [&](double lam) {
    return (x.array() - lam).max(s.lower().array()).min(s.upper().array()).matrix().eval();
  };
  if (at(0.0).sum() <= s.budget_limit()) return at(0.0);
  double lo = 0.0;
  double hi = 1.0;
  while (at(hi).sum() > s.budget_limit()) hi *= 2.0;
  for (int k = 0; k < 300; ++k) {
    const double mid = 0.5 * (lo + hi);
    (at(mid).sum() > s.budget_limit() ? lo : hi) = mid;
  }
  return at(hi);
}

// Reference aggregate: brute sums through the generic base implementation.
std::unique_ptr<FunctionSequence> brute(const ObjectiveSequence& seq) {
  return std::make_unique<FunctionSequence>(
      seq.info(), [&seq](int i, int t, const Vector& x) { return seq.value(i, t, x); },
      [&seq](int i, int t, const Vector& x) { return *seq.gradient(i, t, x); });
}

// E[cos(a u_1)] by quadrature of the marginal density of u_1.
double cos_average_quadrature(int d, double a) {
  const int m = 200000;
  double num = 0.0;
  double den = 0.0;
  if (d == 2) {
    for (int k = 0; k < m; ++k) {
      const double th = (k + 0.5) * M_PI / m;
      num += std::cos(a * std::cos(th));
      den += 1.0;
    }
    return num / den;
  }
  for (int k = 0; k < m; ++k) {
    const double s = -1.0 + (k + 0.5) * 2.0 / m;
    const double w = std::pow(1.0 - s * s, 0.5 * (d - 3));
    num += w * std::cos(a * s);
    den += w;
  }
  return num / den;
}

}  // namespace

TEST_CASE("eval examples") {
  auto p = params("drifting-quadratic", 1, 2, 5);
  p.anchor = {1.0, 0.0};
  p.spread = 0.0;
  p.orbit_radius = 0.0;
  const auto set = ConstraintSet::ball(2, 1.0);
  const auto q = make_scenario(p, set);
  CHECK(q->eval(0, 0, Vector::Zero(2)) == 1.0);
  CHECK(q->eval(0, 5, Vector::Zero(2)) == 1.0);
  CHECK_THROWS(q->eval(0, 6, Vector::Zero(2)));
  CHECK_THROWS(q->eval(1, 0, Vector::Zero(2)));
  CHECK_THROWS(q->eval(0, 0, Vector::Zero(3)));

  const auto z = make_scenario(params("zero", 3, 2, 4), set);
  RngStream rng(1, 0);
  for (int k = 0; k < 50; ++k) {
    CHECK(z->eval(k % 3, k % 5, gaussian(2, rng, 3.0)) == 0.0);
  }

  auto r = params("resource-allocation", 2, 2, 3);
  r.weights = {2.0};
  r.anchor = {1.0};
  r.spread = 0.0;
  r.demand_amplitude = 0.0;
  const auto bset = ConstraintSet::budget(Vector::Constant(2, -1.0), Vector::Constant(2, 5.0), 4.0);
  const auto ra = make_scenario(r, bset);
  Vector x(2);
  x << 3.0, 0.0;
  CHECK(ra->eval(0, 0, x) == 8.0);
}

TEST_CASE("scenario catalog metadata") {
  CHECK(scenario_class("abs-drift") == SmoothClass::C00);
  CHECK(scenario_class("nonconvex-ripple") == SmoothClass::C11);
  CHECK_FALSE(scenario_convex("nonconvex-ripple"));
  CHECK(scenario_convex("drifting-quadratic"));
  CHECK_THROWS(scenario_class("nope"));
  CHECK(scenario_names().size() == 6);
}

TEST_CASE("projection examples") {
  Vector x(2);
  x << 3.0, 4.0;
  const Vector p = ConstraintSet::ball(2, 1.0).project(x);
  CHECK(p(0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(p(1) == doctest::Approx(0.8).epsilon(1e-15));
  x << 1.0, 1.0;
  CHECK(ConstraintSet::ball(2, 10.0).project(x) == x);
  x << 2.0, -0.5;
  const Vector b = ConstraintSet::box(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0)).project(x);
  CHECK(b(0) == 1.0);
  CHECK(b(1) == -0.5);
}

TEST_CASE("projection is idempotent and non-expansive") {
  for (int d : {1, 2, 5}) {
    RngStream rng(10 + d, 0);
    for (const auto& set : sample_sets(d)) {
      for (int k = 0; k < 10000; ++k) {
        const Vector x = gaussian(d, rng, 3.0);
        const Vector y = gaussian(d, rng, 3.0);
        const Vector px = set.project(x);
        const Vector py = set.project(y);
        // Radial scaling can land one ulp outside the ball; re-projecting then moves it by rounding only.
        REQUIRE((set.project(px) - px).norm() <= 4e-16 * std::max(1.0, px.norm()));
        REQUIRE((px - py).norm() <= (x - y).norm() + 1e-12);
        REQUIRE(set.contains(px, 1e-12));
      }
    }
  }
}

TEST_CASE("budget projection matches a bisection reference") {
  RngStream rng(77, 0);
  for (int d : {1, 3, 6}) {
    const auto set = ConstraintSet::budget(Vector::Constant(d, -1.0), Vector::Constant(d, 2.0), 1.5);
    for (int k = 0; k < 2000; ++k) {
      const Vector x = gaussian(d, rng, 2.0);
      REQUIRE((set.project(x) - budget_reference(set, x)).norm() < 1e-9);
    }
  }
}

TEST_CASE("radii sandwich the set") {
  for (int d : {1, 2, 4}) {
    RngStream rng(20 + d, 0);
    for (const auto& set : sample_sets(d)) {
      REQUIRE(set.inner_radius() > 0.0);
      REQUIRE(set.inner_radius() <= set.outer_radius());
      for (int k = 0; k < 2000; ++k) {
        const Vector u = sample_unit_sphere(d, rng);
        REQUIRE(set.contains(set.inner_radius() * u, 1e-12));
        const Vector x = set.project(gaussian(d, rng, 5.0));
        REQUIRE(x.norm() <= set.outer_radius() + 1e-12);
      }
    }
  }
}

TEST_CASE("support function dominates sampled inner products") {
  RngStream rng(31, 0);
  for (const auto& set : sample_sets(3)) {
    for (int k = 0; k < 200; ++k) {
      const Vector a = gaussian(3, rng, 1.0);
      double best = -1e300;
      for (int s = 0; s < 200; ++s) {
        best = std::max(best, a.dot(set.project(gaussian(3, rng, 4.0))));
      }
      REQUIRE(set.support(a) >= best - 1e-12);
      // The maximizer of a linear function: push far along a and project.
      REQUIRE(set.support(a) <= a.dot(set.project(1e6 * a)) + 1e-6);
    }
  }
}

TEST_CASE("smoothed_value examples") {
  SequenceInfo info;
  info.dim = 2;
  info.horizon = 1;
  FunctionSequence sq(info, [](int, int, const Vector& x) { return x.squaredNorm(); });
  RngStream rng(5, 0);
  const auto e = smoothed_value(sq, 0, 0, Vector::Zero(2), 0.1, 1000000, rng);
  CHECK(std::abs(e.value - 0.01) <= 4.0 * e.standard_error + 1e-15);

  FunctionSequence zero(info, [](int, int, const Vector&) { return 0.0; });
  const auto z = smoothed_value(zero, 0, 0, Vector::Ones(2), 0.3, 1000, rng);
  CHECK(z.value == 0.0);
  CHECK(z.standard_error == 0.0);

  Vector c(2);
  c << 1.5, -0.7;
  FunctionSequence lin(info, [c](int, int, const Vector& x) { return c.dot(x); });
  Vector x(2);
  x << 0.2, 0.4;
  const auto l = smoothed_value(lin, 0, 0, x, 0.5, 200000, rng);
  CHECK(std::abs(l.value - c.dot(x)) <= 4.0 * l.standard_error);
  CHECK_THROWS(smoothed_value(lin, 0, 0, x, 0.0, 10, rng));
}

TEST_CASE("smoothed_lipschitz") {
  CHECK(smoothed_lipschitz(4, 0.5, 2.0) == 16.0);
  CHECK(smoothed_lipschitz(1, 1.0, 1.0) == 1.0);
  CHECK(smoothed_lipschitz(3, 0.1, 1.0) == doctest::Approx(30.0).epsilon(1e-15));
  CHECK_THROWS(smoothed_lipschitz(3, 0.0, 1.0));
  CHECK_THROWS(smoothed_lipschitz(3, -1.0, 1.0));
}

TEST_CASE("theta examples") {
  const auto set = ConstraintSet::ball(1, 1.0);
  auto p = params("stationary-quadratic", 2, 1, 2);
  const auto st = make_scenario(p, set);
  const auto th = compute_theta(*st, set, 0.5);
  CHECK(th.total == 0.0);
  CHECK(th.theta.rows() == 2);
  CHECK(th.theta.cols() == 2);
  CHECK(th.theta.maxCoeff() == 0.0);

  SequenceInfo info;
  info.dim = 1;
  info.horizon = 3;
  FunctionSequence drift(info, [](int, int t, const Vector& x) {
    return (x(0) - 0.1 * t) * (x(0) - 0.1 * t);
  });
  ThetaOptions opt;
  opt.grid_points = 40001;  // resolution 1e-4 on [-2, 2]
  const auto g = compute_theta(drift, set, 1.0, opt);
  CHECK_FALSE(g.analytic);
  CHECK(g.grid_points_per_axis == 40001);
  CHECK(g.theta(0, 1) == doctest::Approx(0.41).epsilon(1e-12));
  CHECK(g.theta(0, 0) == 0.0);
  CHECK(g.total == doctest::Approx(g.theta.sum()).epsilon(1e-15));
}

TEST_CASE("analytic theta is a valid and tight envelope") {
  for (const std::string name : {"drifting-quadratic", "abs-drift", "nonconvex-ripple",
                                 "resource-allocation"}) {
    CAPTURE(name);
    for (int d : {1, 2}) {
      auto p = params(name, 3, d, 20);
      p.drift = 2.0;
      p.anchor = {0.2};
      const auto set = name == "resource-allocation"
                           ? ConstraintSet::budget(Vector::Constant(d, -1.0), Vector::Constant(d, 1.0), 0.5)
                           : ConstraintSet::ball(d, 1.0);
      const auto seq = make_scenario(p, set);
      const double delta = 0.3;
      const auto a = compute_theta(*seq, set, delta);
      REQUIRE(a.analytic);
      ThetaOptions go;
      go.method = ThetaMethod::Grid;
      go.grid_points = d == 1 ? 4001 : 401;
      const auto g = compute_theta(*seq, set, delta, go);
      for (int i = 0; i < 3; ++i) {
        for (int t = 1; t < 20; ++t) {
          REQUIRE(a.theta(i, t) >= g.theta(i, t) - 1e-12);
          if (name == "drifting-quadratic") {
            CHECK(a.theta(i, t) - g.theta(i, t) < 1e-2 * (1.0 + a.theta(i, t)));
          }
        }
      }
      // Random probes in X_delta never exceed the envelope.
      RngStream rng(3, d);
      for (int k = 0; k < 2000; ++k) {
        const int i = k % 3;
        const int t = 1 + k % 19;
        const Vector x = inflated_point(set, delta, rng);
        REQUIRE(std::abs(seq->eval(i, t, x) - seq->eval(i, t - 1, x)) <= a.theta(i, t) + 1e-12);
      }
    }
  }
}

TEST_CASE("smoothed theta envelope covers the smoothed drift") {
  for (const std::string name : {"drifting-quadratic", "nonconvex-ripple"}) {
    auto p = params(name, 2, 2, 10);
    p.drift = 1.0;
    const auto set = ConstraintSet::ball(2, 1.0);
    const auto seq = make_scenario(p, set);
    ThetaOptions o;
    o.smoothing = 0.4;
    const auto th = compute_theta(*seq, set, 0.4, o);
    CHECK(th.smoothed);
    RngStream rng(8, 1);
    for (int k = 0; k < 2000; ++k) {
      const int i = k % 2;
      const int t = 1 + k % 9;
      const Vector x = inflated_point(set, 0.4, rng);
      const double df = *seq->smoothed_value_exact(i, t, x, 0.4) - *seq->smoothed_value_exact(i, t - 1, x, 0.4);
      REQUIRE(std::abs(df) <= th.theta(i, t) + 1e-12);
    }
  }
}

TEST_CASE("Lipschitz and smoothness metadata hold on the inflated set") {
  for (const std::string name : scenario_names()) {
    CAPTURE(name);
    for (int d : {1, 3}) {
      auto p = params(name, 4, d, 30);
      p.drift = 0.5;
      p.anchor = {0.3};
      const auto set = name == "resource-allocation"
                           ? ConstraintSet::budget(Vector::Constant(d, -1.0), Vector::Constant(d, 1.0), 0.5)
                           : ConstraintSet::ball(d, 1.0);
      const auto seq = make_scenario(p, set);
      const double l0 = seq->info().lipschitz_l0;
      const double l1 = seq->info().smooth_l1;
      const double delta = set.outer_radius();
      RngStream rng(4, d);
      for (int k = 0; k < 3000; ++k) {
        const int i = k % 4;
        const int t = k % 31;
        const Vector x = inflated_point(set, delta, rng);
        const Vector y = inflated_point(set, delta, rng);
        REQUIRE(std::abs(seq->eval(i, t, x) - seq->eval(i, t, y)) <= l0 * (x - y).norm() + 1e-12);
        if (seq->info().smooth_class == SmoothClass::C11) {
          const Vector gx = *seq->gradient(i, t, x);
          const Vector gy = *seq->gradient(i, t, y);
          REQUIRE((gx - gy).norm() <= l1 * (x - y).norm() + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("analytic gradients match finite differences") {
  for (const std::string name : {"drifting-quadratic", "nonconvex-ripple", "resource-allocation"}) {
    auto p = params(name, 3, 3, 8);
    p.drift = 0.7;
    const auto set = ConstraintSet::ball(3, 1.0);
    const auto seq = make_scenario(p, set);
    RngStream rng(12, 0);
    for (int k = 0; k < 50; ++k) {
      const Vector x = inflated_point(set, 0.5, rng);
      const Vector g = *seq->gradient(k % 3, k % 9, x);
      for (int c = 0; c < 3; ++c) {
        Vector e = Vector::Zero(3);
        e(c) = 1e-6;
        const double fd = (seq->eval(k % 3, k % 9, x + e) - seq->eval(k % 3, k % 9, x - e)) / 2e-6;
        REQUIRE(g(c) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
      }
    }
  }
}

TEST_CASE("sphere cosine average against quadrature") {
  CHECK(sphere_cos_average(1, 0.7) == std::cos(0.7));
  CHECK(sphere_cos_average(3, 0.0) == 1.0);
  for (int d : {2, 3, 4, 7}) {
    for (double a : {0.1, 1.0, 2.5, 6.0}) {
      CHECK(sphere_cos_average(d, a) == doctest::Approx(cos_average_quadrature(d, a)).epsilon(1e-6).scale(1.0));
    }
  }
  CHECK(sphere_cos_average(3, 2.0) == doctest::Approx(std::sin(2.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("smoothed gradients: exact for quadratics, damped sinusoid for the ripple") {
  const auto set = ConstraintSet::ball(2, 1.0);
  auto p = params("drifting-quadratic", 2, 2, 5);
  p.drift = 0.3;
  const auto q = make_scenario(p, set);
  Vector x(2);
  x << 0.3, -0.2;
  for (double delta : {0.01, 0.2, 0.9}) {
    CHECK(*q->smoothed_gradient(1, 3, x, delta) == *q->gradient(1, 3, x));
  }

  auto rp = params("nonconvex-ripple", 2, 2, 5);
  const auto r = make_scenario(rp, set);
  const double delta = 0.25;
  const Vector analytic = *r->smoothed_gradient(1, 2, x, delta);
  // Reference: the smoothed function is an average over the sphere, so its
  // gradient is the sphere average of the true gradient.
  RngStream rng(99, 0);
  const int n = 1000000;
  Vector s = Vector::Zero(2);
  Vector ss = Vector::Zero(2);
  Vector b = Vector::Zero(2);
  Vector bs = Vector::Zero(2);
  const double base = r->eval(1, 2, x);
  for (int k = 0; k < n; ++k) {
    const Vector u = sample_unit_sphere(2, rng);
    const Vector g = *r->gradient(1, 2, x + delta * u);
    s += g;
    ss += g.cwiseProduct(g);
    const Vector v = (2.0 / delta * (r->eval(1, 2, x + delta * u) - base)) * u;
    b += v;
    bs += v.cwiseProduct(v);
  }
  const Vector mean = s / n;
  const Vector est = b / n;
  for (int k = 0; k < 2; ++k) {
    const double se = std::sqrt((ss(k) / n - mean(k) * mean(k)) / n);
    CHECK(std::abs(mean(k) - analytic(k)) <= 4.0 * se);
  }
  // The estimator identity (d / delta) E[f(x + delta u) u] gives the gradient
  // of the ball average instead. For a sinusoid the two damping factors are
  // J0(a) and 2 J1(a) / a in d = 2, so the estimator's target differs from
  // the sphere-smoothed gradient here, while for quadratics they coincide.
  Vector ball_ref = Vector::Zero(2);
  Vector ball_sq = Vector::Zero(2);
  for (int k = 0; k < n; ++k) {
    const Vector u = sample_unit_sphere(2, rng);
    const Vector g = *r->gradient(1, 2, x + delta * u * std::sqrt(rng.next_uniform()));
    ball_ref += g;
    ball_sq += g.cwiseProduct(g);
  }
  ball_ref /= n;
  for (int k = 0; k < 2; ++k) {
    const double se_est = std::sqrt((bs(k) / n - est(k) * est(k)) / n);
    const double se_ref = std::sqrt((ball_sq(k) / n - ball_ref(k) * ball_ref(k)) / n);
    CHECK(std::abs(est(k) - ball_ref(k)) <= 4.0 * std::hypot(se_est, se_ref));
  }
  CHECK((est - analytic).norm() > 0.05);
  // Smoothed values too.
  const auto sv = smoothed_value(*r, 1, 2, x, delta, 400000, rng);
  CHECK(std::abs(sv.value - *r->smoothed_value_exact(1, 2, x, delta)) <= 4.0 * sv.standard_error);
}

TEST_CASE("smoothing error bounds on a probe sample") {
  for (const std::string name : scenario_names()) {
    CAPTURE(name);
    auto p = params(name, 3, 2, 10);
    p.drift = 0.4;
    const auto set = name == "resource-allocation"
                         ? ConstraintSet::budget(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0), 0.5)
                         : ConstraintSet::ball(2, 1.0);
    const auto seq = make_scenario(p, set);
    const double delta = 0.2;
    const bool c11 = seq->info().smooth_class == SmoothClass::C11;
    const double bound = c11 ? delta * delta * seq->info().smooth_l1 : delta * seq->info().lipschitz_l0;
    RngStream rng(6, 0);
    for (int k = 0; k < 20; ++k) {
      const Vector x = set.project(gaussian(2, rng, 1.0));
      const auto e = smoothed_value(*seq, k % 3, k % 11, x, delta, 20000, rng);
      REQUIRE(std::abs(e.value - seq->eval(k % 3, k % 11, x)) <= bound + 4.0 * e.standard_error);
    }
  }
}

TEST_CASE("compact aggregates equal brute-force sums") {
  for (const std::string name : scenario_names()) {
    CAPTURE(name);
    for (int d : {1, 3}) {
      auto p = params(name, 4, d, 25);
      p.drift = 0.6;
      p.offset = 0.25;
      p.weights = {1.0, 2.0, 0.5, 3.0};
      const auto set = name == "resource-allocation"
                           ? ConstraintSet::budget(Vector::Constant(d, -1.0), Vector::Constant(d, 1.0), 0.5)
                           : ConstraintSet::ball(d, 1.0);
      const auto seq = make_scenario(p, set);
      const auto fast = seq->aggregate();
      const auto slow_seq = brute(*seq);
      const auto slow = slow_seq->aggregate();
      RngStream rng(2, d);
      for (int k = 0; k < 100; ++k) {
        const Vector x = inflated_point(set, 0.5, rng);
        REQUIRE(fast->value(x) == doctest::Approx(slow->value(x)).epsilon(1e-11));
        REQUIRE((fast->gradient(x) - slow->gradient(x)).norm() <= 1e-9 * (1.0 + slow->gradient(x).norm()));
      }
    }
  }
}

TEST_CASE("exact minimizers agree with descent on the brute aggregate") {
  for (const std::string name : {"drifting-quadratic", "resource-allocation", "zero"}) {
    CAPTURE(name);
    for (int d : {1, 2, 4}) {
      auto p = params(name, 5, d, 40);
      p.drift = 0.6;
      p.anchor = {0.9};
      p.weights = {1.0, 2.0, 0.5, 3.0, 1.5};
      for (const auto& set : sample_sets(d)) {
        const auto seq = make_scenario(p, set);
        const auto agg = seq->aggregate();
        const auto exact = agg->exact_minimizer(set);
        if (!exact) continue;
        REQUIRE(set.contains(*exact, 1e-9));
        const auto slow_seq = brute(*seq);
        const Vector pgd = projected_descent(*slow_seq->aggregate(), set, Vector::Zero(d), 1e-12, 100000);
        CHECK(agg->value(*exact) <= agg->value(pgd) + 1e-8 * (1.0 + std::abs(agg->value(pgd))));
      }
    }
  }
}

TEST_CASE("abs-drift median minimizer") {
  auto p = params("abs-drift", 3, 2, 7);
  p.drift = 0.5;
  p.anchor = {0.1, -0.2};
  const auto box = ConstraintSet::box(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0));
  const auto seq = make_scenario(p, box);
  const auto agg = seq->aggregate();
  const Vector m = *agg->exact_minimizer(box);
  RngStream rng(1, 1);
  for (int k = 0; k < 5000; ++k) {
    const Vector x = box.project(gaussian(2, rng, 1.0));
    REQUIRE(agg->value(m) <= agg->value(x) + 1e-12);
  }
}
