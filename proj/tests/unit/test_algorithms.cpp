#include <cmath>

#include "doctest.h"
#include "orfnet/algorithms.hpp"
#include "orfnet/error.hpp"

using namespace orfnet;

namespace {

Matrix rows2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Matrix one_row(double a, double b) {
  Matrix m(1, 2);
  m << a, b;
  return m;
}

ScenarioParams params(const std::string& name, int n, int d, int horizon) {
  ScenarioParams p;
  p.name = name;
  p.n_agents = n;
  p.dim = d;
  p.horizon = horizon;
  return p;
}

}  // namespace

TEST_CASE("schedule examples") {
  const MixingConstants c{0.5, 3.0};
  const auto s1 = make_schedule(Regime::ConvexLipschitz, 8, 1, 1.0, c);
  CHECK(s1.eta == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
  CHECK(s1.delta == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s1.beta == doctest::Approx(0.0625).epsilon(1e-12));

  const auto s2 = make_schedule(Regime::ConvexSmooth, 16, 1, 1.0, c);
  CHECK(s2.eta == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
  CHECK(s2.delta == doctest::Approx(1.0).epsilon(1e-14));

  // This setting has beta = 1 / (sqrt(16) * 0.25^2) = 4, so only the formulas
  // are evaluated; a runnable schedule is refused.
  const auto s3 = evaluate_schedule(Regime::NonconvexLipschitz, 16, 1, 2.0, c, 0.5);
  CHECK(s3.eta == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
  CHECK(s3.delta == 0.25);
  CHECK(s3.beta == doctest::Approx(4.0).epsilon(1e-14));
  CHECK_THROWS_WITH(make_schedule(Regime::NonconvexLipschitz, 16, 1, 2.0, c, 0.5),
                    doctest::Contains("minimum valid T is 257"));

  const auto s4 = make_schedule(Regime::NonconvexSmooth, 256, 2, 1.0, c);
  CHECK(s4.delta == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s4.eta == doctest::Approx(1.0 / (3.0 * 2.0 * 4.0)).epsilon(1e-14));
}

TEST_CASE("schedule preconditions") {
  const MixingConstants c{0.5, 3.0};
  CHECK_THROWS(make_schedule(Regime::NonconvexLipschitz, 16, 1, 1.0, c));
  CHECK_THROWS(make_schedule(Regime::ConvexSmooth, 16, 1, 1.0, c, 0.5));
  CHECK_THROWS(make_schedule(Regime::ConvexSmooth, 0, 1, 1.0, c));
  CHECK_THROWS(make_schedule(Regime::ConvexSmooth, 16, 1, 0.0, c));
}

TEST_CASE("beta >= 1 is rejected and names the smallest valid T") {
  const MixingConstants c{0.5, 3.0};
  // Regime 3: beta = L0^2 / (eps_f^2 sqrt(T)); L0 = 4, eps_f = 1 -> T > 256.
  try {
    make_schedule(Regime::NonconvexLipschitz, 100, 1, 4.0, c, 1.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("schedule violates β<1") != std::string::npos);
    CHECK(msg.find("minimum valid T is 257") != std::string::npos);
  }
  CHECK(make_schedule(Regime::NonconvexLipschitz, 257, 1, 4.0, c, 1.0).beta < 1.0);
  // Regime 1: beta = 1 / (4 T^(2/3)) < 1 already at T = 1.
  CHECK(make_schedule(Regime::ConvexLipschitz, 1, 1, 1.0, c).beta == doctest::Approx(0.25));
}

TEST_CASE("schedule monotonicity in T") {
  const MixingConstants c = mixing_constants(5, 1.0 / 3.0);
  for (Regime r : {Regime::ConvexLipschitz, Regime::ConvexSmooth, Regime::NonconvexLipschitz,
                   Regime::NonconvexSmooth}) {
    std::optional<double> eps;
    if (r == Regime::NonconvexLipschitz) eps = 2.0;
    Schedule prev = make_schedule(r, 1000, 2, 1.0, c, eps);
    for (int T : {2000, 4000, 100000, 1000000}) {
      const Schedule s = make_schedule(r, T, 2, 1.0, c, eps);
      CHECK(s.eta < prev.eta);
      CHECK(s.beta < 1.0);
      if (r == Regime::NonconvexLipschitz) CHECK(s.delta == prev.delta);
      else CHECK(s.delta < prev.delta);
      prev = s;
    }
  }
}

TEST_CASE("algorithm 1 step examples") {
  const Matrix avg = Matrix::Constant(2, 2, 0.5);
  const auto big = ConstraintSet::ball(2, 10.0);
  const Matrix out = algorithm1_step(rows2(0, 0, 2, 0), avg, Matrix::Zero(2, 2), 0.7, big);
  CHECK(out == rows2(1, 0, 1, 0));

  const Matrix one = Matrix::Ones(1, 1);
  const Matrix p = algorithm1_step(one_row(0.8, 0), one, one_row(-1, 0), 0.4, ConstraintSet::ball(2, 1.0));
  CHECK(p(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p(0, 1) == 0.0);

  const Matrix q = algorithm1_step(one_row(1, 1), one, one_row(1, 0), 0.5, big);
  CHECK(q == one_row(0.5, 1));
  CHECK_THROWS(algorithm1_step(one_row(1, 1), avg, one_row(1, 0), 0.5, big));
}

TEST_CASE("algorithm 2 step examples") {
  const Matrix avg = Matrix::Constant(2, 2, 0.5);
  const auto big = ConstraintSet::ball(2, 10.0);
  const Matrix out = algorithm2_step(rows2(0, 0, 2, 0), avg, rows2(1, 0, 0, 0), 1.0, big);
  CHECK(out == rows2(0, 0, 1, 0));
  const Matrix zero = Matrix::Zero(2, 2);
  CHECK(algorithm2_step(rows2(0.3, 1, 2, -1), avg, zero, 0.3, big) ==
        algorithm1_step(rows2(0.3, 1, 2, -1), avg, zero, 0.3, big));
  const Matrix one = Matrix::Ones(1, 1);
  RngStream rng(1, 0);
  for (int k = 0; k < 100; ++k) {
    const Matrix x = 3.0 * sample_unit_sphere(2, rng).transpose();
    const Matrix g = sample_unit_sphere(2, rng).transpose();
    CHECK(algorithm1_step(x, one, g, 0.4, ConstraintSet::ball(2, 1.0)) ==
          algorithm2_step(x, one, g, 0.4, ConstraintSet::ball(2, 1.0)));
  }
}

TEST_CASE("the two rules differ when neighbours disagree") {
  const auto mix = MixingMatrix::metropolis(CommGraph::path(3)).weights();
  Matrix x = Matrix::Zero(3, 2);
  Matrix g(3, 2);
  g << 1, 0, -1, 0, 0, 2;
  const auto big = ConstraintSet::ball(2, 10.0);
  const Matrix a = algorithm1_step(x, mix, g, 0.5, big);
  const Matrix b = algorithm2_step(x, mix, g, 0.5, big);
  CHECK((a - b).norm() > 0.1);
  // Hand value for agent 0 under rule 1: -eta (a00 g0 + a01 g1).
  // Path on 3 agents: a00 = 2/3, a01 = 1/3.
  CHECK(a(0, 0) == doctest::Approx(-0.5 * (2.0 / 3.0 * 1 + 1.0 / 3.0 * -1)));
  CHECK(b(0, 0) == doctest::Approx(-0.5));
}

TEST_CASE("zero objective keeps every iterate at the start") {
  const auto set = ConstraintSet::ball(2, 1.0);
  const auto seq = make_scenario(params("zero", 4, 2, 300), set);
  const auto mix = MixingMatrix::metropolis(CommGraph::ring(4));
  const auto sch = make_schedule(Regime::ConvexSmooth, 300, 2, 1.0, mixing_constants(4, mix.epsilon()));
  for (Algorithm alg : {Algorithm::One, Algorithm::Two}) {
    RunOptions o;
    o.algorithm = alg;
    const auto tr = run(*seq, mix, set, sch, 3, o);
    for (const auto& row : tr.rows) REQUIRE(row.x == Vector::Zero(2));
    CHECK(tr.cum_loss.back() == 0.0);
    CHECK(tr.final_points == Matrix::Zero(4, 2));
  }
}

TEST_CASE("runs are reproducible, feasible, and make one evaluation per agent per round") {
  const auto set = ConstraintSet::ball(2, 0.3);
  auto p = params("drifting-quadratic", 5, 2, 400);
  p.drift = 0.2;
  p.anchor = {1.0, 0.5};
  const auto seq = make_scenario(p, set);
  const auto mix = MixingMatrix::metropolis(CommGraph::ring(5));
  // A large step so projections are active.
  Schedule sch = make_schedule(Regime::ConvexSmooth, 400, 2, seq->info().lipschitz_l0,
                               mixing_constants(5, mix.epsilon()));
  sch.eta = 0.05;
  for (EstimatorKind est : {EstimatorKind::Orf, EstimatorKind::OnePoint}) {
    RunOptions o;
    o.estimator = est;
    const auto a = run(*seq, mix, set, sch, 11, o);
    const auto b = run(*seq, mix, set, sch, 11, o);
    CHECK(a.iterates == b.iterates);
    CHECK(a.cum_loss == b.cum_loss);
    CHECK(a.rows.size() == 5u * 400u);
    CHECK(a.evaluations == (est == EstimatorKind::Orf ? 5u * 401u : 5u * 400u));
    bool on_boundary = false;
    for (int t = 0; t < 400; ++t) {
      for (int i = 0; i < 5; ++i) {
        const Vector x = a.iterate(t, i);
        REQUIRE(set.contains(x, 1e-12));
        on_boundary = on_boundary || x.norm() > 0.3 - 1e-9;
      }
    }
    CHECK(on_boundary);
    double prev = 0.0;
    for (int t = 0; t < 400; ++t) {
      REQUIRE(a.cum_loss[t] - prev == doctest::Approx(a.round_loss[t]).epsilon(1e-12));
      prev = a.cum_loss[t];
    }
  }
}

TEST_CASE("paired estimators see the same perturbation directions") {
  const auto set = ConstraintSet::ball(2, 1.0);
  auto p = params("stationary-quadratic", 3, 2, 50);
  const auto seq = make_scenario(p, set);
  const auto mix = MixingMatrix::metropolis(CommGraph::complete(3));
  const auto sch = make_schedule(Regime::ConvexSmooth, 50, 2, seq->info().lipschitz_l0,
                                 mixing_constants(3, mix.epsilon()));
  RunOptions a;
  RunOptions b;
  b.estimator = EstimatorKind::OnePoint;
  const auto ta = run(*seq, mix, set, sch, 5, a);
  const auto tb = run(*seq, mix, set, sch, 5, b);
  // Round 0 iterates coincide, so both estimates lie along the same u.
  for (int i = 0; i < 3; ++i) {
    const Vector ga = ta.rows[i].estimate.normalized();
    const Vector gb = tb.rows[i].estimate.normalized();
    CHECK(std::abs(std::abs(ga.dot(gb)) - 1.0) < 1e-12);
  }
}

TEST_CASE("consensus error contracts at least as fast as the second singular value") {
  const auto set = ConstraintSet::ball(2, 100.0);
  for (int n : {3, 5, 8}) {
    for (const char* fam : {"ring", "path", "complete", "erdos"}) {
      const auto seq = make_scenario(params("zero", n, 2, 100), set);
      const auto mix = MixingMatrix::metropolis(CommGraph::family(fam, n, 0.5, 2));
      const double sigma = second_singular_value(mix.weights());
      const auto sch = make_schedule(Regime::ConvexSmooth, 100, 2, 1.0, mixing_constants(n, mix.epsilon()));
      RunOptions o;
      Matrix x0(n, 2);
      RngStream rng(7, 0);
      for (int i = 0; i < n; ++i) x0.row(i) = sample_unit_sphere(2, rng).transpose();
      o.initial = x0;
      const auto tr = run(*seq, mix, set, sch, 1, o);
      const Vector mean = x0.colwise().mean().transpose();
      double e0 = 0.0;
      for (int i = 0; i < n; ++i) e0 += (x0.row(i).transpose() - mean).squaredNorm();
      e0 = std::sqrt(e0);
      for (const auto& row : tr.rows) {
        REQUIRE(row.consensus_error <= std::pow(sigma, row.t) * e0 + 1e-12);
      }
    }
  }
}

TEST_CASE("stationary quadratic: a long single-agent run settles at the minimizer") {
  const auto set = ConstraintSet::ball(1, 1.0);
  auto p = params("stationary-quadratic", 1, 1, 1000000);
  p.anchor = {0.5};
  p.spread = 0.0;
  p.orbit_radius = 0.0;
  const auto seq = make_scenario(p, set);
  const auto mix = MixingMatrix::metropolis(CommGraph::from_edges(1, {}));
  const auto sch = make_schedule(Regime::ConvexSmooth, 1000000, 1, seq->info().lipschitz_l0,
                                 mixing_constants(1, mix.epsilon()));
  RunOptions o;
  o.keep_iterates = false;
  const auto tr = run(*seq, mix, set, sch, 17, o);
  CHECK(tr.stride == 100);
  CHECK(tr.rows.size() == 10001u);
  double mean = 0.0;
  int count = 0;
  for (const auto& row : tr.rows) {
    if (row.t >= 900000) {
      mean += row.x(0);
      ++count;
    }
  }
  mean /= count;
  CHECK(std::abs(mean - 0.5) < 0.01);
}

TEST_CASE("thinning keeps the last round and exact cumulative loss") {
  const auto set = ConstraintSet::ball(1, 1.0);
  const auto seq = make_scenario(params("drifting-quadratic", 2, 1, 25001), set);
  const auto mix = MixingMatrix::metropolis(CommGraph::path(2));
  const auto sch = make_schedule(Regime::ConvexSmooth, 25001, 1, seq->info().lipschitz_l0,
                                 mixing_constants(2, mix.epsilon()));
  RunOptions o;
  o.keep_iterates = false;
  const auto tr = run(*seq, mix, set, sch, 1, o);
  CHECK(tr.stride == 3);
  CHECK(tr.rows.back().t == 25000);
  CHECK(tr.rows.back().cum_loss == tr.cum_loss.back());
  CHECK(default_stride(10000) == 1);
  CHECK(default_stride(10001) == 2);
}
