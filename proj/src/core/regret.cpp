#include "orfnet/regret.hpp"

#include <cmath>
#include <limits>

#include "orfnet/error.hpp"
#include "orfnet/sampling.hpp"

namespace orfnet {
namespace {

std::vector<Vector> start_points(const ConstraintSet& set, int count) {
  std::vector<Vector> pts;
  pts.push_back(set.project(Vector::Zero(set.dim())));
  RngStream rng(0x0ff11e, 0);
  while (static_cast<int>(pts.size()) < count) {
    const Vector u = sample_unit_sphere(set.dim(), rng);
    pts.push_back(set.project(set.outer_radius() * u));
  }
  return pts;
}

void grid_search(const HorizonAggregate& agg, const ConstraintSet& set,
                 double step, Optimum& out) {
  const int d = set.dim();
  const Vector& lo = set.lower();
  const Vector& hi = set.upper();
  std::vector<long> counts(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    counts[static_cast<std::size_t>(k)] =
        static_cast<long>(std::floor((hi(k) - lo(k)) / step + 1e-9)) + 1;
  }
  double best = std::numeric_limits<double>::infinity();
  Vector best_x;
  Vector x(d);
  std::vector<long> idx(static_cast<std::size_t>(d), 0);
  for (;;) {
    for (int k = 0; k < d; ++k) {
      x(k) = std::min(hi(k), lo(k) + step * idx[static_cast<std::size_t>(k)]);
    }
    if (set.contains(x, 1e-12)) {
      const double v = agg.value(x);
      if (v < best) {
        best = v;
        best_x = x;
      }
    }
    int k = 0;
    while (k < d && ++idx[static_cast<std::size_t>(k)] ==
                        counts[static_cast<std::size_t>(k)]) {
      idx[static_cast<std::size_t>(k)] = 0;
      ++k;
    }
    if (k == d) break;
  }
  if (best_x.size() > 0) {
    out.grid_point = best_x;
    out.grid_value = best;
  }
}

}  // namespace

Vector projected_descent(const HorizonAggregate& agg, const ConstraintSet& set,
                         Vector x, double tolerance, int max_iterations) {
  x = set.project(x);
  double fx = agg.value(x);
  double step = 1.0;
  for (int it = 0; it < max_iterations; ++it) {
    const Vector g = agg.gradient(x);
    Vector next;
    double fn = 0.0;
    for (int bt = 0; bt < 200; ++bt) {
      next = set.project(x - step * g);
      fn = agg.value(next);
      const Vector dx = next - x;
      if (fn <= fx + g.dot(dx) + dx.squaredNorm() / (2.0 * step) ||
          dx.norm() <= tolerance) {
        break;
      }
      step *= 0.5;
    }
    const double moved = (next - x).norm();
    if (fn <= fx) {
      x = next;
      fx = fn;
    }
    if (moved <= tolerance * std::max(1.0, x.norm())) break;
    step *= 2.0;
  }
  return x;
}

Optimum offline_optimum(const ObjectiveSequence& seq, const ConstraintSet& set,
                        const OptimumOptions& options) {
  if (set.dim() != seq.dim()) throw_invalid("constraint set dimension mismatch");
  const auto agg = seq.aggregate();
  Optimum out;
  if (auto exact = agg->exact_minimizer(set)) {
    out.point = *exact;
    out.value = agg->value(out.point);
    out.exact = true;
  } else {
    try {
      agg->gradient(Vector::Zero(seq.dim()));
    } catch (const Error&) {
      throw_invalid("no oracle available");
    }
    double best = std::numeric_limits<double>::infinity();
    for (const Vector& s : start_points(set, std::max(1, options.starts))) {
      Vector x = projected_descent(*agg, set, s, options.tolerance,
                                   options.max_iterations);
      const double v = agg->value(x);
      if (v < best) {
        best = v;
        out.point = x;
      }
    }
    out.value = best;
  }

  if (options.grid_check && seq.dim() <= 2 && agg->compact()) {
    grid_search(*agg, set, options.grid_step, out);
    if (!out.exact && out.grid_point && out.grid_value < out.value) {
      // A better basin than any start found: polish from the grid point.
      Vector x = projected_descent(*agg, set, *out.grid_point,
                                   options.tolerance, options.max_iterations);
      const double v = agg->value(x);
      if (v < out.value) {
        out.point = x;
        out.value = v;
      }
    }
  }
  return out;
}

std::vector<double> comparator_losses(const ObjectiveSequence& seq,
                                      const Vector& x) {
  std::vector<double> cum(static_cast<std::size_t>(seq.horizon()));
  double c = 0.0;
  for (int t = 0; t < seq.horizon(); ++t) {
    double loss = 0.0;
    for (int i = 0; i < seq.n_agents(); ++i) loss += seq.value(i, t, x);
    c += loss;
    cum[static_cast<std::size_t>(t)] = c;
  }
  return cum;
}

double static_regret(const RunTrace& trace, const ObjectiveSequence& seq,
                     const Vector& comparator) {
  if (trace.horizon != seq.horizon() || trace.n_agents != seq.n_agents()) {
    throw_invalid("trace and sequence horizons do not match");
  }
  if (trace.cum_loss.empty()) return 0.0;
  return trace.cum_loss.back() - comparator_losses(seq, comparator).back();
}

double gradient_regret(const RunTrace& trace, const ObjectiveSequence& seq,
                       double delta, GradientFlavor flavor, int mc_samples,
                       std::uint64_t mc_seed) {
  if (trace.horizon != seq.horizon() || trace.n_agents != seq.n_agents()) {
    throw_invalid("trace and sequence horizons do not match");
  }
  if (trace.iterates.empty()) throw_invalid("gradient regret needs iterates");
  if (flavor == GradientFlavor::Smoothed && !(delta > 0.0)) {
    throw_invalid("delta must be positive");
  }
  const int d = seq.dim();
  double total = 0.0;
  for (int t = 0; t < trace.horizon; ++t) {
    for (int i = 0; i < trace.n_agents; ++i) {
      const Vector x = trace.iterate(t, i);
      std::optional<Vector> g = flavor == GradientFlavor::Smoothed
                                    ? seq.smoothed_gradient(i, t, x, delta)
                                    : seq.gradient(i, t, x);
      if (!g && flavor == GradientFlavor::Smoothed && mc_samples > 0) {
        // (d / delta) E[f(x + delta u) u] with a centered baseline.
        RngStream rng(derive_seed(mc_seed, std::uint64_t(t)), std::uint64_t(i));
        const double base = seq.value(i, t, x);
        Vector acc = Vector::Zero(d);
        for (int s = 0; s < mc_samples; ++s) {
          const Vector u = sample_unit_sphere(d, rng);
          acc += (seq.value(i, t, x + delta * u) - base) * u;
        }
        g = (d / delta / mc_samples) * acc;
      }
      if (!g) throw_invalid("no analytic smoothed gradient available");
      total += g->squaredNorm();
    }
  }
  return total;
}

ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& pairs) {
  ExponentFit fit;
  std::vector<double> lx;
  std::vector<double> ly;
  for (const auto& [t, r] : pairs) {
    if (!(t > 0.0)) throw_invalid("horizon values must be positive");
    if (!(r > 0.0)) {
      fit.warnings.push_back("dropped nonpositive regret at T=" +
                             std::to_string(t));
      continue;
    }
    lx.push_back(std::log(t));
    ly.push_back(std::log(r));
  }
  if (lx.size() < 3) throw_invalid("fit_exponent needs at least 3 positive pairs");
  const double n = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxy += (lx[k] - mx) * (ly[k] - my);
    sxx += (lx[k] - mx) * (lx[k] - mx);
  }
  if (!(sxx > 0.0)) throw_invalid("fit_exponent needs distinct horizons");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.used = static_cast<int>(lx.size());
  return fit;
}

}  // namespace orfnet
