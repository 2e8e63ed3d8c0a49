#include "orfnet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "orfnet/error.hpp"
#include "orfnet/estimators.hpp"
#include "orfnet/regret.hpp"

namespace orfnet {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

struct Setup {
  MixingMatrix mix;
  ConstraintSet set;
  std::unique_ptr<ObjectiveSequence> seq;
  Schedule schedule;
  std::vector<std::string> warnings;
};

// Problems in the experiment definition surface as config errors.
template <class F>
auto as_config(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidArgument) throw ConfigError({e.what()});
    throw;
  }
}

Setup make_setup(const ExperimentConfig& cfg, int horizon) {
  return as_config([&] {
    MixingMatrix mix = build_mixing(cfg.network);
    ConstraintSet set = build_constraints(cfg.constraints, cfg.scenario.dim);
    ScenarioParams p = cfg.scenario;
    p.n_agents = cfg.network.n_agents;
    p.horizon = horizon;
    auto seq = make_scenario(p, set);
    const MixingConstants mc = mixing_constants(mix.size(), mix.epsilon());
    Schedule sch = make_schedule(cfg.regime, horizon, p.dim,
                                 seq->info().lipschitz_l0, mc, cfg.eps_f);
    Setup s{std::move(mix), std::move(set), std::move(seq), sch, {}};
    if (sch.delta > s.set.outer_radius()) {
      s.warnings.push_back("delta = " + format_double(sch.delta) +
                           " exceeds the outer radius r_u = " +
                           format_double(s.set.outer_radius()));
    }
    return s;
  });
}

void warn(const CommandOptions& opts, const std::vector<std::string>& msgs) {
  if (opts.quiet) return;
  for (const auto& m : msgs) std::cerr << "warning: " << m << "\n";
}

void info(const CommandOptions& opts, const std::string& msg) {
  if (!opts.quiet) std::cerr << msg << "\n";
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw_runtime("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_runtime("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw_runtime("write failed for '" + path.string() + "'");
}

struct Stats {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for one value
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

ordered_json vec_json(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

ordered_json schedule_json(const Schedule& s) {
  return {{"regime", to_string(s.regime)},
          {"eta", s.eta},
          {"delta", s.delta},
          {"beta", s.beta},
          {"gamma", s.constants.gamma},
          {"alpha", s.constants.alpha}};
}

ordered_json header_json(const ExperimentConfig& cfg, int horizon) {
  return {{"schema_version", kSchemaVersion},
          {"scenario", cfg.scenario.name},
          {"algorithm", static_cast<int>(cfg.algorithm)},
          {"estimator", to_string(cfg.estimator)},
          {"n_agents", cfg.network.n_agents},
          {"dim", cfg.scenario.dim},
          {"horizon", horizon},
          {"repetitions", cfg.repetitions},
          {"seed", cfg.seed}};
}

std::string trace_csv(int run_id, const RunTrace& tr) {
  std::string out = "run_id,t,agent";
  for (int k = 0; k < tr.dim; ++k) out += ",x" + std::to_string(k);
  out += ",estimate_norm,consensus_error,cum_loss\n";
  for (const auto& r : tr.rows) {
    out += std::to_string(run_id);
    out += ',';
    out += std::to_string(r.t);
    out += ',';
    out += std::to_string(r.agent);
    for (Eigen::Index k = 0; k < r.x.size(); ++k) {
      out += ',';
      out += format_double(r.x(k));
    }
    out += ',';
    out += format_double(r.estimate_norm);
    out += ',';
    out += format_double(r.consensus_error);
    out += ',';
    out += format_double(r.cum_loss);
    out += '\n';
  }
  return out;
}

std::string run_name(int r) {
  std::string s = std::to_string(r);
  if (s.size() < 4) s.insert(0, 4 - s.size(), '0');
  return "run_" + s + ".csv";
}

// Per-horizon batch of repetitions with everything the reports need.
struct Batch {
  std::vector<double> regret;
  std::vector<double> grad_smoothed;
  std::vector<double> grad_true;
  std::vector<double> mean_sq_estimate;
  std::vector<double> displacement;  // mean_i ||x_T^i - x_0^i||
  std::vector<std::uint64_t> evaluations;
  IncreasingRate theta;
  IncreasingRate theta_smoothed;
  Optimum optimum;
  bool has_grad_smoothed = true;
  bool has_grad_true = true;
};

Batch run_batch(const ExperimentConfig& cfg, const Setup& s, int workers,
                const fs::path* trace_dir) {
  Batch b;
  b.optimum = offline_optimum(*s.seq, s.set);
  ThetaOptions topt;
  topt.grid_points = cfg.theta_grid_points;
  b.theta = compute_theta(*s.seq, s.set, s.schedule.delta, topt);
  topt.smoothing = s.schedule.delta;
  try {
    b.theta_smoothed = compute_theta(*s.seq, s.set, s.schedule.delta, topt);
  } catch (const Error&) {
    b.theta_smoothed.total = std::nan("");
  }
  const auto comparator = comparator_losses(*s.seq, b.optimum.point);

  const int reps = cfg.repetitions;
  b.regret.assign(static_cast<std::size_t>(reps), 0.0);
  b.grad_smoothed.assign(static_cast<std::size_t>(reps), 0.0);
  b.grad_true.assign(static_cast<std::size_t>(reps), 0.0);
  b.mean_sq_estimate.assign(static_cast<std::size_t>(reps), 0.0);
  b.displacement.assign(static_cast<std::size_t>(reps), 0.0);
  b.evaluations.assign(static_cast<std::size_t>(reps), 0);
  std::vector<char> gs_ok(static_cast<std::size_t>(reps), 1);
  std::vector<char> gt_ok(static_cast<std::size_t>(reps), 1);

  parallel_for(reps, workers, [&](int r) {
    RunOptions ro;
    ro.algorithm = cfg.algorithm;
    ro.estimator = cfg.estimator;
    ro.keep_iterates = false;
    ro.record_rows = trace_dir != nullptr;
    const auto tr = run(*s.seq, s.mix, s.set, s.schedule,
                        derive_seed(cfg.seed, static_cast<std::uint64_t>(r)), ro);
    const auto k = static_cast<std::size_t>(r);
    b.regret[k] = tr.cum_loss.back() - comparator.back();
    if (tr.grad_regret_smoothed) b.grad_smoothed[k] = *tr.grad_regret_smoothed;
    else gs_ok[k] = 0;
    if (tr.grad_regret_true) b.grad_true[k] = *tr.grad_regret_true;
    else gt_ok[k] = 0;
    b.evaluations[k] = tr.evaluations;
    b.mean_sq_estimate[k] = tr.estimate_sq_total / (double(tr.horizon) * tr.n_agents);
    b.displacement[k] =
        (tr.final_points - tr.initial_points).rowwise().norm().mean();
    if (trace_dir) write_file(*trace_dir / run_name(r), trace_csv(r, tr));
  });
  b.has_grad_smoothed = std::all_of(gs_ok.begin(), gs_ok.end(), [](char c) { return c; });
  b.has_grad_true = std::all_of(gt_ok.begin(), gt_ok.end(), [](char c) { return c; });
  return b;
}

ordered_json batch_json(const Batch& b, int horizon) {
  const Stats reg = stats(b.regret);
  ordered_json j;
  j["regret"] = {{"mean", reg.mean},
                 {"sd", reg.sd},
                 {"mean_per_round", reg.mean / horizon},
                 {"count", b.regret.size()},
                 {"per_run", b.regret}};
  j["theta_total"] = b.theta.total;
  j["theta_smoothed_total"] = b.theta_smoothed.total;
  j["theta_ratio"] = b.theta.total > 0.0
                         ? ordered_json(b.theta_smoothed.total / b.theta.total)
                         : ordered_json(nullptr);
  j["theta_analytic"] = b.theta.analytic;
  if (b.has_grad_smoothed) {
    const Stats g = stats(b.grad_smoothed);
    j["gradient_regret_smoothed"] = {{"mean", g.mean}, {"sd", g.sd},
                                     {"mean_per_round", g.mean / horizon}};
  }
  if (b.has_grad_true) {
    const Stats g = stats(b.grad_true);
    j["gradient_regret_true"] = {{"mean", g.mean}, {"sd", g.sd},
                                 {"mean_per_round", g.mean / horizon}};
  }
  j["optimum"] = {{"point", vec_json(b.optimum.point)},
                  {"value", b.optimum.value},
                  {"exact", b.optimum.exact}};
  const Stats sq = stats(b.mean_sq_estimate);
  j["estimate_stats"] = {{"mean_sq_norm", sq.mean}, {"sd_sq_norm", sq.sd}};
  j["iterate_displacement"] = stats(b.displacement).mean;
  j["evaluations_per_run"] = b.evaluations.empty() ? 0 : b.evaluations.front();
  return j;
}

double sample_var_sum(const std::vector<const Vector*>& xs) {
  // Trace of the sample covariance.
  if (xs.size() < 2) return 0.0;
  Vector mean = Vector::Zero(xs.front()->size());
  for (const Vector* x : xs) mean += *x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (const Vector* x : xs) ss += (*x - mean).squaredNorm();
  return ss / static_cast<double>(xs.size() - 1);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // folds -0
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  workers = std::clamp(workers, 1, count);
  if (workers == 1) {
    for (int k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int k = next.fetch_add(1);
        if (k >= count || failed.load()) return;
        try {
          fn(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first) first = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

CommandResult cmd_run(const ExperimentConfig& cfg, const CommandOptions& opts) {
  const int T = cfg.scenario.horizon;
  const Setup s = make_setup(cfg, T);
  warn(opts, s.warnings);
  const fs::path out = prepare_dir(opts.out_dir);
  const fs::path traces = prepare_dir((out / "traces").string());
  const Batch b = run_batch(cfg, s, opts.workers, &traces);

  ordered_json j = header_json(cfg, T);
  j["schedule"] = schedule_json(s.schedule);
  j.update(batch_json(b, T));
  j["label"] = cfg.repetitions == 1 ? "realized regret" : "seed-averaged regret";
  j["warnings"] = s.warnings;
  write_file(out / "summary.json", j.dump(2) + "\n");
  info(opts, "run: mean regret " + format_double(stats(b.regret).mean) +
                 " over " + std::to_string(cfg.repetitions) + " repetitions");
  return {};
}

CommandResult cmd_compare(const ExperimentConfig& cfg,
                          const CommandOptions& opts) {
  if (cfg.repetitions < 2) {
    throw ConfigError({"compare needs repetitions >= 2 for variance statistics"});
  }
  const int T = cfg.scenario.horizon;
  const Setup s = make_setup(cfg, T);
  warn(opts, s.warnings);
  const fs::path out = prepare_dir(opts.out_dir);
  const Optimum opt = offline_optimum(*s.seq, s.set);
  const auto comparator = comparator_losses(*s.seq, opt.point);

  const int reps = cfg.repetitions;
  std::vector<RunTrace> orf(static_cast<std::size_t>(reps));
  std::vector<RunTrace> one(static_cast<std::size_t>(reps));
  parallel_for(2 * reps, opts.workers, [&](int k) {
    const int r = k / 2;
    RunOptions ro;
    ro.algorithm = cfg.algorithm;
    ro.keep_iterates = false;
    ro.estimator = (k % 2 == 0) ? EstimatorKind::Orf : EstimatorKind::OnePoint;
    // Same seed for both: identical perturbation directions.
    auto tr = run(*s.seq, s.mix, s.set, s.schedule,
                  derive_seed(cfg.seed, static_cast<std::uint64_t>(r)), ro);
    (k % 2 == 0 ? orf : one)[static_cast<std::size_t>(r)] = std::move(tr);
  });

  const int n = s.seq->n_agents();
  const std::size_t n_rows = orf.front().rows.size();
  std::string csv = "t,var_orf,var_onepoint,regret_orf,regret_onepoint\n";
  int below = 0;
  int checkpoints = 0;
  std::vector<const Vector*> a_est;
  std::vector<const Vector*> b_est;
  for (std::size_t row0 = 0; row0 < n_rows; row0 += static_cast<std::size_t>(n)) {
    const int t = orf.front().rows[row0].t;
    double var_a = 0.0;
    double var_b = 0.0;
    for (int i = 0; i < n; ++i) {
      a_est.clear();
      b_est.clear();
      for (int r = 0; r < reps; ++r) {
        a_est.push_back(&orf[static_cast<std::size_t>(r)].rows[row0 + i].estimate);
        b_est.push_back(&one[static_cast<std::size_t>(r)].rows[row0 + i].estimate);
      }
      var_a += sample_var_sum(a_est);
      var_b += sample_var_sum(b_est);
    }
    var_a /= n;
    var_b /= n;
    double reg_a = 0.0;
    double reg_b = 0.0;
    for (int r = 0; r < reps; ++r) {
      reg_a += orf[static_cast<std::size_t>(r)].cum_loss[static_cast<std::size_t>(t)];
      reg_b += one[static_cast<std::size_t>(r)].cum_loss[static_cast<std::size_t>(t)];
    }
    reg_a = reg_a / reps - comparator[static_cast<std::size_t>(t)];
    reg_b = reg_b / reps - comparator[static_cast<std::size_t>(t)];
    ++checkpoints;
    if (var_a < var_b) ++below;
    csv += std::to_string(t) + ',' + format_double(var_a) + ',' +
           format_double(var_b) + ',' + format_double(reg_a) + ',' +
           format_double(reg_b) + '\n';
  }
  write_file(out / "compare.csv", csv);

  std::vector<double> final_a;
  std::vector<double> final_b;
  for (int r = 0; r < reps; ++r) {
    final_a.push_back(orf[static_cast<std::size_t>(r)].cum_loss.back() - comparator.back());
    final_b.push_back(one[static_cast<std::size_t>(r)].cum_loss.back() - comparator.back());
  }
  const Stats fa = stats(final_a);
  const Stats fb = stats(final_b);
  ordered_json j = header_json(cfg, T);
  j.erase("estimator");
  j["schedule"] = schedule_json(s.schedule);
  j["checkpoints"] = checkpoints;
  j["orf_variance_below_fraction"] =
      checkpoints > 0 ? double(below) / checkpoints : 0.0;
  j["regret_orf"] = {{"mean", fa.mean}, {"sd", fa.sd}, {"per_run", final_a}};
  j["regret_onepoint"] = {{"mean", fb.mean}, {"sd", fb.sd}, {"per_run", final_b}};
  j["optimum"] = {{"point", vec_json(opt.point)}, {"value", opt.value}};
  j["warnings"] = s.warnings;
  write_file(out / "compare.json", j.dump(2) + "\n");
  info(opts, "compare: ORF variance below one-point at " + std::to_string(below) +
                 "/" + std::to_string(checkpoints) + " checkpoints");
  return {};
}

CommandResult cmd_sweep(const ExperimentConfig& cfg, const CommandOptions& opts) {
  const auto& grid = cfg.sweep.horizons;
  if (grid.size() < 3) throw ConfigError({"sweep.horizons needs at least 3 entries"});
  const fs::path out = prepare_dir(opts.out_dir);

  std::string csv =
      "T,eta,delta,beta,mean_regret,sd_regret,mean_regret_per_round,"
      "theta_total,theta_smoothed_total,mean_grad_regret,sd_grad_regret,"
      "mean_grad_regret_true\n";
  ordered_json j = header_json(cfg, grid.back());
  j.erase("horizon");
  j["horizons"] = grid;
  ordered_json per_t = ordered_json::array();
  std::vector<std::pair<double, double>> reg_pairs;
  std::vector<std::pair<double, double>> grad_pairs;
  std::vector<std::string> warnings;
  bool all_grad = true;

  if (cfg.sweep.synthetic_exponent) {
    // Test mode: an exact injected power law, no simulation.
    j["synthetic"] = true;
    for (int T : grid) {
      const double r = cfg.sweep.synthetic_scale *
                       std::pow(double(T), *cfg.sweep.synthetic_exponent);
      reg_pairs.emplace_back(T, r);
      csv += std::to_string(T) + ",,,," + format_double(r) + ",0," +
             format_double(r / T) + ",,,,,\n";
      per_t.push_back({{"T", T}, {"mean_regret", r}});
    }
    all_grad = false;
  } else {
    for (int T : grid) {
      const Setup s = make_setup(cfg, T);
      warn(opts, s.warnings);
      for (const auto& w : s.warnings) warnings.push_back("T=" + std::to_string(T) + ": " + w);
      const Batch b = run_batch(cfg, s, opts.workers, nullptr);
      const Stats reg = stats(b.regret);
      const Stats gs = stats(b.grad_smoothed);
      const Stats gt = stats(b.grad_true);
      reg_pairs.emplace_back(T, reg.mean);
      if (b.has_grad_smoothed) grad_pairs.emplace_back(T, gs.mean);
      else all_grad = false;
      csv += std::to_string(T) + ',' + format_double(s.schedule.eta) + ',' +
             format_double(s.schedule.delta) + ',' +
             format_double(s.schedule.beta) + ',' + format_double(reg.mean) +
             ',' + format_double(reg.sd) + ',' + format_double(reg.mean / T) +
             ',' + format_double(b.theta.total) + ',' +
             format_double(b.theta_smoothed.total) + ',' +
             (b.has_grad_smoothed ? format_double(gs.mean) : "") + ',' +
             (b.has_grad_smoothed ? format_double(gs.sd) : "") + ',' +
             (b.has_grad_true ? format_double(gt.mean) : "") + '\n';
      ordered_json e = {{"T", T}, {"schedule", schedule_json(s.schedule)}};
      e.update(batch_json(b, T));
      per_t.push_back(std::move(e));
      info(opts, "sweep: T=" + std::to_string(T) + " mean regret " +
                     format_double(reg.mean));
    }
  }
  j["per_horizon"] = per_t;

  auto fit_json = [&](const std::vector<std::pair<double, double>>& pairs) {
    try {
      const ExponentFit f = fit_exponent(pairs);
      warn(opts, f.warnings);
      for (const auto& w : f.warnings) warnings.push_back(w);
      return ordered_json{{"exponent", f.slope}, {"intercept", f.intercept},
                          {"points", f.used}};
    } catch (const Error& e) {
      warnings.push_back(std::string("fit failed: ") + e.what());
      return ordered_json{{"exponent", nullptr}, {"error", e.what()}};
    }
  };
  j["regret_fit"] = fit_json(reg_pairs);
  if (all_grad) j["gradient_regret_fit"] = fit_json(grad_pairs);
  j["warnings"] = warnings;
  write_file(out / "sweep.csv", csv);
  write_file(out / "sweep.json", j.dump(2) + "\n");
  return {};
}

// ---------------------------------------------------------------------------
// validate

SuiteResult mixing_bound_suite(const Matrix& w, int t_max) {
  SuiteResult r;
  r.name = "lemma1-mixing";
  if (w.rows() != w.cols() || w.rows() == 0) {
    r.detail = "matrix not square";
    r.margin = -1.0;
    return r;
  }
  if (!verify_double_stochastic(w, kStochasticTolerance)) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      worst = std::max({worst, std::abs(w.row(i).sum() - 1.0),
                        std::abs(w.col(i).sum() - 1.0)});
    }
    r.detail = "not doubly stochastic (worst row/column sum error " +
               format_double(worst) + ")";
    r.margin = -worst;
    return r;
  }
  const int n = static_cast<int>(w.rows());
  const double eps = min_nonzero_entry(w);
  if (!(eps > 0.0 && eps < 1.0)) {
    r.detail = "no valid epsilon";
    r.margin = -1.0;
    return r;
  }
  const double gamma = mixing_constants(n, eps).gamma;
  const auto dev = transition_deviations(w, t_max);
  double margin = std::numeric_limits<double>::infinity();
  int worst_t = 1;
  for (int t = 1; t <= t_max; ++t) {
    const double slack = std::pow(gamma, t - 1) - dev[static_cast<std::size_t>(t - 1)];
    if (slack < margin) {
      margin = slack;
      worst_t = t;
    }
  }
  r.margin = margin;
  r.passed = margin >= 0.0;
  r.detail = "N=" + std::to_string(n) + " eps=" + format_double(eps) +
             " gamma=" + format_double(gamma) + " tightest at t=" +
             std::to_string(worst_t);
  return r;
}

namespace {

Vector random_point(const ConstraintSet& set, RngStream& rng) {
  Vector x(set.dim());
  for (int k = 0; k < set.dim(); ++k) {
    x(k) = set.lower()(k) + (set.upper()(k) - set.lower()(k)) * rng.next_uniform();
  }
  return set.project(x);
}

struct Problem {
  ConstraintSet set;
  std::unique_ptr<ObjectiveSequence> seq;
};

SuiteResult smoothing_suite(const ExperimentConfig& cfg, const Problem& s,
                            int workers) {
  SuiteResult r;
  r.name = "lemma2-smoothing";
  const auto& seq = *s.seq;
  const double delta = cfg.validate.delta;
  const bool c11 = seq.info().smooth_class == SmoothClass::C11;
  const double bound = c11 ? delta * delta * seq.info().smooth_l1
                           : delta * seq.info().lipschitz_l0;
  const int probes = cfg.validate.probes;
  std::vector<double> slack(static_cast<std::size_t>(probes));
  parallel_for(probes, workers, [&](int p) {
    RngStream rng(derive_seed(cfg.seed, 0x20000 + std::uint64_t(p)), 0);
    const int i = static_cast<int>(rng.next_u64() % std::uint64_t(seq.n_agents()));
    const int t = static_cast<int>(rng.next_u64() % std::uint64_t(seq.horizon() + 1));
    const Vector x = random_point(s.set, rng);
    const auto est = smoothed_value(seq, i, t, x, delta, cfg.validate.samples, rng);
    slack[static_cast<std::size_t>(p)] =
        bound + 4.0 * est.standard_error - std::abs(est.value - seq.eval(i, t, x));
  });
  r.margin = *std::min_element(slack.begin(), slack.end());
  r.passed = r.margin >= 0.0;
  r.detail = std::string(c11 ? "C11 bound delta^2 L1 = " : "C00 bound delta L0 = ") +
             format_double(bound) + " over " + std::to_string(probes) + " probes";
  return r;
}

// Probe points x_{t-1}, x_t used by the estimator suites.
std::pair<Vector, Vector> probe_pair(const ConstraintSet& set) {
  const int d = set.dim();
  Vector a = Vector::Zero(d);
  Vector b = Vector::Zero(d);
  const double r = set.inner_radius();
  a(0) = 0.3 * r;
  b(0) = 0.5 * r;
  if (d > 1) b(1) = -0.4 * r;
  return {set.project(a), set.project(b)};
}

SuiteResult unbiasedness_suite(const ExperimentConfig& cfg, const Problem& s,
                               double delta) {
  SuiteResult r;
  r.name = "lemma4-unbiasedness";
  const auto& seq = *s.seq;
  const int d = seq.dim();
  const int t = std::min(1, seq.horizon());
  const int i = 0;
  const auto [x_prev, x_now] = probe_pair(s.set);
  const int n = cfg.validate.samples;

  RngStream rng(derive_seed(cfg.seed, 0x40000), 0);
  Vector sum = Vector::Zero(d);
  Vector sum_sq = Vector::Zero(d);
  for (int k = 0; k < n; ++k) {
    EstimatorState st;
    st.prev_direction = sample_unit_sphere(d, rng);
    st.prev_value = seq.eval(i, std::max(0, t - 1), x_prev + delta * st.prev_direction);
    st.initialized = true;
    const auto g = orf_estimate(st, seq, i, t, x_now, delta, rng);
    sum += g.components;
    sum_sq += g.components.cwiseProduct(g.components);
  }
  const Vector mean = sum / n;
  Vector se = ((sum_sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0) * (double(n) / (n - 1)))
                  .cwiseSqrt() / std::sqrt(double(n));

  Vector ref;
  Vector ref_se = Vector::Zero(d);
  if (auto g = seq.smoothed_gradient(i, t, x_now, delta)) {
    ref = *g;
  } else {
    // Independent centered Monte-Carlo reference with ten times the samples.
    RngStream ref_rng(derive_seed(cfg.seed, 0x40001), 0);
    const int m = 10 * n;
    const double base = seq.eval(i, t, x_now);
    Vector rs = Vector::Zero(d);
    Vector rss = Vector::Zero(d);
    for (int k = 0; k < m; ++k) {
      const Vector u = sample_unit_sphere(d, ref_rng);
      const Vector v = (d / delta * (seq.eval(i, t, x_now + delta * u) - base)) * u;
      rs += v;
      rss += v.cwiseProduct(v);
    }
    ref = rs / m;
    ref_se = ((rss / m - ref.cwiseProduct(ref)).cwiseMax(0.0)).cwiseSqrt() /
             std::sqrt(double(m));
  }
  double margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < d; ++k) {
    const double tol = 4.0 * std::hypot(se(k), ref_se(k));
    margin = std::min(margin, tol - std::abs(mean(k) - ref(k)));
  }
  r.margin = margin;
  r.passed = margin >= 0.0;
  r.detail = "delta=" + format_double(delta) + ", " + std::to_string(n) +
             " repetitions, 4 standard errors per coordinate";
  return r;
}

SuiteResult second_moment_suite(const ExperimentConfig& cfg, const Problem& s) {
  SuiteResult r;
  r.name = "lemma5-second-moment";
  const auto& seq = *s.seq;
  const int d = seq.dim();
  const int t = std::min(1, seq.horizon());
  const int i = 0;
  const double l0 = seq.info().lipschitz_l0;
  const int n = cfg.validate.samples;
  const double base = cfg.validate.delta;
  const double r_in = s.set.inner_radius();
  double margin = std::numeric_limits<double>::infinity();
  double margin_uniform = std::numeric_limits<double>::infinity();
  int cell = 0;
  for (double delta : {0.5 * base, base, 2.0 * base}) {
    const IncreasingRate th = compute_theta(seq, s.set, delta);
    const double theta_it = t > 0 ? th.theta(i, t) : 0.0;
    const double theta_max = th.theta.size() > 0 ? th.theta.maxCoeff() : 0.0;
    for (double step : {0.0, 0.1 * r_in, 0.5 * r_in}) {
      Vector x_prev = s.set.project(Vector::Zero(d));
      Vector x_now = x_prev;
      x_now(0) += step;
      x_now = s.set.project(x_now);
      const double step_sq = (x_now - x_prev).squaredNorm();
      RngStream rng(derive_seed(cfg.seed, 0x50000 + std::uint64_t(cell++)), 0);
      double sum = 0.0;
      double sum_sq = 0.0;
      for (int k = 0; k < n; ++k) {
        EstimatorState st;
        st.prev_direction = sample_unit_sphere(d, rng);
        st.prev_value = seq.eval(i, std::max(0, t - 1), x_prev + delta * st.prev_direction);
        st.initialized = true;
        const double q = orf_estimate(st, seq, i, t, x_now, delta, rng).components.squaredNorm();
        sum += q;
        sum_sq += q * q;
      }
      const double mean = sum / n;
      const double var = std::max(0.0, (sum_sq / n - mean * mean) * n / (n - 1));
      const double se = std::sqrt(var / n);
      margin = std::min(margin, second_moment_bound_rhs(d, delta, l0, step_sq, theta_it) +
                                    4.0 * se - mean);
      margin_uniform =
          std::min(margin_uniform,
                   second_moment_bound_rhs(d, delta, l0, step_sq, theta_max) + 4.0 * se - mean);
    }
  }
  r.margin = margin;
  r.passed = margin >= 0.0 && margin_uniform >= 0.0;
  r.detail = "3x3 (delta, step) grid; per-round theta margin " + format_double(margin) +
             ", uniform theta margin " + format_double(margin_uniform);
  return r;
}

SuiteResult isotropy_suite(const ExperimentConfig& cfg, int d) {
  SuiteResult r;
  r.name = "sphere-isotropy";
  const int n = 1000000;
  RngStream rng(derive_seed(cfg.seed, 0x60000), 0);
  // Moments of the leading block only, to keep large d affordable.
  const int m = std::min(d, 16);
  Vector mean = Vector::Zero(m);
  Matrix second = Matrix::Zero(m, m);
  double worst_norm = 0.0;
  for (int k = 0; k < n; ++k) {
    const Vector u = sample_unit_sphere(d, rng);
    worst_norm = std::max(worst_norm, std::abs(u.norm() - 1.0));
    const auto head = u.head(m);
    mean += head;
    second.noalias() += head * head.transpose();
  }
  mean /= n;
  second /= n;
  const double mean_tol = 4.0 / std::sqrt(double(d) * n);
  const double second_err =
      (second - Matrix::Identity(m, m) / d).cwiseAbs().maxCoeff();
  const double mean_err = mean.cwiseAbs().maxCoeff();
  r.margin = std::min({1e-12 - worst_norm, 0.005 - second_err, mean_tol - mean_err});
  r.passed = r.margin >= 0.0;
  r.detail = "d=" + std::to_string(d) + ", 1e6 draws; mean err " +
             format_double(mean_err) + ", second-moment err " +
             format_double(second_err);
  return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "lemma1-mixing", "lemma2-smoothing", "lemma4-unbiasedness",
      "lemma5-second-moment", "sphere-isotropy"};
  return names;
}

namespace {

SuiteResult mixing_suite(const ExperimentConfig& cfg) {
  // The configured matrix as given (not re-validated first), then the
  // built-in families at the same N.
  SuiteResult mix;
  try {
    if (cfg.network.family == "matrix") {
      mix = mixing_bound_suite(*cfg.network.weights, cfg.validate.t_max);
    } else {
      mix = mixing_bound_suite(build_mixing(cfg.network).weights(), cfg.validate.t_max);
    }
  } catch (const Error& e) {
    mix.name = "lemma1-mixing";
    mix.detail = e.what();
    mix.margin = -1.0;
  }
  if (mix.passed && cfg.network.n_agents <= 64) {
    for (const char* fam : {"ring", "path", "complete", "erdos"}) {
      const auto m = MixingMatrix::metropolis(
          CommGraph::family(fam, cfg.network.n_agents, 0.5, cfg.seed));
      const auto f = mixing_bound_suite(m.weights(), cfg.validate.t_max);
      mix.margin = std::min(mix.margin, f.margin);
      if (!f.passed) {
        mix.passed = false;
        mix.detail += "; family " + std::string(fam) + " failed";
      }
    }
  }
  return mix;
}

Problem make_problem(const ExperimentConfig& cfg) {
  return as_config([&] {
    ConstraintSet set = build_constraints(cfg.constraints, cfg.scenario.dim);
    ScenarioParams p = cfg.scenario;
    p.n_agents = cfg.network.n_agents;
    auto seq = make_scenario(p, set);
    return Problem{std::move(set), std::move(seq)};
  });
}

}  // namespace

SuiteResult validate_suite(const ExperimentConfig& cfg, const std::string& name,
                           int workers) {
  if (!(cfg.validate.delta > 0.0)) throw ConfigError({"validate.delta must be positive"});
  if (name == "lemma1-mixing") return mixing_suite(cfg);
  if (name == "sphere-isotropy") return isotropy_suite(cfg, cfg.scenario.dim);
  const Problem s = make_problem(cfg);
  if (name == "lemma2-smoothing") return smoothing_suite(cfg, s, workers);
  if (name == "lemma4-unbiasedness") return unbiasedness_suite(cfg, s, cfg.validate.delta);
  if (name == "lemma5-second-moment") return second_moment_suite(cfg, s);
  throw_invalid("unknown validation suite '" + name + "'");
}

std::vector<SuiteResult> validate_suites(const ExperimentConfig& cfg,
                                         int workers) {
  if (!(cfg.validate.delta > 0.0)) throw ConfigError({"validate.delta must be positive"});
  std::vector<SuiteResult> out;
  out.push_back(mixing_suite(cfg));
  const Problem s = make_problem(cfg);
  out.push_back(smoothing_suite(cfg, s, workers));
  out.push_back(unbiasedness_suite(cfg, s, cfg.validate.delta));
  out.push_back(second_moment_suite(cfg, s));
  out.push_back(isotropy_suite(cfg, cfg.scenario.dim));
  return out;
}

CommandResult cmd_validate(const ExperimentConfig& cfg,
                           const CommandOptions& opts) {
  const auto suites = validate_suites(cfg, opts.workers);
  const fs::path out = prepare_dir(opts.out_dir);
  ordered_json j = {{"schema_version", kSchemaVersion},
                    {"scenario", cfg.scenario.name},
                    {"delta", cfg.validate.delta}};
  ordered_json arr = ordered_json::array();
  bool ok = true;
  for (const auto& s : suites) {
    ok = ok && s.passed;
    arr.push_back({{"suite", s.name},
                   {"passed", s.passed},
                   {"margin", s.margin},
                   {"detail", s.detail}});
    if (!opts.quiet) {
      std::cout << (s.passed ? "PASS " : "FAIL ") << s.name << "  margin "
                << format_double(s.margin) << "  (" << s.detail << ")\n";
    }
  }
  j["suites"] = arr;
  j["passed"] = ok;
  write_file(out / "validate.json", j.dump(2) + "\n");
  if (!ok) return {Status::Validation, "one or more validation suites failed"};
  return {};
}

}  // namespace orfnet
