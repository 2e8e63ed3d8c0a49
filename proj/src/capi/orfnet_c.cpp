#include "orfnet/orfnet.h"

#include <new>
#include <string>
#include <thread>

#include "orfnet/error.hpp"
#include "orfnet/estimators.hpp"
#include "orfnet/harness.hpp"
#include "orfnet/regret.hpp"

struct orfnet_config {
  orfnet::ExperimentConfig cfg;
};

struct orfnet_mixing {
  orfnet::MixingMatrix mix;
};

namespace {

thread_local std::string g_last_error;

orfnet_status fail(orfnet_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Runs fn, translating exceptions. Invalid arguments map to `arg_status`:
// ORFNET_ERR_CONFIG inside commands, ORFNET_ERR_ARGUMENT for primitives.
template <class F>
orfnet_status guarded(F&& fn, orfnet_status arg_status = ORFNET_ERR_ARGUMENT) {
  g_last_error.clear();
  try {
    return fn();
  } catch (const orfnet::ConfigError& e) {
    return fail(ORFNET_ERR_CONFIG, e.what());
  } catch (const orfnet::Error& e) {
    switch (e.kind()) {
      case orfnet::ErrorKind::Config: return fail(ORFNET_ERR_CONFIG, e.what());
      case orfnet::ErrorKind::Validation: return fail(ORFNET_ERR_VALIDATION, e.what());
      case orfnet::ErrorKind::InvalidArgument: return fail(arg_status, e.what());
      case orfnet::ErrorKind::Runtime: return fail(ORFNET_ERR_RUNTIME, e.what());
    }
    return fail(ORFNET_ERR_RUNTIME, e.what());
  } catch (const std::bad_alloc&) {
    return fail(ORFNET_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(ORFNET_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(ORFNET_ERR_RUNTIME, "unknown error");
  }
}

orfnet::CommandOptions command_options(const orfnet_run_options* o) {
  orfnet::CommandOptions c;
  c.workers = orfnet_default_workers();
  if (o) {
    if (o->out_dir) c.out_dir = o->out_dir;
    if (o->workers > 0) c.workers = o->workers;
    c.quiet = o->quiet != 0;
  }
  return c;
}

template <class Cmd>
orfnet_status command(const orfnet_config* cfg, const orfnet_run_options* o,
                      Cmd cmd) {
  return guarded(
      [&] {
        if (!cfg) return fail(ORFNET_ERR_ARGUMENT, "null config");
        const auto r = cmd(cfg->cfg, command_options(o));
        if (r.status != orfnet::Status::Ok) {
          return fail(static_cast<orfnet_status>(r.status), r.message);
        }
        return ORFNET_OK;
      },
      ORFNET_ERR_CONFIG);
}

}  // namespace

extern "C" {

const char* orfnet_last_error(void) { return g_last_error.c_str(); }

const char* orfnet_version(void) { return "0.1.0"; }

int orfnet_default_workers(void) {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

orfnet_status orfnet_config_parse(const char* text, orfnet_config** out) {
  return guarded(
      [&] {
        if (!text || !out) return fail(ORFNET_ERR_ARGUMENT, "null argument");
        *out = new orfnet_config{orfnet::parse_config(text)};
        return ORFNET_OK;
      },
      ORFNET_ERR_CONFIG);
}

orfnet_status orfnet_config_load(const char* path, orfnet_config** out) {
  return guarded(
      [&] {
        if (!path || !out) return fail(ORFNET_ERR_ARGUMENT, "null argument");
        *out = new orfnet_config{orfnet::load_config(path)};
        return ORFNET_OK;
      },
      ORFNET_ERR_CONFIG);
}

void orfnet_config_free(orfnet_config* cfg) { delete cfg; }

orfnet_status orfnet_cmd_run(const orfnet_config* cfg,
                             const orfnet_run_options* options) {
  return command(cfg, options, orfnet::cmd_run);
}

orfnet_status orfnet_cmd_compare(const orfnet_config* cfg,
                                 const orfnet_run_options* options) {
  return command(cfg, options, orfnet::cmd_compare);
}

orfnet_status orfnet_cmd_sweep(const orfnet_config* cfg,
                               const orfnet_run_options* options) {
  return command(cfg, options, orfnet::cmd_sweep);
}

orfnet_status orfnet_cmd_validate(const orfnet_config* cfg,
                                  const orfnet_run_options* options) {
  return command(cfg, options, orfnet::cmd_validate);
}

orfnet_status orfnet_mixing_from_edges(int n_agents, const int* edge_pairs,
                                       size_t n_edges, orfnet_mixing** out) {
  return guarded([&] {
    if (!out || (n_edges > 0 && !edge_pairs)) {
      return fail(ORFNET_ERR_ARGUMENT, "null argument");
    }
    std::vector<orfnet::CommGraph::Edge> edges;
    for (size_t k = 0; k < n_edges; ++k) {
      edges.emplace_back(edge_pairs[2 * k], edge_pairs[2 * k + 1]);
    }
    *out = new orfnet_mixing{orfnet::MixingMatrix::metropolis(
        orfnet::CommGraph::from_edges(n_agents, edges))};
    return ORFNET_OK;
  });
}

orfnet_status orfnet_mixing_from_family(const char* family, int n_agents,
                                        double edge_probability, uint64_t seed,
                                        orfnet_mixing** out) {
  return guarded([&] {
    if (!family || !out) return fail(ORFNET_ERR_ARGUMENT, "null argument");
    *out = new orfnet_mixing{orfnet::MixingMatrix::metropolis(
        orfnet::CommGraph::family(family, n_agents, edge_probability, seed))};
    return ORFNET_OK;
  });
}

orfnet_status orfnet_mixing_from_weights(const double* row_major, int n_agents,
                                         orfnet_mixing** out) {
  return guarded([&] {
    if (!row_major || !out || n_agents < 1) {
      return fail(ORFNET_ERR_ARGUMENT, "invalid argument");
    }
    orfnet::Matrix w(n_agents, n_agents);
    for (int i = 0; i < n_agents; ++i) {
      for (int j = 0; j < n_agents; ++j) w(i, j) = row_major[i * n_agents + j];
    }
    *out = new orfnet_mixing{orfnet::MixingMatrix::from_weights(w)};
    return ORFNET_OK;
  });
}

void orfnet_mixing_free(orfnet_mixing* mix) { delete mix; }

int orfnet_mixing_size(const orfnet_mixing* mix) {
  return mix ? mix->mix.size() : 0;
}

orfnet_status orfnet_mixing_weights(const orfnet_mixing* mix, double* out,
                                    size_t capacity) {
  return guarded([&] {
    if (!mix || !out) return fail(ORFNET_ERR_ARGUMENT, "null argument");
    const int n = mix->mix.size();
    if (capacity < static_cast<size_t>(n) * n) {
      return fail(ORFNET_ERR_ARGUMENT, "output buffer too small");
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) out[i * n + j] = mix->mix.weights()(i, j);
    }
    return ORFNET_OK;
  });
}

orfnet_status orfnet_mixing_epsilon(const orfnet_mixing* mix, double* out) {
  if (!mix || !out) return fail(ORFNET_ERR_ARGUMENT, "null argument");
  *out = mix->mix.epsilon();
  return ORFNET_OK;
}

orfnet_status orfnet_transition_deviation(const orfnet_mixing* mix, int t,
                                          double* out) {
  return guarded([&] {
    if (!mix || !out) return fail(ORFNET_ERR_ARGUMENT, "null argument");
    *out = orfnet::transition_deviation(mix->mix, t);
    return ORFNET_OK;
  });
}

orfnet_status orfnet_verify_double_stochastic(const double* row_major,
                                              int rows, int cols, double tol,
                                              int* out) {
  return guarded([&] {
    if (!row_major || !out || rows < 0 || cols < 0) {
      return fail(ORFNET_ERR_ARGUMENT, "invalid argument");
    }
    orfnet::Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) m(i, j) = row_major[i * cols + j];
    }
    *out = orfnet::verify_double_stochastic(m, tol) ? 1 : 0;
    return ORFNET_OK;
  });
}

orfnet_status orfnet_mixing_constants(int n_agents, double epsilon,
                                      double* gamma, double* alpha) {
  return guarded([&] {
    const auto c = orfnet::mixing_constants(n_agents, epsilon);
    if (gamma) *gamma = c.gamma;
    if (alpha) *alpha = c.alpha;
    return ORFNET_OK;
  });
}

orfnet_status orfnet_make_schedule(orfnet_regime regime, int horizon, int dim,
                                   double l0, double gamma, double alpha,
                                   const double* eps_f, orfnet_schedule* out) {
  return guarded([&] {
    if (!out) return fail(ORFNET_ERR_ARGUMENT, "null argument");
    if (regime < ORFNET_CONVEX_LIPSCHITZ || regime > ORFNET_NONCONVEX_SMOOTH) {
      return fail(ORFNET_ERR_ARGUMENT, "unknown regime");
    }
    std::optional<double> eps;
    if (eps_f) eps = *eps_f;
    const auto s = orfnet::make_schedule(static_cast<orfnet::Regime>(regime),
                                         horizon, dim, l0, {gamma, alpha}, eps);
    *out = {s.eta, s.delta, s.beta, s.constants.gamma, s.constants.alpha};
    return ORFNET_OK;
  });
}

orfnet_status orfnet_fit_exponent(const double* horizons, const double* regrets,
                                  size_t n, double* slope) {
  return guarded([&] {
    if (!horizons || !regrets || !slope) {
      return fail(ORFNET_ERR_ARGUMENT, "null argument");
    }
    std::vector<std::pair<double, double>> pairs;
    for (size_t k = 0; k < n; ++k) pairs.emplace_back(horizons[k], regrets[k]);
    *slope = orfnet::fit_exponent(pairs).slope;
    return ORFNET_OK;
  });
}

orfnet_status orfnet_second_moment_bound(int dim, double delta, double l0,
                                         double step_sq, double theta,
                                         double* out) {
  return guarded([&] {
    if (!out) return fail(ORFNET_ERR_ARGUMENT, "null argument");
    *out = orfnet::second_moment_bound_rhs(dim, delta, l0, step_sq, theta);
    return ORFNET_OK;
  });
}

}  // extern "C"
