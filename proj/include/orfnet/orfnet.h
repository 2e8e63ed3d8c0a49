/* C interface to the orfnet library.
 *
 * Every call returns an orfnet_status. On failure, orfnet_last_error()
 * describes the problem; the string belongs to the calling thread and stays
 * valid until its next orfnet call. Handles are opaque and released with the
 * matching _free function. Agent indices are zero-based. */
#ifndef ORFNET_H
#define ORFNET_H

#include <stddef.h>
#include <stdint.h>

#if defined(ORFNET_BUILDING)
#define ORFNET_API __attribute__((visibility("default")))
#else
#define ORFNET_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  ORFNET_OK = 0,
  ORFNET_ERR_CONFIG = 1,
  ORFNET_ERR_VALIDATION = 2,
  ORFNET_ERR_RUNTIME = 3,
  ORFNET_ERR_ARGUMENT = 4
} orfnet_status;

typedef enum {
  ORFNET_CONVEX_LIPSCHITZ = 0,
  ORFNET_CONVEX_SMOOTH = 1,
  ORFNET_NONCONVEX_LIPSCHITZ = 2,
  ORFNET_NONCONVEX_SMOOTH = 3
} orfnet_regime;

typedef struct orfnet_config orfnet_config;
typedef struct orfnet_mixing orfnet_mixing;

typedef struct {
  const char* out_dir; /* NULL -> "out" */
  int workers;         /* <= 0 -> available parallelism */
  int quiet;
} orfnet_run_options;

typedef struct {
  double eta;
  double delta;
  double beta;
  double gamma;
  double alpha;
} orfnet_schedule;

ORFNET_API const char* orfnet_last_error(void);
ORFNET_API const char* orfnet_version(void);
ORFNET_API int orfnet_default_workers(void);

/* configuration */
ORFNET_API orfnet_status orfnet_config_parse(const char* text,
                                             orfnet_config** out);
ORFNET_API orfnet_status orfnet_config_load(const char* path,
                                            orfnet_config** out);
ORFNET_API void orfnet_config_free(orfnet_config* cfg);

/* commands; outputs go to options->out_dir */
ORFNET_API orfnet_status orfnet_cmd_run(const orfnet_config* cfg,
                                        const orfnet_run_options* options);
ORFNET_API orfnet_status orfnet_cmd_compare(const orfnet_config* cfg,
                                            const orfnet_run_options* options);
ORFNET_API orfnet_status orfnet_cmd_sweep(const orfnet_config* cfg,
                                          const orfnet_run_options* options);
ORFNET_API orfnet_status orfnet_cmd_validate(const orfnet_config* cfg,
                                             const orfnet_run_options* options);

/* mixing matrices */
ORFNET_API orfnet_status orfnet_mixing_from_edges(int n_agents,
                                                  const int* edge_pairs,
                                                  size_t n_edges,
                                                  orfnet_mixing** out);
ORFNET_API orfnet_status orfnet_mixing_from_family(const char* family,
                                                   int n_agents,
                                                   double edge_probability,
                                                   uint64_t seed,
                                                   orfnet_mixing** out);
ORFNET_API orfnet_status orfnet_mixing_from_weights(const double* row_major,
                                                    int n_agents,
                                                    orfnet_mixing** out);
ORFNET_API void orfnet_mixing_free(orfnet_mixing* mix);
ORFNET_API int orfnet_mixing_size(const orfnet_mixing* mix);
/* Copies N*N row-major weights; capacity counts doubles. */
ORFNET_API orfnet_status orfnet_mixing_weights(const orfnet_mixing* mix,
                                               double* out, size_t capacity);
ORFNET_API orfnet_status orfnet_mixing_epsilon(const orfnet_mixing* mix,
                                               double* out);
ORFNET_API orfnet_status orfnet_transition_deviation(const orfnet_mixing* mix,
                                                     int t, double* out);

/* formulas */
ORFNET_API orfnet_status orfnet_verify_double_stochastic(
    const double* row_major, int rows, int cols, double tol, int* out);
ORFNET_API orfnet_status orfnet_mixing_constants(int n_agents, double epsilon,
                                                 double* gamma, double* alpha);
/* eps_f may be NULL; it is required for ORFNET_NONCONVEX_LIPSCHITZ only. */
ORFNET_API orfnet_status orfnet_make_schedule(orfnet_regime regime,
                                              int horizon, int dim, double l0,
                                              double gamma, double alpha,
                                              const double* eps_f,
                                              orfnet_schedule* out);
ORFNET_API orfnet_status orfnet_fit_exponent(const double* horizons,
                                             const double* regrets, size_t n,
                                             double* slope);
ORFNET_API orfnet_status orfnet_second_moment_bound(int dim, double delta,
                                                    double l0, double step_sq,
                                                    double theta, double* out);

#ifdef __cplusplus
}
#endif

#endif /* ORFNET_H */
