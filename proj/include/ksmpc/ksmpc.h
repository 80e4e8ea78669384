/* ksmpc: Koopman-operator stochastic MPC toolkit, C API.
 *
 * The shared library wraps the C++ core behind opaque handles and status
 * codes. Pipeline entry points are file based and mirror the CLI
 * subcommands; the controller API embeds the per-tick control law.
 */
#ifndef KSMPC_H
#define KSMPC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define KSMPC_API __declspec(dllexport)
#else
#define KSMPC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ksmpc_status {
  KSMPC_OK = 0,
  KSMPC_ERR_CONFIG = 2,  /* bad configuration or malformed input file */
  KSMPC_ERR_RUNTIME = 3, /* numeric or I/O failure at run time */
  KSMPC_ERR_INVALID_ARG = 4,
} ksmpc_status;

/* message for the most recent failure on this thread */
KSMPC_API const char* ksmpc_last_error(void);
KSMPC_API const char* ksmpc_version(void);

/* ------------------------------------------------------------------ */
/* pipeline commands; every path argument must be non-NULL unless noted */

KSMPC_API ksmpc_status ksmpc_collect(const char* config_path,
                                     const char* out_dataset);

KSMPC_API ksmpc_status ksmpc_fit(const char* config_path,
                                 const char* dataset_path,
                                 const char* out_model);

/* projection_csv may be NULL to skip the 2-D projection export */
KSMPC_API ksmpc_status ksmpc_compute_sets(const char* config_path,
                                          const char* model_path,
                                          const char* out_sets,
                                          const char* projection_csv);

/* controller: "ksmpc", "lsmpc" or "klq"; sets_path may be NULL for the
 * baselines; use_seed != 0 overrides the scenario seed */
KSMPC_API ksmpc_status ksmpc_simulate(const char* config_path,
                                      const char* model_path,
                                      const char* sets_path,
                                      const char* controller, uint64_t seed,
                                      int use_seed, const char* out_runlog);

KSMPC_API ksmpc_status ksmpc_compare(const char* config_path,
                                     const char* model_path,
                                     const char* sets_path,
                                     const char* out_dir);

KSMPC_API ksmpc_status ksmpc_report(const char* config_path,
                                    const char* run_dir, const char* out_dir);

KSMPC_API ksmpc_status ksmpc_validate(const char* config_path,
                                      const char* model_path,
                                      const char* out_json, int trials);

KSMPC_API ksmpc_status ksmpc_track_csv(const char* config_path,
                                       const char* out_csv);

/* ------------------------------------------------------------------ */
/* embedded controller */

typedef struct ksmpc_controller ksmpc_controller;

typedef struct ksmpc_step_info {
  double delta; /* applied steering [rad] */
  int feasible;
  int fallback; /* 1 when the -K z fallback was applied */
  double v0;
  double sigma_lo;
  double sigma_hi;
  int iterations;
  double solve_time_ms;
} ksmpc_step_info;

/* sets_path is required for "ksmpc", ignored for the baselines */
KSMPC_API ksmpc_status ksmpc_controller_create(const char* config_path,
                                               const char* model_path,
                                               const char* sets_path,
                                               const char* controller,
                                               ksmpc_controller** out);

KSMPC_API void ksmpc_controller_free(ksmpc_controller* c);
KSMPC_API ksmpc_status ksmpc_controller_reset(ksmpc_controller* c);
KSMPC_API int ksmpc_controller_horizon(const ksmpc_controller* c);

/* x: the 7 error states [e_y, e_yL, e_y_dot, e_psi, psi_dot, a_y, v_y];
 * phi: horizon-many triples (v_x, c2, c3), phi_len = 3 * horizon */
KSMPC_API ksmpc_status ksmpc_controller_step(ksmpc_controller* c,
                                             const double x[7],
                                             const double* phi, size_t phi_len,
                                             ksmpc_step_info* info);

#ifdef __cplusplus
}
#endif

#endif /* KSMPC_H */
