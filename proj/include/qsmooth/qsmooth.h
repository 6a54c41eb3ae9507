/*
 * Copyright 2026 The qsmooth Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to qsmooth: filtering, retrofiltering and smoothing of a
 * two-detector homodyne-monitored degenerate parametric oscillator.
 *
 * Conventions
 *  - Every function returning qs_status leaves a thread-local message for
 *    qs_last_error() on failure.
 *  - 2x2 matrices are row-major double[4]: {xx, xp, px, pp}.
 *  - Angles cross this boundary in degrees.
 *  - Handles are opaque; destroy functions accept NULL.
 */

#ifndef QSMOOTH_QSMOOTH_H
#define QSMOOTH_QSMOOTH_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define QS_API __declspec(dllexport)
#else
#define QS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qs_status {
  QS_OK = 0,
  QS_ERR_INVALID_ARGUMENT = 1,
  QS_ERR_NOT_CONVERGED = 2,
  QS_ERR_SINGULAR = 3,
  QS_ERR_IO = 4,
  QS_ERR_FORMAT = 5,
  QS_ERR_INTERNAL = 6
} qs_status;

QS_API const char* qs_version(void);
QS_API const char* qs_last_error(void);
QS_API const char* qs_status_string(qs_status status);
/* Frees strings returned through char** out-parameters. */
QS_API void qs_string_free(char* s);

/* ---- parameters -------------------------------------------------------- */

typedef struct qs_params {
  double gamma;         /* cavity half-width, rad/s */
  double xi;            /* normalized pump amplitude, [0, 1) */
  double transmittance; /* beam splitter T, [0, 1] */
  double loss_a;        /* path loss to Alice, [0, 1) */
  double loss_b;        /* path loss to Bob, [0, 1) */
  double escape_eff;    /* cavity escape efficiency, (0, 1] */
  double theta_a_deg;
  double theta_b_deg;
  double hbar;
} qs_params;

QS_API void qs_params_default(qs_params* out);
/* Bench values of the reference experiment. */
QS_API qs_status qs_params_paper(qs_params* out);
/* Applies a key=value file on top of *inout. */
QS_API qs_status qs_params_load(const char* path, qs_params* inout);
QS_API qs_status qs_params_set(qs_params* inout, const char* key, const char* value);
QS_API qs_status qs_params_validate(const qs_params* params);
QS_API qs_status qs_efficiencies(const qs_params* params, double* eta_a, double* eta_b);

/* ---- model ------------------------------------------------------------- */

typedef struct qs_model qs_model;

typedef struct qs_matrices {
  double a[4];
  double b[20]; /* 2x10 row-major */
  double c_a[2], c_b[2];
  double d_a[10], d_b[10];
  double q[4];
  double r_a, r_b;
  double s_a[2], s_b[2];
  double hbar;
} qs_matrices;

QS_API qs_status qs_model_create(const qs_params* params, qs_model** out);
/* Effective parameterization by overall detection efficiencies. */
QS_API qs_status qs_model_create_effective(double gamma, double xi, double eta_a, double eta_b,
                                           double theta_a_deg, double theta_b_deg, double hbar,
                                           qs_model** out);
QS_API void qs_model_destroy(qs_model* model);
QS_API qs_status qs_model_matrices(const qs_model* model, qs_matrices* out);
QS_API qs_status qs_model_default_dt(const qs_model* model, double* dt);
QS_API qs_status qs_unconditional_cov(const qs_model* model, double v[4]);

/* ---- steady-state covariances ------------------------------------------ */

typedef struct qs_riccati {
  double v_true[4];
  double v_filt[4];
  double lambda_retro[4];
  double v_smooth[4];
  double v_unc[4];
  double residual_true; /* scaled algebraic residuals */
  double residual_filt;
  double residual_retro;
  long iterations;
  int warnings;
} qs_riccati;

QS_API qs_status qs_solve_riccati(const qs_model* model, int alice_only, qs_riccati* out);

/* ---- metrics ----------------------------------------------------------- */

typedef struct qs_state_metrics {
  double purity;
  double trsd;
  double squeeze;
  double antisqueeze;
  double squeeze_db;
  double antisqueeze_db;
} qs_state_metrics;

typedef struct qs_metrics {
  qs_state_metrics true_state;
  qs_state_metrics filtered;
  qs_state_metrics smoothed;
  double recovery_p;
  double recovery_d;
  double recovery_s;
  double recovery_a;
} qs_metrics;

QS_API qs_status qs_purity(const double v[4], double hbar, double* out);
QS_API qs_status qs_squeezing(const double v[4], double hbar, double* squeeze,
                              double* antisqueeze);
QS_API qs_status qs_theory_metrics(const qs_model* model, qs_metrics* out);

/* ---- records ----------------------------------------------------------- */

typedef struct qs_record qs_record;

/* Simulates the true-state mean and both detector records. dt <= 0 selects
 * the default step, burn_in < 0 the default 10/gamma. */
QS_API qs_status qs_simulate(const qs_model* model, double duration, double dt, uint64_t seed,
                             long burn_in, qs_record** out);
/* y_b may be NULL (Alice's record only). */
QS_API qs_status qs_record_create(double dt, const double* y_a, const double* y_b, size_t n,
                                  uint64_t seed, size_t burn_in, qs_record** out);
QS_API qs_status qs_record_load(const char* path, qs_record** out);
QS_API qs_status qs_record_save(const qs_record* record, const char* path);
QS_API void qs_record_destroy(qs_record* record);
QS_API size_t qs_record_length(const qs_record* record);
QS_API double qs_record_dt(const qs_record* record);
QS_API int qs_record_has_hidden(const qs_record* record);
/* Copies samples; y_b is ignored when NULL or when the record has none. */
QS_API qs_status qs_record_samples(const qs_record* record, double* y_a, double* y_b);
/* Simulated true-state means (length + 1 points, x/p interleaved); fails for
 * records that were not simulated in this process. */
QS_API qs_status qs_record_true_means(const qs_record* record, double* xp);

/* ---- estimation -------------------------------------------------------- */

typedef struct qs_estimate qs_estimate;

typedef enum qs_series {
  QS_SERIES_TRUE = 0,
  QS_SERIES_FILTERED = 1,
  QS_SERIES_SMOOTHED = 2,
  QS_SERIES_RETRO_Z = 3
} qs_series;

/* Filter, retrofilter and smoother over the record; the true-state filter
 * runs as well when the record carries Bob's channel. */
QS_API qs_status qs_estimate_run(const qs_model* model, const qs_record* record,
                                 qs_estimate** out);
QS_API void qs_estimate_destroy(qs_estimate* est);
QS_API size_t qs_estimate_points(const qs_estimate* est);
/* Copies 2 * points doubles (x/p interleaved). */
QS_API qs_status qs_estimate_series(const qs_estimate* est, qs_series which, double* xp);
/* Samples at each end where gain schedules still relax. */
QS_API qs_status qs_estimate_windows(const qs_estimate* est, size_t* head, size_t* tail);
QS_API qs_status qs_estimate_save_csv(const qs_estimate* est, const char* path);

/* ---- points and sweeps ------------------------------------------------- */

typedef struct qs_mc_config {
  size_t records;
  double duration; /* seconds per record */
  double dt;       /* <= 0 selects the default step */
  uint64_t seed;
  long burn_in; /* samples; < 0 selects 10/gamma */
} qs_mc_config;

typedef struct qs_mc_metrics {
  size_t records;
  double v_filt[4], v_filt_stderr[4];
  double v_smooth[4], v_smooth_stderr[4];
  double v_true[4], v_true_stderr[4];
  double smoothed_mean_cov[4], smoothed_mean_cov_stderr[4];
  double mse_filt, mse_filt_stderr;
  double mse_smooth, mse_smooth_stderr;
  double trsd_filt, trsd_filt_stderr;
  double trsd_smooth, trsd_smooth_stderr;
  double purity_filt, purity_smooth;
  double recovery_p, recovery_d, recovery_s, recovery_a;
} qs_mc_metrics;

QS_API void qs_mc_config_default(qs_mc_config* out);

/* Theory always; Monte-Carlo when `mc` is non-NULL. Any output may be NULL. */
QS_API qs_status qs_run_point(const qs_params* params, const qs_mc_config* mc,
                              qs_riccati* sol, qs_metrics* theory, qs_mc_metrics* mc_out);
/* Same, rendered as JSON. */
QS_API qs_status qs_point_json(const qs_params* params, const qs_mc_config* mc, char** json);

typedef enum qs_sweep_kind {
  QS_SWEEP_ETA = 0,
  QS_SWEEP_ANGLES = 1,
  QS_SWEEP_TRUE_SQUEEZE = 2
} qs_sweep_kind;

typedef struct qs_sweep_config {
  qs_params base;
  qs_sweep_kind kind;
  const double* transmittances; /* QS_SWEEP_ETA */
  size_t n_transmittances;
  double theta_a_lo_deg, theta_a_hi_deg, theta_a_step_deg;
  double theta_b_lo_deg, theta_b_hi_deg, theta_b_step_deg;
  int monte_carlo;
  qs_mc_config mc;
  unsigned threads; /* worker threads, 0 = hardware concurrency; default 1 */
} qs_sweep_config;

typedef struct qs_sweep_cell {
  double theta_a_deg, theta_b_deg, transmittance;
  double eta_a, eta_b;
  int ok;
  qs_metrics metrics;
} qs_sweep_cell;

typedef struct qs_sweep qs_sweep;

QS_API void qs_sweep_config_default(qs_sweep_config* out);
QS_API qs_status qs_sweep_run(const qs_sweep_config* config, qs_sweep** out);
QS_API void qs_sweep_destroy(qs_sweep* sweep);
QS_API size_t qs_sweep_cells(const qs_sweep* sweep);
QS_API size_t qs_sweep_failed(const qs_sweep* sweep);
QS_API qs_status qs_sweep_cell_get(const qs_sweep* sweep, size_t index, qs_sweep_cell* out);
/* Optimal curve by metric name (recovery_p, recovery_d, recovery_s,
 * recovery_a; squeeze_t for true-state sweeps). Writes up to `cap` points and
 * the total into *count. */
QS_API qs_status qs_sweep_optimal(const qs_sweep* sweep, const char* metric, double* theta_a_deg,
                                  double* theta_b_deg, double* value, size_t cap, size_t* count);
/* Any path may be NULL to skip that file. */
QS_API qs_status qs_sweep_write(const qs_sweep* sweep, const char* csv_path,
                                const char* optimal_path, const char* json_path,
                                const char* command);

#ifdef __cplusplus
}
#endif

#endif /* QSMOOTH_QSMOOTH_H */
