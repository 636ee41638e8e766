/*
 * rbmrelax C API.
 *
 * Opaque handles own their data and are released with the matching *_free
 * function (NULL is accepted). Every function returning rr_status leaves a
 * human-readable message in rr_last_error() on failure; the message is
 * thread-local and valid until the next failing call on the same thread.
 *
 * Units are SI throughout (s, 1/s, m, 1/m^3, T^2, Pa s).
 */
#ifndef RBMRELAX_H
#define RBMRELAX_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(RBMRELAX_BUILD)
#    define RR_API __declspec(dllexport)
#  else
#    define RR_API __declspec(dllimport)
#  endif
#else
#  define RR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rr_status {
    RR_OK = 0,
    RR_ERR_INVALID = 1,   /* parameter or config validation */
    RR_ERR_NUMERICAL = 2, /* singular point, no solution, no convergence */
    RR_ERR_ORACLE = 3,    /* an oracle comparison failed; report still filled */
    RR_ERR_IO = 4,
    RR_ERR_PARSE = 5,
    RR_ERR_INTERNAL = 6
} rr_status;

RR_API const char* rr_last_error(void);
RR_API const char* rr_version(void);

/* ---- scenario configuration ------------------------------------------- */

typedef struct rr_scenario rr_scenario;

RR_API rr_status rr_scenario_default(rr_scenario** out);
RR_API rr_status rr_scenario_load(const char* path, rr_scenario** out);
/* base_dir resolves relative file references; may be NULL. */
RR_API rr_status rr_scenario_parse(const char* text, const char* base_dir, rr_scenario** out);
RR_API rr_status rr_scenario_clone(const rr_scenario* s, rr_scenario** out);
/* key is "section.key" as in the config file. */
RR_API rr_status rr_scenario_set(rr_scenario* s, const char* key, const char* value);
/* String getters write a NUL-terminated copy into buf and the full length
 * (without NUL) into *len. A too-small buffer returns RR_ERR_INVALID with
 * *len set, so callers can retry. */
RR_API rr_status rr_scenario_get(const rr_scenario* s, const char* key, char* buf, size_t cap, size_t* len);
RR_API rr_status rr_scenario_serialize(const rr_scenario* s, char* buf, size_t cap, size_t* len);
/* 64 hex characters plus NUL. */
RR_API rr_status rr_scenario_hash(const rr_scenario* s, char out[65]);
RR_API void rr_scenario_free(rr_scenario* s);

/* ---- forward model ---------------------------------------------------- */

typedef struct rr_t1_report {
    double t1;
    double rate_total;
    double rate_bulk;
    double rate_surface;
    double rate_gd;
    double b_perp_sq_surface;
    double b_perp_sq_gd;
    double r_dip;
    double r_vib;
    double r_trans;
    double r_rot;
    double r_total;
    double viscosity;
    double f_r;
    double a_s;
    double x_water;
    double diameter;
    double density;
} rr_t1_report;

RR_API rr_status rr_predict_t1(const rr_scenario* s, rr_t1_report* out);

typedef enum rr_axis { RR_AXIS_GD_DENSITY = 0, RR_AXIS_WATER_FRACTION = 1, RR_AXIS_DIAMETER = 2 } rr_axis;

RR_API rr_status rr_axis_from_name(const char* name, rr_axis* out);
/* rows must hold n entries. */
RR_API rr_status rr_sweep(const rr_scenario* s, rr_axis axis, const double* grid, size_t n, rr_t1_report* rows);
RR_API rr_status rr_sweep_write(const char* path, rr_axis axis, const double* grid, const rr_t1_report* rows, size_t n);

/* ---- spin baths ------------------------------------------------------- */

typedef enum rr_bath_kind { RR_BATH_SURFACE = 0, RR_BATH_GD = 1 } rr_bath_kind;

typedef struct rr_mc_result {
    double mean;
    double std_error;
    double tail_correction;
    uint64_t samples;
    uint64_t seed;
    int tail_warning;
} rr_mc_result;

RR_API rr_status rr_bath_closed_form(const rr_scenario* s, rr_bath_kind kind, double* b_perp_sq);
RR_API rr_status rr_bath_monte_carlo(const rr_scenario* s, rr_bath_kind kind, uint64_t samples, uint64_t seed,
                                     rr_mc_result* out);
RR_API rr_status rr_calibrate_surface_density(const rr_scenario* s, double t1_measured, double* areal_density);
RR_API rr_status rr_fit_density_scale(const rr_scenario* s, const double* n_prepared, const double* t1, size_t n,
                                      double* scale, double* scale_stderr);

typedef struct rr_calibration {
    double molecule_radius;
    double r_vib;
    double kappa_dip;
    double optimal_density;
    double surface_density;
    double surface_tau_c;
    double background_rate;
} rr_calibration;

/* Re-derives the shipped constants starting from `base`. */
RR_API rr_status rr_calibrate(const rr_scenario* base, rr_calibration* out);

/* ---- measurement simulation and fitting -------------------------------- */

typedef struct rr_curve rr_curve;

typedef struct rr_fit {
    double t1;
    double t1_stderr;
    double amplitude;
    double baseline;
    double covariance[9]; /* row-major, order: baseline, amplitude, t1 */
    double reduced_chi_sq;
    int converged;
    int ill_conditioned;
    int weighted;
    int iterations;
    char message[256];
} rr_fit;

/* Dark-time grid and readout parameters come from the scenario; the
 * automatic grid is built around t1_true. */
RR_API rr_status rr_curve_simulate(const rr_scenario* s, double t1_true, uint64_t seed, rr_curve** out);
RR_API rr_status rr_curve_from_points(const double* tau, const double* signal, const double* std_error, size_t n,
                                      rr_curve** out);
RR_API rr_status rr_curve_read(const char* path, rr_curve** out);
RR_API rr_status rr_curve_write(const rr_curve* c, const char* path);
RR_API size_t rr_curve_size(const rr_curve* c);
RR_API rr_status rr_curve_point(const rr_curve* c, size_t i, double* tau, double* signal, double* std_error);
RR_API void rr_curve_free(rr_curve* c);

/* guess may be NULL or point to {baseline, amplitude, t1}. A fit that does
 * not converge returns RR_OK with out->converged == 0. */
RR_API rr_status rr_fit_curve(const rr_curve* c, const double* guess, rr_fit* out);
RR_API rr_status rr_fit_write_json(const rr_fit* fit, const char* path);

typedef struct rr_ensemble rr_ensemble;

typedef struct rr_spot {
    double true_t1;
    double density;
    double diameter;
    uint64_t curve_seed;
    rr_fit fit;
} rr_spot;

typedef struct rr_gaussian {
    double mean;
    double sigma;
    size_t count;
} rr_gaussian;

typedef struct rr_separation {
    double geometric; /* |dmu| / sqrt(sigma_a sigma_b) */
    double pooled;    /* |dmu| / sqrt((sigma_a^2 + sigma_b^2) / 2) */
    double of_means;  /* |dmu| / sqrt(sigma_a^2/n_a + sigma_b^2/n_b) */
} rr_separation;

RR_API rr_status rr_ensemble_run(const rr_scenario* s, size_t n_spots, uint64_t seed, rr_ensemble** out);
RR_API size_t rr_ensemble_size(const rr_ensemble* e);
RR_API double rr_ensemble_nominal_t1(const rr_ensemble* e);
RR_API rr_status rr_ensemble_spot(const rr_ensemble* e, size_t i, rr_spot* out);
RR_API rr_status rr_ensemble_write_curve(const rr_ensemble* e, size_t i, const char* path);
/* Fit JSON including the spot's seed and measurement plan. */
RR_API rr_status rr_ensemble_write_fit(const rr_ensemble* e, size_t i, const char* path);
/* Gaussian summary of the converged fitted T1 values. */
RR_API rr_status rr_ensemble_summary(const rr_ensemble* e, rr_gaussian* out);
RR_API void rr_ensemble_free(rr_ensemble* e);

RR_API rr_status rr_gaussian_summary(const double* samples, size_t n, rr_gaussian* out);
RR_API rr_status rr_separation_compute(const rr_gaussian* a, const rr_gaussian* b, rr_separation* out);

/* ---- sensitivity ------------------------------------------------------ */

typedef struct rr_sensitivity_inputs {
    double contrast;
    double photon_rate;
    double detection_window;
    double acquisition_time;
    double gamma_e;
    double b_perp_sq;
    double r_total;
    double omega0;
} rr_sensitivity_inputs;

typedef struct rr_sensitivity_point {
    double density;
    double r_total;
    double b_perp_sq;
    double delta_r_min;
} rr_sensitivity_point;

typedef struct rr_sensitivity rr_sensitivity;

RR_API rr_status rr_delta_r_min(const rr_sensitivity_inputs* in, double* out);
RR_API rr_status rr_delta_r_oracle(const rr_sensitivity_inputs* in, double perturbation, double* out);
/* grid == NULL selects 40 points per decade over 3 decades centred on the
 * scenario's Gd density. */
RR_API rr_status rr_sensitivity_compute(const rr_scenario* s, const double* grid, size_t n, rr_sensitivity** out);
RR_API size_t rr_sensitivity_size(const rr_sensitivity* c);
RR_API rr_status rr_sensitivity_point_at(const rr_sensitivity* c, size_t i, rr_sensitivity_point* out);
RR_API rr_status rr_sensitivity_minimum(const rr_sensitivity* c, rr_sensitivity_point* grid_min,
                                        rr_sensitivity_point* refined, int* boundary_warning);
RR_API size_t rr_sensitivity_notice_count(const rr_sensitivity* c);
RR_API const char* rr_sensitivity_notice(const rr_sensitivity* c, size_t i);
RR_API rr_status rr_sensitivity_write(const rr_sensitivity* c, const char* path);
RR_API void rr_sensitivity_free(rr_sensitivity* c);

/* ---- validation oracles ----------------------------------------------- */

typedef enum rr_oracle_kind { RR_ORACLE_BATH_MC = 0, RR_ORACLE_SENSITIVITY = 1, RR_ORACLE_QUADRATURE = 2 } rr_oracle_kind;

RR_API rr_status rr_oracle_from_name(const char* name, rr_oracle_kind* out);
/* Writes a multi-line report. Returns RR_ERR_ORACLE when the comparison
 * fails; *passed mirrors the outcome. */
RR_API rr_status rr_oracle_run(const rr_scenario* s, rr_oracle_kind kind, char* report, size_t cap, size_t* len,
                               int* passed);

#ifdef __cplusplus
}
#endif

#endif /* RBMRELAX_H */
