/* kahlerlab C interface.
 *
 * Every function returns a kl_status; on failure the message is available
 * from kl_last_error() until the next call on the same thread. Handles are
 * opaque and owned by the caller, who releases them with the matching
 * *_free function (NULL is accepted). */
#ifndef KAHLERLAB_H
#define KAHLERLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(KL_BUILDING_LIBRARY)
#define KL_API __attribute__((visibility("default")))
#else
#define KL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kl_status {
  KL_OK = 0,
  KL_INVALID_ARGUMENT = 1,
  KL_INVALID_DOMAIN = 2,
  KL_NOT_KAHLER = 3,
  KL_SINGULAR = 4,
  KL_SOLVER = 5,
  KL_TRUNCATION = 6,
  KL_QUADRATURE_BUDGET = 7,
  KL_PRECONDITION = 8,
  KL_IO = 9,
  KL_CONFIG = 10,
  KL_INTERNAL = 99
} kl_status;

typedef struct kl_metric kl_metric;
typedef struct kl_operator kl_operator;
typedef struct kl_spectrum kl_spectrum;
typedef struct kl_config kl_config;
typedef struct kl_report kl_report;

KL_API const char* kl_version(void);
KL_API const char* kl_last_error(void);
KL_API const char* kl_status_name(kl_status status);

/* Scalars */
KL_API kl_status kl_q_from_epsilon(double epsilon0, double* q);
KL_API kl_status kl_r_schedule(double t, double horizon, double beta, double* r);
/* abc and errors receive A, B, C and their quadrature error estimates. */
KL_API kl_status kl_davies(double beta, double tol, double abc[3], double errors[3]);
/* values receives the integrals of r'/r^2, (r-2)^2/(r-1) and (r-1)/r^2 on [0, T). */
KL_API kl_status kl_schedule_integrals(double horizon, double beta, double values[3]);

/* Metrics: family is "flat", "product_collapse", "potential_pinch" or "scaling". */
KL_API kl_status kl_metric_create(int dim, int resolution, const char* family, double t,
                                  int fiber_dims, kl_metric** out);
KL_API void kl_metric_free(kl_metric* metric);
KL_API kl_status kl_metric_node_count(const kl_metric* metric, size_t* count);
/* volume V, intersection number I, min of the positivity floor */
KL_API kl_status kl_metric_info(const kl_metric* metric, double* volume, double* intersection,
                                double* gamma_min);
KL_API kl_status kl_metric_write_csv(const kl_metric* metric, const char* path);

/* Operators */
KL_API kl_status kl_operator_create(const kl_metric* metric, kl_operator** out);
KL_API void kl_operator_free(kl_operator* op);
KL_API kl_status kl_operator_size(const kl_operator* op, size_t* size);
/* values must hold kl_operator_size entries; written with zero mean. */
KL_API kl_status kl_green_function(const kl_operator* op, size_t source, double* values);
/* max |L G - target| and |mean G| for the Green function at source */
KL_API kl_status kl_green_residual(const kl_operator* op, size_t source, double* equation,
                                   double* mean);

/* Spectra: k = 0 requests the full spectrum. */
KL_API kl_status kl_spectrum_compute(const kl_operator* op, int k, double tol,
                                     int force_iterative, uint64_t seed, kl_spectrum** out);
KL_API void kl_spectrum_free(kl_spectrum* spectrum);
KL_API kl_status kl_spectrum_count(const kl_spectrum* spectrum, int* count);
/* Copies min(count, capacity) eigenvalues. */
KL_API kl_status kl_spectrum_eigenvalues(const kl_spectrum* spectrum, double* out,
                                         size_t capacity);
KL_API kl_status kl_spectrum_write_csv(const kl_spectrum* spectrum, const char* path);
KL_API kl_status kl_heat_kernel(const kl_spectrum* spectrum, size_t x, size_t y, double t,
                                double* value, double* tail_bound);
KL_API kl_status kl_heat_min_time(const kl_spectrum* spectrum, size_t x, size_t y,
                                  double* t_min);

/* Sweep configuration, keys are "section.key" */
KL_API kl_status kl_config_create(kl_config** out);
KL_API kl_status kl_config_load(const char* path, kl_config** out);
KL_API void kl_config_free(kl_config* config);
KL_API kl_status kl_config_set(kl_config* config, const char* key, const char* value);
KL_API kl_status kl_config_validate(const kl_config* config);
/* Writes a NUL-terminated string; needed receives the full length + 1. */
KL_API kl_status kl_config_hash(const kl_config* config, char* buffer, size_t capacity,
                                size_t* needed);
KL_API kl_status kl_config_canonical(const kl_config* config, char* buffer, size_t capacity,
                                     size_t* needed);

/* Sweeps */
KL_API kl_status kl_sweep_run(const kl_config* config, kl_report** out);
KL_API void kl_report_free(kl_report* report);
KL_API kl_status kl_report_write(const kl_report* report, const char* directory);
KL_API kl_status kl_report_all_passed(const kl_report* report, int* passed);
KL_API kl_status kl_report_member_count(const kl_report* report, size_t* count);
/* error is NULL for members that succeeded; strings live as long as the report */
KL_API kl_status kl_report_member(const kl_report* report, size_t index, double* t, int* ok,
                                  const char** error);
KL_API kl_status kl_report_verdict_count(const kl_report* report, size_t* count);
KL_API kl_status kl_report_verdict(const kl_report* report, size_t index, const char** check,
                                   int* uniform, double* max, double* median, double* min);

#ifdef __cplusplus
}
#endif

#endif
