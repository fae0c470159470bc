#ifndef AMPEREAN_H
#define AMPEREAN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AMP_API __declspec(dllexport)
#else
#define AMP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum amp_status {
    AMP_OK = 0,
    AMP_ERR_INVALID_ARGUMENT = 1,
    AMP_ERR_RESOLUTION = 2,
    AMP_ERR_ON_CURVE = 3,
    AMP_ERR_DOMAIN = 4,
    AMP_ERR_SHAPE = 5,
    AMP_ERR_CONFIG = 6,
    AMP_ERR_IO = 7,
    AMP_ERR_INTERNAL = 99
} amp_status;

typedef struct amp_path amp_path;
typedef struct amp_field amp_field;
typedef struct amp_accumulator amp_accumulator;
typedef struct amp_config amp_config;
typedef struct amp_run amp_run;
typedef struct amp_table amp_table;
typedef struct amp_verify amp_verify;

/* Zero h or dt select eps / 6 and eps^2 / 4. */
typedef struct amp_resolution {
    double h;
    double dt;
    double K;
    size_t sub_rows;
    double jitter_x;
    double jitter_y;
} amp_resolution;

AMP_API const char* amp_version(void);
/* Message of the last failed call on this thread; empty if none. */
AMP_API const char* amp_last_error(void);
AMP_API const char* amp_status_name(amp_status s);
AMP_API void amp_set_threads(unsigned n);
AMP_API unsigned amp_threads(void);
AMP_API amp_resolution amp_resolution_default(void);
AMP_API uint64_t amp_derive_seed(uint64_t run_seed, uint64_t index, uint32_t stream);

/* paths */
AMP_API amp_status amp_path_sample(double T, size_t steps, uint64_t seed, amp_path** out);
AMP_API amp_status amp_path_from_points(const double* t, const double* xy, size_t n, amp_path** out);
/* Piece j = 1..2^k of the k-th dyadic split, times shifted to start at 0. */
AMP_API amp_status amp_path_restrict(const amp_path* p, unsigned k, uint64_t j, amp_path** out);
AMP_API size_t amp_path_size(const amp_path* p);
AMP_API amp_status amp_path_point(const amp_path* p, size_t i, double* t, double* x, double* y);
AMP_API amp_status amp_path_write_csv(const amp_path* p, const char* file);
AMP_API void amp_path_free(amp_path* p);

/* fields on a grid covering the loop with an eps-sized margin */
AMP_API amp_status amp_field_winding(const amp_path* p, double h, double margin, amp_field** out);
AMP_API amp_status amp_field_mollified(const amp_path* p, double eps, const amp_resolution* res, amp_field** out);
AMP_API amp_status amp_field_shape(const amp_field* f, size_t* nx, size_t* ny, double* x0, double* y0, double* h);
/* Row-major values, i along x; valid until the field is freed. */
AMP_API const double* amp_field_values(const amp_field* f);
AMP_API amp_status amp_field_inner_product(const amp_field* f, const amp_field* g, double* out);
AMP_API amp_status amp_field_write_text(const amp_field* f, const char* file);
AMP_API void amp_field_free(amp_field* f);

/* estimators; route is "grid", "strat_iterated" or "ito_minus_localtime" */
AMP_API amp_status amp_amperean_self(const amp_path* p, double eps, const amp_resolution* res, double* value, int* warning);
AMP_API amp_status amp_amperean_cross(const amp_path* w, const amp_path* w2, double eps, double eps2, const char* route,
                                      const amp_resolution* res, double* value);
AMP_API amp_status amp_dyadic_decomposition(const amp_path* p, unsigned m, double eps, const amp_resolution* res, double* total,
                                            double* assembled, double* relative_residual);

/* Monte Carlo accumulator */
AMP_API amp_accumulator* amp_accumulator_new(void);
AMP_API void amp_accumulator_add(amp_accumulator* a, double x);
AMP_API amp_status amp_accumulator_merge(amp_accumulator* into, const amp_accumulator* from);
AMP_API amp_status amp_accumulator_stats(const amp_accumulator* a, size_t* n, double* mean, double* variance, double* se);
AMP_API void amp_accumulator_free(amp_accumulator* a);

/* configuration: flat keys, "section.key" */
AMP_API amp_config* amp_config_new(void);
AMP_API amp_status amp_config_set(amp_config* c, const char* key, const char* value);
AMP_API void amp_config_free(amp_config* c);

/* campaigns */
AMP_API size_t amp_campaign_count(void);
AMP_API const char* amp_campaign_name(size_t i);
AMP_API amp_status amp_campaign_run(const char* name, const amp_config* c, amp_run** out);
AMP_API const char* amp_run_summary(const amp_run* r);
AMP_API size_t amp_run_config_count(const amp_run* r);
AMP_API amp_status amp_run_config_entry(const amp_run* r, size_t i, const char** key, const char** value);
AMP_API size_t amp_run_table_count(const amp_run* r);
AMP_API const amp_table* amp_run_table(const amp_run* r, size_t i);
AMP_API size_t amp_run_check_count(const amp_run* r);
AMP_API amp_status amp_run_check(const amp_run* r, size_t i, const char** name, int* pass, const char** detail);
/* Writes manifest.json, CSV tables and plots/ under dir. */
AMP_API amp_status amp_run_write(const amp_run* r, const char* dir, const char* started, double seconds, unsigned threads,
                                 const char* const* argv, size_t argc);
AMP_API void amp_run_free(amp_run* r);

/* tables are owned by their run */
AMP_API const char* amp_table_name(const amp_table* t);
AMP_API size_t amp_table_rows(const amp_table* t);
AMP_API size_t amp_table_columns(const amp_table* t);
AMP_API const char* amp_table_column_name(const amp_table* t, size_t c);
AMP_API amp_status amp_table_real(const amp_table* t, size_t r, size_t c, double* out);
/* Formatted cell; the pointer stays valid until the next call on this thread. */
AMP_API const char* amp_table_cell(const amp_table* t, size_t r, size_t c);
AMP_API amp_status amp_table_write_csv(const amp_table* t, const char* file);

/* spot-check verification of a run directory */
AMP_API amp_status amp_verify_run(const char* dir, double fraction, amp_verify** out);
AMP_API const char* amp_verify_campaign(const amp_verify* v);
AMP_API size_t amp_verify_units(const amp_verify* v);
AMP_API size_t amp_verify_rows(const amp_verify* v);
AMP_API size_t amp_verify_diff_count(const amp_verify* v);
AMP_API const char* amp_verify_diff(const amp_verify* v, size_t i);
AMP_API size_t amp_verify_check_count(const amp_verify* v);
AMP_API amp_status amp_verify_check(const amp_verify* v, size_t i, const char** name, int* pass, const char** detail);
AMP_API void amp_verify_free(amp_verify* v);

#ifdef __cplusplus
}
#endif

#endif
