/* Public C interface of the karst shared library.
 *
 * Every function returns a karst_status; anything other than KARST_OK left a
 * thread-local message retrievable with karst_last_error(). Out-parameters
 * are untouched on failure. Strings handed out through char** are allocated
 * by the library and must be released with karst_string_free().
 */

#ifndef KARST_H
#define KARST_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum karst_status {
    KARST_OK = 0,
    KARST_ERR_INVALID_ARGUMENT = 1, /* bad value or shape */
    KARST_ERR_CONFIG = 2,           /* config file missing, malformed, or rejected */
    KARST_ERR_IO = 3,               /* file open/read/write failure or corrupt file */
    KARST_ERR_NUMERIC = 4,          /* numerical breakdown, e.g. diverged training */
    KARST_ERR_VERIFY = 5,           /* verification ran and found a failing property */
    KARST_ERR_INTERNAL = 6
} karst_status;

/* Stable identifier of a status value, e.g. "KARST_ERR_CONFIG". */
const char* karst_status_name(karst_status status);

/* Message of the most recent failure on this thread; "" if none. The buffer
 * stays valid until the next failing call on the same thread. */
const char* karst_last_error(void);

void karst_string_free(char* s);

/* ---- adapter handles ---------------------------------------------------- */

/* A (d_in x d_out) additive weight update held as n_kernels Kronecker
 * factors; freshly created adapters contribute exactly zero. */
typedef struct karst_adapter karst_adapter;

/* m must divide d_in and d_out. Draws the c and a factors from
 * N(0, init_std^2) seeded by `seed`; b starts at zero. */
karst_status karst_adapter_create(int64_t d_in, int64_t d_out, int64_t m, int64_t r,
                                  int64_t n_kernels, double init_std, uint64_t seed,
                                  karst_adapter** out);
void karst_adapter_free(karst_adapter* adapter);

/* y = delta-W^T x via the factored kernels. x_len must be d_in, y_len d_out. */
karst_status karst_adapter_apply(const karst_adapter* adapter, const double* x, size_t x_len,
                                 double* y, size_t y_len);

/* Writes delta-W row-major into out (out_len must be d_in*d_out). */
karst_status karst_adapter_materialize(const karst_adapter* adapter, double* out, size_t out_len);

karst_status karst_adapter_param_count(const karst_adapter* adapter, int64_t* out);

karst_status karst_adapter_save(const karst_adapter* adapter, const char* path);
karst_status karst_adapter_load(const char* path, karst_adapter** out);

/* ---- experiment entry points -------------------------------------------- */

/* Runs the experiment described by the JSON config file and writes
 * metrics.csv, metrics.jsonl and model.karst into its output directory.
 * seed_override, when non-NULL, replaces the config seed. On success
 * *summary (optional) receives a short human-readable report. */
karst_status karst_train_file(const char* config_path, const uint64_t* seed_override,
                              char** summary);

/* Loads a trained model file, folds every layer's adapter and rescale into
 * plain affine weights, and writes the merged model to out_path. */
karst_status karst_merge_file(const char* model_path, const char* out_path);

/* Runs the built-in property checks. *report (optional) receives the result
 * table. Returns KARST_OK when everything holds, KARST_ERR_VERIFY when a
 * property failed (the table is still produced). */
karst_status karst_verify(char** report);

/* Times the apply paths of one adapted layer and reports medians plus
 * multiply counts. *table and *csv are both optional. */
karst_status karst_bench(int64_t d_in, int64_t d_out, int64_t m, int64_t r, int64_t n_kernels,
                         char** table, char** csv);

#ifdef __cplusplus
}
#endif

#endif /* KARST_H */
