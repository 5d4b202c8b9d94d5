#ifndef JETVAR_H
#define JETVAR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum JvStatus {
  JV_STATUS_OK = 0,
  JV_STATUS_NULL_POINTER = 1,
  JV_STATUS_INVALID_ARGUMENT = 2,
  JV_STATUS_CONFIG = 3,
  JV_STATUS_NUMERICAL = 4,
  JV_STATUS_BUFFER_TOO_SMALL = 5,
  JV_STATUS_NOT_RUN = 6,
  JV_STATUS_UNAVAILABLE = 7,
  JV_STATUS_PANIC = 8,
} JvStatus;

// Opaque run handle.
typedef struct JvRun JvRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *jv_version(void);

// Message of the last failure on this thread, or NULL. Valid until the
// next failing call.
const char *jv_last_error(void);

// Parses a JSON run configuration into a new handle stored in `*out`.
//
// # Safety
// `config_json` must be a NUL-terminated string; `out` must be writable.
enum JvStatus jv_run_new(const char *config_json, struct JvRun **out);

// Releases a handle. NULL is ignored.
//
// # Safety
// `h` must come from `jv_run_new` and not be used afterwards.
void jv_run_free(struct JvRun *h);

// Marches the configured problem; `doubled` also marches `v`.
//
// # Safety
// `h` must be a live handle.
enum JvStatus jv_run_march(struct JvRun *h, bool doubled);

// Stored rows, columns per row and fields per node of the last march.
//
// # Safety
// `h` must be a live handle; output pointers may be NULL.
enum JvStatus jv_run_shape(const struct JvRun *h, size_t *rows, size_t *columns, size_t *fields);

// Copies `q` (row-major `[row][column][field]`) into `buf`. `*written`
// receives the required length even when the buffer is too small.
//
// # Safety
// `buf` must hold `len` doubles; `written` may be NULL.
enum JvStatus jv_run_copy_q(const struct JvRun *h, double *buf, size_t len, size_t *written);

// Copies `v` after a doubled march; `Unavailable` otherwise.
//
// # Safety
// As for `jv_run_copy_q`.
enum JvStatus jv_run_copy_v(const struct JvRun *h, double *buf, size_t len, size_t *written);

// Final-row `L²` error against the closed-form solution.
//
// # Safety
// `h` must be a live handle and `out` writable.
enum JvStatus jv_run_final_error(const struct JvRun *h, double *out);

// The configured residual of the initial-data sections at `(t, x)`.
//
// # Safety
// `buf` must hold `len` doubles; `written` may be NULL.
enum JvStatus jv_run_residual(const struct JvRun *h,
                              double t,
                              double x,
                              double *buf,
                              size_t len,
                              size_t *written);

// Runs every invariant suite; `*failed` receives the number of failures.
//
// # Safety
// `failed` must be writable.
enum JvStatus jv_check(uint64_t seed, size_t *failed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JETVAR_H */
