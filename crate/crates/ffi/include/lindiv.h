#ifndef LINDIV_H
#define LINDIV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Sentinel for "use the library default" in `bfs_cap` arguments.
 */
#define LINDIV_DEFAULT_CAP 0

typedef enum LindivStatus {
  LINDIV_STATUS_OK = 0,
  LINDIV_STATUS_NULL_POINTER = 1,
  LINDIV_STATUS_INVALID_UTF8 = 2,
  LINDIV_STATUS_PARSE = 3,
  LINDIV_STATUS_INVALID_INPUT = 4,
  LINDIV_STATUS_UNSUPPORTED = 5,
  LINDIV_STATUS_BUDGET_EXCEEDED = 6,
  /**
   * The divergence value is infinite; the output is left untouched.
   */
  LINDIV_STATUS_INFINITE = 7,
  LINDIV_STATUS_INTERNAL = 8,
  LINDIV_STATUS_PANIC = 9,
} LindivStatus;

/**
 * Opaque handle to a marked space.
 */
typedef struct LindivFamily LindivFamily;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Build a space from a spec such as `"dl:p=2,q=3"` or `"lamplighter"`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LindivStatus lindiv_family_new(const char *spec, struct LindivFamily **out);

/**
 * # Safety
 * `f` must come from [`lindiv_family_new`] and not be used afterwards.
 */
void lindiv_family_free(struct LindivFamily *f);

/**
 * Canonical spec string of a handle. Free with [`lindiv_string_free`].
 *
 * # Safety
 * `f` must be a live handle and `out` a valid pointer.
 */
enum LindivStatus lindiv_family_spec(const struct LindivFamily *f, char **out);

/**
 * Word norm: closed form where the family has one, BFS otherwise.
 *
 * # Safety
 * `f` must be a live handle, `word` NUL-terminated and `out` valid.
 */
enum LindivStatus lindiv_norm(const struct LindivFamily *f,
                              const char *word,
                              uint64_t bfs_cap,
                              uint64_t *out);

/**
 * Lower bound on the norm that never searches.
 *
 * # Safety
 * As for [`lindiv_norm`].
 */
enum LindivStatus lindiv_certificate(const struct LindivFamily *f, const char *word, uint64_t *out);

/**
 * Witness path for the element `word` spells, as a JSON object.
 * With `verify` set the object carries a verification report.
 *
 * # Safety
 * `f` must be a live handle, `word` NUL-terminated and `out` valid.
 */
enum LindivStatus lindiv_witness_json(const struct LindivFamily *f,
                                      const char *word,
                                      bool verify,
                                      uint64_t bfs_cap,
                                      char **out);

/**
 * Exhaustive `DIV'(n, delta, gamma)` with `delta = delta_num/delta_den` and
 * `gamma = gamma_num/gamma_den`. Returns [`LindivStatus::Infinite`] when
 * some pair has no detour.
 *
 * # Safety
 * `f` must be a live handle and `out` valid.
 */
enum LindivStatus lindiv_divergence(const struct LindivFamily *f,
                                    uint64_t n,
                                    int64_t delta_num,
                                    int64_t delta_den,
                                    int64_t gamma_num,
                                    int64_t gamma_den,
                                    uint64_t bfs_cap,
                                    uint64_t *out);

/**
 * Message for the last failed call on this thread, or null. Owned by the
 * library and valid until the next call on the same thread.
 */
const char *lindiv_last_error(void);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void lindiv_string_free(char *s);

/**
 * Static version string.
 */
const char *lindiv_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LINDIV_H */
