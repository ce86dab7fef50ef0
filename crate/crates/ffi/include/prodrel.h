#ifndef PRODREL_H
#define PRODREL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result codes.
typedef enum PrStatus {
  PR_STATUS_OK = 0,
  PR_STATUS_NULL_POINTER = -1,
  PR_STATUS_INVALID_UTF8 = -2,
  PR_STATUS_PARSE = -3,
  PR_STATUS_INPUT = -4,
  PR_STATUS_CAPACITY = -5,
  // A precondition, validity or feasibility check failed.
  PR_STATUS_CHECK = -6,
  PR_STATUS_PANIC = -255,
} PrStatus;

// Outcome of an exact LP solve.
typedef struct PrLpResult PrLpResult;

// An H-polyhedron `{x : Ax <= b, Cx == d}` over named variables.
typedef struct PrPoly PrPoly;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Free with
// `pr_string_free`.
char *pr_last_error(void);

// # Safety
// `s` must be NULL or a string returned by this library, not yet freed.
void pr_string_free(char *s);

// Library version, static; do not free.
const char *pr_version(void);

// Parses the text format: a `vars:` header, then rows `c1 … cn <= b` or
// `c1 … cn == b`.
//
// # Safety
// `src` must be a NUL-terminated string; `out` must be writable.
enum PrStatus pr_poly_parse(const char *src, struct PrPoly **out);

// # Safety
// `p` must be NULL or a handle from this library, not yet freed.
void pr_poly_free(struct PrPoly *p);

// # Safety
// `p` must be a live handle; `out` must be writable.
enum PrStatus pr_poly_dim(const struct PrPoly *p, size_t *out);

// # Safety
// `p` must be a live handle; `out` must be writable.
enum PrStatus pr_poly_num_rows(const struct PrPoly *p, size_t *out);

// The polyhedron in the text format accepted by `pr_poly_parse`.
//
// # Safety
// `p` must be a live handle; `out` must be writable.
enum PrStatus pr_poly_to_string(const struct PrPoly *p, char **out);

// Whether `inner ⊆ outer` (same variables, same order).
//
// # Safety
// Both handles must be live; `out` must be writable.
enum PrStatus pr_poly_contains(const struct PrPoly *outer, const struct PrPoly *inner, bool *out);

// Projection onto the space-separated variables `keep`.
//
// # Safety
// `p` must be a live handle, `keep` NUL-terminated, `out` writable.
enum PrStatus pr_poly_project(const struct PrPoly *p, const char *keep, struct PrPoly **out);

// Level-`level` Sherali-Adams closure with respect to the space-separated
// 0/1 variables `integer_vars`, projected back to the original variables.
//
// # Safety
// `p` must be a live handle, `integer_vars` NUL-terminated, `out` writable.
enum PrStatus pr_sa_closure(const struct PrPoly *p,
                            const char *integer_vars,
                            size_t level,
                            struct PrPoly **out);

// Optimizes the space-separated rational `objective` over `p`;
// `maximize` selects the sense.
//
// # Safety
// `p` must be a live handle, `objective` NUL-terminated, `out` writable.
enum PrStatus pr_lp_solve(const struct PrPoly *p,
                          const char *objective,
                          bool maximize,
                          struct PrLpResult **out);

// # Safety
// `r` must be NULL or a handle from this library, not yet freed.
void pr_lp_free(struct PrLpResult *r);

// 0 optimal, 1 infeasible, 2 unbounded.
//
// # Safety
// `r` must be a live handle; `out` must be writable.
enum PrStatus pr_lp_status(const struct PrLpResult *r, int32_t *out);

// Optimal value; an input error unless the status is optimal.
//
// # Safety
// `r` must be a live handle; `out` must be writable.
enum PrStatus pr_lp_objective(const struct PrLpResult *r, char **out);

// Optimal or feasible point, when there is one.
//
// # Safety
// `r` must be a live handle; `out` must be writable.
enum PrStatus pr_lp_point(const struct PrLpResult *r, char **out);

// Dual row multipliers at an optimum, row multipliers proving
// infeasibility, or an improving ray.
//
// # Safety
// `r` must be a live handle; `out` must be writable.
enum PrStatus pr_lp_certificate(const struct PrLpResult *r, char **out);

// Exact fractional cost and gap ratio of the facility location family
// for `from ≤ n ≤ to`, as CSV `n,frac_cost,ratio`. `first_above_one`
// receives the first `n` with ratio above 1, or 0.
//
// # Safety
// `out` and `first_above_one` must be writable.
enum PrStatus pr_cfl_gap_table(size_t from, size_t to, char **out, size_t *first_above_one);

// Runs every pair check for core members `l`, `lp` (1-based sets such as
// `"{6,7,8,9,10}"`) at size `n`. `passed` receives the verdict and
// `report` the JSON report.
//
// # Safety
// `l` and `lp` must be NUL-terminated; `passed` and `report` writable.
enum PrStatus pr_cfl_verify_pair(size_t n,
                                 const char *l,
                                 const char *lp,
                                 uint64_t seed,
                                 bool *passed,
                                 char **report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PRODREL_H */
