#ifndef HEISENBERG_POLYMER_H
#define HEISENBERG_POLYMER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#define HP_OK 0

#define HP_ERR_ARGUMENT 2

#define HP_ERR_SIZE 3

#define HP_ERR_DEGENERATE 4

#define HP_ERR_IO 5

#define HP_ERR_NULL 6

#define HP_ERR_PANIC 7

#define HP_METHOD_EXACT 0

#define HP_METHOD_RK4 1

// Lattice handle.
typedef struct HpLattice HpLattice;

// Polymer coefficient handle.
typedef struct HpPolymer HpPolymer;

// Subset-indexed vector handle (wave function or superset sums).
typedef struct HpState HpState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer
// stays valid until the next `hp_*` call on the same thread.
const char *hp_last_error_message(void);

// Build a rectangular lattice with side lengths `dims[0..n_dims]`.
//
// # Safety
// `dims` must point to `n_dims` readable values; `out` must be writable.
int32_t hp_lattice_new(const uintptr_t *dims,
                       uintptr_t n_dims,
                       bool periodic,
                       struct HpLattice **out);

// Vertex count, or 0 for NULL.
//
// # Safety
// `lat` must be NULL or a live lattice handle.
uintptr_t hp_lattice_n_vertices(const struct HpLattice *lat);

// # Safety
// `lat` must be NULL or a handle from [`hp_lattice_new`] not yet freed.
void hp_lattice_free(struct HpLattice *lat);

// Copy `2^n_vertices` coefficients, indexed by subset bitmask.
//
// # Safety
// `coeffs` must point to `len` readable doubles; `out` must be writable.
int32_t hp_state_from_coeffs(uintptr_t n_vertices,
                             const double *coeffs,
                             uintptr_t len,
                             struct HpState **out);

// Number of coefficients, or 0 for NULL.
//
// # Safety
// `state` must be NULL or a live state handle.
uintptr_t hp_state_len(const struct HpState *state);

// Copy the coefficients into `buf`, which must hold exactly `len` doubles.
//
// # Safety
// `state` must be a live handle; `buf` must point to `len` writable doubles.
int32_t hp_state_copy_coeffs(const struct HpState *state, double *buf, uintptr_t len);

// # Safety
// `state` must be a live handle; `out` must be writable.
int32_t hp_state_total_sum(const struct HpState *state, double *out);

// # Safety
// `state` must be NULL or a state handle not yet freed.
void hp_state_free(struct HpState *state);

// Evolve `state` to time `t` with `HP_METHOD_EXACT` or `HP_METHOD_RK4`.
//
// # Safety
// `lat` and `state` must be live handles; `out` must be writable.
int32_t hp_evolve(const struct HpLattice *lat,
                  const struct HpState *state,
                  double t,
                  int32_t method,
                  double dt,
                  struct HpState **out);

// Superset sums of a normalized state.
//
// # Safety
// `state` must be a live handle; `out` must be writable.
int32_t hp_compute_c(const struct HpState *state, struct HpState **out);

// Polymer coefficients from superset sums.
//
// # Safety
// `c` must be a live handle; `out` must be writable.
int32_t hp_solve_u(const struct HpState *c, struct HpPolymer **out);

// `hp_compute_c` followed by `hp_solve_u`.
//
// # Safety
// `state` must be a live handle; `out` must be writable.
int32_t hp_decompose(const struct HpState *state, struct HpPolymer **out);

// Weight of the subset `mask`: `φ_i` for a singleton, `u(S)` for larger
// sets, 0 for the empty set.
//
// # Safety
// `p` must be a live handle; `out` must be writable.
int32_t hp_polymer_get(const struct HpPolymer *p, uint32_t mask, double *out);

// Copy of `p` with every polymer larger than `k_max` sites zeroed.
//
// # Safety
// `p` must be a live handle; `out` must be writable.
int32_t hp_polymer_truncate(const struct HpPolymer *p, uintptr_t k_max, struct HpPolymer **out);

// Wave function rebuilt from polymer coefficients.
//
// # Safety
// `p` must be a live handle; `out` must be writable.
int32_t hp_reconstruct_f(const struct HpPolymer *p, struct HpState **out);

// # Safety
// `p` must be NULL or a polymer handle not yet freed.
void hp_polymer_free(struct HpPolymer *p);

// Apply `T^{r,s}` to a sector-`r` vector. Entries are ordered by
// increasing bitmask within the sector; `output` must hold `C(N, s)`.
//
// # Safety
// `input` must point to `in_len` readable doubles and `output` to
// `out_len` writable doubles.
int32_t hp_apply_t(uintptr_t n_vertices,
                   uintptr_t r,
                   uintptr_t s,
                   const double *input,
                   uintptr_t in_len,
                   double *output,
                   uintptr_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEISENBERG_POLYMER_H */
