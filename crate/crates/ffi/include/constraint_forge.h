#ifndef CONSTRAINT_FORGE_H
#define CONSTRAINT_FORGE_H

/* Generated by cbindgen; regenerate by building constraint-forge-ffi. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes for every fallible call.
typedef enum CfStatus {
  CF_STATUS_OK = 0,
  CF_STATUS_NULL_ARGUMENT = 1,
  CF_STATUS_INVALID_UTF8 = 2,
  CF_STATUS_INVALID_RANKING = 3,
  CF_STATUS_MISMATCHED_ITEMS = 4,
  CF_STATUS_TOO_FEW_ITEMS = 5,
  CF_STATUS_INVALID_ARGUMENT = 6,
  CF_STATUS_UNPARSEABLE_VERDICT = 7,
} CfStatus;

// Pairwise judge verdict marker.
typedef enum CfVerdict {
  CF_VERDICT_LEFT = 0,
  CF_VERDICT_RIGHT = 1,
  CF_VERDICT_TIE = 2,
} CfVerdict;

// Opaque ranking handle.
typedef struct CfRanking CfRanking;

// Per-sample log-probabilities for the loss reference.
typedef struct CfLossSample {
  double logp_policy_chosen;
  double logp_ref_chosen;
  double logp_policy_rejected;
  double logp_ref_rejected;
} CfLossSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds a ranking from `len` NUL-terminated UTF-8 items, best first.
// Writes the handle to `out`; free it with [`cf_ranking_free`].
//
// # Safety
// `items` must point to `len` valid C strings and `out` must be a valid
// pointer.
enum CfStatus cf_ranking_new(const char *const *items, uintptr_t len, struct CfRanking **out);

// Releases a ranking created by [`cf_ranking_new`]. Null is a no-op.
//
// # Safety
// `ranking` must be a pointer returned by [`cf_ranking_new`] that has not
// already been freed.
void cf_ranking_free(struct CfRanking *ranking);

// Number of items in a ranking; 0 for null.
//
// # Safety
// `ranking` must be null or a live handle from [`cf_ranking_new`].
uintptr_t cf_ranking_len(const struct CfRanking *ranking);

// Kendall tau rank correlation over two rankings of the same item set.
//
// # Safety
// Both rankings must be live handles and `out` a valid pointer.
enum CfStatus cf_kendall_tau(const struct CfRanking *r1, const struct CfRanking *r2, double *out);

// Fraction of items at identical positions in both rankings.
//
// # Safety
// Both rankings must be live handles and `out` a valid pointer.
enum CfStatus cf_position_consistency(const struct CfRanking *r1,
                                      const struct CfRanking *r2,
                                      double *out);

// Mean DPO loss, mean SFT loss, and their sum over a sample batch.
//
// # Safety
// `samples` must point to `len` samples; the three out-pointers must be
// valid.
enum CfStatus cf_dpo_sft_loss(const struct CfLossSample *samples,
                              uintptr_t len,
                              double beta,
                              double *out_dpo,
                              double *out_sft,
                              double *out_total);

// Largest-remainder proportional allocation of `budget` over `len` stage
// sizes; writes `len` allocations that sum exactly to the budget.
//
// # Safety
// `sizes` and `out_allocations` must each point to `len` elements.
enum CfStatus cf_allocate_replay(const uint64_t *sizes,
                                 uintptr_t len,
                                 uint64_t budget,
                                 uint64_t *out_allocations);

// Parses the last `[[A]]` / `[[B]]` / `[[C]]` marker in a judge response.
//
// # Safety
// `text` must be a valid C string and `out` a valid pointer.
enum CfStatus cf_parse_verdict(const char *text, enum CfVerdict *out);

// Static description of a status code.
const char *cf_status_message(enum CfStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONSTRAINT_FORGE_H */
