#ifndef TECHREC_H
#define TECHREC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  TR_STATUS_OK = 0,
  TR_STATUS_NULL_POINTER = 1,
  TR_STATUS_INVALID_ARGUMENT = 2,
  TR_STATUS_IO = 3,
  TR_STATUS_PARSE = 4,
  TR_STATUS_UNKNOWN_USER = 5,
  TR_STATUS_TRAINING = 6,
  TR_STATUS_INTERNAL = 7,
} TrStatus;

typedef enum {
  TR_ALGORITHM_USER_KNN = 0,
  TR_ALGORITHM_ITEM_KNN = 1,
  TR_ALGORITHM_SLOPE_ONE = 2,
  TR_ALGORITHM_MF = 3,
  TR_ALGORITHM_POPULARITY = 4,
} TrAlgorithm;

/**
 * Where a recommendation list came from.
 */
typedef enum {
  TR_PROVENANCE_MODEL = 0,
  TR_PROVENANCE_FALLBACK = 1,
} TrProvenance;

/**
 * Opaque ratings matrix.
 */
typedef struct TrRatings TrRatings;

/**
 * Opaque trained recommender.
 */
typedef struct TrRecommender TrRecommender;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or an empty string.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *tr_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tr_version(void);

/**
 * Loads a `user,item,value` ratings file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
TrStatus tr_ratings_load(const char *path, TrRatings **out);

/**
 * Builds a ratings matrix from `len` parallel (user, item, value) arrays.
 *
 * # Safety
 * Each array must hold `len` readable elements; `out` must be valid.
 */
TrStatus tr_ratings_from_triples(const uint64_t *users,
                                 const uint64_t *items,
                                 const double *values,
                                 size_t len,
                                 TrRatings **out);

/**
 * Writes the user, item and rating counts. Any out pointer may be null.
 *
 * # Safety
 * `ratings` must be a live handle; non-null out pointers must be valid.
 */
TrStatus tr_ratings_counts(const TrRatings *ratings,
                           size_t *n_users,
                           size_t *n_items,
                           size_t *n_ratings);

/**
 * # Safety
 * `ratings` must be null or a handle not yet freed.
 */
void tr_ratings_free(TrRatings *ratings);

/**
 * Trains `algorithm` on `ratings` with default parameters and `seed`.
 *
 * # Safety
 * `ratings` must be a live handle and `out` a valid pointer.
 */
TrStatus tr_recommender_new(const TrRatings *ratings,
                            TrAlgorithm algorithm,
                            uint64_t seed,
                            TrRecommender **out);

/**
 * Fills up to `n` recommendations for `user` into `out_items` and
 * `out_scores` (each with room for `n` entries) and stores the count in
 * `out_len`. With `fallback`, unknown users and empty model lists are
 * served by popularity. `out_provenance` may be null.
 *
 * # Safety
 * `rec` must be a live handle; the buffers must hold `n` elements.
 */
TrStatus tr_recommend(const TrRecommender *rec,
                      uint64_t user,
                      size_t n,
                      bool fallback,
                      uint64_t *out_items,
                      double *out_scores,
                      size_t *out_len,
                      TrProvenance *out_provenance);

/**
 * Predicts the rating of `item` for `user`. `out_has_value` is set to false
 * when the model has no estimate (unknown ids, no neighbors, popularity).
 *
 * # Safety
 * `rec` must be a live handle; the out pointers must be valid.
 */
TrStatus tr_predict(const TrRecommender *rec,
                    uint64_t user,
                    uint64_t item,
                    double *out_score,
                    bool *out_has_value);

/**
 * # Safety
 * `rec` must be null or a handle not yet freed.
 */
void tr_recommender_free(TrRecommender *rec);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TECHREC_H */
