#ifndef NEWSLENS_H
#define NEWSLENS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum NlStatus {
  NL_STATUS_OK = 0,
  // NULL pointer, bad UTF-8, out-of-range value or wrong buffer length.
  NL_STATUS_INVALID_ARGUMENT = 1,
  NL_STATUS_IO = 2,
  NL_STATUS_FORMAT = 3,
  NL_STATUS_TENSOR = 4,
  NL_STATUS_DIM_MISMATCH = 5,
  // A Rust panic was caught at the boundary.
  NL_STATUS_INTERNAL = 6,
} NlStatus;

// Frozen encoder with its WordPiece vocabulary.
typedef struct NlEncoder NlEncoder;

// Trained linear classification head.
typedef struct NlHead NlHead;

// Fitted TF-IDF vectorizer.
typedef struct NlTfidf NlTfidf;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until the next failing
// call on the same thread; do not free.
const char *nl_last_error(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must be NULL or a pointer obtained from this library and not yet freed.
void nl_string_free(char *s);

// Number of tokens flagged when highlighting the top `fraction` of `n` scored tokens.
//
// # Safety
// `out` must be a valid pointer.
enum NlStatus nl_highlight_count(double fraction, size_t n, size_t *out);

// Loads a head saved by `newslens linear-eval --head-out`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum NlStatus nl_head_load(const char *path, struct NlHead **out);

// # Safety
// `head` must be NULL or a handle from [`nl_head_load`] not yet freed.
void nl_head_free(struct NlHead *head);

// Input dimension; 0 for NULL.
//
// # Safety
// `head` must be NULL or a live handle.
size_t nl_head_dim(const struct NlHead *head);

// Number of classes; 0 for NULL.
//
// # Safety
// `head` must be NULL or a live handle.
size_t nl_head_classes(const struct NlHead *head);

// Logits of a pooled vector `z` of length `dim`; `out` holds `classes` values.
//
// # Safety
// `z` must point to `z_len` doubles and `out` to `out_len` doubles.
enum NlStatus nl_head_logits(const struct NlHead *head,
                             const double *z,
                             size_t z_len,
                             double *out,
                             size_t out_len);

// CAM scores of a row-major `n_rows × dim` token matrix for `class`; every row counts.
//
// # Safety
// `rows` must point to `n_rows * dim` doubles and `out` to `out_len` doubles.
enum NlStatus nl_cam(const struct NlHead *head,
                     const double *rows,
                     size_t n_rows,
                     size_t dim,
                     size_t class_,
                     double *out,
                     size_t out_len);

// Loads encoder weights and vocabulary. The geometry is inferred from tensor shapes with
// `num_heads` attention heads; `max_length` 0 means `min(512, max positions)`.
//
// # Safety
// `weights` and `vocab` must be NUL-terminated strings and `out` a valid pointer.
enum NlStatus nl_encoder_load(const char *weights,
                              const char *vocab,
                              size_t num_heads,
                              size_t max_length,
                              struct NlEncoder **out);

// # Safety
// `encoder` must be NULL or a handle from [`nl_encoder_load`] not yet freed.
void nl_encoder_free(struct NlEncoder *encoder);

// Hidden size; 0 for NULL.
//
// # Safety
// `encoder` must be NULL or a live handle.
size_t nl_encoder_dim(const struct NlEncoder *encoder);

// Mean of the final hidden states over the content tokens of `text`.
//
// # Safety
// `text` must be a NUL-terminated string and `out` must point to `out_len` doubles.
enum NlStatus nl_encoder_embed(const struct NlEncoder *encoder,
                               const char *text,
                               double *out,
                               size_t out_len);

// CAM explanation of `text` as a JSON object with `tokens`, `scores`, `flags`, `class`,
// `class_source`, `logits`, `fraction` and `count_basis`. A negative `class` explains the
// predicted class. Free `*json` with [`nl_string_free`].
//
// # Safety
// `text` must be a NUL-terminated string and `json` a valid pointer.
enum NlStatus nl_explain_json(const struct NlEncoder *encoder,
                              const struct NlHead *head,
                              const char *text,
                              int64_t class_,
                              double fraction,
                              char **json);

// Loads a vectorizer saved as JSON.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum NlStatus nl_tfidf_load(const char *path, struct NlTfidf **out);

// # Safety
// `model` must be NULL or a handle from [`nl_tfidf_load`] not yet freed.
void nl_tfidf_free(struct NlTfidf *model);

// Vocabulary size; 0 for NULL.
//
// # Safety
// `model` must be NULL or a live handle.
size_t nl_tfidf_dim(const struct NlTfidf *model);

// L2-normalized TF-IDF vector of `text`.
//
// # Safety
// `text` must be a NUL-terminated string and `out` must point to `out_len` doubles.
enum NlStatus nl_tfidf_transform(const struct NlTfidf *model,
                                 const char *text,
                                 double *out,
                                 size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEWSLENS_H */
