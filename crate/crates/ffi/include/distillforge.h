#ifndef DISTILLFORGE_H
#define DISTILLFORGE_H

/* Generated by cbindgen from distillforge-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes for every fallible call.
 */
typedef enum DfStatus {
  DF_STATUS_OK = 0,
  DF_STATUS_NULL_POINTER = 1,
  DF_STATUS_INVALID_ARGUMENT = 2,
  DF_STATUS_SHAPE_MISMATCH = 3,
  DF_STATUS_ZERO_NORM_ROW = 4,
  DF_STATUS_MISSING_KEY = 5,
  DF_STATUS_FORMAT_ERROR = 6,
  DF_STATUS_VERSION_MISMATCH = 7,
  DF_STATUS_NON_FINITE = 8,
  DF_STATUS_IO_ERROR = 9,
  DF_STATUS_CONFIG_ERROR = 10,
  DF_STATUS_PANIC = 11,
} DfStatus;

/**
 * Opaque handle over an embedding file's ids and matrix.
 */
typedef struct DfEmbeddings DfEmbeddings;

/**
 * Opaque dense row-major f64 matrix.
 */
typedef struct DfMatrix DfMatrix;

/**
 * Opaque student network handle.
 */
typedef struct DfNet DfNet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *df_version(void);

/**
 * Message for the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *df_last_error_message(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `ptr` must have been produced by a distillforge function documented to
 * transfer string ownership, and must not be used afterwards.
 */
void df_string_free(char *ptr);

/**
 * Create a matrix from a row-major buffer of `rows * cols` doubles.
 *
 * # Safety
 * `data` must point to at least `rows * cols` readable doubles, and `out`
 * must be a valid pointer.
 */
enum DfStatus df_matrix_new(size_t rows, size_t cols, const double *data, struct DfMatrix **out);

/**
 * # Safety
 * `m` must be a live matrix handle; it must not be used after this call.
 */
void df_matrix_free(struct DfMatrix *m);

/**
 * # Safety
 * `m` and `rows` must be valid pointers.
 */
enum DfStatus df_matrix_rows(const struct DfMatrix *m, size_t *rows);

/**
 * # Safety
 * `m` and `cols` must be valid pointers.
 */
enum DfStatus df_matrix_cols(const struct DfMatrix *m, size_t *cols);

/**
 * Copy the matrix out as row-major doubles. `len` must equal
 * `rows * cols`.
 *
 * # Safety
 * `m` must be a live handle and `out` must point to `len` writable
 * doubles.
 */
enum DfStatus df_matrix_copy_data(const struct DfMatrix *m, double *out, size_t len);

/**
 * Scale every row to unit Euclidean norm into a new matrix.
 *
 * # Safety
 * `m` must be a live handle and `out` a valid pointer.
 */
enum DfStatus df_normalize_rows(const struct DfMatrix *m, struct DfMatrix **out);

/**
 * Fuse per-teacher output matrices (same batch) into the distillation
 * target: per-teacher row normalization, concatenation, renormalization.
 *
 * # Safety
 * `teachers` must point to `k >= 1` live matrix handles; `out` must be a
 * valid pointer.
 */
enum DfStatus df_fuse(const struct DfMatrix *const *teachers, size_t k, struct DfMatrix **out);

/**
 * Number of unordered pairs of distinct text pairs for a batch of `m`:
 * `C(C(m,2), 2)`; zero for m < 3.
 */
uint64_t df_pair_count(uint64_t m);

/**
 * Pointwise alignment loss `sum_x (1 - s_x . t_x)` over unit rows, with
 * the gradient with respect to the student matrix.
 *
 * # Safety
 * `s` and `t` must be live handles; `grad_out` may be null to skip the
 * gradient.
 */
enum DfStatus df_cosine_loss(const struct DfMatrix *s,
                             const struct DfMatrix *t,
                             double *value_out,
                             struct DfMatrix **grad_out);

/**
 * Pair-similarity loss: mean squared difference of the student and
 * teacher gram matrices. Column counts may differ.
 *
 * # Safety
 * As for [`df_cosine_loss`].
 */
enum DfStatus df_sim_loss(const struct DfMatrix *s,
                          const struct DfMatrix *t,
                          double *value_out,
                          struct DfMatrix **grad_out);

/**
 * Relative similarity loss: margin hinge over every teacher-ordered pair
 * of text pairs, divided by `C(C(m,2),2)`. `hinges_out` (optional)
 * receives the number of active hinges.
 *
 * # Safety
 * As for [`df_cosine_loss`]; `hinges_out` may be null.
 */
enum DfStatus df_resim_loss(const struct DfMatrix *s,
                            const struct DfMatrix *t,
                            double margin,
                            double *value_out,
                            struct DfMatrix **grad_out,
                            uint64_t *hinges_out);

/**
 * Create a freshly initialized student network.
 *
 * # Safety
 * `head_dims` must point to 4 readable values; `out` must be valid.
 */
enum DfStatus df_net_new(size_t base_dim,
                         size_t hidden_dim,
                         size_t tail_layers,
                         const size_t *head_dims,
                         size_t vision_dim,
                         uint64_t seed,
                         struct DfNet **out);

/**
 * Restore the network stored in a checkpoint file (for inference).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid.
 */
enum DfStatus df_net_from_checkpoint(const char *path, struct DfNet **out);

/**
 * # Safety
 * `net` must be a live handle; it must not be used after this call.
 */
void df_net_free(struct DfNet *net);

/**
 * Run base features through the text path and one head (0..=3, widest
 * first); the output rows are unit-norm embeddings.
 *
 * # Safety
 * `net` and `base` must be live handles; `out` must be valid.
 */
enum DfStatus df_net_forward_text(const struct DfNet *net,
                                  const struct DfMatrix *base,
                                  uint32_t head_index,
                                  struct DfMatrix **out);

/**
 * Run per-image token matrices through the vision path and one head.
 *
 * # Safety
 * `images` must point to `n_images` live matrix handles.
 */
enum DfStatus df_net_forward_vision(const struct DfNet *net,
                                    const struct DfMatrix *const *images,
                                    size_t n_images,
                                    uint32_t head_index,
                                    struct DfMatrix **out);

/**
 * Read an `EMB1` embedding file.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be valid.
 */
enum DfStatus df_embeddings_read(const char *path, struct DfEmbeddings **out);

/**
 * Write an `EMB1` embedding file (`ids` are NUL-terminated, one per row).
 *
 * # Safety
 * `path` must be NUL-terminated; `ids` must point to `matrix.rows()`
 * valid strings; `matrix` must be a live handle.
 */
enum DfStatus df_embeddings_write(const char *path,
                                  const char *const *ids,
                                  const struct DfMatrix *matrix);

/**
 * # Safety
 * `e` and `count` must be valid pointers.
 */
enum DfStatus df_embeddings_count(const struct DfEmbeddings *e, size_t *count);

/**
 * # Safety
 * `e` and `dim` must be valid pointers.
 */
enum DfStatus df_embeddings_dim(const struct DfEmbeddings *e, size_t *dim);

/**
 * Id of row `index`; the pointer is owned by the handle and valid until
 * the handle is freed.
 *
 * # Safety
 * `e` and `out` must be valid pointers.
 */
enum DfStatus df_embeddings_id(const struct DfEmbeddings *e, size_t index, const char **out);

/**
 * Copy the embedding matrix out of the handle.
 *
 * # Safety
 * `e` and `out` must be valid pointers.
 */
enum DfStatus df_embeddings_matrix(const struct DfEmbeddings *e, struct DfMatrix **out);

/**
 * # Safety
 * `e` must be a live handle; it must not be used after this call.
 */
void df_embeddings_free(struct DfEmbeddings *e);

/**
 * Train one stage from a TOML run configuration. `resume`, `ckpt_out`
 * and `metrics_out` may be null for the config defaults.
 *
 * # Safety
 * All non-null pointers must be NUL-terminated strings.
 */
enum DfStatus df_run_stage(const char *config_path,
                           uint32_t stage,
                           const char *resume,
                           const char *ckpt_out,
                           const char *metrics_out);

/**
 * Evaluate a checkpoint against an eval manifest; on success `csv_out`
 * receives a newly allocated CSV string (release with `df_string_free`).
 *
 * # Safety
 * `ckpt_path` and `manifest_path` must be NUL-terminated; `csv_out` must
 * be a valid pointer.
 */
enum DfStatus df_evaluate(const char *ckpt_path,
                          const char *manifest_path,
                          bool sweep,
                          char **csv_out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* DISTILLFORGE_H */
