#ifndef SEQRANK_H
#define SEQRANK_H

#pragma once

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SeqrankStatus {
  SEQRANK_STATUS_OK = 0,
  SEQRANK_STATUS_NULL_POINTER = 1,
  SEQRANK_STATUS_INVALID_ARGUMENT = 2,
  SEQRANK_STATUS_NO_VIABLE_SEQUENCE = 3,
  SEQRANK_STATUS_DOMAIN = 4,
  SEQRANK_STATUS_IO = 5,
  SEQRANK_STATUS_FORMAT = 6,
  SEQRANK_STATUS_BUFFER_TOO_SMALL = 7,
  SEQRANK_STATUS_PANIC = 8,
} SeqrankStatus;

typedef enum SeqrankWorkspace {
  SEQRANK_WORKSPACE_CONTAINER = 0,
  SEQRANK_WORKSPACE_SHELF = 1,
} SeqrankWorkspace;

typedef struct SeqrankModel SeqrankModel;

typedef struct SeqrankPlan SeqrankPlan;

typedef struct SeqrankScene SeqrankScene;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *seqrank_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *seqrank_version(void);

void seqrank_string_free(char *s);

/**
 * Parses a scene from its JSON form.
 */
enum SeqrankStatus seqrank_scene_from_json(const char *json, struct SeqrankScene **out);

enum SeqrankStatus seqrank_scene_load(const char *path, struct SeqrankScene **out);

/**
 * Generates a settled scene; `classes` is a comma-separated class list.
 */
enum SeqrankStatus seqrank_scene_generate(const char *classes,
                                          enum SeqrankWorkspace workspace,
                                          uint64_t seed,
                                          struct SeqrankScene **out);

enum SeqrankStatus seqrank_scene_object_count(const struct SeqrankScene *scene, size_t *out);

/**
 * Scene as JSON; release with `seqrank_string_free`.
 */
enum SeqrankStatus seqrank_scene_to_json(const struct SeqrankScene *scene, char **out);

void seqrank_scene_free(struct SeqrankScene *scene);

/**
 * Plans the cheapest removal order. `weights` points at six pose weights or
 * is null for the defaults; `exhaustive` disables all pruning.
 */
enum SeqrankStatus seqrank_plan(const struct SeqrankScene *scene,
                                const double *weights,
                                bool exhaustive,
                                struct SeqrankPlan **out);

enum SeqrankStatus seqrank_plan_best_cost(const struct SeqrankPlan *plan, double *out);

/**
 * Copies the best removal order into `ids`. `len` always receives the
 * sequence length; a short buffer returns `BufferTooSmall` and copies nothing.
 */
enum SeqrankStatus seqrank_plan_best_sequence(const struct SeqrankPlan *plan,
                                              uint32_t *ids,
                                              size_t capacity,
                                              size_t *len);

/**
 * Fraction of tree nodes skipped without simulation.
 */
enum SeqrankStatus seqrank_plan_pruned_fraction(const struct SeqrankPlan *plan, double *out);

/**
 * Full planning report as JSON; release with `seqrank_string_free`.
 */
enum SeqrankStatus seqrank_plan_report_json(const struct SeqrankPlan *plan, char **out);

void seqrank_plan_free(struct SeqrankPlan *plan);

enum SeqrankStatus seqrank_model_load(const char *path, struct SeqrankModel **out);

enum SeqrankStatus seqrank_model_from_json(const char *json, struct SeqrankModel **out);

enum SeqrankStatus seqrank_model_label_count(const struct SeqrankModel *model, size_t *out);

/**
 * Label at `index`; release with `seqrank_string_free`.
 */
enum SeqrankStatus seqrank_model_label(const struct SeqrankModel *model, size_t index, char **out);

/**
 * Predicts a ranking for `features` and writes label indices into `order`,
 * most preferred first. `order` must hold one entry per label.
 */
enum SeqrankStatus seqrank_model_predict(const struct SeqrankModel *model,
                                         const double *features,
                                         size_t feature_len,
                                         size_t *order,
                                         size_t capacity);

void seqrank_model_free(struct SeqrankModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEQRANK_H */
