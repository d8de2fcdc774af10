/* Copyright (C) 2026 The designdit Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to libdesigndit. Every call returns a ddt_status; on failure the
 * message is available from ddt_last_error() until the next call on the same
 * thread. Strings returned through char** are owned by the caller and released
 * with ddt_string_free(). Configs are passed as JSON text (see ddt_config_resolve).
 */
#ifndef DESIGNDIT_H
#define DESIGNDIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(DDT_BUILDING_LIBRARY)
#define DDT_API __attribute__((visibility("default")))
#else
#define DDT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ddt_status {
    DDT_OK = 0,
    DDT_ERR_INVALID_ARGUMENT = 1,
    DDT_ERR_TOO_MANY_ELEMENTS = 2,
    DDT_ERR_DESCRIPTION_TOO_LONG = 3,
    DDT_ERR_DEGENERATE_BOX = 4,
    DDT_ERR_OUT_OF_RANGE = 5,
    DDT_ERR_EMPTY_TEXT = 6,
    DDT_ERR_PLACEMENT_OUT_OF_BOUNDS = 7,
    DDT_ERR_DIMENSION_MISMATCH = 8,
    DDT_ERR_UNKNOWN_REGION = 9,
    DDT_ERR_SHAPE_MISMATCH = 10,
    DDT_ERR_NON_FINITE_LOSS = 11,
    DDT_ERR_PLACEMENT_FAILED = 12,
    DDT_ERR_UNSUPPORTED_GLYPH = 13,
    DDT_ERR_SCHEMA_VIOLATION = 14,
    DDT_ERR_UNKNOWN_COLOR_WORD = 15,
    DDT_ERR_IO = 16,
    DDT_ERR_INVALID_CONFIG = 17,
    DDT_ERR_INTERRUPTED = 18,
    DDT_ERR_INTERNAL = 99
} ddt_status;

typedef struct ddt_sample ddt_sample;
typedef struct ddt_model ddt_model;

DDT_API const char* ddt_last_error(void);
DDT_API const char* ddt_version(void);
DDT_API void ddt_string_free(char* s);

/* Defaults, then the optional JSON file, then "a.b=value" overrides in order.
 * Writes the fully resolved config as JSON. */
DDT_API ddt_status ddt_config_resolve(const char* config_path, const char* const* overrides, size_t n_overrides,
                                      char** out_json);

/* Applies overrides to an existing JSON config and validates the result. */
DDT_API ddt_status ddt_config_apply(const char* config_json, const char* const* overrides, size_t n_overrides,
                                    char** out_json);

/* Reads an integer config value by dotted key, e.g. "sampling.seed". */
DDT_API ddt_status ddt_config_get_int(const char* config_json, const char* key, int64_t* out);

/* Writes out_dir/sample_00000 ... using the dataset section of the config.
 * count < 0 uses dataset.count. */
DDT_API ddt_status ddt_dataset_generate(const char* config_json, const char* out_dir, int count, int jobs);

/* Accepts a sample directory or the path of its manifest.json. */
DDT_API ddt_status ddt_sample_load(const char* path, ddt_sample** out);
DDT_API void ddt_sample_free(ddt_sample* sample);

/* Token budget and segment layout of the sequence the model would see. */
DDT_API ddt_status ddt_sample_inspect(const ddt_sample* sample, const char* config_json, char** out_json);

/* Binary PGM of the attention mask; layout_mask / subject_mask select the ablations. */
DDT_API ddt_status ddt_mask_dump(const ddt_sample* sample, const char* config_json, int layout_mask, int subject_mask,
                                 const char* out_pgm);

/* Called after every optimizer step; a non-zero return stops training with
 * DDT_ERR_INTERRUPTED after the checkpoint is written. */
typedef int (*ddt_progress_fn)(uint64_t step, double loss, double wallclock_ms, void* user);

/* Trains on every sample under data_dir until training.steps and writes the
 * checkpoint. With resume_ckpt the parameters, optimizer state and step counter are
 * restored first. log_path (optional) receives one JSON record per step. */
DDT_API ddt_status ddt_train(const char* config_json, const char* data_dir, const char* out_ckpt,
                             const char* resume_ckpt, const char* log_path, ddt_progress_fn progress, void* user);

DDT_API ddt_status ddt_model_load(const char* ckpt_path, ddt_model** out);
DDT_API void ddt_model_free(ddt_model* model);
/* Resolved config stored in the checkpoint. */
DDT_API ddt_status ddt_model_config(const ddt_model* model, char** out_json);

/* Euler sampling of the sample's conditions; writes an RGBA PNG. */
DDT_API ddt_status ddt_model_sample(const ddt_model* model, const ddt_sample* sample, uint64_t seed, int steps,
                                    const char* out_png);

/* Metric report for a generated PNG. detections_path may be NULL, in which case the
 * sample's own text annotations are used as exact detections. out_report may be NULL. */
DDT_API ddt_status ddt_evaluate(const ddt_sample* sample, const char* generated_png, const char* detections_path,
                                const char* out_report, char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* DESIGNDIT_H */
