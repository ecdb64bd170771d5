/* densreg — C API for the density-modulated Gaussian regressor.
 *
 * Everything crosses this boundary as opaque handles, C strings, and status
 * codes. Functions returning densreg_status set a thread-local error message
 * retrievable with densreg_last_error() on any nonzero return. Strings
 * returned through char** are heap-allocated; release them with
 * densreg_string_free().
 */
#ifndef DENSREG_H
#define DENSREG_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum densreg_status {
  DENSREG_OK = 0,
  DENSREG_ERR_INTERNAL = 1,
  DENSREG_ERR_CONFIG = 2,
  DENSREG_ERR_DATA = 3,
  DENSREG_ERR_NUMERIC = 4,
  DENSREG_ERR_IO = 5,
  DENSREG_ERR_INVALID = 6
} densreg_status;

/* Version string, e.g. "densreg 1.0.0 (abc1234)". Static storage. */
const char* densreg_version(void);

/* Message for the calling thread's most recent failure; empty string if none.
 * Valid until the next densreg_* call on the same thread. */
const char* densreg_last_error(void);

void densreg_string_free(char* s);

/* ---- Experiment configuration ------------------------------------------ */

typedef struct densreg_config densreg_config;

/* json_text may be NULL or empty for an all-defaults configuration. Unknown
 * keys are rejected. */
densreg_status densreg_config_create(const char* json_text, densreg_config** out);

/* Override one value by dotted key, e.g. ("train.batch_size", "64") or
 * ("density.kind", "kde"). Values parse as JSON when possible, else as
 * strings. */
densreg_status densreg_config_set(densreg_config* config, const char* dotted_key,
                                  const char* value);

/* Canonical single-line JSON (sorted keys) of defaults + file + overrides. */
densreg_status densreg_config_render(const densreg_config* config, char** out_json);

void densreg_config_destroy(densreg_config* config);

/* Runs one command: "toy", "train", "eval", or "compare". Outputs land under
 * the configured outdir. */
densreg_status densreg_run_command(const char* command, const densreg_config* config);

/* ---- Trained models ----------------------------------------------------- */

typedef struct densreg_model densreg_model;

/* Loads a checkpoint written by the toy/train/compare commands. Handles both
 * single-model and ensemble checkpoints. */
densreg_status densreg_model_load(const char* path, densreg_model** out);

/* Method stored in the checkpoint ("density-regression", "deterministic",
 * "ensemble"). Pointer valid while the model lives. */
const char* densreg_model_method(const densreg_model* model);

/* Scalar parameter count of the deployed predictor. */
size_t densreg_model_param_count(const densreg_model* model);

/* Predictive Gaussian for one input point of dimension dim, in raw target
 * units. mean/variance may each be NULL if not wanted. */
densreg_status densreg_model_predict(const densreg_model* model, const double* x,
                                     size_t dim, double* mean, double* variance);

void densreg_model_destroy(densreg_model* model);

#ifdef __cplusplus
}
#endif

#endif /* DENSREG_H */
