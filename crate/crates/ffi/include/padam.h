#ifndef PADAM_H
#define PADAM_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PadamStatus {
  PADAM_STATUS_OK = 0,
  PADAM_STATUS_NULL_POINTER = 1,
  PADAM_STATUS_INVALID_UTF8 = 2,
  PADAM_STATUS_SHAPE_MISMATCH = 3,
  PADAM_STATUS_NON_FINITE = 4,
  PADAM_STATUS_INVALID_HYPERPARAMETER = 5,
  PADAM_STATUS_UNKNOWN_OPTIMIZER = 6,
  PADAM_STATUS_INVALID_ARGUMENT = 7,
  PADAM_STATUS_CONFIG = 8,
  PADAM_STATUS_DIVERGED = 9,
  PADAM_STATUS_IO = 10,
  PADAM_STATUS_PANIC = 11,
} PadamStatus;

/**
 * Opaque optimizer: an update rule plus resolved hyperparameters.
 */
typedef struct PadamOptimizer PadamOptimizer;

/**
 * Opaque per-buffer optimizer state (moments or velocity, and step count).
 */
typedef struct PadamState PadamState;

/**
 * Hyperparameters as resolved for an optimizer handle.
 */
typedef struct PadamHyperParams {
  double alpha0;
  double beta1;
  double beta2;
  double p;
  double epsilon;
  double weight_decay;
  double momentum;
} PadamHyperParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Owned by the
 * library; valid until the next call on the same thread.
 */
const char *padam_last_error(void);

/**
 * Library version, static.
 */
const char *padam_version(void);

/**
 * Frees a string returned by this library. Null is a no-op.
 */
void padam_string_free(char *s);

/**
 * Creates an optimizer. `name` is one of `padam`, `adam`, `amsgrad`, `sgd`.
 * `overrides_json` may be null, or a JSON object with any of `alpha0`,
 * `beta1`, `beta2`, `p`, `epsilon`, `weight_decay`, `momentum`; unset fields
 * take the optimizer's presets.
 */
enum PadamStatus padam_optimizer_new(const char *name,
                                     const char *overrides_json,
                                     struct PadamOptimizer **out);

/**
 * Releases an optimizer. Null is a no-op.
 */
void padam_optimizer_free(struct PadamOptimizer *opt);

enum PadamStatus padam_optimizer_hyperparams(const struct PadamOptimizer *opt,
                                             struct PadamHyperParams *out);

/**
 * Exponent actually used in the denominator: `p` for Padam, 0.5 for Adam
 * and Amsgrad, 0 for SGD.
 */
enum PadamStatus padam_optimizer_effective_p(const struct PadamOptimizer *opt, double *out);

/**
 * Changes `p` in place, e.g. between epochs of a p schedule.
 */
enum PadamStatus padam_optimizer_set_p(struct PadamOptimizer *opt, double p);

/**
 * Creates zeroed state for a flat buffer of `len` parameters.
 */
enum PadamStatus padam_state_new(const struct PadamOptimizer *opt,
                                 size_t len,
                                 struct PadamState **out);

/**
 * Releases state. Null is a no-op.
 */
void padam_state_free(struct PadamState *state);

/**
 * Number of steps taken with this state.
 */
enum PadamStatus padam_state_steps(const struct PadamState *state, uint64_t *out);

/**
 * One update of `params[0..len]` in place, using `grads[0..len]` and step
 * size `lr`. On error neither `params` nor `state` is modified.
 */
enum PadamStatus padam_step(const struct PadamOptimizer *opt,
                            struct PadamState *state,
                            double *params,
                            const double *grads,
                            size_t len,
                            double lr);

/**
 * Step-decay learning rate at 0-based `epoch`.
 */
enum PadamStatus padam_lr_at(double base,
                             double factor,
                             const size_t *milestones,
                             size_t n_milestones,
                             size_t epoch,
                             double *out);

/**
 * `p` at 0-based `epoch` for a schedule given as JSON, e.g.
 * `{"mode": "step_decay", "p_start": 0.25, "p_end": 0.0625, "factor": 0.5, "milestones": [10, 20]}`.
 */
enum PadamStatus padam_p_at(const char *schedule_json,
                            size_t epoch,
                            double *out);

/**
 * Runs one trial described by a JSON trial config (same format as the CLI's
 * `--config`). If `report_out` is non-null it receives a JSON report with
 * `run_id`, `run_dir`, `metrics_path`, `status` and `rows`, also on
 * divergence, in which case the status is `PADAM_STATUS_DIVERGED`.
 */
enum PadamStatus padam_run_trial_json(const char *config_json, char **report_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PADAM_H */
