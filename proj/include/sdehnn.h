#ifndef SDEHNN_H
#define SDEHNN_H

/* C interface to the SDE-regularized heteroscedastic regressor.
 *
 * Usage: create a session, set options (string key/value pairs mirroring the
 * CLI flags), then invoke one of the run functions. All functions returning
 * sdehnn_status report failures through the code and a human-readable
 * message from sdehnn_last_error(). Strings returned through out-parameters
 * are owned by the caller and released with sdehnn_string_free().
 */

#ifdef __cplusplus
extern "C" {
#endif

typedef struct sdehnn_session sdehnn_session;

typedef enum {
    SDEHNN_OK = 0,
    SDEHNN_ERR_CONFIG = 1,    /* invalid option value or combination */
    SDEHNN_ERR_PARSE = 2,     /* malformed CSV/JSON/config input */
    SDEHNN_ERR_IO = 3,        /* unreadable or unwritable file */
    SDEHNN_ERR_DIMENSION = 4, /* tensor shape mismatch */
    SDEHNN_ERR_NUMERIC = 5,   /* non-finite value during computation */
    SDEHNN_ERR_ARGUMENT = 6,  /* null pointer or unknown option key */
    SDEHNN_ERR_INTERNAL = 7,
} sdehnn_status;

sdehnn_session* sdehnn_session_new(void);
void sdehnn_session_free(sdehnn_session* session);

/* Message for the most recent failing call on this session; empty string if
 * none. The pointer stays valid until the next call on the session. */
const char* sdehnn_last_error(const sdehnn_session* session);

/* Known keys (defaults in parentheses): mode (synthetic|csv), data, target,
 * nan-policy (reject|forward-fill), synth-n (1000), hidden (64),
 * init (dense|lstm, per-mode default), window (5), horizon (1),
 * terminal-time (3), step-size (per-mode default 1 or 0.5),
 * solver (standard|bernoulli), mask-p (0.5), epochs (500), batch-size (128),
 * lr (1e-3), weight-decay (1e-3), patience (50), curve-mc-samples (4),
 * warmup-epochs (0), warmup-lr (0 = lr), mc-samples (10), confidence (0.95),
 * seed (0), out-dir (.). */
sdehnn_status sdehnn_set_option(sdehnn_session* session, const char* key, const char* value);

/* Flat `key = value` file using the keys above; '#' starts a comment. */
sdehnn_status sdehnn_load_config_file(sdehnn_session* session, const char* path);

/* Resolved configuration (defaults filled in) as a JSON document. */
sdehnn_status sdehnn_config_json(sdehnn_session* session, char** out_json);

/* Writes <out-dir>/synthetic.csv; returns its path. */
sdehnn_status sdehnn_run_synth(sdehnn_session* session, char** out_path);

/* Trains a model; writes model.json, curve.csv, config.json under out-dir.
 * Returns a JSON summary (paths, best epoch, best validation NLL,
 * parameter count). */
sdehnn_status sdehnn_run_train(sdehnn_session* session, char** out_summary_json);

/* Evaluates a checkpoint on the test split; writes metrics.json,
 * calibration.csv, predictions.csv. Returns the metrics JSON. */
sdehnn_status sdehnn_run_eval(sdehnn_session* session, const char* checkpoint_path,
                              char** out_summary_json);

/* Writes `count` sampled hidden-state trajectories for the test input at
 * `input_index`; returns the CSV path. */
sdehnn_status sdehnn_run_trajectories(sdehnn_session* session, const char* checkpoint_path,
                                      int input_index, int count, char** out_path);

void sdehnn_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* SDEHNN_H */
