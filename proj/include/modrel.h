/* modrel - modular latent representation toolkit, C API.
 *
 * Opaque handles plus status codes. Every function that can fail returns a
 * modrel_status; MODREL_OK is zero. On failure, modrel_last_error() gives a
 * human-readable message (thread-local, valid until the next failing call on
 * the same thread). Status values double as the CLI exit codes.
 */
#ifndef MODREL_H
#define MODREL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum modrel_status {
  MODREL_OK = 0,
  MODREL_ERR_USAGE = 1,      /* bad argument / misuse of the API */
  MODREL_ERR_CONFIG = 2,     /* unknown key, bad value, config mismatch */
  MODREL_ERR_IO = 3,         /* unreadable or unwritable file, held lock */
  MODREL_ERR_NUMERIC = 4,    /* non-finite value during training */
  MODREL_ERR_ESTIMATION = 5, /* a prior component has no labeled samples */
  MODREL_ERR_NO_PRIORS = 6,  /* eval on a warmup-only checkpoint */
  MODREL_ERR_VERSION = 7     /* checkpoint from a newer format version */
} modrel_status;

typedef struct modrel_config modrel_config;
typedef struct modrel_dataset modrel_dataset;

const char* modrel_version(void);
const char* modrel_last_error(void);

/* configuration ---------------------------------------------------------- */

/* Fresh config with every key at its documented default. */
modrel_status modrel_config_create(modrel_config** out);
/* Parse a `key = value` file; unknown keys are rejected by name. */
modrel_status modrel_config_load(const char* path, modrel_config** out);
modrel_status modrel_config_parse(const char* text, modrel_config** out);
modrel_status modrel_config_set(modrel_config* cfg, const char* key, const char* value);
/* Copies the value into buf (NUL-terminated); fails if buf_len is short. */
modrel_status modrel_config_get(const modrel_config* cfg, const char* key, char* buf, size_t buf_len);
/* 16 hex digits over the canonical serialization; buf_len must be >= 17. */
modrel_status modrel_config_digest(const modrel_config* cfg, char* buf, size_t buf_len);
/* Canonical `key = value` text; free with modrel_string_free. */
modrel_status modrel_config_canonical(const modrel_config* cfg, char** text_out);
void modrel_config_free(modrel_config* cfg);

/* datasets ---------------------------------------------------------------- */

modrel_status modrel_dataset_generate(const modrel_config* cfg, modrel_dataset** out);
modrel_status modrel_dataset_load(const char* dir, modrel_dataset** out);
modrel_status modrel_dataset_save(const modrel_dataset* ds, const char* dir);
int64_t modrel_dataset_count(const modrel_dataset* ds);
/* floats per image (height * width * channels) */
int64_t modrel_dataset_image_size(const modrel_dataset* ds);
int modrel_dataset_factor_count(const modrel_dataset* ds);
modrel_status modrel_dataset_image(const modrel_dataset* ds, int64_t index, float* buf,
                                   size_t buf_len);
modrel_status modrel_dataset_factors(const modrel_dataset* ds, int64_t index, int32_t* buf,
                                     size_t buf_len);
void modrel_dataset_free(modrel_dataset* ds);

/* pipeline ----------------------------------------------------------------
 *
 * These mirror the CLI subcommands. out_dir holds the dataset files,
 * checkpoints, the training log, and reports; a lock file serializes
 * writers.
 */

/* Render the combination grid into out_dir; *count_out gets the record
 * count (may be NULL). */
modrel_status modrel_gen_data(const modrel_config* cfg, const char* out_dir, int64_t* count_out);

/* Run (or resume, when resume_checkpoint is non-NULL) the two-stage
 * schedule. Writes checkpoints and train_log.csv into out_dir. */
modrel_status modrel_train(const modrel_config* cfg, const char* out_dir,
                           const char* resume_checkpoint);

/* Evaluate a checkpoint: relational accuracy plus DCI/MIG/SAP on converted
 * codes. Writes the JSON report to report_path (unless NULL/empty); when
 * json_out is non-NULL it receives the report text (free with
 * modrel_string_free). */
modrel_status modrel_eval(const modrel_config* cfg, const char* checkpoint_path,
                          const char* report_path, char** json_out);

/* Summaries and plot series from a training log CSV. */
modrel_status modrel_report(const modrel_config* cfg, const char* log_csv, const char* out_dir);

void modrel_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* MODREL_H */
