/* Copyright 2026 The extralab Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the extralab core. All functions return an extralab_status;
 * on failure extralab_last_error() describes the problem (thread-local, valid
 * until the next call on the same thread). Strings returned through char**
 * out-parameters are owned by the caller and released with
 * extralab_string_free(). JSON arguments are UTF-8 documents.
 */
#ifndef EXTRALAB_EXTRALAB_H_
#define EXTRALAB_EXTRALAB_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EXTRALAB_API __declspec(dllexport)
#else
#define EXTRALAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum extralab_status {
  EXTRALAB_OK = 0,
  EXTRALAB_E_INVALID_ARGUMENT = 1, /* bad configuration, flags or inputs */
  EXTRALAB_E_IO = 2,               /* missing or unwritable files */
  EXTRALAB_E_FORMAT = 3,           /* malformed JSON, checkpoints or fixtures */
  EXTRALAB_E_NONFINITE = 4,        /* NaN/Inf during training */
  EXTRALAB_E_NETWORK = 5,          /* completion endpoint failures */
  EXTRALAB_E_RUNTIME = 6           /* anything else */
} extralab_status;

typedef struct extralab_vocab extralab_vocab;
typedef struct extralab_model extralab_model;

/* level: 0 = info, 1 = warning. */
typedef void (*extralab_log_fn)(int level, const char* message, void* user);

EXTRALAB_API const char* extralab_version(void);
EXTRALAB_API const char* extralab_status_string(extralab_status status);
EXTRALAB_API const char* extralab_last_error(void);
EXTRALAB_API void extralab_string_free(char* s);
/* Process-wide progress sink; NULL disables logging. */
EXTRALAB_API void extralab_set_log_callback(extralab_log_fn fn, void* user);

/* Vocabularies. task_json: {"kind": "decimal_addition"|"nbase_addition"|
 * "binop_table", "base": int, "modulus": int}. */
EXTRALAB_API extralab_status extralab_vocab_create(const char* task_json, extralab_vocab** out);
EXTRALAB_API void extralab_vocab_free(extralab_vocab* vocab);
EXTRALAB_API extralab_status extralab_vocab_size(const extralab_vocab* vocab, size_t* out);
/* Writes up to capacity ids; *count receives the full length. */
EXTRALAB_API extralab_status extralab_vocab_encode(const extralab_vocab* vocab, const char* text, int32_t* ids,
                                                   size_t capacity, size_t* count);
EXTRALAB_API extralab_status extralab_vocab_decode(const extralab_vocab* vocab, const int32_t* ids, size_t count,
                                                   char** text);

/* Dataset generation. request_json: {"task": "small-digit"|
 * "larger-small-digit"|"nbase"|"large-digit"|"binop", "seed": int, ...}.
 * Writes split files and spec.json into out_dir; *manifest_json (optional)
 * receives spec.json's content. */
EXTRALAB_API extralab_status extralab_generate(const char* request_json, const char* out_dir, char** manifest_json);

/* Training. config_json is an experiment config (model/train/adam/n_trials/
 * parallel/eval); data_dir holds train/val/test.jsonl and spec.json. */
EXTRALAB_API extralab_status extralab_train(const char* config_json, const char* data_dir, const char* out_dir,
                                            char** summary_json);
/* The fully resolved default experiment config for an architecture. */
EXTRALAB_API extralab_status extralab_default_config(const char* arch, char** config_json);

/* Models. */
EXTRALAB_API extralab_status extralab_model_load(const char* checkpoint, extralab_model** out);
EXTRALAB_API void extralab_model_free(extralab_model* model);
EXTRALAB_API extralab_status extralab_model_param_count(const extralab_model* model, size_t* out);
EXTRALAB_API extralab_status extralab_model_architecture(const extralab_model* model, const char** name);
/* Greedy-decodes one input such as "123+456=". */
EXTRALAB_API extralab_status extralab_model_predict(extralab_model* model, const char* input_text, char** prediction);

/* Evaluation of a checkpoint on a JSONL split; writes plot data to out_dir.
 * options_json may be NULL: {"batch_size", "max_len", "carry_digits",
 * "top_k", "answer_bounds": [lo, hi], "train_square": [lo, hi]}. */
EXTRALAB_API extralab_status extralab_eval(const char* checkpoint, const char* dataset_jsonl, const char* out_dir,
                                           const char* options_json, char** report_json);

/* Table of run summaries (one row per run directory), ordered MLP, Seq2seq,
 * Transformer. */
EXTRALAB_API extralab_status extralab_report(const char* const* run_dirs, size_t n_runs, char** table_text);

/* LLM probing. request_json: {"mode": "live"|"replay", "fixture": path,
 * "endpoint": url, "pairs": int, "max_digits": int, "seed": int,
 * "sampling": {...}, "max_in_flight": int, "requests_per_second": real,
 * "max_attempts": int}. */
EXTRALAB_API extralab_status extralab_probe(const char* request_json, const char* out_dir, char** summary_json);

#ifdef __cplusplus
}
#endif

#endif /* EXTRALAB_EXTRALAB_H_ */
