/* Copyright 2026 The extralab Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Exercises the C interface from C, linking only the shared library.
 */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "extralab/extralab.h"

#ifndef EXTRALAB_FIXTURE_DIR
#error "EXTRALAB_FIXTURE_DIR must point at tests/fixtures"
#endif

static int g_failures = 0;
static int g_checks = 0;

#define CHECK(cond)                                                       \
  do {                                                                    \
    ++g_checks;                                                           \
    if (!(cond)) {                                                        \
      ++g_failures;                                                       \
      fprintf(stderr, "%s:%d: CHECK failed: %s\n", __FILE__, __LINE__, #cond); \
    }                                                                     \
  } while (0)

#define CHECK_OK(call)                                                                        \
  do {                                                                                        \
    extralab_status st_ = (call);                                                             \
    ++g_checks;                                                                               \
    if (st_ != EXTRALAB_OK) {                                                                 \
      ++g_failures;                                                                           \
      fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #call,                    \
              extralab_status_string(st_), extralab_last_error());                            \
    }                                                                                         \
  } while (0)

static int g_log_lines = 0;
static void count_logs(int level, const char* message, void* user) {
  (void)level;
  (void)message;
  ++*(int*)user;
}

static void test_vocab(void) {
  extralab_vocab* v = NULL;
  size_t n = 0, count = 0;
  int32_t ids[8];
  char* text = NULL;
  CHECK_OK(extralab_vocab_create("{\"kind\": \"decimal_addition\"}", &v));
  CHECK_OK(extralab_vocab_size(v, &n));
  CHECK(n == 15);
  CHECK_OK(extralab_vocab_encode(v, "12+7=", ids, 8, &count));
  CHECK(count == 5);
  CHECK(ids[0] == 4 && ids[1] == 5 && ids[2] == 13 && ids[3] == 10 && ids[4] == 14);
  /* Too small a buffer still reports the full length. */
  CHECK_OK(extralab_vocab_encode(v, "12+7=", ids, 2, &count));
  CHECK(count == 5);
  CHECK_OK(extralab_vocab_encode(v, "12+7=", ids, 8, &count));
  CHECK_OK(extralab_vocab_decode(v, ids, count, &text));
  CHECK(text && strcmp(text, "12+7=") == 0);
  extralab_string_free(text);

  CHECK(extralab_vocab_encode(v, "12*7=", ids, 8, &count) == EXTRALAB_E_INVALID_ARGUMENT);
  CHECK(strstr(extralab_last_error(), "position 2") != NULL);
  extralab_vocab_free(v);

  CHECK(extralab_vocab_create("{\"kind\": \"nbase_addition\", \"base\": 40}", &v) == EXTRALAB_E_INVALID_ARGUMENT);
  CHECK(extralab_vocab_create("{not json", &v) == EXTRALAB_E_INVALID_ARGUMENT);
  CHECK(extralab_vocab_size(NULL, &n) == EXTRALAB_E_INVALID_ARGUMENT);
}

static void test_pipeline(const char* root) {
  char data[512], run[512], ckpt[512], eval_dir[512], test_jsonl[512], probe_dir[512], request[1024];
  char* manifest = NULL;
  char* config = NULL;
  char* summary = NULL;
  char* report = NULL;
  char* table = NULL;
  char* prediction = NULL;
  extralab_model* model = NULL;
  const char* arch = NULL;
  size_t params = 0;
  const char* runs[1];

  snprintf(data, sizeof data, "%s/data", root);
  snprintf(run, sizeof run, "%s/run", root);
  snprintf(ckpt, sizeof ckpt, "%s/run/trial_00/best.ckpt", root);
  snprintf(eval_dir, sizeof eval_dir, "%s/eval", root);
  snprintf(test_jsonl, sizeof test_jsonl, "%s/data/test.jsonl", root);
  snprintf(probe_dir, sizeof probe_dir, "%s/probe", root);

  CHECK_OK(extralab_generate("{\"task\": \"small-digit\", \"seed\": 5, \"n_train\": 300, \"n_val\": 50, \"n_test\": 80}",
                             data, &manifest));
  CHECK(manifest && strstr(manifest, "\"vocabulary_hash\"") != NULL);
  extralab_string_free(manifest);
  CHECK(extralab_generate("{\"task\": \"nbase\", \"base\": 1}", data, NULL) == EXTRALAB_E_INVALID_ARGUMENT);
  CHECK(extralab_generate("{\"task\": \"nope\"}", data, NULL) == EXTRALAB_E_INVALID_ARGUMENT);

  CHECK_OK(extralab_default_config("transformer", &config));
  CHECK(config && strstr(config, "0.98") != NULL);
  extralab_string_free(config);
  CHECK(extralab_default_config("rnn", &config) == EXTRALAB_E_INVALID_ARGUMENT);

  CHECK_OK(extralab_train("{\"model\": {\"arch\": \"mlp\", \"hidden_units\": 32, \"n_fc_layers\": 1},"
                          " \"train\": {\"epochs\": 2, \"batch_size\": 64, \"seed\": 1}, \"n_trials\": 1}",
                          data, run, &summary));
  CHECK(summary && strstr(summary, "\"n_completed\": 1") != NULL);
  extralab_string_free(summary);
  CHECK(g_log_lines > 0);

  CHECK_OK(extralab_model_load(ckpt, &model));
  CHECK_OK(extralab_model_param_count(model, &params));
  CHECK(params == (size_t)(150 * 32 + 32) + (32 * 32 + 32) + (32 * 75 + 75));
  CHECK_OK(extralab_model_architecture(model, &arch));
  CHECK(arch && strcmp(arch, "mlp") == 0);
  CHECK_OK(extralab_model_predict(model, "12+7=", &prediction));
  CHECK(prediction != NULL);
  extralab_string_free(prediction);
  CHECK(extralab_model_predict(model, "12*7=", &prediction) == EXTRALAB_E_INVALID_ARGUMENT);
  extralab_model_free(model);
  CHECK(extralab_model_load("/nonexistent/best.ckpt", &model) == EXTRALAB_E_IO);

  CHECK_OK(extralab_eval(ckpt, test_jsonl, eval_dir, "{\"batch_size\": 32}", &report));
  CHECK(report && strstr(report, "\"em_percent\"") != NULL);
  extralab_string_free(report);

  runs[0] = run;
  CHECK_OK(extralab_report(runs, 1, &table));
  CHECK(table && strncmp(table, "Model", 5) == 0 && strstr(table, "MLP") != NULL);
  extralab_string_free(table);

  snprintf(request, sizeof request, "{\"mode\": \"replay\", \"fixture\": \"%s/probe_six.jsonl\"}", EXTRALAB_FIXTURE_DIR);
  CHECK_OK(extralab_probe(request, probe_dir, &summary));
  CHECK(summary && strstr(summary, "\"correct\": 1") != NULL);
  extralab_string_free(summary);
  CHECK(extralab_probe("{\"mode\": \"carrier-pigeon\"}", probe_dir, NULL) == EXTRALAB_E_INVALID_ARGUMENT);
  CHECK(extralab_train("{\"model\": {\"arch\": \"mlp\"}}", "/nonexistent", run, NULL) == EXTRALAB_E_IO);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: %s SCRATCH_DIR\n", argv[0]);
    return 2;
  }
  CHECK(extralab_version() != NULL && strlen(extralab_version()) > 0);
  CHECK(strcmp(extralab_status_string(EXTRALAB_E_NONFINITE), "non-finite value") == 0);
  extralab_set_log_callback(count_logs, &g_log_lines);
  test_vocab();
  test_pipeline(argv[1]);
  extralab_set_log_callback(NULL, NULL);
  printf("%d checks, %d failures\n", g_checks, g_failures);
  return g_failures == 0 ? 0 : 1;
}
