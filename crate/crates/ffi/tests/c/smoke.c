#include <math.h>
#include <stdio.h>
#include <string.h>

#include "activescore.h"

#define CHECK(expr)                                                          \
  do {                                                                       \
    AsStatus s_ = (expr);                                                    \
    if (s_ != AS_STATUS_OK) {                                                \
      const char *m_ = as_last_error_message();                              \
      fprintf(stderr, "%s:%d: %s -> %d (%s)\n", __FILE__, __LINE__, #expr,   \
              (int)s_, m_ ? m_ : "no message");                              \
      return 1;                                                              \
    }                                                                        \
  } while (0)

int main(int argc, char **argv) {
  if (argc != 2) {
    fprintf(stderr, "usage: smoke <out-dir>\n");
    return 2;
  }
  const char *dir = argv[1];

  uint32_t human[] = {0, 1, 2, 2};
  uint32_t machine[] = {0, 2, 2, 1};
  AsAgreement a;
  CHECK(as_agreement(human, machine, 4, 3, &a));
  if (fabs(a.qwk - 7.0 / 11.0) > 1e-12 || fabs(a.kappa - 0.2) > 1e-12 || a.exact != 50.0) {
    fprintf(stderr, "agreement mismatch\n");
    return 1;
  }
  if (as_agreement(human, machine, 4, 2, &a) != AS_STATUS_INVALID_ARGUMENT ||
      as_last_error_message() == NULL) {
    fprintf(stderr, "expected invalid argument\n");
    return 1;
  }

  AsSyntheticSpec spec = {6, 3, 40, 3.0, 1.0};
  AsPool *pool = NULL, *val = NULL, *rest = NULL;
  CHECK(as_pool_generate(&spec, 5, &pool));
  CHECK(as_pool_split(pool, 0.25, true, 5, &val, &rest));
  size_t n = 0;
  CHECK(as_pool_len(rest, &n));
  if (n != 90) {
    fprintf(stderr, "rest has %zu items\n", n);
    return 1;
  }

  AsModel *model = NULL;
  CHECK(as_model_train(rest, NULL, &model));
  double x[6] = {0};
  double probs[3];
  CHECK(as_model_predict_proba(model, x, 6, probs, 3));
  if (fabs(probs[0] + probs[1] + probs[2] - 1.0) > 1e-9) {
    fprintf(stderr, "probabilities do not sum to one\n");
    return 1;
  }

  AsExperimentConfig cfg = as_experiment_config_default(AS_STRATEGY_HYBRID, 3);
  cfg.batch_size = 5;
  cfg.max_fraction = 0.5;
  AsRun *run = NULL;
  CHECK(as_run_experiment(rest, val, &cfg, 11, &run));
  size_t iters = 0;
  CHECK(as_run_iteration_count(run, &iters));
  AsIteration last;
  CHECK(as_run_iteration(run, iters - 1, &last));
  if (last.labeled_count != cfg.seed_size + cfg.batch_size * (iters - 1)) {
    fprintf(stderr, "unexpected labeled count %zu\n", last.labeled_count);
    return 1;
  }

  char path[4096];
  snprintf(path, sizeof path, "%s/report.json", dir);
  CHECK(as_run_write_report(run, path));
  snprintf(path, sizeof path, "%s/curve.csv", dir);
  CHECK(as_run_write_curve(run, path));

  as_run_free(run);
  as_model_free(model);
  as_pool_free(rest);
  as_pool_free(val);
  as_pool_free(pool);
  as_pool_free(NULL);
  printf("ok %s\n", as_version());
  return 0;
}
