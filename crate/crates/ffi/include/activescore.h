#ifndef ACTIVESCORE_H
#define ACTIVESCORE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AsStatus {
  AS_STATUS_OK = 0,
  AS_STATUS_NULL_POINTER = 1,
  AS_STATUS_INVALID_ARGUMENT = 2,
  AS_STATUS_CONFIG = 3,
  AS_STATUS_DATA = 4,
  AS_STATUS_IO = 5,
  AS_STATUS_NUMERIC = 6,
  AS_STATUS_UTF8 = 7,
  AS_STATUS_PANIC = 8,
} AsStatus;

typedef enum AsStrategy {
  AS_STRATEGY_RANDOM = 0,
  AS_STRATEGY_UNCERTAINTY = 1,
  AS_STRATEGY_TOPOLOGICAL = 2,
  AS_STRATEGY_HYBRID = 3,
} AsStrategy;

typedef enum AsMetric {
  AS_METRIC_EUCLIDEAN = 0,
  AS_METRIC_COSINE = 1,
} AsMetric;

typedef enum AsMeasure {
  AS_MEASURE_LEAST_CONFIDENCE = 0,
  AS_MEASURE_MARGIN = 1,
  AS_MEASURE_ENTROPY = 2,
} AsMeasure;

typedef struct AsModel AsModel;

typedef struct AsPool AsPool;

typedef struct AsRun AsRun;

typedef struct AsAgreement {
  double qwk;
  double kappa;
  // Percentage in [0, 100].
  double exact;
} AsAgreement;

typedef struct AsSyntheticSpec {
  size_t dim;
  size_t levels;
  size_t per_class_count;
  double separation;
  double noise_sigma;
} AsSyntheticSpec;

typedef struct AsClassifierConfig {
  double learning_rate;
  size_t epochs;
  double l2_lambda;
  uint64_t rng_seed;
} AsClassifierConfig;

typedef struct AsExperimentConfig {
  enum AsStrategy strategy;
  enum AsMetric metric;
  enum AsMeasure measure;
  // Hybrid uncertainty filter share, in (0, 1].
  double pool_fraction;
  size_t seed_size;
  size_t batch_size;
  double max_fraction;
  struct AsClassifierConfig classifier;
} AsExperimentConfig;

typedef struct AsIteration {
  size_t iteration;
  size_t labeled_count;
  double labeled_fraction;
  double qwk;
  double kappa;
  double exact_agreement;
} AsIteration;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *as_version(void);

// Message for the most recent failure on this thread, or null. The
// pointer stays valid until the next library call on the same thread.
const char *as_last_error_message(void);

// QWK, Cohen's kappa and exact agreement of two rating vectors of length
// `len` with values in `[0, levels)`.
enum AsStatus as_agreement(const uint32_t *human,
                           const uint32_t *machine,
                           size_t len,
                           size_t levels,
                           struct AsAgreement *out);

enum AsStatus as_qwk(const uint32_t *human,
                     const uint32_t *machine,
                     size_t len,
                     size_t levels,
                     double *out);

// Loads a pool CSV file.
enum AsStatus as_pool_load(const char *path, struct AsPool **out);

enum AsStatus as_pool_save(const struct AsPool *pool, const char *path);

// Builds a pool from a row-major `n x dim` feature matrix and `n` labels
// in `[0, levels)`. Item ids are the row indices.
enum AsStatus as_pool_from_arrays(const double *features,
                                  const uint32_t *labels,
                                  size_t n,
                                  size_t dim,
                                  size_t levels,
                                  struct AsPool **out);

enum AsStatus as_pool_generate(const struct AsSyntheticSpec *spec,
                               uint64_t seed,
                               struct AsPool **out);

// Splits `pool` into a first part of `round(fraction * n)` items and the
// remainder. The input handle stays valid.
enum AsStatus as_pool_split(const struct AsPool *pool,
                            double fraction,
                            bool stratified,
                            uint64_t seed,
                            struct AsPool **out_first,
                            struct AsPool **out_second);

enum AsStatus as_pool_len(const struct AsPool *pool, size_t *out);

enum AsStatus as_pool_dim(const struct AsPool *pool, size_t *out);

enum AsStatus as_pool_levels(const struct AsPool *pool, size_t *out);

// Releases a pool; null is ignored.
void as_pool_free(struct AsPool *pool);

struct AsClassifierConfig as_classifier_config_default(void);

// Default experiment configuration for `strategy` on a pool with `levels`
// classes.
struct AsExperimentConfig as_experiment_config_default(enum AsStrategy strategy, size_t levels);

// Trains on every record of `pool`. A null `config` means the defaults.
enum AsStatus as_model_train(const struct AsPool *pool,
                             const struct AsClassifierConfig *config,
                             struct AsModel **out);

// Writes `levels` probabilities into `out_probs`, which must hold at least
// `capacity` values.
enum AsStatus as_model_predict_proba(const struct AsModel *model,
                                     const double *features,
                                     size_t dim,
                                     double *out_probs,
                                     size_t capacity);

enum AsStatus as_model_predict(const struct AsModel *model,
                               const double *features,
                               size_t dim,
                               size_t *out_class);

enum AsStatus as_model_levels(const struct AsModel *model, size_t *out);

enum AsStatus as_model_dim(const struct AsModel *model, size_t *out);

void as_model_free(struct AsModel *model);

// Runs one active-learning experiment on `pool`, evaluating on
// `validation`.
enum AsStatus as_run_experiment(const struct AsPool *pool,
                                const struct AsPool *validation,
                                const struct AsExperimentConfig *config,
                                uint64_t seed,
                                struct AsRun **out);

enum AsStatus as_run_iteration_count(const struct AsRun *run, size_t *out);

enum AsStatus as_run_iteration(const struct AsRun *run, size_t index, struct AsIteration *out);

// Copies the ids revealed before iteration `index` into `out_ids`
// (capacity `capacity`) and their number into `out_len`. When the buffer
// is too small, only `out_len` is written and the call fails.
enum AsStatus as_run_selected_ids(const struct AsRun *run,
                                  size_t index,
                                  size_t *out_ids,
                                  size_t capacity,
                                  size_t *out_len);

enum AsStatus as_run_full_data_qwk(const struct AsRun *run, double *out);

// Smallest labeled fraction whose QWK reaches `ratio` times the full-data
// QWK. `out_reached` is false (and `out_fraction` untouched) when no
// iteration gets there or the full-data QWK is not positive.
enum AsStatus as_run_target_fraction(const struct AsRun *run,
                                     double ratio,
                                     double *out_fraction,
                                     bool *out_reached);

enum AsStatus as_run_write_report(const struct AsRun *run, const char *path);

enum AsStatus as_run_write_curve(const struct AsRun *run, const char *path);

void as_run_free(struct AsRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACTIVESCORE_H */
