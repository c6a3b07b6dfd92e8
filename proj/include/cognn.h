/*
 * cognn — two-branch collaborative graph neural network library.
 *
 * C API over the C++ core: opaque handles, integer status codes, and a
 * thread-local error message. Every object returned through an out-pointer
 * is owned by the caller and released with the matching *_free function.
 * Functions return COGNN_OK on success; on failure the out-pointers are
 * untouched and cognn_last_error() describes what went wrong.
 */

#ifndef COGNN_H
#define COGNN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32) && defined(COGNN_SHARED)
#  ifdef COGNN_BUILD
#    define COGNN_API __declspec(dllexport)
#  else
#    define COGNN_API __declspec(dllimport)
#  endif
#else
#  define COGNN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cognn_status {
    COGNN_OK = 0,
    COGNN_EINVAL = 1,    /* invalid argument or contract violation */
    COGNN_EIO = 2,       /* file system failure */
    COGNN_EFORMAT = 3,   /* unparseable or schema-invalid input */
    COGNN_ENUMERIC = 4,  /* numerical failure (divergence) */
    COGNN_EINTERNAL = 5
} cognn_status;

typedef enum cognn_variant {
    COGNN_COLLABORATIVE = 0,
    COGNN_TWO_BRANCH_SAGPOOL = 1,
    COGNN_TWO_BRANCH_PLAIN = 2,
    COGNN_IMAGE_ONLY = 3,
    COGNN_TEXT_ONLY = 4,
    COGNN_TWO_BRANCH_AVG = 5
} cognn_variant;

typedef struct cognn_dataset cognn_dataset;
typedef struct cognn_model cognn_model;
typedef struct cognn_history cognn_history;
typedef struct cognn_table cognn_table;

typedef struct cognn_model_config {
    int32_t input_dim;      /* node feature dimension (default 256) */
    int32_t gcn_dim1;       /* first GCN output dim (default 64) */
    int32_t gcn_dim2;       /* second GCN output dim (default 32) */
    double pooling_ratio;   /* default 0.8 */
    int32_t fc_dim1;        /* first FC hidden dim (default 64) */
    int32_t fc_dim2;        /* second FC hidden dim (default 32) */
    double mu_init;         /* fusion gate init (default 1.0) */
    int32_t pool_gating;    /* nonzero = gate pooled features by score */
    int32_t variant;        /* cognn_variant */
} cognn_model_config;

typedef struct cognn_train_config {
    int32_t batch_size;     /* default 32 */
    double learning_rate;   /* default 0.001 */
    double weight_decay;    /* default 1e-6 */
    int32_t max_epochs;     /* default 60 */
    int32_t patience;       /* early stop after this many non-improving epochs */
    uint64_t seed;
} cognn_train_config;

typedef struct cognn_synth_spec {
    int64_t n_samples;
    int32_t feature_dim;          /* default 256 */
    double noise_sigma;           /* default 0.6 */
    double cross_modal_strength;  /* in [0,1], default 0.8 */
    uint64_t seed;
} cognn_synth_spec;

typedef struct cognn_metrics {
    double logloss;
    double accuracy;
    int64_t count;
} cognn_metrics;

typedef struct cognn_epoch_stats {
    int32_t epoch;
    double train_logloss;
    double val_logloss;
    double val_accuracy;
} cognn_epoch_stats;

typedef void (*cognn_epoch_callback)(const cognn_epoch_stats *stats, void *user_data);

COGNN_API const char *cognn_version(void);

/* Message for the most recent failure on this thread; never NULL. */
COGNN_API const char *cognn_last_error(void);

COGNN_API void cognn_model_config_defaults(cognn_model_config *cfg);
COGNN_API void cognn_train_config_defaults(cognn_train_config *cfg);
COGNN_API void cognn_synth_spec_defaults(cognn_synth_spec *spec);

COGNN_API cognn_status cognn_variant_parse(const char *name, cognn_variant *out);
COGNN_API const char *cognn_variant_name(cognn_variant v);

/* Datasets ---------------------------------------------------------------- */

COGNN_API cognn_status cognn_dataset_generate(const cognn_synth_spec *spec, cognn_dataset **out);
/* Line-delimited JSON; edge lists are built from features when absent. */
COGNN_API cognn_status cognn_dataset_load(const char *path, cognn_dataset **out);
COGNN_API cognn_status cognn_dataset_save(const cognn_dataset *ds, const char *path,
                                          int include_edges);
COGNN_API int64_t cognn_dataset_size(const cognn_dataset *ds);
COGNN_API int64_t cognn_dataset_positives(const cognn_dataset *ds);
COGNN_API int32_t cognn_dataset_feature_dim(const cognn_dataset *ds);
/* Seeded 80/10/10 split. */
COGNN_API cognn_status cognn_dataset_split(const cognn_dataset *ds, uint64_t seed,
                                           cognn_dataset **train, cognn_dataset **val,
                                           cognn_dataset **test);
COGNN_API void cognn_dataset_free(cognn_dataset *ds);

/* Models ------------------------------------------------------------------ */

COGNN_API cognn_status cognn_model_create(const cognn_model_config *cfg, uint64_t seed,
                                          cognn_model **out);
/* Versioned binary checkpoint; round-trips bit-exactly. */
COGNN_API cognn_status cognn_model_save(const cognn_model *m, const char *path);
COGNN_API cognn_status cognn_model_load(const char *path, cognn_model **out);
COGNN_API int64_t cognn_model_parameter_count(const cognn_model *m);
COGNN_API cognn_status cognn_model_get_config(const cognn_model *m, cognn_model_config *out);
COGNN_API void cognn_model_free(cognn_model *m);

/* Training and evaluation ------------------------------------------------- */

/* Trains in place; the model keeps the parameters of the best validation
 * epoch. on_epoch may be NULL. */
COGNN_API cognn_status cognn_train(cognn_model *m, const cognn_dataset *train_set,
                                   const cognn_dataset *val_set, const cognn_train_config *cfg,
                                   cognn_epoch_callback on_epoch, void *user_data,
                                   cognn_history **out);
COGNN_API cognn_status cognn_evaluate(const cognn_model *m, const cognn_dataset *ds,
                                      cognn_metrics *out);

COGNN_API int64_t cognn_history_length(const cognn_history *h);
COGNN_API cognn_status cognn_history_entry(const cognn_history *h, int64_t index,
                                           cognn_epoch_stats *out);
COGNN_API int32_t cognn_history_best_epoch(const cognn_history *h);
COGNN_API void cognn_history_free(cognn_history *h);

/* Comparison harness ------------------------------------------------------ */

/* Trains every (variant, seed) cell on an internal 80/10/10 split of `ds`
 * (split seed = split_seed) and evaluates on the test part. Per-cell
 * failures are recorded in the table, not returned as a status. */
COGNN_API cognn_status cognn_compare(const cognn_dataset *ds, uint64_t split_seed,
                                     const cognn_variant *variants, int32_t n_variants,
                                     const uint64_t *seeds, int32_t n_seeds,
                                     const cognn_model_config *model_cfg,
                                     const cognn_train_config *train_cfg, cognn_table **out);
COGNN_API int64_t cognn_table_size(const cognn_table *t);
COGNN_API cognn_status cognn_table_cell(const cognn_table *t, int64_t index, cognn_variant *variant,
                                        uint64_t *seed, int32_t *ok, cognn_metrics *test_metrics,
                                        int32_t *best_epoch, int32_t *epochs_run);
/* Empty string when the cell succeeded; owned by the table. */
COGNN_API const char *cognn_table_cell_error(const cognn_table *t, int64_t index);
COGNN_API void cognn_table_free(cognn_table *t);

/* Self-test ---------------------------------------------------------------- */

/* Runs the built-in finite-difference gradient verification suite
 * (`instantiations` random instances of every layer and of the full
 * collaborative model). Returns COGNN_OK with *failures == 0 when all
 * checks pass; max_rel_err may be NULL. */
COGNN_API cognn_status cognn_gradcheck(uint64_t seed, int32_t instantiations, int64_t *checks,
                                       int64_t *failures, double *max_rel_err);

#ifdef __cplusplus
}
#endif

#endif /* COGNN_H */
