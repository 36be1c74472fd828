/* C interface to the unsupervised random forest library.
 *
 * Every fallible call returns an int status (URF_OK on success) and reports
 * results through out-parameters. On failure urf_last_error() describes the
 * problem for the calling thread. Handles are opaque; release each one with
 * its matching *_free function. Strings returned as const char* stay valid
 * while the owning handle lives; strings returned as char** must be released
 * with urf_string_free. */
#ifndef URF_URF_H
#define URF_URF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(URF_BUILDING_LIBRARY)
#    define URF_API __declspec(dllexport)
#  else
#    define URF_API __declspec(dllimport)
#  endif
#else
#  define URF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
  URF_OK = 0,
  URF_E_INVALID_ARGUMENT = 1,
  URF_E_IO = 2,
  URF_E_PARSE = 3,
  URF_E_RAGGED_ROW = 4,
  URF_E_DUPLICATE_ID = 5,
  URF_E_EMPTY_MATRIX = 6,
  URF_E_FEATURE_ALL_MISSING = 7,
  URF_E_ALL_SAMPLES_DROPPED = 8,
  URF_E_INSUFFICIENT_SAMPLES = 9,
  URF_E_FEATURE_MISMATCH = 10,
  URF_E_ZERO_BETWEEN_DISPERSION = 11,
  URF_E_MISSING_LEAF_LABEL = 12,
  URF_E_EMPTY_CLUSTER = 13,
  URF_E_ZERO_VARIANCE = 14,
  URF_E_SAMPLE_MISMATCH = 15,
  URF_E_UNMATCHED_ID = 16,
  URF_E_ALL_CENSORED = 17,
  URF_E_EMPTY_BUNDLE = 18,
  URF_E_VERSION_MISMATCH = 19,
  URF_E_DUPLICATE_CLIENT = 20,
  URF_E_OUT_OF_RANGE = 21,
  URF_E_INTERNAL = 99
};

typedef struct urf_matrix urf_matrix;
typedef struct urf_survival urf_survival;
typedef struct urf_forest urf_forest; /* one forest per layer */
typedef struct urf_counts urf_counts;
typedef struct urf_square urf_square; /* affinity or distance */
typedef struct urf_dendrogram urf_dendrogram;
typedef struct urf_labels urf_labels;
typedef struct urf_stability urf_stability;
typedef struct urf_bundle urf_bundle;
typedef struct urf_global urf_global;
typedef struct urf_fed_report urf_fed_report;

typedef struct urf_forest_config {
  size_t n_trees;
  size_t mtry; /* 0: ceil(sqrt(p)) per layer */
  size_t min_leaf;
  int bootstrap;
  uint64_t seed;
} urf_forest_config;

typedef struct urf_preprocess_config {
  double max_missing_fraction;
  size_t impute_k;
  size_t top_variance_features; /* 0: keep all */
  int standardize;
} urf_preprocess_config;

enum { URF_EVAL_ARI = 0, URF_EVAL_LOGRANK = 1 };

typedef struct urf_fed_config {
  size_t n_clients;
  urf_forest_config forest;
  size_t iterations;
  uint64_t seed;
  int mode;    /* URF_EVAL_ARI or URF_EVAL_LOGRANK */
  int fixed_k; /* 0: silhouette over [k_min, k_max] */
  int k_min;
  int k_max;
  size_t subsample; /* 0: whole pool every iteration */
  int standardize_per_client;
} urf_fed_config;

/* ---- library ---- */
URF_API const char* urf_version(void);
URF_API const char* urf_last_error(void);
URF_API const char* urf_status_name(int status);
URF_API void urf_set_threads(unsigned n); /* 0: all cores */
URF_API unsigned urf_threads(void);
URF_API void urf_string_free(char* s);
URF_API void urf_forest_config_default(urf_forest_config* cfg);
URF_API void urf_preprocess_config_default(urf_preprocess_config* cfg);
URF_API void urf_fed_config_default(urf_fed_config* cfg);

/* ---- matrices ---- */
URF_API int urf_matrix_load(const char* path, char delimiter, int transpose, urf_matrix** out);
/* values row-major n x p; NaN marks a missing cell. */
URF_API int urf_matrix_create(size_t n, size_t p, const double* values, const char* const* sample_ids,
                              const char* const* feature_ids, urf_matrix** out);
URF_API size_t urf_matrix_n_samples(const urf_matrix* m);
URF_API size_t urf_matrix_n_features(const urf_matrix* m);
URF_API const char* urf_matrix_sample_id(const urf_matrix* m, size_t i);
URF_API const char* urf_matrix_feature_id(const urf_matrix* m, size_t j);
URF_API int urf_matrix_copy_values(const urf_matrix* m, double* out);
URF_API int urf_matrix_preprocess(const urf_matrix* m, const urf_preprocess_config* cfg, urf_matrix** out);
URF_API int urf_matrix_standardize(const urf_matrix* m, urf_matrix** out);
URF_API int urf_matrix_write_csv(const urf_matrix* m, const char* path);
URF_API void urf_matrix_free(urf_matrix* m);

URF_API int urf_survival_load(const char* path, urf_survival** out);
URF_API size_t urf_survival_size(const urf_survival* s);
URF_API void urf_survival_free(urf_survival* s);

/* ---- forests ---- */
URF_API int urf_forest_train(const urf_matrix* const* layers, size_t n_layers, const urf_forest_config* cfg,
                             urf_forest** out);
URF_API size_t urf_forest_n_layers(const urf_forest* f);
URF_API size_t urf_forest_n_trees(const urf_forest* f, size_t layer);
URF_API int urf_forest_config_get(const urf_forest* f, size_t layer, urf_forest_config* out);
URF_API int urf_forest_route(const urf_forest* f, size_t layer, size_t tree, const double* x, size_t p, int* leaf);
/* Leaf co-occurrence counts of every layer, summed over layers. */
URF_API int urf_forest_counts(const urf_forest* f, const urf_matrix* const* layers, size_t n_layers,
                              urf_counts** out);
URF_API void urf_forest_free(urf_forest* f);

URF_API size_t urf_counts_n(const urf_counts* c);
URF_API uint64_t urf_counts_n_trees(const urf_counts* c);
URF_API int urf_counts_get(const urf_counts* c, size_t i, size_t j, uint32_t* out);
URF_API int urf_counts_equal(const urf_counts* a, const urf_counts* b, int* equal);
URF_API int urf_counts_normalize(const urf_counts* c, urf_square** affinity);
URF_API void urf_counts_free(urf_counts* c);

/* ---- affinity and distance ---- */
URF_API int urf_affinity_to_distance(const urf_square* affinity, urf_square** distance);
URF_API int urf_euclidean_distance(const urf_matrix* m, urf_square** distance);
URF_API size_t urf_square_n(const urf_square* s);
URF_API int urf_square_get(const urf_square* s, size_t i, size_t j, double* out);
URF_API int urf_square_write_csv(const urf_square* s, const char* path);
URF_API void urf_square_free(urf_square* s);

/* ---- clustering ---- */
URF_API int urf_ward(const urf_square* distance, urf_dendrogram** out);
URF_API size_t urf_dendrogram_n_merges(const urf_dendrogram* d);
URF_API int urf_dendrogram_merge(const urf_dendrogram* d, size_t m, int* a, int* b, double* height, int* size);
URF_API int urf_dendrogram_write_csv(const urf_dendrogram* d, const char* path);
URF_API void urf_dendrogram_free(urf_dendrogram* d);

/* Sample ids are taken from the distance matrix. */
URF_API int urf_cut(const urf_dendrogram* d, const urf_square* distance, int k, urf_labels** out);
/* scores receives k_max - k_min + 1 mean silhouettes and may be NULL. */
URF_API int urf_select_k(const urf_square* distance, const urf_dendrogram* d, int k_min, int k_max, int* k,
                         double* scores);
URF_API int urf_silhouette(const urf_square* distance, const urf_labels* labels, double* mean, double* per_sample);

URF_API int urf_labels_create(size_t n, const int* raw, const char* const* sample_ids, urf_labels** out);
URF_API int urf_labels_load(const char* path, const urf_matrix* samples, urf_labels** out);
URF_API size_t urf_labels_n(const urf_labels* l);
URF_API int urf_labels_k(const urf_labels* l);
URF_API int urf_labels_get(const urf_labels* l, size_t i);
URF_API int urf_labels_write_csv(const urf_labels* l, const char* path);
URF_API void urf_labels_free(urf_labels* l);

URF_API int urf_ari(const urf_labels* a, const urf_labels* b, double* out);
URF_API int urf_ari_raw(size_t n, const int* a, const int* b, double* out);

URF_API int urf_stability_run(const urf_forest* f, size_t layer, const urf_matrix* m, const int* k_values, size_t n_k,
                              const size_t* tree_grid, size_t n_grid, int reps, uint64_t seed, urf_stability** out);
/* Returns URF_OK with *found = 0 when no k qualifies. */
URF_API int urf_stability_suggested_k(const urf_stability* s, int* found, int* k);
URF_API int urf_stability_median(const urf_stability* s, int k, size_t trees, double* out);
URF_API int urf_stability_to_json(const urf_stability* s, char** json);
URF_API void urf_stability_free(urf_stability* s);

/* ---- importance and survival ---- */
/* out receives one score per feature of the layer. */
URF_API int urf_importance(const urf_forest* f, size_t layer, const urf_matrix* m, const urf_labels* labels,
                           int cluster_id, int normalized, double* out);
/* Features of all layers are concatenated in layer order; ids that repeat
 * across layers are prefixed with "L<layer>:". importance.csv holds raw then
 * normalized columns per cluster; corr_path gets the inter-cluster Pearson
 * matrix of the raw scores. Either path may be NULL. */
URF_API int urf_importance_write(const urf_forest* f, const urf_matrix* const* layers, size_t n_layers,
                                 const urf_labels* labels, const char* importance_path, const char* corr_path);
URF_API int urf_logrank(const urf_survival* s, const urf_labels* labels, double* chi_square, int* df, double* p_value);
URF_API int urf_km_write_csv(const urf_survival* s, const urf_labels* labels, const char* path);

/* ---- synthetic data ---- */
/* kind: globular_equal | globular_outliers | globular_varying | rings | moons */
URF_API int urf_synth_generate(const char* kind, double param, size_t n_per_cluster, uint64_t seed,
                               urf_matrix** data, urf_labels** labels);
/* One count per cluster (3 for globular kinds, 2 for rings and moons). */
URF_API int urf_synth_generate_sized(const char* kind, double param, const size_t* cluster_sizes, size_t n_sizes,
                                     uint64_t seed, urf_matrix** data, urf_labels** labels);
/* params may be NULL for each scenario's default grid; otherwise it applies to
 * every listed scenario. */
URF_API int urf_synth_bench(const char* const* kinds, size_t n_kinds, const double* params, size_t n_params,
                            size_t replicates, uint64_t seed, const urf_forest_config* forest, const char* out_csv,
                            size_t* n_rows);

/* ---- model exchange ---- */
URF_API int urf_bundle_export(const urf_forest* f, const char* client_id, urf_bundle** out);
URF_API int urf_bundle_read(const char* path, urf_bundle** out);
URF_API int urf_bundle_write(const urf_bundle* b, const char* path);
URF_API int urf_bundle_from_json(const char* text, urf_bundle** out);
URF_API int urf_bundle_to_json(const urf_bundle* b, char** json);
URF_API int urf_bundle_forest(const urf_bundle* b, urf_forest** out);
URF_API const char* urf_bundle_client_id(const urf_bundle* b);
URF_API size_t urf_bundle_n_trees(const urf_bundle* b);
URF_API void urf_bundle_free(urf_bundle* b);

URF_API int urf_global_merge(const urf_bundle* const* bundles, size_t n, urf_global** out);
URF_API int urf_global_read(const char* path, urf_global** out);
URF_API int urf_global_write(const urf_global* g, const char* path);
URF_API int urf_global_counts(const urf_global* g, const urf_matrix* const* layers, size_t n_layers,
                              urf_counts** out);
URF_API size_t urf_global_n_bundles(const urf_global* g);
URF_API size_t urf_global_n_trees(const urf_global* g);
URF_API void urf_global_free(urf_global* g);

/* Summary of a bundle or merged model file: clients, layers, tree and node
 * counts, depth. Either kind of file is accepted. */
URF_API int urf_model_inspect(const char* path, char** json);

/* ---- federated simulation ---- */
URF_API int urf_fed_simulate(const urf_matrix* const* layers, size_t n_layers, const urf_survival* survival,
                             const urf_labels* reference, const urf_fed_config* cfg, urf_fed_report** out);
URF_API size_t urf_fed_report_n_records(const urf_fed_report* r);
URF_API int urf_fed_report_record(const urf_fed_report* r, size_t i, size_t* iteration, double* local_metric,
                                  double* global_metric);
/* winner: "global", "local", "tie" or "na" */
URF_API size_t urf_fed_report_count(const urf_fed_report* r, const char* winner);
URF_API int urf_fed_report_write_json(const urf_fed_report* r, const char* path);
URF_API int urf_fed_report_write_winloss(const urf_fed_report* r, const char* path);
URF_API void urf_fed_report_free(urf_fed_report* r);

#ifdef __cplusplus
}
#endif

#endif
