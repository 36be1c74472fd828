#include "urf/urf.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <new>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "affinity.hpp"
#include "benchmark.hpp"
#include "cluster.hpp"
#include "data.hpp"
#include "error.hpp"
#include "federated.hpp"
#include "forest.hpp"
#include "importance.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "pipeline.hpp"
#include "synth.hpp"

#ifndef URF_VERSION_STRING
#define URF_VERSION_STRING "0.0.0"
#endif

struct urf_matrix {
  urf::OmicsMatrix m;
};
struct urf_survival {
  std::vector<urf::SurvivalRecord> records;
};
struct urf_forest {
  std::vector<urf::Forest> layers;
};
struct urf_counts {
  urf::CountMatrix c;
};
struct urf_square {
  urf::SquareMatrix s;
};
struct urf_dendrogram {
  urf::Dendrogram d;
};
struct urf_labels {
  urf::ClusterAssignment a;
};
struct urf_stability {
  urf::StabilityReport r;
};
struct urf_bundle {
  urf::ModelBundle b;
};
struct urf_global {
  urf::GlobalModel g;
};
struct urf_fed_report {
  urf::FederationReport r;
};

namespace {

thread_local std::string last_error;

template <class F>
int guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return URF_OK;
  } catch (const urf::Error& e) {
    last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return URF_E_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return URF_E_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return URF_E_INTERNAL;
  }
}

template <class T>
void need(const T* p, const char* what) {
  if (p == nullptr) urf::fail(urf::ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

urf::ForestConfig to_core(const urf_forest_config& c) {
  return {c.n_trees, c.mtry, c.min_leaf, c.bootstrap != 0, c.seed};
}

urf_forest_config from_core(const urf::ForestConfig& c) {
  return {c.n_trees, c.mtry, c.min_leaf, c.bootstrap ? 1 : 0, c.seed};
}

std::vector<urf::OmicsMatrix> collect(const urf_matrix* const* layers, size_t n_layers) {
  if (n_layers == 0) urf::fail(urf::ErrorCode::InvalidArgument, "at least one layer is required");
  need(layers, "layers");
  std::vector<urf::OmicsMatrix> out;
  for (size_t l = 0; l < n_layers; ++l) {
    need(layers[l], "layer");
    out.push_back(layers[l]->m);
  }
  return out;
}

const urf::Forest& layer_of(const urf_forest* f, size_t layer) {
  need(f, "forest");
  if (layer >= f->layers.size()) urf::fail(urf::ErrorCode::OutOfRange, "layer index out of range");
  return f->layers[layer];
}

std::ofstream open_out(const char* path) {
  need(path, "path");
  std::ofstream out(path);
  if (!out) urf::fail(urf::ErrorCode::Io, std::string("cannot write '") + path + "'");
  return out;
}

void close_out(std::ofstream& out, const char* path) {
  out.close();
  if (!out) urf::fail(urf::ErrorCode::Io, std::string("write failure on '") + path + "'");
}

}  // namespace

extern "C" {

const char* urf_version(void) { return URF_VERSION_STRING; }
const char* urf_last_error(void) { return last_error.c_str(); }
const char* urf_status_name(int status) { return urf::error_code_name(static_cast<urf::ErrorCode>(status)); }
void urf_set_threads(unsigned n) { urf::set_thread_count(n); }
unsigned urf_threads(void) { return urf::thread_count(); }
void urf_string_free(char* s) { std::free(s); }

void urf_forest_config_default(urf_forest_config* cfg) {
  if (cfg) *cfg = from_core(urf::ForestConfig{});
}

void urf_preprocess_config_default(urf_preprocess_config* cfg) {
  if (!cfg) return;
  const urf::PreprocessConfig d;
  *cfg = {d.max_missing_fraction, d.impute_k, 0, d.standardize ? 1 : 0};
}

void urf_fed_config_default(urf_fed_config* cfg) {
  if (!cfg) return;
  const urf::SimulationConfig d;
  *cfg = {d.n_clients, from_core(d.forest), d.iterations, d.seed, URF_EVAL_ARI,
          0, d.k.k_min, d.k.k_max, 0, d.standardize_per_client ? 1 : 0};
}

// ---- matrices ----

int urf_matrix_load(const char* path, char delimiter, int transpose, urf_matrix** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    urf::ParseOptions opt;
    opt.delimiter = delimiter == 0 ? ',' : delimiter;
    opt.transpose = transpose != 0;
    *out = new urf_matrix{urf::parse_matrix(path, opt)};
  });
}

int urf_matrix_create(size_t n, size_t p, const double* values, const char* const* sample_ids,
                      const char* const* feature_ids, urf_matrix** out) {
  return guarded([&] {
    need(values, "values");
    need(sample_ids, "sample_ids");
    need(feature_ids, "feature_ids");
    need(out, "out");
    std::vector<std::string> s(sample_ids, sample_ids + n);
    std::vector<std::string> f(feature_ids, feature_ids + p);
    std::vector<double> v(values, values + n * p);
    std::vector<std::uint8_t> miss(n * p, 0);
    for (size_t i = 0; i < v.size(); ++i) miss[i] = std::isnan(v[i]) ? 1 : 0;
    *out = new urf_matrix{urf::OmicsMatrix(std::move(s), std::move(f), std::move(v), std::move(miss))};
  });
}

size_t urf_matrix_n_samples(const urf_matrix* m) { return m ? m->m.n_samples() : 0; }
size_t urf_matrix_n_features(const urf_matrix* m) { return m ? m->m.n_features() : 0; }

const char* urf_matrix_sample_id(const urf_matrix* m, size_t i) {
  return m && i < m->m.n_samples() ? m->m.sample_ids()[i].c_str() : nullptr;
}

const char* urf_matrix_feature_id(const urf_matrix* m, size_t j) {
  return m && j < m->m.n_features() ? m->m.feature_ids()[j].c_str() : nullptr;
}

int urf_matrix_copy_values(const urf_matrix* m, double* out) {
  return guarded([&] {
    need(m, "matrix");
    need(out, "out");
    const auto v = m->m.values();
    std::copy(v.begin(), v.end(), out);
  });
}

int urf_matrix_preprocess(const urf_matrix* m, const urf_preprocess_config* cfg, urf_matrix** out) {
  return guarded([&] {
    need(m, "matrix");
    need(cfg, "config");
    need(out, "out");
    urf::PreprocessConfig pc;
    pc.max_missing_fraction = cfg->max_missing_fraction;
    pc.impute_k = cfg->impute_k;
    if (cfg->top_variance_features > 0) pc.top_variance_features = cfg->top_variance_features;
    pc.standardize = cfg->standardize != 0;
    *out = new urf_matrix{urf::preprocess(m->m, pc)};
  });
}

int urf_matrix_standardize(const urf_matrix* m, urf_matrix** out) {
  return guarded([&] {
    need(m, "matrix");
    need(out, "out");
    *out = new urf_matrix{urf::standardize(m->m)};
  });
}

int urf_matrix_write_csv(const urf_matrix* m, const char* path) {
  return guarded([&] {
    need(m, "matrix");
    need(path, "path");
    urf::write_matrix_csv(std::string(path), m->m);
  });
}

void urf_matrix_free(urf_matrix* m) { delete m; }

int urf_survival_load(const char* path, urf_survival** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new urf_survival{urf::parse_survival(path)};
  });
}

size_t urf_survival_size(const urf_survival* s) { return s ? s->records.size() : 0; }
void urf_survival_free(urf_survival* s) { delete s; }

// ---- forests ----

int urf_forest_train(const urf_matrix* const* layers, size_t n_layers, const urf_forest_config* cfg,
                     urf_forest** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    const auto ls = collect(layers, n_layers);
    *out = new urf_forest{urf::train_layers(ls, to_core(*cfg))};
  });
}

size_t urf_forest_n_layers(const urf_forest* f) { return f ? f->layers.size() : 0; }

size_t urf_forest_n_trees(const urf_forest* f, size_t layer) {
  return f && layer < f->layers.size() ? f->layers[layer].trees.size() : 0;
}

int urf_forest_config_get(const urf_forest* f, size_t layer, urf_forest_config* out) {
  return guarded([&] {
    need(out, "out");
    *out = from_core(layer_of(f, layer).config);
  });
}

int urf_forest_route(const urf_forest* f, size_t layer, size_t tree, const double* x, size_t p, int* leaf) {
  return guarded([&] {
    const auto& forest = layer_of(f, layer);
    need(x, "x");
    need(leaf, "leaf");
    if (tree >= forest.trees.size()) urf::fail(urf::ErrorCode::OutOfRange, "tree index out of range");
    if (p != forest.n_features) urf::fail(urf::ErrorCode::FeatureMismatch, "sample width does not match the layer");
    *leaf = forest.trees[tree].route(std::span<const double>(x, p));
  });
}

int urf_forest_counts(const urf_forest* f, const urf_matrix* const* layers, size_t n_layers, urf_counts** out) {
  return guarded([&] {
    need(f, "forest");
    need(out, "out");
    const auto ls = collect(layers, n_layers);
    if (ls.size() != f->layers.size()) urf::fail(urf::ErrorCode::FeatureMismatch, "layer count does not match the forest");
    *out = new urf_counts{urf::fused_counts(f->layers, ls)};
  });
}

void urf_forest_free(urf_forest* f) { delete f; }

size_t urf_counts_n(const urf_counts* c) { return c ? c->c.n : 0; }
uint64_t urf_counts_n_trees(const urf_counts* c) { return c ? c->c.n_trees : 0; }

int urf_counts_get(const urf_counts* c, size_t i, size_t j, uint32_t* out) {
  return guarded([&] {
    need(c, "counts");
    need(out, "out");
    if (i >= c->c.n || j >= c->c.n) urf::fail(urf::ErrorCode::OutOfRange, "index out of range");
    *out = c->c.at(i, j);
  });
}

int urf_counts_equal(const urf_counts* a, const urf_counts* b, int* equal) {
  return guarded([&] {
    need(a, "counts");
    need(b, "counts");
    need(equal, "out");
    *equal = a->c == b->c ? 1 : 0;
  });
}

int urf_counts_normalize(const urf_counts* c, urf_square** affinity) {
  return guarded([&] {
    need(c, "counts");
    need(affinity, "out");
    *affinity = new urf_square{urf::normalize(c->c)};
  });
}

void urf_counts_free(urf_counts* c) { delete c; }

// ---- affinity and distance ----

int urf_affinity_to_distance(const urf_square* affinity, urf_square** distance) {
  return guarded([&] {
    need(affinity, "affinity");
    need(distance, "out");
    urf::AffinityMatrix a;
    static_cast<urf::SquareMatrix&>(a) = affinity->s;
    *distance = new urf_square{urf::to_distance(a)};
  });
}

int urf_euclidean_distance(const urf_matrix* m, urf_square** distance) {
  return guarded([&] {
    need(m, "matrix");
    need(distance, "out");
    *distance = new urf_square{urf::euclidean_distance(m->m)};
  });
}

size_t urf_square_n(const urf_square* s) { return s ? s->s.n : 0; }

int urf_square_get(const urf_square* s, size_t i, size_t j, double* out) {
  return guarded([&] {
    need(s, "matrix");
    need(out, "out");
    if (i >= s->s.n || j >= s->s.n) urf::fail(urf::ErrorCode::OutOfRange, "index out of range");
    *out = s->s.at(i, j);
  });
}

int urf_square_write_csv(const urf_square* s, const char* path) {
  return guarded([&] {
    need(s, "matrix");
    need(path, "path");
    urf::write_square_csv(std::string(path), s->s);
  });
}

void urf_square_free(urf_square* s) { delete s; }

// ---- clustering ----

namespace {
urf::DistanceMatrix as_distance(const urf_square* s) {
  need(s, "distance");
  urf::DistanceMatrix d;
  static_cast<urf::SquareMatrix&>(d) = s->s;
  return d;
}
}  // namespace

int urf_ward(const urf_square* distance, urf_dendrogram** out) {
  return guarded([&] {
    need(out, "out");
    *out = new urf_dendrogram{urf::ward_linkage(as_distance(distance))};
  });
}

size_t urf_dendrogram_n_merges(const urf_dendrogram* d) { return d ? d->d.merges.size() : 0; }

int urf_dendrogram_merge(const urf_dendrogram* d, size_t m, int* a, int* b, double* height, int* size) {
  return guarded([&] {
    need(d, "dendrogram");
    if (m >= d->d.merges.size()) urf::fail(urf::ErrorCode::OutOfRange, "merge index out of range");
    const auto& mg = d->d.merges[m];
    if (a) *a = mg.a;
    if (b) *b = mg.b;
    if (height) *height = mg.height;
    if (size) *size = mg.size;
  });
}

int urf_dendrogram_write_csv(const urf_dendrogram* d, const char* path) {
  return guarded([&] {
    need(d, "dendrogram");
    need(path, "path");
    urf::write_dendrogram_csv(std::string(path), d->d);
  });
}

void urf_dendrogram_free(urf_dendrogram* d) { delete d; }

int urf_cut(const urf_dendrogram* d, const urf_square* distance, int k, urf_labels** out) {
  return guarded([&] {
    need(d, "dendrogram");
    need(out, "out");
    std::vector<std::string> ids;
    if (distance) ids = distance->s.sample_ids;
    *out = new urf_labels{urf::cut(d->d, k, std::move(ids))};
  });
}

int urf_select_k(const urf_square* distance, const urf_dendrogram* d, int k_min, int k_max, int* k, double* scores) {
  return guarded([&] {
    need(d, "dendrogram");
    need(k, "k");
    const auto sel = urf::select_k_silhouette(as_distance(distance), d->d, k_min, k_max);
    *k = sel.k;
    if (scores) {
      for (std::size_t i = 0; i < sel.scores.size(); ++i) scores[i] = sel.scores[i].second;
    }
  });
}

int urf_silhouette(const urf_square* distance, const urf_labels* labels, double* mean, double* per_sample) {
  return guarded([&] {
    need(labels, "labels");
    const auto res = urf::silhouette(as_distance(distance), labels->a);
    if (mean) *mean = res.mean;
    if (per_sample) std::copy(res.per_sample.begin(), res.per_sample.end(), per_sample);
  });
}

int urf_labels_create(size_t n, const int* raw, const char* const* sample_ids, urf_labels** out) {
  return guarded([&] {
    need(raw, "labels");
    need(out, "out");
    std::vector<std::string> ids;
    if (sample_ids) ids.assign(sample_ids, sample_ids + n);
    *out = new urf_labels{urf::ClusterAssignment::from_raw(std::span<const int>(raw, n), std::move(ids))};
  });
}

int urf_labels_load(const char* path, const urf_matrix* samples, urf_labels** out) {
  return guarded([&] {
    need(path, "path");
    need(samples, "matrix");
    need(out, "out");
    *out = new urf_labels{urf::read_labels(path, samples->m.sample_ids())};
  });
}

size_t urf_labels_n(const urf_labels* l) { return l ? l->a.labels.size() : 0; }
int urf_labels_k(const urf_labels* l) { return l ? l->a.k : 0; }

int urf_labels_get(const urf_labels* l, size_t i) {
  return l && i < l->a.labels.size() ? l->a.labels[i] : -1;
}

int urf_labels_write_csv(const urf_labels* l, const char* path) {
  return guarded([&] {
    need(l, "labels");
    need(path, "path");
    urf::write_labels_csv(std::string(path), l->a);
  });
}

void urf_labels_free(urf_labels* l) { delete l; }

int urf_ari(const urf_labels* a, const urf_labels* b, double* out) {
  return guarded([&] {
    need(a, "labels");
    need(b, "labels");
    need(out, "out");
    *out = urf::ari(a->a, b->a);
  });
}

int urf_ari_raw(size_t n, const int* a, const int* b, double* out) {
  return guarded([&] {
    need(a, "labels");
    need(b, "labels");
    need(out, "out");
    *out = urf::ari(std::span<const int>(a, n), std::span<const int>(b, n));
  });
}

int urf_stability_run(const urf_forest* f, size_t layer, const urf_matrix* m, const int* k_values, size_t n_k,
                  const size_t* tree_grid, size_t n_grid, int reps, uint64_t seed, urf_stability** out) {
  return guarded([&] {
    const auto& forest = layer_of(f, layer);
    need(m, "matrix");
    need(k_values, "k_values");
    need(tree_grid, "tree_grid");
    need(out, "out");
    *out = new urf_stability{urf::stability_diagnostic(forest, m->m, std::span<const int>(k_values, n_k),
                                                       std::span<const std::size_t>(tree_grid, n_grid), reps, seed)};
  });
}

int urf_stability_suggested_k(const urf_stability* s, int* found, int* k) {
  return guarded([&] {
    need(s, "report");
    need(found, "found");
    *found = s->r.suggested_k ? 1 : 0;
    if (k && s->r.suggested_k) *k = *s->r.suggested_k;
  });
}

int urf_stability_median(const urf_stability* s, int k, size_t trees, double* out) {
  return guarded([&] {
    need(s, "report");
    need(out, "out");
    if (!s->r.grid.count({k, trees})) urf::fail(urf::ErrorCode::OutOfRange, "no such (k, trees) cell");
    *out = s->r.median(k, trees);
  });
}

int urf_stability_to_json(const urf_stability* s, char** json) {
  return guarded([&] {
    need(s, "report");
    need(json, "out");
    *json = dup_string(urf::stability_to_json(s->r));
  });
}

void urf_stability_free(urf_stability* s) { delete s; }

// ---- importance and survival ----

int urf_importance(const urf_forest* f, size_t layer, const urf_matrix* m, const urf_labels* labels, int cluster_id,
                   int normalized, double* out) {
  return guarded([&] {
    const auto& forest = layer_of(f, layer);
    need(m, "matrix");
    need(labels, "labels");
    need(out, "out");
    auto v = urf::cluster_importance(forest, m->m, labels->a, cluster_id);
    if (normalized) v = urf::normalized(v);
    std::copy(v.scores.begin(), v.scores.end(), out);
  });
}

int urf_importance_write(const urf_forest* f, const urf_matrix* const* layers, size_t n_layers,
                         const urf_labels* labels, const char* importance_path, const char* corr_path) {
  return guarded([&] {
    need(f, "forest");
    need(labels, "labels");
    const auto ls = collect(layers, n_layers);
    if (ls.size() != f->layers.size()) urf::fail(urf::ErrorCode::FeatureMismatch, "layer count does not match the forest");

    std::vector<std::string> ids;
    std::set<std::string> seen;
    bool clash = false;
    for (const auto& l : ls) {
      for (const auto& id : l.feature_ids()) clash |= !seen.insert(id).second;
    }
    for (std::size_t l = 0; l < ls.size(); ++l) {
      for (const auto& id : ls[l].feature_ids()) ids.push_back(clash ? "L" + std::to_string(l) + ":" + id : id);
    }

    std::vector<urf::ImportanceVector> raw;
    for (int c = 0; c < labels->a.k; ++c) {
      urf::ImportanceVector v;
      v.cluster_id = c;
      for (std::size_t l = 0; l < ls.size(); ++l) {
        const auto part = urf::cluster_importance(f->layers[l], ls[l], labels->a, c);
        v.scores.insert(v.scores.end(), part.scores.begin(), part.scores.end());
      }
      raw.push_back(std::move(v));
    }
    std::vector<urf::ImportanceVector> all = raw;
    for (const auto& v : raw) all.push_back(urf::normalized(v));
    if (importance_path) {
      auto out = open_out(importance_path);
      urf::write_importance_csv(out, ids, all);
      close_out(out, importance_path);
    }
    if (corr_path) {
      auto out = open_out(corr_path);
      urf::write_correlation_csv(out, urf::importance_correlation(raw));
      close_out(out, corr_path);
    }
  });
}

int urf_logrank(const urf_survival* s, const urf_labels* labels, double* chi_square, int* df, double* p_value) {
  return guarded([&] {
    need(s, "survival");
    need(labels, "labels");
    const auto res = urf::logrank_test(s->records, labels->a);
    if (chi_square) *chi_square = res.chi_square;
    if (df) *df = res.degrees_of_freedom;
    if (p_value) *p_value = res.p_value;
  });
}

int urf_km_write_csv(const urf_survival* s, const urf_labels* labels, const char* path) {
  return guarded([&] {
    need(s, "survival");
    need(labels, "labels");
    auto out = open_out(path);
    urf::write_km_csv(out, urf::km_table(s->records, labels->a));
    close_out(out, path);
  });
}

// ---- synthetic data ----

int urf_synth_generate(const char* kind, double param, size_t n_per_cluster, uint64_t seed, urf_matrix** data,
                       urf_labels** labels) {
  return guarded([&] {
    need(kind, "kind");
    need(data, "data");
    urf::ScenarioSpec spec;
    spec.kind = urf::parse_scenario(kind);
    spec.param = param;
    spec.n_per_cluster = n_per_cluster;
    spec.seed = seed;
    auto ds = urf::generate(spec);
    *data = new urf_matrix{std::move(ds.data)};
    if (labels) *labels = new urf_labels{std::move(ds.labels)};
  });
}

int urf_synth_generate_sized(const char* kind, double param, const size_t* cluster_sizes, size_t n_sizes,
                             uint64_t seed, urf_matrix** data, urf_labels** labels) {
  return guarded([&] {
    need(kind, "kind");
    need(cluster_sizes, "cluster_sizes");
    need(data, "data");
    urf::ScenarioSpec spec;
    spec.kind = urf::parse_scenario(kind);
    spec.param = param;
    spec.cluster_sizes.assign(cluster_sizes, cluster_sizes + n_sizes);
    spec.seed = seed;
    auto ds = urf::generate(spec);
    *data = new urf_matrix{std::move(ds.data)};
    if (labels) *labels = new urf_labels{std::move(ds.labels)};
  });
}

int urf_synth_bench(const char* const* kinds, size_t n_kinds, const double* params, size_t n_params,
                    size_t replicates, uint64_t seed, const urf_forest_config* forest, const char* out_csv,
                    size_t* n_rows) {
  return guarded([&] {
    need(kinds, "kinds");
    if (n_kinds == 0) urf::fail(urf::ErrorCode::InvalidArgument, "no scenarios requested");
    urf::BenchConfig cfg;
    for (size_t i = 0; i < n_kinds; ++i) {
      need(kinds[i], "kind");
      auto grid = urf::default_grid(urf::parse_scenario(kinds[i]));
      if (params) {
        if (n_params == 0) urf::fail(urf::ErrorCode::InvalidArgument, "empty parameter list");
        grid.params.assign(params, params + n_params);
      }
      cfg.scenarios.push_back(std::move(grid));
    }
    if (replicates == 0) urf::fail(urf::ErrorCode::InvalidArgument, "replicates must be positive");
    cfg.replicates = replicates;
    cfg.seed = seed;
    if (forest) cfg.forest = to_core(*forest);
    const auto rows = urf::run_benchmark(cfg);
    if (out_csv) {
      auto out = open_out(out_csv);
      urf::write_bench_csv(out, rows);
      close_out(out, out_csv);
    }
    if (n_rows) *n_rows = rows.size();
  });
}

// ---- model exchange ----

int urf_bundle_export(const urf_forest* f, const char* client_id, urf_bundle** out) {
  return guarded([&] {
    need(f, "forest");
    need(client_id, "client_id");
    need(out, "out");
    *out = new urf_bundle{urf::export_model(f->layers, client_id)};
  });
}

int urf_bundle_read(const char* path, urf_bundle** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new urf_bundle{urf::read_bundle(path)};
  });
}

int urf_bundle_write(const urf_bundle* b, const char* path) {
  return guarded([&] {
    need(b, "bundle");
    need(path, "path");
    urf::write_bundle(path, b->b);
  });
}

int urf_bundle_from_json(const char* text, urf_bundle** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new urf_bundle{urf::bundle_from_json(text)};
  });
}

int urf_bundle_to_json(const urf_bundle* b, char** json) {
  return guarded([&] {
    need(b, "bundle");
    need(json, "out");
    *json = dup_string(urf::bundle_to_json(b->b));
  });
}

int urf_bundle_forest(const urf_bundle* b, urf_forest** out) {
  return guarded([&] {
    need(b, "bundle");
    need(out, "out");
    *out = new urf_forest{urf::bundle_forests(b->b)};
  });
}

const char* urf_bundle_client_id(const urf_bundle* b) { return b ? b->b.client_id.c_str() : nullptr; }
size_t urf_bundle_n_trees(const urf_bundle* b) { return b ? b->b.trees.size() : 0; }
void urf_bundle_free(urf_bundle* b) { delete b; }

int urf_global_merge(const urf_bundle* const* bundles, size_t n, urf_global** out) {
  return guarded([&] {
    need(bundles, "bundles");
    need(out, "out");
    std::vector<urf::ModelBundle> bs;
    for (size_t i = 0; i < n; ++i) {
      need(bundles[i], "bundle");
      bs.push_back(bundles[i]->b);
    }
    *out = new urf_global{urf::merge_models(std::move(bs))};
  });
}

int urf_global_read(const char* path, urf_global** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new urf_global{urf::read_global(path)};
  });
}

int urf_global_write(const urf_global* g, const char* path) {
  return guarded([&] {
    need(g, "model");
    need(path, "path");
    urf::write_global(path, g->g);
  });
}

int urf_global_counts(const urf_global* g, const urf_matrix* const* layers, size_t n_layers, urf_counts** out) {
  return guarded([&] {
    need(g, "model");
    need(out, "out");
    const auto ls = collect(layers, n_layers);
    *out = new urf_counts{urf::global_counts(g->g, ls)};
  });
}

size_t urf_global_n_bundles(const urf_global* g) { return g ? g->g.bundles.size() : 0; }
size_t urf_global_n_trees(const urf_global* g) { return g ? g->g.total_trees : 0; }
void urf_global_free(urf_global* g) { delete g; }

int urf_model_inspect(const char* path, char** json) {
  return guarded([&] {
    need(path, "path");
    need(json, "out");
    std::ifstream in(path, std::ios::binary);
    if (!in) urf::fail(urf::ErrorCode::Io, std::string("cannot open '") + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();

    bool merged = false;
    try {
      merged = nlohmann::json::parse(text).contains("bundles");
    } catch (const nlohmann::json::exception& e) {
      urf::fail(urf::ErrorCode::Parse, std::string("invalid JSON: ") + e.what());
    }
    std::vector<urf::ModelBundle> bundles;
    if (merged) {
      bundles = urf::global_from_json(text).bundles;
    } else {
      bundles.push_back(urf::bundle_from_json(text));
    }

    nlohmann::ordered_json j;
    j["kind"] = merged ? "global" : "bundle";
    j["format_version"] = urf::kFormatVersion;
    nlohmann::ordered_json clients = nlohmann::ordered_json::array();
    std::size_t total = 0;
    for (const auto& b : bundles) {
      nlohmann::ordered_json layers = nlohmann::ordered_json::array();
      for (const auto& l : b.layers) {
        std::size_t trees = 0, nodes = 0, leaves = 0;
        int depth = 0;
        for (const auto& t : b.trees) {
          if (t.layer_index != l.layer_index) continue;
          ++trees;
          nodes += t.nodes.size();
          leaves += t.leaf_count();
          depth = std::max(depth, t.depth());
        }
        layers.push_back({{"layer_index", l.layer_index},
                          {"n_features", l.n_features},
                          {"n_trees", trees},
                          {"n_nodes", nodes},
                          {"n_leaves", leaves},
                          {"max_depth", depth}});
      }
      clients.push_back({{"client_id", b.client_id},
                         {"n_trees", b.trees.size()},
                         {"config",
                          {{"n_trees", b.config.n_trees},
                           {"mtry", b.config.mtry},
                           {"min_leaf", b.config.min_leaf},
                           {"bootstrap", b.config.bootstrap},
                           {"seed", b.config.seed}}},
                         {"layers", std::move(layers)}});
      total += b.trees.size();
    }
    j["total_trees"] = total;
    j["clients"] = std::move(clients);
    *json = dup_string(j.dump(2));
  });
}

// ---- federated simulation ----

int urf_fed_simulate(const urf_matrix* const* layers, size_t n_layers, const urf_survival* survival,
                     const urf_labels* reference, const urf_fed_config* cfg, urf_fed_report** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    urf::MultiOmicsDataset d;
    d.layers = collect(layers, n_layers);
    if (survival) d.survival = survival->records;
    urf::SimulationConfig sc;
    sc.n_clients = cfg->n_clients;
    sc.forest = to_core(cfg->forest);
    sc.iterations = cfg->iterations;
    sc.seed = cfg->seed;
    if (cfg->mode != URF_EVAL_ARI && cfg->mode != URF_EVAL_LOGRANK) {
      urf::fail(urf::ErrorCode::InvalidArgument, "unknown evaluation mode");
    }
    sc.mode = cfg->mode == URF_EVAL_ARI ? urf::EvalMode::Ari : urf::EvalMode::LogRank;
    if (cfg->fixed_k > 0) sc.k.fixed_k = cfg->fixed_k;
    sc.k.k_min = cfg->k_min;
    sc.k.k_max = cfg->k_max;
    if (cfg->subsample > 0) sc.subsample = cfg->subsample;
    sc.standardize_per_client = cfg->standardize_per_client != 0;
    *out = new urf_fed_report{urf::simulate(d, sc, reference ? &reference->a : nullptr)};
  });
}

size_t urf_fed_report_n_records(const urf_fed_report* r) { return r ? r->r.records.size() : 0; }

int urf_fed_report_record(const urf_fed_report* r, size_t i, size_t* iteration, double* local_metric,
                          double* global_metric) {
  return guarded([&] {
    need(r, "report");
    if (i >= r->r.records.size()) urf::fail(urf::ErrorCode::OutOfRange, "record index out of range");
    const auto& rec = r->r.records[i];
    if (iteration) *iteration = rec.iteration;
    if (local_metric) *local_metric = rec.local_metric;
    if (global_metric) *global_metric = rec.global_metric;
  });
}

size_t urf_fed_report_count(const urf_fed_report* r, const char* winner) {
  return r && winner ? r->r.count(winner) : 0;
}

int urf_fed_report_write_json(const urf_fed_report* r, const char* path) {
  return guarded([&] {
    need(r, "report");
    auto out = open_out(path);
    out << urf::report_to_json(r->r) << '\n';
    close_out(out, path);
  });
}

int urf_fed_report_write_winloss(const urf_fed_report* r, const char* path) {
  return guarded([&] {
    need(r, "report");
    auto out = open_out(path);
    urf::write_winloss_csv(out, r->r);
    close_out(out, path);
  });
}

void urf_fed_report_free(urf_fed_report* r) { delete r; }

}  // extern "C"
