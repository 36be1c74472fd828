// Command-line front end. Talks to the library through the C interface only.
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "urf/urf.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct LibraryFailure {
  int status;
  std::string message;
};

struct UsageFailure {
  std::string message;
};

void check(int status) {
  if (status != URF_OK) throw LibraryFailure{status, urf_last_error()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
template <class T, void (*Free)(T*)>
using Handle = std::unique_ptr<T, Deleter<T, Free>>;

using Matrix = Handle<urf_matrix, urf_matrix_free>;
using Survival = Handle<urf_survival, urf_survival_free>;
using ForestH = Handle<urf_forest, urf_forest_free>;
using Counts = Handle<urf_counts, urf_counts_free>;
using Square = Handle<urf_square, urf_square_free>;
using DendrogramH = Handle<urf_dendrogram, urf_dendrogram_free>;
using Labels = Handle<urf_labels, urf_labels_free>;
using Stability = Handle<urf_stability, urf_stability_free>;
using Bundle = Handle<urf_bundle, urf_bundle_free>;
using Global = Handle<urf_global, urf_global_free>;
using FedReport = Handle<urf_fed_report, urf_fed_report_free>;

std::string take_string(char* s) {
  std::string out(s);
  urf_string_free(s);
  return out;
}

// ---------------------------------------------------------------------------
// Shared options

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  unsigned threads = 0;
};

struct InputOpts {
  std::vector<std::string> layers;
  std::string survival;
  bool transpose = false;
  std::string delimiter = "comma";
  double max_missing = 0.2;
  std::size_t impute_k = 5;
  std::size_t top_features = 0;
  bool no_standardize = false;
};

struct ForestOpts {
  std::size_t trees = 500;
  std::size_t mtry = 0;
  std::size_t min_leaf = 5;
  bool no_bootstrap = false;
};

struct KOpts {
  std::optional<int> k;
  int k_min = 2;
  int k_max = 6;
  std::string mode;  // resolved below
  int stability_reps = 20;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Master seed (falls back to URF_SEED, then 0)");
  app->add_option("--out", c.out, "Output directory")->capture_default_str();
  app->add_option("--threads", c.threads, "Worker threads, 0 = all cores")->capture_default_str();
}

void add_inputs(CLI::App* app, InputOpts& in, bool survival = true) {
  app->add_option("--layer", in.layers, "Omics matrix CSV, repeat per layer")->required()->check(CLI::ExistingFile);
  if (survival) app->add_option("--survival", in.survival, "Survival CSV (sample_id,time,event)")->check(CLI::ExistingFile);
  app->add_flag("--transpose", in.transpose, "Input files are feature-major");
  app->add_option("--delimiter", in.delimiter, "Cell delimiter")
      ->check(CLI::IsMember({"comma", "tab"}))
      ->capture_default_str();
  app->add_option("--max-missing", in.max_missing, "Drop samples/features above this missing fraction")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app->add_option("--impute-k", in.impute_k, "Neighbours for kNN imputation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--top-features", in.top_features, "Keep this many highest-variance features, 0 = all")
      ->capture_default_str();
  app->add_flag("--no-standardize", in.no_standardize, "Skip z-scoring");
}

void add_forest(CLI::App* app, ForestOpts& f) {
  app->add_option("--trees", f.trees, "Trees per layer")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--mtry", f.mtry, "Candidate features per node, 0 = ceil(sqrt(p))")->capture_default_str();
  app->add_option("--min-leaf", f.min_leaf, "Minimum samples per child")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_flag("--no-bootstrap", f.no_bootstrap, "Grow every tree on all samples");
}

void add_k(CLI::App* app, KOpts& k, bool stability) {
  app->add_option("--k", k.k, "Fixed number of clusters")->check(CLI::Range(1, 1000000));
  app->add_option("--k-min", k.k_min, "Smallest k considered")->check(CLI::Range(2, 1000000))->capture_default_str();
  app->add_option("--k-max", k.k_max, "Largest k considered")->check(CLI::Range(2, 1000000))->capture_default_str();
  std::vector<std::string> modes{"silhouette", "fixed"};
  if (stability) {
    modes.push_back("stability");
    app->add_option("--stability-reps", k.stability_reps, "Tree subsets drawn per budget")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }
  app->add_option("--k-mode", k.mode, "How k is chosen")->check(CLI::IsMember(modes));
}

void resolve_k(KOpts& k) {
  if (k.mode.empty()) k.mode = k.k ? "fixed" : "silhouette";
  if (k.mode == "fixed" && !k.k) throw UsageFailure{"--k-mode fixed requires --k"};
  if (k.mode != "fixed" && k.k) throw UsageFailure{"--k conflicts with --k-mode " + k.mode};
  if (k.k_min > k.k_max) throw UsageFailure{"--k-min exceeds --k-max"};
}

std::uint64_t resolve_seed(const Common& c) {
  if (c.seed) return *c.seed;
  if (const char* env = std::getenv("URF_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageFailure{"URF_SEED is not an unsigned integer"};
  }
  return 0;
}

urf_forest_config forest_config(const ForestOpts& f, std::uint64_t seed) {
  return {f.trees, f.mtry, f.min_leaf, f.no_bootstrap ? 0 : 1, seed};
}

std::vector<Matrix> load_layers(const InputOpts& in, bool standardize) {
  urf_preprocess_config pc;
  urf_preprocess_config_default(&pc);
  pc.max_missing_fraction = in.max_missing;
  pc.impute_k = in.impute_k;
  pc.top_variance_features = in.top_features;
  pc.standardize = standardize && !in.no_standardize ? 1 : 0;
  std::vector<Matrix> out;
  for (const auto& path : in.layers) {
    urf_matrix* raw = nullptr;
    check(urf_matrix_load(path.c_str(), in.delimiter == "tab" ? '\t' : ',', in.transpose ? 1 : 0, &raw));
    Matrix loaded(raw);
    urf_matrix* pre = nullptr;
    check(urf_matrix_preprocess(loaded.get(), &pc, &pre));
    out.emplace_back(pre);
  }
  return out;
}

std::vector<const urf_matrix*> views(const std::vector<Matrix>& layers) {
  std::vector<const urf_matrix*> v;
  for (const auto& l : layers) v.push_back(l.get());
  return v;
}

Survival load_survival(const std::string& path) {
  if (path.empty()) return nullptr;
  urf_survival* s = nullptr;
  check(urf_survival_load(path.c_str(), &s));
  return Survival(s);
}

fs::path out_dir(const Common& c) {
  fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw LibraryFailure{URF_E_IO, "cannot create output directory '" + c.out + "': " + ec.message()};
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out) throw LibraryFailure{URF_E_IO, "cannot write '" + path.string() + "'"};
}

json input_meta(const InputOpts& in) {
  return {{"layers", in.layers},
          {"survival", in.survival.empty() ? json() : json(in.survival)},
          {"transpose", in.transpose},
          {"delimiter", in.delimiter},
          {"preprocess",
           {{"max_missing_fraction", in.max_missing},
            {"impute_k", in.impute_k},
            {"top_variance_features", in.top_features},
            {"standardize", !in.no_standardize}}}};
}

json forest_meta(const urf_forest_config& f) {
  return {{"n_trees", f.n_trees},
          {"mtry", f.mtry == 0 ? json("auto") : json(f.mtry)},
          {"min_leaf", f.min_leaf},
          {"bootstrap", f.bootstrap != 0},
          {"seed", f.seed}};
}

// Every run records its arguments with the seed made explicit so that
// `urf replay run_meta.json` reproduces it.
struct Meta {
  std::vector<std::string> argv;
  json doc;
};

void write_meta(const fs::path& dir, Meta meta, const std::string& command, std::uint64_t seed, const json& config) {
  std::vector<std::string> args = meta.argv;
  if (std::find(args.begin(), args.end(), "--seed") == args.end()) {
    args.push_back("--seed");
    args.push_back(std::to_string(seed));
  }
  json j;
  j["tool"] = "urf";
  j["version"] = urf_version();
  j["command"] = command;
  j["argv"] = args;
  j["seed"] = seed;
  j["threads"] = urf_threads();
  j["config"] = config;
  write_text(dir / "run_meta.json", j.dump(2));
}

// ---------------------------------------------------------------------------
// Clustering shared by `cluster`

struct ClusterResult {
  DendrogramH dendrogram;
  Labels labels;
  json selection;
};

ClusterResult cluster_distance(const urf_square* dist, const KOpts& k, std::optional<int> forced_k = {}) {
  ClusterResult r;
  urf_dendrogram* dend = nullptr;
  check(urf_ward(dist, &dend));
  r.dendrogram.reset(dend);
  const int n = static_cast<int>(urf_square_n(dist));
  int chosen = 0;
  if (forced_k) {
    chosen = *forced_k;
  } else if (k.k) {
    chosen = *k.k;
  } else {
    const int hi = std::min(k.k_max, n - 1);
    if (hi < k.k_min) throw LibraryFailure{URF_E_INSUFFICIENT_SAMPLES, "too few samples for the requested k range"};
    std::vector<double> scores(static_cast<std::size_t>(hi - k.k_min + 1));
    check(urf_select_k(dist, dend, k.k_min, hi, &chosen, scores.data()));
    json arr = json::array();
    for (int kk = k.k_min; kk <= hi; ++kk) {
      arr.push_back({{"k", kk}, {"mean_silhouette", scores[static_cast<std::size_t>(kk - k.k_min)]}});
    }
    r.selection = std::move(arr);
  }
  urf_labels* labels = nullptr;
  check(urf_cut(dend, dist, chosen, &labels));
  r.labels.reset(labels);
  return r;
}

// ---------------------------------------------------------------------------
// cluster

struct ClusterCmd {
  Common common;
  InputOpts in;
  ForestOpts forest;
  KOpts k;
  std::string model;
  std::string tree_grid = "500,400,300,200,100,50";
};

std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(cell, &used);
      if (used != cell.size() || v == 0) throw std::invalid_argument(cell);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageFailure{"bad tree budget '" + cell + "'"};
    }
  }
  if (out.empty()) throw UsageFailure{"empty tree grid"};
  return out;
}

int run_cluster(ClusterCmd& c, const Meta& meta) {
  resolve_k(c.k);
  if (!c.model.empty() && c.k.mode == "stability") throw UsageFailure{"--k-mode stability needs a locally trained forest"};
  if (c.k.mode == "stability" && c.in.layers.size() != 1) throw UsageFailure{"--k-mode stability takes one --layer"};
  const std::uint64_t seed = resolve_seed(c.common);
  urf_set_threads(c.common.threads);
  const fs::path dir = out_dir(c.common);

  auto layers = load_layers(c.in, true);
  const auto lv = views(layers);
  const urf_forest_config fc = forest_config(c.forest, seed);

  ForestH forest;
  urf_counts* counts = nullptr;
  if (c.model.empty()) {
    urf_forest* f = nullptr;
    check(urf_forest_train(lv.data(), lv.size(), &fc, &f));
    forest.reset(f);
    check(urf_forest_counts(f, lv.data(), lv.size(), &counts));
  } else {
    urf_global* g = nullptr;
    check(urf_global_read(c.model.c_str(), &g));
    Global global(g);
    check(urf_global_counts(g, lv.data(), lv.size(), &counts));
  }
  Counts counts_h(counts);
  urf_square* aff = nullptr;
  check(urf_counts_normalize(counts, &aff));
  Square affinity(aff);
  urf_square* dst = nullptr;
  check(urf_affinity_to_distance(aff, &dst));
  Square distance(dst);

  json stability_meta;
  std::optional<int> forced_k;
  if (c.k.mode == "stability") {
    std::vector<std::size_t> grid = parse_grid(c.tree_grid);
    grid.erase(std::remove_if(grid.begin(), grid.end(), [&](std::size_t t) { return t > c.forest.trees; }), grid.end());
    if (std::find(grid.begin(), grid.end(), c.forest.trees) == grid.end()) grid.push_back(c.forest.trees);
    std::sort(grid.rbegin(), grid.rend());
    std::vector<int> ks;
    for (int kk = c.k.k_min; kk <= c.k.k_max; ++kk) ks.push_back(kk);
    urf_stability* st = nullptr;
    check(urf_stability_run(forest.get(), 0, lv[0], ks.data(), ks.size(), grid.data(), grid.size(), c.k.stability_reps,
                            seed, &st));
    Stability stab(st);
    char* text = nullptr;
    check(urf_stability_to_json(st, &text));
    write_text(dir / "stability.json", take_string(text));
    int found = 0, sk = 0;
    check(urf_stability_suggested_k(st, &found, &sk));
    forced_k = found ? sk : c.k.k_min;
    stability_meta = {{"tree_grid", grid}, {"reps", c.k.stability_reps}, {"suggested", found ? json(sk) : json()}};
  }

  ClusterResult res = cluster_distance(distance.get(), c.k, forced_k);
  const int k = urf_labels_k(res.labels.get());

  check(urf_square_write_csv(affinity.get(), (dir / "affinity.csv").c_str()));
  check(urf_square_write_csv(distance.get(), (dir / "distance.csv").c_str()));
  check(urf_dendrogram_write_csv(res.dendrogram.get(), (dir / "dendrogram.csv").c_str()));
  check(urf_labels_write_csv(res.labels.get(), (dir / "labels.csv").c_str()));

  json sil;
  sil["k"] = k;
  sil["k_mode"] = c.k.mode;
  if (!res.selection.is_null()) sil["candidates"] = res.selection;
  const std::size_t n = urf_labels_n(res.labels.get());
  if (k >= 2) {
    double mean = 0.0;
    std::vector<double> per(n);
    check(urf_silhouette(distance.get(), res.labels.get(), &mean, per.data()));
    sil["mean_silhouette"] = mean;
    sil["per_sample"] = per;
  } else {
    sil["mean_silhouette"] = nullptr;
  }
  write_text(dir / "silhouette.json", sil.dump(2));

  json survival_meta;
  if (auto surv = load_survival(c.in.survival)) {
    if (k >= 2) {
      double chi = 0.0, p = 1.0;
      int df = 0;
      check(urf_logrank(surv.get(), res.labels.get(), &chi, &df, &p));
      write_text(dir / "logrank.json",
                 json{{"k", k}, {"chi_square", chi}, {"degrees_of_freedom", df}, {"p_value", p}}.dump(2));
    }
    check(urf_km_write_csv(surv.get(), res.labels.get(), (dir / "km.csv").c_str()));
  }

  json cfg;
  cfg["input"] = input_meta(c.in);
  cfg["forest"] = forest_meta(fc);
  cfg["model"] = c.model.empty() ? json() : json(c.model);
  cfg["k_selection"] = {{"mode", c.k.mode}, {"k_min", c.k.k_min}, {"k_max", c.k.k_max}, {"k", k}};
  if (!stability_meta.is_null()) cfg["stability"] = stability_meta;
  cfg["n_samples"] = n;
  write_meta(dir, meta, "cluster", seed, cfg);
  return 0;
}

// ---------------------------------------------------------------------------
// importance

struct ImportanceCmd {
  Common common;
  InputOpts in;
  ForestOpts forest;
  std::string labels;
};

int run_importance(ImportanceCmd& c, const Meta& meta) {
  const std::uint64_t seed = resolve_seed(c.common);
  urf_set_threads(c.common.threads);
  const fs::path dir = out_dir(c.common);

  auto layers = load_layers(c.in, true);
  const auto lv = views(layers);
  urf_labels* l = nullptr;
  check(urf_labels_load(c.labels.c_str(), lv[0], &l));
  Labels labels(l);
  for (std::size_t i = 1; i < lv.size(); ++i) {
    urf_labels* other = nullptr;
    check(urf_labels_load(c.labels.c_str(), lv[i], &other));
    urf_labels_free(other);
  }

  const urf_forest_config fc = forest_config(c.forest, seed);
  urf_forest* f = nullptr;
  check(urf_forest_train(lv.data(), lv.size(), &fc, &f));
  ForestH forest(f);
  check(urf_importance_write(f, lv.data(), lv.size(), l, (dir / "importance.csv").c_str(), (dir / "importance_corr.csv").c_str()));

  if (auto surv = load_survival(c.in.survival)) check(urf_km_write_csv(surv.get(), l, (dir / "km.csv").c_str()));

  json cfg;
  cfg["input"] = input_meta(c.in);
  cfg["forest"] = forest_meta(fc);
  cfg["labels"] = c.labels;
  cfg["k"] = urf_labels_k(l);
  write_meta(dir, meta, "importance", seed, cfg);
  return 0;
}

// ---------------------------------------------------------------------------
// fed-sim

struct FedCmd {
  Common common;
  InputOpts in;
  ForestOpts forest;
  KOpts k;
  std::size_t clients = 3;
  std::size_t iterations = 50;
  std::string mode = "ari";
  std::string reference;
  std::size_t subsample = 0;
  bool pooled_standardize = false;
};

int run_fed(FedCmd& c, const Meta& meta) {
  resolve_k(c.k);
  if (c.mode == "logrank" && c.in.survival.empty()) throw UsageFailure{"--mode logrank requires --survival"};
  const std::uint64_t seed = resolve_seed(c.common);
  urf_set_threads(c.common.threads);
  const fs::path dir = out_dir(c.common);

  // Filtering and imputation on the pooled data; z-scoring happens per client
  // inside the simulation unless --pooled-standardize is given.
  auto layers = load_layers(c.in, false);
  const auto lv = views(layers);
  auto surv = load_survival(c.in.survival);
  Labels reference;
  if (!c.reference.empty()) {
    urf_labels* l = nullptr;
    check(urf_labels_load(c.reference.c_str(), lv[0], &l));
    reference.reset(l);
  }

  urf_fed_config cfg;
  urf_fed_config_default(&cfg);
  cfg.n_clients = c.clients;
  cfg.forest = forest_config(c.forest, seed);
  cfg.iterations = c.iterations;
  cfg.seed = seed;
  cfg.mode = c.mode == "ari" ? URF_EVAL_ARI : URF_EVAL_LOGRANK;
  cfg.fixed_k = c.k.k ? *c.k.k : 0;
  cfg.k_min = c.k.k_min;
  cfg.k_max = c.k.k_max;
  cfg.subsample = c.subsample;
  cfg.standardize_per_client = c.in.no_standardize || c.pooled_standardize ? 0 : 1;
  if (c.pooled_standardize && !c.in.no_standardize) {
    for (auto& layer : layers) {
      urf_matrix* z = nullptr;
      check(urf_matrix_standardize(layer.get(), &z));
      layer.reset(z);
    }
  }
  const auto lv2 = views(layers);

  urf_fed_report* r = nullptr;
  check(urf_fed_simulate(lv2.data(), lv2.size(), surv.get(), reference.get(), &cfg, &r));
  FedReport report(r);
  check(urf_fed_report_write_json(r, (dir / "federation_report.json").c_str()));
  check(urf_fed_report_write_winloss(r, (dir / "winloss.csv").c_str()));

  std::cout << "global " << urf_fed_report_count(r, "global") << ", local " << urf_fed_report_count(r, "local")
            << ", tie " << urf_fed_report_count(r, "tie") << ", na " << urf_fed_report_count(r, "na") << '\n';

  json j;
  j["input"] = input_meta(c.in);
  j["forest"] = forest_meta(cfg.forest);
  j["clients"] = c.clients;
  j["iterations"] = c.iterations;
  j["mode"] = c.mode;
  j["reference"] = c.reference.empty() ? json() : json(c.reference);
  j["subsample"] = c.subsample == 0 ? json() : json(c.subsample);
  j["standardize"] = c.in.no_standardize ? "none" : (c.pooled_standardize ? "pooled" : "per_client");
  j["k_selection"] = {{"mode", c.k.mode}, {"k_min", c.k.k_min}, {"k_max", c.k.k_max}, {"k", c.k.k ? json(*c.k.k) : json()}};
  write_meta(dir, meta, "fed-sim", seed, j);
  return 0;
}

// ---------------------------------------------------------------------------
// synth and synth-bench

struct SynthCmd {
  Common common;
  std::string kind = "globular_equal";
  std::optional<double> param;
  std::size_t n_per_cluster = 100;
  std::vector<std::size_t> cluster_sizes;
  std::string spec;
};

double default_param(const std::string& kind) {
  if (kind == "globular_equal") return 0.1;
  if (kind == "globular_outliers") return 0.05;
  if (kind == "globular_varying") return 1.0;
  if (kind == "rings") return 1.0;
  return 0.1;
}

int run_synth(SynthCmd& c, const Meta& meta) {
  std::uint64_t seed = resolve_seed(c.common);
  if (!c.spec.empty()) {
    std::ifstream in(c.spec);
    json s;
    try {
      s = json::parse(in);
      if (s.contains("kind")) c.kind = s.at("kind").get<std::string>();
      if (s.contains("param")) c.param = s.at("param").get<double>();
      if (s.contains("n_per_cluster")) c.n_per_cluster = s.at("n_per_cluster").get<std::size_t>();
      if (s.contains("cluster_sizes")) c.cluster_sizes = s.at("cluster_sizes").get<std::vector<std::size_t>>();
      if (s.contains("seed") && !c.common.seed) seed = s.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
      throw LibraryFailure{URF_E_PARSE, std::string("bad scenario file: ") + e.what()};
    }
  }
  const double param = c.param.value_or(default_param(c.kind));
  const fs::path dir = out_dir(c.common);
  urf_matrix* m = nullptr;
  urf_labels* l = nullptr;
  if (c.cluster_sizes.empty()) {
    check(urf_synth_generate(c.kind.c_str(), param, c.n_per_cluster, seed, &m, &l));
  } else {
    check(urf_synth_generate_sized(c.kind.c_str(), param, c.cluster_sizes.data(), c.cluster_sizes.size(), seed, &m,
                                   &l));
  }
  Matrix data(m);
  Labels labels(l);
  check(urf_matrix_write_csv(m, (dir / "data.csv").c_str()));
  check(urf_labels_write_csv(l, (dir / "labels.csv").c_str()));
  write_meta(dir, meta, "synth", seed,
             {{"kind", c.kind},
              {"param", param},
              {"n_per_cluster", c.n_per_cluster},
              {"cluster_sizes", c.cluster_sizes},
              {"n_samples", urf_matrix_n_samples(m)}});
  return 0;
}

struct BenchCmd {
  Common common;
  std::vector<std::string> scenarios{"globular_equal", "globular_outliers", "globular_varying", "rings"};
  std::vector<double> params;
  std::size_t replicates = 30;
  ForestOpts forest{500, 1, 5, false};
};

int run_bench(BenchCmd& c, const Meta& meta) {
  const std::uint64_t seed = resolve_seed(c.common);
  urf_set_threads(c.common.threads);
  const fs::path dir = out_dir(c.common);
  std::vector<const char*> kinds;
  for (const auto& s : c.scenarios) kinds.push_back(s.c_str());
  const urf_forest_config fc = forest_config(c.forest, 0);
  std::size_t rows = 0;
  check(urf_synth_bench(kinds.data(), kinds.size(), c.params.empty() ? nullptr : c.params.data(), c.params.size(),
                        c.replicates, seed, &fc, (dir / "results.csv").c_str(), &rows));
  std::cout << rows << " rows written to " << (dir / "results.csv").string() << '\n';
  json fj = forest_meta(fc);
  fj.erase("seed");
  write_meta(dir, meta, "synth-bench", seed,
             {{"scenarios", c.scenarios},
              {"params", c.params.empty() ? json("default") : json(c.params)},
              {"replicates", c.replicates},
              {"forest", fj},
              {"rows", rows}});
  return 0;
}

// ---------------------------------------------------------------------------
// model export | merge | inspect

struct ExportCmd {
  Common common;
  InputOpts in;
  ForestOpts forest;
  std::string client_id = "client_0";
  std::string file = "bundle.json";
};

int run_export(ExportCmd& c, const Meta& meta) {
  const std::uint64_t seed = resolve_seed(c.common);
  urf_set_threads(c.common.threads);
  const fs::path dir = out_dir(c.common);
  auto layers = load_layers(c.in, true);
  const auto lv = views(layers);
  const urf_forest_config fc = forest_config(c.forest, seed);
  urf_forest* f = nullptr;
  check(urf_forest_train(lv.data(), lv.size(), &fc, &f));
  ForestH forest(f);
  urf_bundle* b = nullptr;
  check(urf_bundle_export(f, c.client_id.c_str(), &b));
  Bundle bundle(b);
  check(urf_bundle_write(b, (dir / c.file).c_str()));
  write_meta(dir, meta, "model export", seed,
             {{"input", input_meta(c.in)}, {"forest", forest_meta(fc)}, {"client_id", c.client_id}, {"file", c.file}});
  return 0;
}

struct MergeCmd {
  std::vector<std::string> bundles;
  std::string out = "global.json";
};

int run_merge(MergeCmd& c) {
  std::vector<Bundle> owned;
  std::vector<const urf_bundle*> bv;
  for (const auto& path : c.bundles) {
    urf_bundle* b = nullptr;
    check(urf_bundle_read(path.c_str(), &b));
    owned.emplace_back(b);
    bv.push_back(b);
  }
  urf_global* g = nullptr;
  check(urf_global_merge(bv.data(), bv.size(), &g));
  Global global(g);
  check(urf_global_write(g, c.out.c_str()));
  std::cout << urf_global_n_bundles(g) << " bundles, " << urf_global_n_trees(g) << " trees\n";
  return 0;
}

int run_inspect(const std::string& path) {
  char* text = nullptr;
  check(urf_model_inspect(path.c_str(), &text));
  std::cout << take_string(text) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args);

int run_replay(const std::string& path, const std::optional<std::string>& out) {
  std::ifstream in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw LibraryFailure{URF_E_PARSE, std::string("bad run_meta file: ") + e.what()};
  }
  if (!j.contains("argv") || !j["argv"].is_array()) throw LibraryFailure{URF_E_PARSE, "run_meta has no argv"};
  std::vector<std::string> args = j["argv"].get<std::vector<std::string>>();
  if (out) {
    const auto it = std::find(args.begin(), args.end(), "--out");
    if (it != args.end() && it + 1 != args.end()) {
      *(it + 1) = *out;
    } else {
      args.push_back("--out");
      args.push_back(*out);
    }
  }
  return run(args);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Unsupervised random forests with a fixation-index split rule", "urf"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(urf_version()));

  ClusterCmd cluster;
  auto* sc = app.add_subcommand("cluster", "Train, build the affinity matrix and cluster with Ward");
  add_common(sc, cluster.common);
  add_inputs(sc, cluster.in);
  add_forest(sc, cluster.forest);
  add_k(sc, cluster.k, true);
  sc->add_option("--model", cluster.model, "Cluster with a merged model instead of training")->check(CLI::ExistingFile);
  sc->add_option("--tree-grid", cluster.tree_grid, "Tree budgets for --k-mode stability")->capture_default_str();

  FedCmd fed;
  auto* sf = app.add_subcommand("fed-sim", "Simulate tree exchange between clients");
  add_common(sf, fed.common);
  add_inputs(sf, fed.in);
  add_forest(sf, fed.forest);
  add_k(sf, fed.k, false);
  sf->add_option("--clients", fed.clients, "Number of clients")->check(CLI::PositiveNumber)->capture_default_str();
  sf->add_option("--iterations", fed.iterations, "Repetitions")->check(CLI::PositiveNumber)->capture_default_str();
  sf->add_option("--mode", fed.mode, "Client metric")->check(CLI::IsMember({"ari", "logrank"}))->capture_default_str();
  sf->add_option("--reference", fed.reference, "Reference labels CSV for ARI mode")->check(CLI::ExistingFile);
  sf->add_option("--subsample", fed.subsample, "Samples drawn per iteration, 0 = all")->capture_default_str();
  sf->add_flag("--pooled-standardize", fed.pooled_standardize, "Z-score once on the pool instead of per client");

  ImportanceCmd imp;
  auto* si = app.add_subcommand("importance", "One-vs-all feature importance for given cluster labels");
  add_common(si, imp.common);
  add_inputs(si, imp.in);
  add_forest(si, imp.forest);
  si->add_option("--labels", imp.labels, "Labels CSV (sample_id,label)")->required()->check(CLI::ExistingFile);

  SynthCmd synth;
  auto* ss = app.add_subcommand("synth", "Write one synthetic scenario");
  add_common(ss, synth.common);
  ss->add_option("--kind", synth.kind, "Scenario kind")
      ->check(CLI::IsMember({"globular_equal", "globular_outliers", "globular_varying", "rings", "moons"}))
      ->capture_default_str();
  ss->add_option("--param", synth.param, "std | outlier fraction | m | ring gap | noise");
  ss->add_option("--n-per-cluster", synth.n_per_cluster, "Points per cluster")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  ss->add_option("--cluster-sizes", synth.cluster_sizes, "Per-cluster counts, overrides --n-per-cluster")
      ->check(CLI::PositiveNumber);
  ss->add_option("--spec", synth.spec, "Scenario as JSON {kind,param,n_per_cluster,cluster_sizes,seed}")
      ->check(CLI::ExistingFile);

  BenchCmd bench;
  auto* sb = app.add_subcommand("synth-bench", "Forest vs Euclidean Ward on synthetic scenarios");
  add_common(sb, bench.common);
  sb->add_option("--scenarios", bench.scenarios, "Scenario kinds")
      ->check(CLI::IsMember({"globular_equal", "globular_outliers", "globular_varying", "rings", "moons"}))
      ->capture_default_str();
  sb->add_option("--params", bench.params, "Override the parameter grid");
  sb->add_option("--replicates", bench.replicates, "Datasets per parameter")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_forest(sb, bench.forest);

  auto* sm = app.add_subcommand("model", "Export, merge or inspect tree bundles");
  sm->require_subcommand(1);
  ExportCmd exp;
  auto* sme = sm->add_subcommand("export", "Train locally and write a bundle");
  add_common(sme, exp.common);
  add_inputs(sme, exp.in, false);
  add_forest(sme, exp.forest);
  sme->add_option("--client-id", exp.client_id, "Client identifier")->capture_default_str();
  sme->add_option("--file", exp.file, "Bundle file name inside --out")->capture_default_str();
  MergeCmd merge;
  auto* smm = sm->add_subcommand("merge", "Concatenate bundles into a global model");
  smm->add_option("bundles", merge.bundles, "Bundle files")->required()->check(CLI::ExistingFile);
  smm->add_option("--out", merge.out, "Output file")->capture_default_str();
  std::string inspect_path;
  auto* smi = sm->add_subcommand("inspect", "Summarize a bundle or merged model");
  smi->add_option("path", inspect_path, "Model file")->required()->check(CLI::ExistingFile);

  std::string replay_path;
  std::optional<std::string> replay_out;
  auto* sr = app.add_subcommand("replay", "Rerun the command recorded in a run_meta.json");
  sr->add_option("path", replay_path, "run_meta.json")->required()->check(CLI::ExistingFile);
  sr->add_option("--out", replay_out, "Override the output directory");

  std::vector<const char*> argv{"urf"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "urf: " << e.what() << "\n\n";
    CLI::App* target = &app;
    for (auto* sub : {sc, sf, si, ss, sb, sm, sr}) {
      if (sub->parsed()) target = sub;
    }
    std::cerr << target->help();
    return kExitUsage;
  }

  const Meta meta{args, {}};
  if (sc->parsed()) return run_cluster(cluster, meta);
  if (sf->parsed()) return run_fed(fed, meta);
  if (si->parsed()) return run_importance(imp, meta);
  if (ss->parsed()) return run_synth(synth, meta);
  if (sb->parsed()) return run_bench(bench, meta);
  if (sme->parsed()) return run_export(exp, meta);
  if (smm->parsed()) return run_merge(merge);
  if (smi->parsed()) return run_inspect(inspect_path);
  if (sr->parsed()) return run_replay(replay_path, replay_out);
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const UsageFailure& e) {
    std::cerr << "urf: " << e.message << '\n';
    return kExitUsage;
  } catch (const LibraryFailure& e) {
    std::cerr << "urf: " << urf_status_name(e.status) << ": " << e.message << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "urf: " << e.what() << '\n';
    return kExitData;
  }
}
