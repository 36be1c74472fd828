#include "federated.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "error.hpp"
#include "metrics.hpp"
#include "rng.hpp"

namespace urf {

using json = nlohmann::ordered_json;

namespace {

json tree_to_json(const Tree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    json node;
    node["id"] = n.id;
    node["leaf"] = n.leaf;
    node["feature"] = n.leaf ? json() : json(n.feature);
    node["threshold"] = n.leaf ? json() : json(n.threshold);
    node["left"] = n.leaf ? json() : json(n.left);
    node["right"] = n.leaf ? json() : json(n.right);
    nodes.push_back(std::move(node));
  }
  json j;
  j["layer_index"] = t.layer_index;
  j["seed"] = t.seed;
  j["nodes"] = std::move(nodes);
  return j;
}

template <class T>
T get_field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorCode::Parse, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("bad field '") + key + "': " + e.what());
  }
}

const json& get_array(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_array())
    fail(ErrorCode::Parse, std::string("missing array '") + key + "'");
  return j[key];
}

Tree tree_from_json(const json& j) {
  Tree t;
  t.layer_index = get_field<int>(j, "layer_index");
  t.seed = get_field<std::uint64_t>(j, "seed");
  const json& nodes = get_array(j, "nodes");
  require(nodes.is_array() && !nodes.empty(), ErrorCode::Parse, "tree without nodes");
  for (const auto& nj : nodes) {
    TreeNode n;
    n.id = get_field<int>(nj, "id");
    n.leaf = get_field<bool>(nj, "leaf");
    if (!n.leaf) {
      n.feature = get_field<int>(nj, "feature");
      n.threshold = get_field<double>(nj, "threshold");
      n.left = get_field<int>(nj, "left");
      n.right = get_field<int>(nj, "right");
    }
    t.nodes.push_back(n);
  }
  // Structure checks: ids are positions, children come after their parent.
  const int m = static_cast<int>(t.nodes.size());
  std::vector<int> parents(t.nodes.size(), 0);
  for (int i = 0; i < m; ++i) {
    TreeNode& n = t.nodes[static_cast<std::size_t>(i)];
    require(n.id == i, ErrorCode::Parse, "node ids must equal their position");
    if (n.leaf) continue;
    require(n.feature >= 0, ErrorCode::Parse, "negative split feature");
    require(std::isfinite(n.threshold), ErrorCode::Parse, "non-finite threshold");
    require(n.left > i && n.left < m && n.right > i && n.right < m && n.left != n.right, ErrorCode::Parse,
            "invalid child links in node " + std::to_string(i));
    ++parents[static_cast<std::size_t>(n.left)];
    ++parents[static_cast<std::size_t>(n.right)];
  }
  for (int i = 1; i < m; ++i) {
    require(parents[static_cast<std::size_t>(i)] == 1, ErrorCode::Parse, "node " + std::to_string(i) + " is not a tree node");
  }
  for (auto& n : t.nodes) {
    if (n.leaf) continue;
    t.nodes[static_cast<std::size_t>(n.left)].depth = n.depth + 1;
    t.nodes[static_cast<std::size_t>(n.right)].depth = n.depth + 1;
  }
  return t;
}

json bundle_json(const ModelBundle& b) {
  json j;
  j["format_version"] = b.format_version;
  j["client_id"] = b.client_id;
  j["config"] = {{"n_trees", b.config.n_trees},
                 {"mtry", b.config.mtry},
                 {"min_leaf", b.config.min_leaf},
                 {"bootstrap", b.config.bootstrap},
                 {"seed", b.config.seed}};
  json layers = json::array();
  for (const auto& l : b.layers) layers.push_back({{"layer_index", l.layer_index}, {"n_features", l.n_features}});
  j["layers"] = std::move(layers);
  json trees = json::array();
  for (const auto& t : b.trees) trees.push_back(tree_to_json(t));
  j["trees"] = std::move(trees);
  return j;
}

ModelBundle bundle_from(const json& j) {
  ModelBundle b;
  b.format_version = get_field<int>(j, "format_version");
  require(b.format_version == kFormatVersion, ErrorCode::VersionMismatch,
          "unsupported model format version " + std::to_string(b.format_version));
  b.client_id = get_field<std::string>(j, "client_id");
  if (!j.is_object() || !j.contains("config") || !j["config"].is_object())
    fail(ErrorCode::Parse, "missing object 'config'");
  const json& cfg = j["config"];
  b.config.n_trees = get_field<std::size_t>(cfg, "n_trees");
  b.config.mtry = get_field<std::size_t>(cfg, "mtry");
  b.config.min_leaf = get_field<std::size_t>(cfg, "min_leaf");
  b.config.bootstrap = get_field<bool>(cfg, "bootstrap");
  b.config.seed = get_field<std::uint64_t>(cfg, "seed");
  for (const auto& lj : get_array(j, "layers")) {
    b.layers.push_back({get_field<int>(lj, "layer_index"), get_field<std::size_t>(lj, "n_features")});
  }
  for (const auto& tj : get_array(j, "trees")) b.trees.push_back(tree_from_json(tj));
  b.validate();
  return b;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("invalid JSON: ") + e.what());
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorCode::Io, "write failure on '" + path + "'");
}

}  // namespace

// ---------------------------------------------------------------------------

void ModelBundle::validate() const {
  require(!trees.empty(), ErrorCode::EmptyBundle, "model bundle has no trees");
  require(!layers.empty(), ErrorCode::InvalidArgument, "model bundle declares no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    require(layers[l].layer_index == static_cast<int>(l), ErrorCode::Parse, "layer indices must be 0..L-1 in order");
  }
  for (const auto& t : trees) {
    require(t.layer_index >= 0 && t.layer_index < static_cast<int>(layers.size()), ErrorCode::OutOfRange,
            "tree refers to an undeclared layer");
    require(t.max_feature() < static_cast<int>(layers[static_cast<std::size_t>(t.layer_index)].n_features),
            ErrorCode::FeatureMismatch, "tree split feature exceeds its layer's feature count");
  }
}

ModelBundle export_model(std::span<const Forest> forests, const std::string& client_id) {
  require(!forests.empty(), ErrorCode::InvalidArgument, "no forests to export");
  ModelBundle b;
  b.client_id = client_id;
  b.config = forests.front().config;
  for (std::size_t l = 0; l < forests.size(); ++l) {
    b.layers.push_back({static_cast<int>(l), forests[l].n_features});
    for (const auto& t : forests[l].trees) {
      require(t.layer_index == static_cast<int>(l), ErrorCode::InvalidArgument,
              "forest " + std::to_string(l) + " holds a tree trained on another layer");
      b.trees.push_back(t);
    }
  }
  b.validate();
  return b;
}

std::string bundle_to_json(const ModelBundle& b) { return bundle_json(b).dump(1); }
ModelBundle bundle_from_json(const std::string& text) { return bundle_from(parse_json(text)); }
void write_bundle(const std::string& path, const ModelBundle& b) { spit(path, bundle_to_json(b)); }
ModelBundle read_bundle(const std::string& path) { return bundle_from_json(slurp(path)); }

std::vector<Forest> bundle_forests(const ModelBundle& b) {
  std::vector<Forest> out(b.layers.size());
  for (std::size_t l = 0; l < b.layers.size(); ++l) {
    out[l].config = b.config;
    out[l].n_features = b.layers[l].n_features;
  }
  for (const auto& t : b.trees) out[static_cast<std::size_t>(t.layer_index)].trees.push_back(t);
  for (auto& f : out) f.config.n_trees = f.trees.size();
  return out;
}

GlobalModel merge_models(std::vector<ModelBundle> bundles) {
  require(!bundles.empty(), ErrorCode::EmptyBundle, "nothing to merge");
  std::set<std::string> clients;
  GlobalModel g;
  for (const auto& b : bundles) {
    b.validate();
    require(clients.insert(b.client_id).second, ErrorCode::DuplicateClient, "duplicate client id '" + b.client_id + "'");
    require(b.layers.size() == bundles.front().layers.size(), ErrorCode::FeatureMismatch,
            "bundles disagree on the number of layers");
    for (std::size_t l = 0; l < b.layers.size(); ++l) {
      require(b.layers[l].n_features == bundles.front().layers[l].n_features, ErrorCode::FeatureMismatch,
              "bundles disagree on the feature count of layer " + std::to_string(l));
    }
    g.total_trees += b.trees.size();
  }
  g.bundles = std::move(bundles);
  return g;
}

std::string global_to_json(const GlobalModel& g) {
  json j;
  j["format_version"] = kFormatVersion;
  j["total_trees"] = g.total_trees;
  json bundles = json::array();
  for (const auto& b : g.bundles) bundles.push_back(bundle_json(b));
  j["bundles"] = std::move(bundles);
  return j.dump(1);
}

GlobalModel global_from_json(const std::string& text) {
  const json j = parse_json(text);
  const int version = get_field<int>(j, "format_version");
  require(version == kFormatVersion, ErrorCode::VersionMismatch,
          "unsupported model format version " + std::to_string(version));
  std::vector<ModelBundle> bundles;
  for (const auto& bj : get_array(j, "bundles")) bundles.push_back(bundle_from(bj));
  GlobalModel g = merge_models(std::move(bundles));
  require(g.total_trees == get_field<std::size_t>(j, "total_trees"), ErrorCode::Parse,
          "total_trees does not match the bundled trees");
  return g;
}

void write_global(const std::string& path, const GlobalModel& g) { spit(path, global_to_json(g)); }
GlobalModel read_global(const std::string& path) { return global_from_json(slurp(path)); }

CountMatrix global_counts(const GlobalModel& g, std::span<const OmicsMatrix> local_layers) {
  require(!g.bundles.empty(), ErrorCode::InvalidArgument, "empty global model");
  const auto& layers = g.bundles.front().layers;
  require(local_layers.size() == layers.size(), ErrorCode::FeatureMismatch,
          "client has " + std::to_string(local_layers.size()) + " layers, model expects " +
              std::to_string(layers.size()));
  std::vector<CountMatrix> counts;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    require(local_layers[l].n_features() == layers[l].n_features, ErrorCode::FeatureMismatch,
            "layer " + std::to_string(l) + " has " + std::to_string(local_layers[l].n_features()) +
                " features, model expects " + std::to_string(layers[l].n_features));
    std::vector<Tree> trees;
    for (const auto& b : g.bundles) {
      for (const auto& t : b.trees) {
        if (t.layer_index == static_cast<int>(l)) trees.push_back(t);
      }
    }
    if (trees.empty()) continue;
    counts.push_back(count_matrix(assign_leaves(std::span<const Tree>(trees), local_layers[l]),
                                  local_layers[l].sample_ids()));
  }
  return sum_counts(counts);
}

AffinityMatrix global_affinity(const GlobalModel& g, const MultiOmicsDataset& local) {
  local.validate();
  return normalize(global_counts(g, local.layers));
}

// ---------------------------------------------------------------------------

std::string ClientRecord::winner(EvalMode mode) const {
  if (!std::isfinite(local_metric) || !std::isfinite(global_metric)) return "na";
  if (local_metric == global_metric) return "tie";
  const bool global_better = mode == EvalMode::Ari ? global_metric > local_metric : global_metric < local_metric;
  return global_better ? "global" : "local";
}

std::size_t FederationReport::count(const std::string& winner) const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [&](const ClientRecord& r) { return r.winner(mode) == winner; }));
}

namespace {

MultiOmicsDataset standardized(MultiOmicsDataset d) {
  for (auto& layer : d.layers) layer = standardize(layer);
  return d;
}

double evaluate(EvalMode mode, const MultiOmicsDataset& client, const ClusterAssignment& labels,
                const std::vector<int>& reference) {
  if (mode == EvalMode::Ari) return ari(std::span<const int>(labels.labels), std::span<const int>(reference));
  try {
    return logrank_test(*client.survival, labels).p_value;
  } catch (const Error&) {
    // e.g. every record of this client censored
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

FederationReport simulate(const MultiOmicsDataset& d, const SimulationConfig& cfg, const ClusterAssignment* reference) {
  d.validate();
  require(cfg.n_clients >= 1, ErrorCode::InvalidArgument, "federated simulation needs at least one client");
  require(cfg.iterations >= 1, ErrorCode::InvalidArgument, "iterations must be positive");
  require(cfg.mode != EvalMode::LogRank || d.survival.has_value(), ErrorCode::InvalidArgument,
          "log-rank evaluation needs survival data");
  if (reference) {
    require(reference->labels.size() == d.n_samples() &&
                (reference->sample_ids.empty() || reference->sample_ids == d.sample_ids()),
            ErrorCode::SampleMismatch, "reference labels do not match the dataset samples");
  }
  const std::size_t pool_size = cfg.subsample.value_or(d.n_samples());
  require(pool_size <= d.n_samples(), ErrorCode::InvalidArgument, "subsample exceeds the sample count");
  require(pool_size / cfg.n_clients >= 2 * cfg.forest.min_leaf, ErrorCode::InsufficientSamples,
          "clients would hold fewer than 2*min_leaf samples");

  FederationReport report;
  report.mode = cfg.mode;
  report.seed = cfg.seed;
  report.n_clients = cfg.n_clients;
  report.iterations = cfg.iterations;

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const std::uint64_t iter_seed = derive_seed(cfg.seed, {it});

    std::vector<std::size_t> pool_idx(d.n_samples());
    std::iota(pool_idx.begin(), pool_idx.end(), std::size_t{0});
    if (cfg.subsample) {
      Rng rng(derive_seed(iter_seed, {0}));
      for (std::size_t j = 0; j < pool_size; ++j) {
        std::swap(pool_idx[j], pool_idx[j + static_cast<std::size_t>(rng.below(pool_idx.size() - j))]);
      }
      pool_idx.resize(pool_size);
      std::sort(pool_idx.begin(), pool_idx.end());
    }
    MultiOmicsDataset pool = d.select_samples(pool_idx);
    if (!cfg.standardize_per_client) pool = standardized(std::move(pool));

    std::vector<int> pool_reference;
    if (reference) {
      for (auto i : pool_idx) pool_reference.push_back(reference->labels[i]);
    } else if (cfg.mode == EvalMode::Ari) {
      const MultiOmicsDataset pooled = cfg.standardize_per_client ? standardized(pool) : pool;
      ForestConfig fc = cfg.forest;
      fc.seed = derive_seed(iter_seed, {1});
      const auto forests = train_layers(pooled.layers, fc);
      const auto dist = to_distance(normalize(fused_counts(forests, pooled.layers)));
      pool_reference = cluster_distance(dist, cfg.k).labels.labels;
    }

    const auto parts = partition_indices(pool.n_samples(), cfg.n_clients, derive_seed(iter_seed, {2}));
    std::vector<MultiOmicsDataset> clients;
    std::vector<ModelBundle> bundles;
    std::vector<ClientRecord> records;
    for (std::size_t c = 0; c < parts.size(); ++c) {
      MultiOmicsDataset local = pool.select_samples(parts[c]);
      if (cfg.standardize_per_client) local = standardized(std::move(local));
      ForestConfig fc = cfg.forest;
      fc.seed = derive_seed(iter_seed, {3, c});
      const auto forests = train_layers(local.layers, fc);
      const auto dist = to_distance(normalize(fused_counts(forests, local.layers)));
      const Clustering clus = cluster_distance(dist, cfg.k);

      ClientRecord rec;
      rec.iteration = it;
      rec.client_id = "client_" + std::to_string(c);
      rec.sample_ids = local.sample_ids();
      rec.k_local = clus.labels.k;
      rec.labels_local = clus.labels.labels;
      std::vector<int> ref;
      for (auto i : parts[c]) {
        if (!pool_reference.empty()) ref.push_back(pool_reference[i]);
      }
      rec.local_metric = evaluate(cfg.mode, local, clus.labels, ref);

      bundles.push_back(export_model(forests, rec.client_id));
      clients.push_back(std::move(local));
      records.push_back(std::move(rec));
    }

    const GlobalModel global = merge_models(std::move(bundles));
    for (std::size_t c = 0; c < clients.size(); ++c) {
      const auto dist = to_distance(global_affinity(global, clients[c]));
      const Clustering clus = cluster_distance(dist, cfg.k);
      ClientRecord& rec = records[c];
      rec.k_global = clus.labels.k;
      rec.labels_global = clus.labels.labels;
      std::vector<int> ref;
      for (auto i : parts[c]) {
        if (!pool_reference.empty()) ref.push_back(pool_reference[i]);
      }
      rec.global_metric = evaluate(cfg.mode, clients[c], clus.labels, ref);
      report.records.push_back(std::move(rec));
    }
  }
  return report;
}

std::string report_to_json(const FederationReport& r) {
  json j;
  j["mode"] = r.mode == EvalMode::Ari ? "ari" : "logrank";
  j["seed"] = r.seed;
  j["n_clients"] = r.n_clients;
  j["iterations"] = r.iterations;
  j["summary"] = {{"global", r.count("global")}, {"local", r.count("local")}, {"tie", r.count("tie")}, {"na", r.count("na")}};
  json recs = json::array();
  auto metric = [](double v) { return std::isfinite(v) ? json(v) : json(); };
  for (const auto& rec : r.records) {
    recs.push_back({{"iteration", rec.iteration},
                    {"client_id", rec.client_id},
                    {"n_samples", rec.sample_ids.size()},
                    {"local_metric", metric(rec.local_metric)},
                    {"global_metric", metric(rec.global_metric)},
                    {"k_local", rec.k_local},
                    {"k_global", rec.k_global},
                    {"winner", rec.winner(r.mode)},
                    {"sample_ids", rec.sample_ids},
                    {"labels_local", rec.labels_local},
                    {"labels_global", rec.labels_global}});
  }
  j["records"] = std::move(recs);
  return j.dump(2);
}

void write_winloss_csv(std::ostream& out, const FederationReport& r) {
  out << "iteration,client_id,n_samples,k_local,k_global,local_metric,global_metric,winner\n";
  for (const auto& rec : r.records) {
    out << rec.iteration << ',' << rec.client_id << ',' << rec.sample_ids.size() << ',' << rec.k_local << ','
        << rec.k_global << ',' << format_double(rec.local_metric) << ',' << format_double(rec.global_metric) << ','
        << rec.winner(r.mode) << '\n';
  }
}

}  // namespace urf
