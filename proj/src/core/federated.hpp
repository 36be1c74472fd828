#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "affinity.hpp"
#include "cluster.hpp"
#include "data.hpp"
#include "forest.hpp"
#include "pipeline.hpp"

namespace urf {

inline constexpr int kFormatVersion = 1;

struct LayerInfo {
  int layer_index = 0;
  std::size_t n_features = 0;
};

// What a client shares: split structure only, never samples.
struct ModelBundle {
  std::string client_id;
  std::vector<Tree> trees;
  std::vector<LayerInfo> layers;
  ForestConfig config;
  int format_version = kFormatVersion;

  void validate() const;
};

struct GlobalModel {
  std::vector<ModelBundle> bundles;
  std::size_t total_trees = 0;
};

// forests[l] must have been trained on layer l.
ModelBundle export_model(std::span<const Forest> forests, const std::string& client_id);

std::string bundle_to_json(const ModelBundle& b);
ModelBundle bundle_from_json(const std::string& text);
void write_bundle(const std::string& path, const ModelBundle& b);
ModelBundle read_bundle(const std::string& path);

// Per-layer forests rebuilt from a bundle.
std::vector<Forest> bundle_forests(const ModelBundle& b);

GlobalModel merge_models(std::vector<ModelBundle> bundles);

std::string global_to_json(const GlobalModel& g);
GlobalModel global_from_json(const std::string& text);
void write_global(const std::string& path, const GlobalModel& g);
GlobalModel read_global(const std::string& path);

// The client's own samples routed through every tree of every bundle, per
// matching layer. Counts cover only the client's samples.
CountMatrix global_counts(const GlobalModel& g, std::span<const OmicsMatrix> local_layers);
AffinityMatrix global_affinity(const GlobalModel& g, const MultiOmicsDataset& local);

enum class EvalMode { Ari, LogRank };

struct SimulationConfig {
  std::size_t n_clients = 3;
  ForestConfig forest{500, 0, 5, true, 0};  // mtry 0 = ceil(sqrt(p))
  std::size_t iterations = 50;
  std::uint64_t seed = 0;
  EvalMode mode = EvalMode::Ari;
  KChoice k;
  std::optional<std::size_t> subsample;  // samples drawn from the pool per iteration
  bool standardize_per_client = true;    // false: standardize once on the pool
};

struct ClientRecord {
  std::size_t iteration = 0;
  std::string client_id;
  std::vector<std::string> sample_ids;
  double local_metric = 0.0;
  double global_metric = 0.0;
  int k_local = 0;
  int k_global = 0;
  std::vector<int> labels_local;
  std::vector<int> labels_global;

  // "global", "local", "tie" or "na" when a metric is undefined.
  std::string winner(EvalMode mode) const;
};

struct FederationReport {
  EvalMode mode = EvalMode::Ari;
  std::uint64_t seed = 0;
  std::size_t n_clients = 0;
  std::size_t iterations = 0;
  std::vector<ClientRecord> records;

  std::size_t count(const std::string& winner) const;
};

// ARI mode scores against `reference` when given, otherwise against a
// clustering of the pooled samples computed before partitioning.
FederationReport simulate(const MultiOmicsDataset& d, const SimulationConfig& cfg,
                          const ClusterAssignment* reference = nullptr);

std::string report_to_json(const FederationReport& r);
void write_winloss_csv(std::ostream& out, const FederationReport& r);

}  // namespace urf
