#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "affinity.hpp"
#include "cluster.hpp"
#include "data.hpp"
#include "forest.hpp"

namespace urf {

// mtry == 0 means ceil(sqrt(p)) for each layer.
ForestConfig resolve_config(const ForestConfig& cfg, std::size_t n_features);

// Layer l uses a seed derived from (cfg.seed, l) and layer_index l.
std::vector<Forest> train_layers(std::span<const OmicsMatrix> layers, const ForestConfig& cfg);

// Count matrices of each forest on its own layer, summed.
CountMatrix fused_counts(std::span<const Forest> forests, std::span<const OmicsMatrix> layers);

struct KChoice {
  std::optional<int> fixed_k;  // silhouette over [k_min, k_max] otherwise
  int k_min = 2;
  int k_max = 6;
};

struct Clustering {
  Dendrogram dendrogram;
  ClusterAssignment labels;
  std::optional<KSelection> selection;
};

// Ward + cut. The silhouette upper bound is clamped to n-1.
Clustering cluster_distance(const DistanceMatrix& d, const KChoice& choice);

}  // namespace urf
