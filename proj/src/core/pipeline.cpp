#include "pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "rng.hpp"

namespace urf {

ForestConfig resolve_config(const ForestConfig& cfg, std::size_t n_features) {
  ForestConfig out = cfg;
  if (out.mtry == 0) {
    out.mtry = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_features))));
  }
  out.mtry = std::min(out.mtry, n_features);
  return out;
}

std::vector<Forest> train_layers(std::span<const OmicsMatrix> layers, const ForestConfig& cfg) {
  require(!layers.empty(), ErrorCode::InvalidArgument, "no layers to train on");
  std::vector<Forest> forests;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    ForestConfig layer_cfg = resolve_config(cfg, layers[l].n_features());
    layer_cfg.seed = derive_seed(cfg.seed, {0x6c61796572ULL, l});
    forests.push_back(train_forest(layers[l], layer_cfg, static_cast<int>(l)));
  }
  return forests;
}

CountMatrix fused_counts(std::span<const Forest> forests, std::span<const OmicsMatrix> layers) {
  require(forests.size() == layers.size(), ErrorCode::InvalidArgument, "one forest per layer required");
  std::vector<CountMatrix> counts;
  for (std::size_t l = 0; l < layers.size(); ++l) counts.push_back(count_matrix(forests[l], layers[l]));
  return sum_counts(counts);
}

Clustering cluster_distance(const DistanceMatrix& d, const KChoice& choice) {
  Clustering out;
  out.dendrogram = ward_linkage(d);
  int k = 0;
  if (choice.fixed_k) {
    k = *choice.fixed_k;
  } else {
    const int k_max = std::min(choice.k_max, static_cast<int>(d.n) - 1);
    out.selection = select_k_silhouette(d, out.dendrogram, std::min(choice.k_min, k_max), k_max);
    k = out.selection->k;
  }
  out.labels = cut(out.dendrogram, k, d.sample_ids);
  return out;
}

}  // namespace urf
