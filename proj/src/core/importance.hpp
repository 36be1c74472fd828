#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cluster.hpp"
#include "forest.hpp"

namespace urf {

struct ImportanceVector {
  int cluster_id = 0;
  std::vector<double> scores;  // aligned to the layer's feature ids
  bool normalized = false;
};

// One-vs-all mean decrease in Gini impurity. Every sample is routed through
// every tree and labeled 1 iff it belongs to `cluster_id`; each internal node
// adds (N(t)/n) * [G(t) - (N_l G_l + N_r G_r) / N(t)] to its split feature.
// Scores are averaged over trees.
ImportanceVector cluster_importance(const Forest& f, const OmicsMatrix& layer, const ClusterAssignment& assignment,
                                    int cluster_id);

// Divides by the maximum score; an all-zero vector stays all zero.
ImportanceVector normalized(const ImportanceVector& v);

// Pairwise Pearson correlation of importance vectors; diagonal is 1.
std::vector<std::vector<double>> importance_correlation(std::span<const ImportanceVector> vectors);

void write_importance_csv(std::ostream& out, const std::vector<std::string>& feature_ids,
                          std::span<const ImportanceVector> vectors);
void write_correlation_csv(std::ostream& out, const std::vector<std::vector<double>>& corr);

}  // namespace urf
