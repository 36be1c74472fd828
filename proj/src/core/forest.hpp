#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "data.hpp"

namespace urf {

struct ForestConfig {
  std::size_t n_trees = 500;
  std::size_t mtry = 2;
  std::size_t min_leaf = 5;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  // Throws InvalidArgument for zero counts or mtry > n_features.
  void validate(std::size_t n_features) const;
};

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double score = 0.0;  // Fixation index, lower is better separated
  std::size_t n_left = 0;
  std::size_t n_right = 0;
};

struct TreeNode {
  int id = 0;
  bool leaf = true;
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int depth = 0;
};

// Thresholds of leaves are ignored.
bool operator==(const TreeNode& a, const TreeNode& b);

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[id].id == id, root is 0
  int layer_index = 0;
  std::uint64_t seed = 0;

  // Leaf id reached by `x`; value <= threshold goes left.
  int route(std::span<const double> x) const;
  std::size_t leaf_count() const;
  int depth() const;
  int max_feature() const;
  bool operator==(const Tree&) const = default;
};

// Growth-time bookkeeping; never part of the exchanged model.
struct GrowthTrace {
  std::vector<std::size_t> growing_set;               // sample index per draw
  std::vector<int> leaf_of;                           // leaf id per draw
  std::vector<std::optional<SplitCandidate>> splits;  // per node id
};

struct Forest {
  std::vector<Tree> trees;
  ForestConfig config;
  std::size_t n_features = 0;

  Forest subset(std::span<const std::size_t> tree_indices) const;
};

// Leaf ids per (tree, sample), stored tree-major.
struct LeafTable {
  std::size_t n_samples = 0;
  std::size_t n_trees = 0;
  std::vector<int> leaves;

  int at(std::size_t tree, std::size_t sample) const { return leaves[tree * n_samples + sample]; }
  std::span<const int> tree(std::size_t t) const { return {leaves.data() + t * n_samples, n_samples}; }
};

// Per tree, class label indexed by node id; -1 marks an unlabeled node.
using LeafLabels = std::vector<std::vector<int>>;

// Mean squared difference over ordered pairs i != j; 0 for a singleton.
double within_dispersion(std::span<const double> values);
// Mean squared difference over all cross pairs.
double between_dispersion(std::span<const double> left, std::span<const double> right);
// Mean within-dispersion of both sides over the between-dispersion.
// Throws ZeroBetweenDispersion when the sides are indistinguishable.
double fst_score(std::span<const double> left, std::span<const double> right);

// `values_by_feature[f]` holds the in-node values of feature f; only the
// entries named in `candidate_features` are read.
std::optional<SplitCandidate> best_split(const std::vector<std::vector<double>>& values_by_feature,
                                         std::span<const std::size_t> candidate_features,
                                         std::size_t min_leaf);

Tree grow_tree(const OmicsMatrix& layer, const ForestConfig& cfg, std::uint64_t tree_seed,
               int layer_index = 0, GrowthTrace* trace = nullptr);

std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t tree_index);

Forest train_forest(const OmicsMatrix& layer, const ForestConfig& cfg, int layer_index = 0);

LeafTable assign_leaves(const Forest& f, const OmicsMatrix& layer);
LeafTable assign_leaves(std::span<const Tree> trees, const OmicsMatrix& layer);

// Majority class of the samples routed into each leaf; ties go to the lower class.
LeafLabels label_leaves(const Forest& f, const OmicsMatrix& layer, std::span<const int> labels);

std::vector<int> predict_labels(const Forest& f, const LeafLabels& leaf_labels, const OmicsMatrix& layer);

}  // namespace urf
