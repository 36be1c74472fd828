#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "affinity.hpp"
#include "forest.hpp"

namespace urf {

struct ClusterAssignment {
  std::vector<int> labels;  // each in [0, k)
  int k = 0;
  std::vector<std::string> sample_ids;

  // Compacts arbitrary integer labels to 0..k-1 by ascending raw value.
  static ClusterAssignment from_raw(std::span<const int> raw, std::vector<std::string> sample_ids);
  void validate() const;
};

// Header "sample_id,label". Rows are matched to `sample_ids` by id; every
// sample needs a row and unknown ids are rejected. Integer labels are
// compacted by value, other labels by lexicographic order.
ClusterAssignment parse_labels_text(const std::string& text, const std::vector<std::string>& sample_ids);
ClusterAssignment read_labels(const std::string& path, const std::vector<std::string>& sample_ids);
void write_labels_csv(std::ostream& out, const ClusterAssignment& a);
void write_labels_csv(const std::string& path, const ClusterAssignment& a);

struct Merge {
  int a = 0;  // smaller cluster id
  int b = 0;
  double height = 0.0;
  int size = 0;
};

// Leaves are ids 0..n-1; merge m creates id n+m.
struct Dendrogram {
  std::vector<Merge> merges;
  int n_leaves = 0;
};

// Ward linkage through the Lance-Williams recurrence on squared input
// dissimilarities; heights are the square root of the merge criterion, so two
// points merge at their input distance. Ties go to the smallest (a, b) id pair.
Dendrogram ward_linkage(const DistanceMatrix& d);

// Clusters numbered by their smallest member sample index.
ClusterAssignment cut(const Dendrogram& dend, int k, std::vector<std::string> sample_ids = {});

struct KSelection {
  int k = 0;
  std::vector<std::pair<int, double>> scores;  // (k, mean silhouette)
};

KSelection select_k_silhouette(const DistanceMatrix& d, int k_min, int k_max);
KSelection select_k_silhouette(const DistanceMatrix& d, const Dendrogram& dend, int k_min, int k_max);

void write_dendrogram_csv(std::ostream& out, const Dendrogram& dend);
void write_dendrogram_csv(const std::string& path, const Dendrogram& dend);

struct StabilityReport {
  std::vector<int> k_values;
  std::vector<std::size_t> tree_grid;
  int reps = 0;
  std::uint64_t seed = 0;
  double epsilon = 0.05;
  std::map<std::pair<int, std::size_t>, std::vector<double>> grid;  // (k, trees) -> ARI per rep
  std::optional<int> suggested_k;

  double median(int k, std::size_t trees) const;
};

// Labels from Ward on the full forest are fed back as leaf labels; random
// tree subsets then predict them and ARI tracks how well they hold up.
// suggested_k is the largest k whose median at the smallest budget stays
// within epsilon of its median at the largest budget.
StabilityReport stability_diagnostic(const Forest& f, const OmicsMatrix& layer, std::span<const int> k_values,
                                     std::span<const std::size_t> tree_grid, int reps, std::uint64_t seed);

std::string stability_to_json(const StabilityReport& report);

}  // namespace urf
