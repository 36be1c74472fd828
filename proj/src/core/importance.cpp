#include "importance.hpp"

#include <algorithm>

#include "affinity.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "parallel.hpp"

namespace urf {

namespace {

double gini(double n, double pos) {
  if (n <= 0.0) return 0.0;
  const double p = pos / n;
  return 2.0 * p * (1.0 - p);
}

}  // namespace

ImportanceVector cluster_importance(const Forest& f, const OmicsMatrix& layer, const ClusterAssignment& assignment,
                                    int cluster_id) {
  assignment.validate();
  require(cluster_id >= 0 && cluster_id < assignment.k, ErrorCode::OutOfRange,
          "cluster id " + std::to_string(cluster_id) + " outside [0, " + std::to_string(assignment.k) + ")");
  require(assignment.labels.size() == layer.n_samples(), ErrorCode::SampleMismatch,
          "assignment does not match the layer's samples");
  require(assignment.sample_ids.empty() || assignment.sample_ids == layer.sample_ids(), ErrorCode::SampleMismatch,
          "assignment sample ids differ from the layer's");

  const std::size_t n = layer.n_samples();
  std::vector<char> positive(n);
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    positive[i] = assignment.labels[i] == cluster_id;
    n_pos += positive[i];
  }
  require(n_pos > 0, ErrorCode::EmptyCluster, "one-vs-all target cluster has no members");

  const LeafTable leaves = assign_leaves(f, layer);
  const std::size_t p = f.n_features;
  std::vector<std::vector<double>> per_tree(f.trees.size(), std::vector<double>(p, 0.0));

  parallel_for(f.trees.size(), [&](std::size_t t) {
    const Tree& tree = f.trees[t];
    // Counts at leaves, then pushed up: children always have larger ids.
    std::vector<double> total(tree.nodes.size(), 0.0);
    std::vector<double> pos(tree.nodes.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto leaf = static_cast<std::size_t>(leaves.at(t, i));
      total[leaf] += 1.0;
      pos[leaf] += positive[i] ? 1.0 : 0.0;
    }
    for (std::size_t id = tree.nodes.size(); id-- > 0;) {
      const TreeNode& node = tree.nodes[id];
      if (node.leaf) continue;
      const auto l = static_cast<std::size_t>(node.left);
      const auto r = static_cast<std::size_t>(node.right);
      total[id] = total[l] + total[r];
      pos[id] = pos[l] + pos[r];
      if (total[id] <= 0.0) continue;
      const double decrease =
          gini(total[id], pos[id]) - (total[l] * gini(total[l], pos[l]) + total[r] * gini(total[r], pos[r])) / total[id];
      // Weighted Gini decrease is nonnegative up to rounding.
      per_tree[t][static_cast<std::size_t>(node.feature)] +=
          std::max(0.0, total[id] / static_cast<double>(n) * decrease);
    }
  });

  ImportanceVector out;
  out.cluster_id = cluster_id;
  out.scores.assign(p, 0.0);
  for (const auto& tree_scores : per_tree) {
    for (std::size_t j = 0; j < p; ++j) out.scores[j] += tree_scores[j];
  }
  for (auto& s : out.scores) s /= static_cast<double>(f.trees.size());
  return out;
}

ImportanceVector normalized(const ImportanceVector& v) {
  ImportanceVector out = v;
  out.normalized = true;
  const double mx = v.scores.empty() ? 0.0 : *std::max_element(v.scores.begin(), v.scores.end());
  if (mx > 0.0) {
    for (auto& s : out.scores) s /= mx;
  }
  return out;
}

std::vector<std::vector<double>> importance_correlation(std::span<const ImportanceVector> vectors) {
  require(vectors.size() >= 2, ErrorCode::InvalidArgument, "need at least two importance vectors");
  const std::size_t k = vectors.size();
  for (const auto& v : vectors) {
    require(v.scores.size() == vectors.front().scores.size(), ErrorCode::InvalidArgument,
            "importance vectors differ in length");
  }
  std::vector<std::vector<double>> corr(k, std::vector<double>(k, 1.0));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      corr[a][b] = corr[b][a] = pearson(vectors[a].scores, vectors[b].scores);
    }
  }
  // pearson() rejects constant vectors, including the diagonal case.
  for (std::size_t a = 0; a < k; ++a) (void)pearson(vectors[a].scores, vectors[a].scores);
  return corr;
}

void write_importance_csv(std::ostream& out, const std::vector<std::string>& feature_ids,
                          std::span<const ImportanceVector> vectors) {
  out << "feature_id";
  for (const auto& v : vectors) {
    out << ",cluster_" << v.cluster_id << (v.normalized ? "_normalized" : "");
  }
  out << '\n';
  for (std::size_t j = 0; j < feature_ids.size(); ++j) {
    out << feature_ids[j];
    for (const auto& v : vectors) out << ',' << format_double(v.scores.at(j));
    out << '\n';
  }
}

void write_correlation_csv(std::ostream& out, const std::vector<std::vector<double>>& corr) {
  out << "cluster";
  for (std::size_t b = 0; b < corr.size(); ++b) out << ",cluster_" << b;
  out << '\n';
  for (std::size_t a = 0; a < corr.size(); ++a) {
    out << "cluster_" << a;
    for (double v : corr[a]) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace urf
