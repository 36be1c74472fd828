#include "forest.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace urf {

namespace {

struct Moments {
  double mean = 0.0;
  double m2 = 0.0;  // sum of squared deviations
};

// Sweeps every midpoint of `sorted` and keeps the lowest-scoring admissible
// split; ties keep the earlier (lower) threshold.
std::optional<SplitCandidate> scan_sorted(std::span<const double> sorted, std::size_t feature,
                                          std::size_t min_leaf, std::vector<Moments>& suffix) {
  const std::size_t n = sorted.size();
  if (n < 2 || n < 2 * min_leaf) return std::nullopt;

  suffix.assign(n + 1, Moments{});
  for (std::size_t i = n; i-- > 0;) {
    const std::size_t cnt = n - i;
    const Moments& prev = suffix[i + 1];
    const double delta = sorted[i] - prev.mean;
    Moments cur;
    cur.mean = prev.mean + delta / static_cast<double>(cnt);
    cur.m2 = prev.m2 + delta * (sorted[i] - cur.mean);
    suffix[i] = cur;
  }

  std::optional<SplitCandidate> best;
  Moments left;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t nl = i + 1;
    const double delta = sorted[i] - left.mean;
    left.mean += delta / static_cast<double>(nl);
    left.m2 += delta * (sorted[i] - left.mean);

    if (!(sorted[i] < sorted[i + 1])) continue;
    const std::size_t nr = n - nl;
    if (nl < min_leaf || nr < min_leaf) continue;

    const Moments& right = suffix[nl];
    const double within_l = nl > 1 ? left.m2 / static_cast<double>(nl - 1) : 0.0;
    const double within_r = nr > 1 ? right.m2 / static_cast<double>(nr - 1) : 0.0;
    const double gap = left.mean - right.mean;
    const double between = left.m2 / static_cast<double>(nl) + right.m2 / static_cast<double>(nr) + gap * gap;
    if (!(between > 0.0)) continue;
    const double score = (within_l + within_r) / between;

    if (!best || score < best->score) {
      double mid = sorted[i] + (sorted[i + 1] - sorted[i]) / 2.0;
      if (!(mid < sorted[i + 1])) mid = sorted[i];
      best = SplitCandidate{feature, mid, score, nl, nr};
    }
  }
  return best;
}

bool better(const SplitCandidate& cand, const std::optional<SplitCandidate>& best) {
  return !best || cand.score < best->score;
}

}  // namespace

void ForestConfig::validate(std::size_t n_features) const {
  require(n_trees >= 1, ErrorCode::InvalidArgument, "n_trees must be at least 1");
  require(min_leaf >= 1, ErrorCode::InvalidArgument, "min_leaf must be at least 1");
  require(mtry >= 1, ErrorCode::InvalidArgument, "mtry must be at least 1");
  require(mtry <= n_features, ErrorCode::InvalidArgument,
          "mtry (" + std::to_string(mtry) + ") exceeds the feature count (" + std::to_string(n_features) + ")");
}

bool operator==(const TreeNode& a, const TreeNode& b) {
  return a.id == b.id && a.leaf == b.leaf && a.feature == b.feature &&
         (a.leaf || a.threshold == b.threshold) && a.left == b.left && a.right == b.right &&
         a.depth == b.depth;
}

int Tree::route(std::span<const double> x) const {
  int id = 0;
  while (!nodes[static_cast<std::size_t>(id)].leaf) {
    const TreeNode& node = nodes[static_cast<std::size_t>(id)];
    id = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return id;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.leaf; }));
}

int Tree::depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

int Tree::max_feature() const {
  int f = -1;
  for (const auto& n : nodes) f = std::max(f, n.feature);
  return f;
}

Forest Forest::subset(std::span<const std::size_t> tree_indices) const {
  Forest out;
  out.config = config;
  out.n_features = n_features;
  out.config.n_trees = tree_indices.size();
  for (auto t : tree_indices) out.trees.push_back(trees.at(t));
  return out;
}

// ---------------------------------------------------------------------------

double within_dispersion(std::span<const double> values) {
  const std::size_t n = values.size();
  require(n >= 1, ErrorCode::InvalidArgument, "within_dispersion needs at least one value");
  if (n == 1) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  // sum_{i != j} (x_i - x_j)^2 = 2 n ss
  return 2.0 * ss / static_cast<double>(n - 1);
}

double between_dispersion(std::span<const double> left, std::span<const double> right) {
  require(!left.empty() && !right.empty(), ErrorCode::InvalidArgument,
          "between_dispersion needs two nonempty groups");
  auto moments = [](std::span<const double> v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return Moments{mean, ss};
  };
  const Moments l = moments(left);
  const Moments r = moments(right);
  const double gap = l.mean - r.mean;
  return l.m2 / static_cast<double>(left.size()) + r.m2 / static_cast<double>(right.size()) + gap * gap;
}

double fst_score(std::span<const double> left, std::span<const double> right) {
  const double between = between_dispersion(left, right);
  if (!(between > 0.0)) {
    fail(ErrorCode::ZeroBetweenDispersion, "split sides have zero between-group dispersion");
  }
  return (within_dispersion(left) + within_dispersion(right)) / 2.0 / between;
}

std::optional<SplitCandidate> best_split(const std::vector<std::vector<double>>& values_by_feature,
                                         std::span<const std::size_t> candidate_features,
                                         std::size_t min_leaf) {
  require(!candidate_features.empty(), ErrorCode::InvalidArgument, "no candidate features");
  require(min_leaf >= 1, ErrorCode::InvalidArgument, "min_leaf must be at least 1");
  std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
  std::sort(features.begin(), features.end());
  features.erase(std::unique(features.begin(), features.end()), features.end());

  std::optional<SplitCandidate> best;
  std::vector<double> buf;
  std::vector<Moments> suffix;
  for (auto f : features) {
    require(f < values_by_feature.size(), ErrorCode::OutOfRange, "candidate feature out of range");
    buf = values_by_feature[f];
    std::sort(buf.begin(), buf.end());
    const auto cand = scan_sorted(buf, f, min_leaf, suffix);
    if (cand && better(*cand, best)) best = cand;
  }
  return best;
}

// ---------------------------------------------------------------------------

Tree grow_tree(const OmicsMatrix& layer, const ForestConfig& cfg, std::uint64_t seed, int layer_index,
               GrowthTrace* trace) {
  const std::size_t n = layer.n_samples();
  const std::size_t p = layer.n_features();
  cfg.validate(p);
  require(layer.missing_count() == 0, ErrorCode::InvalidArgument,
          "tree growth requires a complete (imputed) matrix");
  require(n >= 2 * cfg.min_leaf, ErrorCode::InsufficientSamples,
          "need at least 2*min_leaf samples (n=" + std::to_string(n) + ", min_leaf=" +
              std::to_string(cfg.min_leaf) + ")");

  Rng rng(seed);
  std::vector<std::size_t> growing(n);
  if (cfg.bootstrap) {
    for (auto& s : growing) s = static_cast<std::size_t>(rng.below(n));
  } else {
    std::iota(growing.begin(), growing.end(), std::size_t{0});
  }

  // slots[k] indexes into `growing`; nodes own contiguous slot ranges.
  std::vector<std::size_t> slots(n);
  std::iota(slots.begin(), slots.end(), std::size_t{0});

  Tree tree;
  tree.layer_index = layer_index;
  tree.seed = seed;
  tree.nodes.push_back(TreeNode{0, true, -1, 0.0, -1, -1, 0});

  std::vector<std::optional<SplitCandidate>> splits(1);
  std::vector<int> leaf_of(trace ? n : 0, -1);

  struct Pending {
    int id;
    std::size_t begin, end;
  };
  std::vector<Pending> stack{{0, 0, n}};

  std::vector<std::size_t> feature_pool(p);
  std::iota(feature_pool.begin(), feature_pool.end(), std::size_t{0});
  std::vector<std::size_t> chosen(cfg.mtry);
  std::vector<double> buf;
  std::vector<Moments> suffix;

  auto make_leaf = [&](const Pending& node) {
    if (!trace) return;
    for (std::size_t k = node.begin; k < node.end; ++k) leaf_of[slots[k]] = node.id;
  };

  while (!stack.empty()) {
    const Pending node = stack.back();
    stack.pop_back();
    const std::size_t count = node.end - node.begin;
    if (count < 2 * cfg.min_leaf) {
      make_leaf(node);
      continue;
    }

    // mtry distinct features by partial Fisher-Yates.
    for (std::size_t k = 0; k < cfg.mtry; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.below(p - k));
      std::swap(feature_pool[k], feature_pool[j]);
      chosen[k] = feature_pool[k];
    }
    std::sort(chosen.begin(), chosen.end());

    std::optional<SplitCandidate> best;
    for (auto f : chosen) {
      buf.clear();
      for (std::size_t k = node.begin; k < node.end; ++k) buf.push_back(layer.at(growing[slots[k]], f));
      std::sort(buf.begin(), buf.end());
      const auto cand = scan_sorted(buf, f, cfg.min_leaf, suffix);
      if (cand && better(*cand, best)) best = cand;
    }
    if (!best) {
      make_leaf(node);
      continue;
    }

    const auto mid_it = std::stable_partition(
        slots.begin() + static_cast<std::ptrdiff_t>(node.begin), slots.begin() + static_cast<std::ptrdiff_t>(node.end),
        [&](std::size_t s) { return layer.at(growing[s], best->feature) <= best->threshold; });
    const std::size_t mid = static_cast<std::size_t>(mid_it - slots.begin());

    const int left_id = static_cast<int>(tree.nodes.size());
    const int right_id = left_id + 1;
    const int depth = tree.nodes[static_cast<std::size_t>(node.id)].depth + 1;
    TreeNode& parent = tree.nodes[static_cast<std::size_t>(node.id)];
    parent.leaf = false;
    parent.feature = static_cast<int>(best->feature);
    parent.threshold = best->threshold;
    parent.left = left_id;
    parent.right = right_id;
    tree.nodes.push_back(TreeNode{left_id, true, -1, 0.0, -1, -1, depth});
    tree.nodes.push_back(TreeNode{right_id, true, -1, 0.0, -1, -1, depth});
    splits[static_cast<std::size_t>(node.id)] = best;
    splits.resize(tree.nodes.size());

    // Right pushed first so the left subtree is expanded first.
    stack.push_back({right_id, mid, node.end});
    stack.push_back({left_id, node.begin, mid});
  }

  if (trace) {
    trace->growing_set = std::move(growing);
    trace->leaf_of = std::move(leaf_of);
    trace->splits = std::move(splits);
  }
  return tree;
}

std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t tree_index) {
  return derive_seed(forest_seed, {0x7472656573ULL, tree_index});
}

Forest train_forest(const OmicsMatrix& layer, const ForestConfig& cfg, int layer_index) {
  cfg.validate(layer.n_features());
  require(layer.n_samples() >= 2 * cfg.min_leaf, ErrorCode::InsufficientSamples,
          "need at least 2*min_leaf samples (n=" + std::to_string(layer.n_samples()) + ", min_leaf=" +
              std::to_string(cfg.min_leaf) + ")");
  Forest forest;
  forest.config = cfg;
  forest.n_features = layer.n_features();
  forest.trees.resize(cfg.n_trees);
  parallel_for(cfg.n_trees, [&](std::size_t t) {
    forest.trees[t] = grow_tree(layer, cfg, tree_seed(cfg.seed, t), layer_index);
  });
  return forest;
}

// ---------------------------------------------------------------------------

LeafTable assign_leaves(std::span<const Tree> trees, const OmicsMatrix& layer) {
  require(layer.missing_count() == 0, ErrorCode::InvalidArgument, "routing requires a complete matrix");
  for (const auto& t : trees) {
    require(t.max_feature() < static_cast<int>(layer.n_features()), ErrorCode::FeatureMismatch,
            "tree references feature beyond the layer's feature count");
  }
  LeafTable table;
  table.n_samples = layer.n_samples();
  table.n_trees = trees.size();
  table.leaves.resize(table.n_samples * table.n_trees);
  parallel_for(table.n_samples, [&](std::size_t i) {
    const auto x = layer.row(i);
    for (std::size_t t = 0; t < trees.size(); ++t) table.leaves[t * table.n_samples + i] = trees[t].route(x);
  });
  return table;
}

LeafTable assign_leaves(const Forest& f, const OmicsMatrix& layer) {
  require(layer.n_features() == f.n_features, ErrorCode::FeatureMismatch,
          "layer has " + std::to_string(layer.n_features()) + " features, forest expects " +
              std::to_string(f.n_features));
  return assign_leaves(std::span<const Tree>(f.trees), layer);
}

namespace {

int majority(const std::map<int, std::size_t>& votes) {
  int best = -1;
  std::size_t best_count = 0;
  for (const auto& [label, count] : votes) {  // ascending label: ties keep the lower
    if (count > best_count) {
      best = label;
      best_count = count;
    }
  }
  return best;
}

}  // namespace

LeafLabels label_leaves(const Forest& f, const OmicsMatrix& layer, std::span<const int> labels) {
  require(labels.size() == layer.n_samples(), ErrorCode::SampleMismatch,
          "label count does not match sample count");
  const LeafTable table = assign_leaves(f, layer);
  LeafLabels out(f.trees.size());
  parallel_for(f.trees.size(), [&](std::size_t t) {
    std::vector<std::map<int, std::size_t>> votes(f.trees[t].nodes.size());
    for (std::size_t i = 0; i < table.n_samples; ++i) {
      ++votes[static_cast<std::size_t>(table.at(t, i))][labels[i]];
    }
    out[t].assign(votes.size(), -1);
    for (std::size_t node = 0; node < votes.size(); ++node) {
      if (!votes[node].empty()) out[t][node] = majority(votes[node]);
    }
  });
  return out;
}

std::vector<int> predict_labels(const Forest& f, const LeafLabels& leaf_labels, const OmicsMatrix& layer) {
  require(leaf_labels.size() == f.trees.size(), ErrorCode::MissingLeafLabel,
          "leaf labels must cover every tree");
  const LeafTable table = assign_leaves(f, layer);
  std::vector<int> out(table.n_samples);
  for (std::size_t i = 0; i < table.n_samples; ++i) {
    std::map<int, std::size_t> votes;
    for (std::size_t t = 0; t < table.n_trees; ++t) {
      const auto leaf = static_cast<std::size_t>(table.at(t, i));
      const int label = leaf < leaf_labels[t].size() ? leaf_labels[t][leaf] : -1;
      require(label >= 0, ErrorCode::MissingLeafLabel,
              "tree " + std::to_string(t) + " leaf " + std::to_string(leaf) + " has no label");
      ++votes[label];
    }
    out[i] = majority(votes);
  }
  return out;
}

}  // namespace urf
