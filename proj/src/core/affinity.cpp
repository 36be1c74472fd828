#include "affinity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "error.hpp"
#include "parallel.hpp"

namespace urf {

std::uint32_t CountMatrix::max() const {
  return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
}

CountMatrix count_matrix(const LeafTable& leaves, std::vector<std::string> sample_ids) {
  const std::size_t n = leaves.n_samples;
  require(sample_ids.size() == n, ErrorCode::SampleMismatch, "sample id count does not match leaf table");
  require(leaves.n_trees <= std::numeric_limits<std::uint32_t>::max(), ErrorCode::OutOfRange,
          "tree count overflows 32-bit counts");

  // Per tree, samples grouped by leaf: members[offset[t] + ...] sorted by leaf then sample.
  std::vector<std::vector<std::size_t>> groups_start(leaves.n_trees);
  std::vector<std::vector<std::size_t>> members(leaves.n_trees);
  std::vector<std::vector<std::size_t>> group_of(leaves.n_trees);
  parallel_for(leaves.n_trees, [&](std::size_t t) {
    const auto row = leaves.tree(t);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
    auto& starts = groups_start[t];
    auto& gof = group_of[t];
    gof.assign(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
      if (k == 0 || row[order[k]] != row[order[k - 1]]) starts.push_back(k);
      gof[order[k]] = starts.size() - 1;
    }
    starts.push_back(n);
    members[t] = std::move(order);
  });

  CountMatrix out;
  out.n = n;
  out.n_trees = leaves.n_trees;
  out.counts.assign(n * n, 0);
  out.sample_ids = std::move(sample_ids);
  // Each worker owns whole rows, so no merging is needed.
  parallel_for(n, [&](std::size_t i) {
    std::uint32_t* row = out.counts.data() + i * n;
    for (std::size_t t = 0; t < leaves.n_trees; ++t) {
      const std::size_t g = group_of[t][i];
      const auto& starts = groups_start[t];
      for (std::size_t k = starts[g]; k < starts[g + 1]; ++k) ++row[members[t][k]];
    }
  });
  return out;
}

CountMatrix count_matrix(const Forest& f, const OmicsMatrix& layer) {
  return count_matrix(assign_leaves(f, layer), layer.sample_ids());
}

CountMatrix sum_counts(std::span<const CountMatrix> layer_counts) {
  require(!layer_counts.empty(), ErrorCode::InvalidArgument, "no count matrices to fuse");
  CountMatrix out = layer_counts.front();
  for (std::size_t l = 1; l < layer_counts.size(); ++l) {
    const CountMatrix& c = layer_counts[l];
    require(c.sample_ids == out.sample_ids, ErrorCode::SampleMismatch,
            "count matrices disagree on sample ids or order");
    require(out.n_trees + c.n_trees <= std::numeric_limits<std::uint32_t>::max(), ErrorCode::OutOfRange,
            "fused tree count overflows 32-bit counts");
    out.n_trees += c.n_trees;
    for (std::size_t k = 0; k < out.counts.size(); ++k) out.counts[k] += c.counts[k];
  }
  return out;
}

AffinityMatrix normalize(const CountMatrix& c) {
  const std::uint32_t mx = c.max();
  require(mx > 0, ErrorCode::InvalidArgument, "count matrix is all zero");
  AffinityMatrix a;
  a.n = c.n;
  a.sample_ids = c.sample_ids;
  a.values.resize(c.counts.size());
  const double denom = static_cast<double>(mx);
  for (std::size_t k = 0; k < c.counts.size(); ++k) a.values[k] = static_cast<double>(c.counts[k]) / denom;
  return a;
}

AffinityMatrix fuse(std::span<const CountMatrix> layer_counts) {
  return normalize(sum_counts(layer_counts));
}

DistanceMatrix to_distance(const AffinityMatrix& a) {
  DistanceMatrix d;
  d.n = a.n;
  d.sample_ids = a.sample_ids;
  d.values.resize(a.values.size());
  for (std::size_t i = 0; i < a.n; ++i) {
    for (std::size_t j = 0; j < a.n; ++j) d.at(i, j) = i == j ? 0.0 : 1.0 - a.at(i, j);
  }
  return d;
}

DistanceMatrix euclidean_distance(const OmicsMatrix& m) {
  require(m.missing_count() == 0, ErrorCode::InvalidArgument, "distance needs a complete matrix");
  DistanceMatrix d;
  d.n = m.n_samples();
  d.sample_ids = m.sample_ids();
  d.values.assign(d.n * d.n, 0.0);
  parallel_for(d.n, [&](std::size_t i) {
    const auto xi = m.row(i);
    for (std::size_t j = 0; j < d.n; ++j) {
      const auto xj = m.row(j);
      double s = 0.0;
      for (std::size_t f = 0; f < xi.size(); ++f) s += (xi[f] - xj[f]) * (xi[f] - xj[f]);
      d.values[i * d.n + j] = std::sqrt(s);
    }
  });
  return d;
}

void write_square_csv(std::ostream& out, const SquareMatrix& m) {
  out << "sample_id";
  for (const auto& id : m.sample_ids) out << ',' << id;
  out << '\n';
  for (std::size_t i = 0; i < m.n; ++i) {
    out << m.sample_ids[i];
    for (std::size_t j = 0; j < m.n; ++j) out << ',' << format_double(m.at(i, j));
    out << '\n';
  }
}

void write_square_csv(const std::string& path, const SquareMatrix& m) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path + "'");
  write_square_csv(out, m);
  if (!out) fail(ErrorCode::Io, "write failure on '" + path + "'");
}

}  // namespace urf
