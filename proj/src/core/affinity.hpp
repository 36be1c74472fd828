#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "forest.hpp"

namespace urf {

// Leaf co-occurrence counts. Symmetric, diagonal equals n_trees.
struct CountMatrix {
  std::size_t n = 0;
  std::uint64_t n_trees = 0;
  std::vector<std::uint32_t> counts;  // row-major n x n
  std::vector<std::string> sample_ids;

  std::uint32_t at(std::size_t i, std::size_t j) const { return counts[i * n + j]; }
  std::uint32_t max() const;
  bool operator==(const CountMatrix&) const = default;
};

// Symmetric n x n real matrix used for both affinities and distances.
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<double> values;
  std::vector<std::string> sample_ids;

  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * n + j]; }
  bool operator==(const SquareMatrix&) const = default;
};

struct AffinityMatrix : SquareMatrix {};
struct DistanceMatrix : SquareMatrix {};

CountMatrix count_matrix(const LeafTable& leaves, std::vector<std::string> sample_ids);
CountMatrix count_matrix(const Forest& f, const OmicsMatrix& layer);

// Element-wise sum; sample ids must agree.
CountMatrix sum_counts(std::span<const CountMatrix> layer_counts);

AffinityMatrix normalize(const CountMatrix& c);
AffinityMatrix fuse(std::span<const CountMatrix> layer_counts);
DistanceMatrix to_distance(const AffinityMatrix& a);

// Plain Euclidean distances between sample rows.
DistanceMatrix euclidean_distance(const OmicsMatrix& m);

// Header "sample_id,<ids...>", one row per sample, shortest round-trip decimals.
void write_square_csv(std::ostream& out, const SquareMatrix& m);
void write_square_csv(const std::string& path, const SquareMatrix& m);


}  // namespace urf
