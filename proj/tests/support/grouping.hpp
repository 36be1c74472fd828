// Count-matrix oracle that walks node lists directly instead of using
// Tree::route or the library's leaf tables.
#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "data.hpp"
#include "forest.hpp"

namespace oracle {

inline int walk(const urf::Tree& t, std::span<const double> x) {
  std::size_t id = 0;
  while (!t.nodes[id].leaf) {
    const auto& n = t.nodes[id];
    id = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return static_cast<int>(id);
}

// Samples bucketed by leaf per tree, then every pair within a bucket counted.
inline std::vector<std::vector<unsigned>> grouping_counts(const std::vector<urf::Tree>& trees,
                                                          const urf::OmicsMatrix& m) {
  const std::size_t n = m.n_samples();
  std::vector<std::vector<unsigned>> c(n, std::vector<unsigned>(n, 0));
  for (const auto& t : trees) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[walk(t, m.row(i))].push_back(i);
    for (const auto& [leaf, members] : groups)
      for (auto a : members)
        for (auto b : members) ++c[a][b];
  }
  return c;
}

}  // namespace oracle
