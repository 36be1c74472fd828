#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cluster.hpp"
#include "data.hpp"

namespace urf {

enum class ScenarioKind { GlobularEqual, GlobularOutliers, GlobularVarying, Rings, Moons };

const char* scenario_name(ScenarioKind kind);
ScenarioKind parse_scenario(const std::string& name);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::GlobularEqual;
  // GlobularEqual: cluster std. GlobularOutliers: outlier fraction.
  // GlobularVarying: m. Rings: gap between the rings. Moons: noise std.
  double param = 0.1;
  std::size_t n_per_cluster = 100;
  std::uint64_t seed = 0;
  // Per-cluster counts overriding n_per_cluster; one entry per cluster.
  std::vector<std::size_t> cluster_sizes;

  std::size_t cluster_count() const;
  std::size_t size_of(std::size_t cluster) const;

  void validate() const;
};

struct LabeledDataset {
  OmicsMatrix data;
  ClusterAssignment labels;
};

// Globular kinds draw isotropic Gaussians. Outliers come from N((3,0)|(0,3)|(3,3), 1),
// round(fraction * n_per_cluster) per cluster, and carry the label of the
// cluster at (1,0)|(0,1)|(1,1) respectively. Rings sample angle and radius
// uniformly in the annuli [1,2] and [2+gap, 3+gap].
LabeledDataset generate(const ScenarioSpec& spec);

}  // namespace urf
