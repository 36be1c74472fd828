#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "forest.hpp"
#include "synth.hpp"

namespace urf {

struct ScenarioGrid {
  ScenarioKind kind;
  std::vector<double> params;
  std::size_t n_per_cluster;
};

// Parameter grids of the four synthetic studies (plus half-moons).
ScenarioGrid default_grid(ScenarioKind kind);

struct BenchConfig {
  std::vector<ScenarioGrid> scenarios;
  std::size_t replicates = 30;
  std::uint64_t seed = 0;
  ForestConfig forest{500, 1, 5, true, 0};
};

struct BenchRow {
  std::string scenario;
  double param = 0.0;
  std::size_t replicate = 0;
  std::string method;  // "uRF", "HC" or "HCscaled"
  double ari = 0.0;

  bool operator==(const BenchRow&) const = default;
};

// Every (scenario, param, replicate) dataset is clustered with Ward at the
// true k on: forest affinity, raw Euclidean and standardized Euclidean.
std::vector<BenchRow> run_benchmark(const BenchConfig& cfg);

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace urf
