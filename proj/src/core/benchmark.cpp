#include "benchmark.hpp"

#include <array>

#include "affinity.hpp"
#include "cluster.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace urf {

ScenarioGrid default_grid(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::GlobularEqual: return {kind, {0.1, 0.2, 0.3, 0.4, 0.5}, 100};
    case ScenarioKind::GlobularOutliers: return {kind, {0.02, 0.04, 0.06, 0.08, 0.10}, 100};
    case ScenarioKind::GlobularVarying: return {kind, {1, 2, 3, 4, 5}, 100};
    case ScenarioKind::Rings: return {kind, {1.0, 1.5, 2.0, 2.5, 3.0}, 200};
    case ScenarioKind::Moons: return {kind, {0.05, 0.1, 0.15, 0.2}, 100};
  }
  fail(ErrorCode::InvalidArgument, "unknown scenario");
}

std::vector<BenchRow> run_benchmark(const BenchConfig& cfg) {
  require(cfg.replicates >= 1, ErrorCode::InvalidArgument, "replicates must be positive");
  struct Task {
    const ScenarioGrid* grid;
    std::size_t param_index;
    std::size_t replicate;
  };
  std::vector<Task> tasks;
  for (const auto& g : cfg.scenarios) {
    for (std::size_t p = 0; p < g.params.size(); ++p) {
      for (std::size_t r = 0; r < cfg.replicates; ++r) tasks.push_back({&g, p, r});
    }
  }

  std::vector<std::array<double, 3>> results(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t t) {
    const Task& task = tasks[t];
    const auto kind = static_cast<std::uint64_t>(task.grid->kind);
    ScenarioSpec spec;
    spec.kind = task.grid->kind;
    spec.param = task.grid->params[task.param_index];
    spec.n_per_cluster = task.grid->n_per_cluster;
    spec.seed = derive_seed(cfg.seed, {kind, task.param_index, task.replicate});
    const LabeledDataset ds = generate(spec);
    const int k = ds.labels.k;

    ForestConfig fc = cfg.forest;
    fc.seed = derive_seed(cfg.seed, {kind, task.param_index, task.replicate, 0x666f72657374ULL});
    const Forest forest = train_forest(ds.data, fc);
    const DistanceMatrix urf_dist = to_distance(normalize(count_matrix(forest, ds.data)));

    auto score = [&](const DistanceMatrix& d) {
      return ari(cut(ward_linkage(d), k, ds.data.sample_ids()), ds.labels);
    };
    results[t] = {score(urf_dist), score(euclidean_distance(ds.data)),
                  score(euclidean_distance(standardize(ds.data)))};
  });

  static const char* const kMethods[] = {"uRF", "HC", "HCscaled"};
  std::vector<BenchRow> rows;
  rows.reserve(tasks.size() * 3);
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    for (std::size_t m = 0; m < 3; ++m) {
      rows.push_back({scenario_name(tasks[t].grid->kind), tasks[t].grid->params[tasks[t].param_index],
                      tasks[t].replicate, kMethods[m], results[t][m]});
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "scenario,param,replicate,method,ari\n";
  for (const auto& r : rows) {
    out << r.scenario << ',' << format_double(r.param) << ',' << r.replicate << ',' << r.method << ','
        << format_double(r.ari) << '\n';
  }
}

}  // namespace urf
