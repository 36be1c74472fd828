#include <doctest.h>

#include <cmath>
#include <sstream>

#include "affinity.hpp"
#include "benchmark.hpp"
#include "helpers.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "synth.hpp"

using urf::ErrorCode;
using urf::ScenarioKind;

namespace {

std::vector<std::size_t> label_counts(const urf::ClusterAssignment& a) {
  std::vector<std::size_t> c(static_cast<std::size_t>(a.k), 0);
  for (int l : a.labels) ++c[static_cast<std::size_t>(l)];
  return c;
}

}  // namespace

TEST_CASE("generation is deterministic per seed") {
  for (auto kind : {ScenarioKind::GlobularEqual, ScenarioKind::GlobularOutliers, ScenarioKind::GlobularVarying,
                    ScenarioKind::Rings, ScenarioKind::Moons}) {
    urf::ScenarioSpec s{kind, kind == ScenarioKind::GlobularOutliers ? 0.1 : 0.5, 20, 9};
    const auto a = urf::generate(s);
    const auto b = urf::generate(s);
    CHECK(std::equal(a.data.values().begin(), a.data.values().end(), b.data.values().begin()));
    CHECK(a.labels.labels == b.labels.labels);
    s.seed = 10;
    const auto c = urf::generate(s);
    CHECK(!std::equal(a.data.values().begin(), a.data.values().end(), c.data.values().begin()));
    CHECK(urf::parse_scenario(urf::scenario_name(kind)) == kind);
  }
  CHECK(th::code_of([] { urf::parse_scenario("spirals"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("parameter ranges are validated") {
  CHECK(th::code_of([] { urf::generate({ScenarioKind::GlobularEqual, 0.0, 10, 0}); }) == ErrorCode::OutOfRange);
  CHECK(th::code_of([] { urf::generate({ScenarioKind::GlobularOutliers, 1.0, 10, 0}); }) == ErrorCode::OutOfRange);
  CHECK(th::code_of([] { urf::generate({ScenarioKind::Rings, -1.0, 10, 0}); }) == ErrorCode::OutOfRange);
  CHECK(th::code_of([] { urf::generate({ScenarioKind::GlobularEqual, 0.1, 0, 0}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("rings stay inside their annuli") {
  const double gap = 1.5;
  const auto d = urf::generate({ScenarioKind::Rings, gap, 200, 4});
  CHECK(d.data.n_samples() == 400);
  CHECK(label_counts(d.labels) == std::vector<std::size_t>{200, 200});
  for (std::size_t i = 0; i < d.data.n_samples(); ++i) {
    const double r = std::hypot(d.data.at(i, 0), d.data.at(i, 1));
    if (d.labels.labels[i] == 0) {
      CHECK((r >= 1.0 && r <= 2.0));
    } else {
      CHECK((r >= 2.0 + gap && r <= 3.0 + gap));
    }
  }
}

TEST_CASE("outlier counts follow the rounded fraction") {
  const auto d = urf::generate({ScenarioKind::GlobularOutliers, 0.15, 50, 2});
  // round(0.15 * 50) = 8 extra per cluster
  CHECK(d.data.n_samples() == 3 * 58);
  CHECK(label_counts(d.labels) == std::vector<std::size_t>{58, 58, 58});
  CHECK(urf::generate({ScenarioKind::GlobularOutliers, 0.0, 50, 2}).data.n_samples() == 150);
}

TEST_CASE("per-cluster sizes override the common count") {
  urf::ScenarioSpec s{ScenarioKind::GlobularEqual, 0.2, 100, 5};
  s.cluster_sizes = {100, 30, 10};
  const auto d = urf::generate(s);
  CHECK(label_counts(d.labels) == std::vector<std::size_t>{100, 30, 10});
  s.kind = ScenarioKind::GlobularOutliers;
  s.param = 0.1;
  CHECK(label_counts(urf::generate(s).labels) == std::vector<std::size_t>{110, 33, 11});
  s.kind = ScenarioKind::Rings;
  s.param = 1.0;
  CHECK(th::code_of([&] { urf::generate(s); }) == ErrorCode::InvalidArgument);
  s.cluster_sizes = {40, 5};
  CHECK(label_counts(urf::generate(s).labels) == std::vector<std::size_t>{40, 5});
  s.cluster_sizes = {40, 0};
  CHECK(th::code_of([&] { urf::generate(s); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("globular cluster means sit at their centers") {
  const std::size_t n = 400;
  const double sd = 0.3;
  const auto d = urf::generate({ScenarioKind::GlobularEqual, sd, n, 6});
  const double centers[3][2] = {{1, 0}, {0, 1}, {1, 1}};
  for (int c = 0; c < 3; ++c) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < d.data.n_samples(); ++i) {
      if (d.labels.labels[i] != c) continue;
      mx += d.data.at(i, 0);
      my += d.data.at(i, 1);
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    const double tol = 4.0 * sd / std::sqrt(static_cast<double>(n));
    CHECK(std::fabs(mx - centers[c][0]) < tol);
    CHECK(std::fabs(my - centers[c][1]) < tol);
  }
  const auto v = urf::generate({ScenarioKind::GlobularVarying, 2.0, n, 6});
  double sx = 0, sxx = 0;
  for (std::size_t i = 2 * n; i < 3 * n; ++i) {
    sx += v.data.at(i, 0);
    sxx += v.data.at(i, 0) * v.data.at(i, 0);
  }
  const double var = sxx / static_cast<double>(n) - (sx / static_cast<double>(n)) * (sx / static_cast<double>(n));
  // third cluster sd is 0.1 + 0.2 m = 0.5
  CHECK(std::sqrt(var) == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("well separated blobs are recovered by Euclidean Ward") {
  const auto d = urf::generate({ScenarioKind::GlobularEqual, 0.1, 100, 1});
  urf::KChoice k;
  k.fixed_k = 3;
  const auto c = urf::cluster_distance(urf::euclidean_distance(d.data), k);
  CHECK(urf::ari(c.labels.labels, d.labels.labels) > 0.99);
}

TEST_CASE("moons have two labels of equal size") {
  const auto d = urf::generate({ScenarioKind::Moons, 0.05, 60, 3});
  CHECK(label_counts(d.labels) == std::vector<std::size_t>{60, 60});
  for (std::size_t i = 0; i < 60; ++i) CHECK(d.data.at(i, 1) > -0.3);
}

TEST_CASE("benchmark runs every method on every replicate") {
  urf::BenchConfig cfg;
  cfg.scenarios.push_back({ScenarioKind::GlobularEqual, {0.1, 0.3}, 15});
  cfg.replicates = 2;
  cfg.forest = {20, 1, 3, true, 0};
  const auto rows = urf::run_benchmark(cfg);
  CHECK(rows.size() == 2 * 2 * 3);
  for (const auto& r : rows) CHECK((r.ari >= -1.0 && r.ari <= 1.0));
  CHECK(rows == urf::run_benchmark(cfg));
  std::ostringstream out;
  urf::write_bench_csv(out, rows);
  CHECK(out.str().rfind("scenario,param,replicate,method,ari\n", 0) == 0);
  for (auto kind : {ScenarioKind::GlobularEqual, ScenarioKind::GlobularOutliers, ScenarioKind::GlobularVarying,
                    ScenarioKind::Rings})
    CHECK(!urf::default_grid(kind).params.empty());
}
