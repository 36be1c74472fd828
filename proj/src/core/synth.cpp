#include "synth.hpp"

#include <array>
#include <cmath>

#include "error.hpp"
#include "rng.hpp"

namespace urf {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Point {
  double x, y;
};

struct Builder {
  std::vector<double> values;
  std::vector<int> labels;

  void add(Point p, int label) {
    values.push_back(p.x);
    values.push_back(p.y);
    labels.push_back(label);
  }

  LabeledDataset finish() {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < labels.size(); ++i) ids.push_back("s" + std::to_string(i));
    LabeledDataset out{OmicsMatrix(ids, {"x", "y"}, std::move(values)), {}};
    out.labels = ClusterAssignment::from_raw(labels, std::move(ids));
    return out;
  }
};

void gaussian_clusters(Builder& b, Rng& rng, std::span<const Point> centers, std::span<const double> sds,
                       const ScenarioSpec& spec) {
  for (std::size_t c = 0; c < centers.size(); ++c) {
    for (std::size_t i = 0; i < spec.size_of(c); ++i) {
      const double x = rng.normal(centers[c].x, sds[c]);
      const double y = rng.normal(centers[c].y, sds[c]);
      b.add({x, y}, static_cast<int>(c));
    }
  }
}

void ring(Builder& b, Rng& rng, double r_min, double r_max, std::size_t count, int label) {
  for (std::size_t i = 0; i < count; ++i) {
    const double angle = rng.uniform(0.0, 2.0 * kPi);
    const double r = rng.uniform(r_min, r_max);
    b.add({r * std::cos(angle), r * std::sin(angle)}, label);
  }
}

}  // namespace

const char* scenario_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::GlobularEqual: return "globular_equal";
    case ScenarioKind::GlobularOutliers: return "globular_outliers";
    case ScenarioKind::GlobularVarying: return "globular_varying";
    case ScenarioKind::Rings: return "rings";
    case ScenarioKind::Moons: return "moons";
  }
  return "unknown";
}

ScenarioKind parse_scenario(const std::string& name) {
  for (auto k : {ScenarioKind::GlobularEqual, ScenarioKind::GlobularOutliers, ScenarioKind::GlobularVarying,
                 ScenarioKind::Rings, ScenarioKind::Moons}) {
    if (name == scenario_name(k)) return k;
  }
  fail(ErrorCode::InvalidArgument, "unknown scenario '" + name + "'");
}

std::size_t ScenarioSpec::cluster_count() const {
  return kind == ScenarioKind::Rings || kind == ScenarioKind::Moons ? 2 : 3;
}

std::size_t ScenarioSpec::size_of(std::size_t cluster) const {
  return cluster_sizes.empty() ? n_per_cluster : cluster_sizes[cluster];
}

void ScenarioSpec::validate() const {
  require(n_per_cluster >= 1, ErrorCode::InvalidArgument, "n_per_cluster must be positive");
  require(cluster_sizes.empty() || cluster_sizes.size() == cluster_count(), ErrorCode::InvalidArgument,
          std::string(scenario_name(kind)) + " needs " + std::to_string(cluster_count()) + " cluster sizes");
  for (auto s : cluster_sizes) require(s >= 1, ErrorCode::InvalidArgument, "cluster sizes must be positive");
  require(std::isfinite(param), ErrorCode::OutOfRange, "scenario parameter must be finite");
  switch (kind) {
    case ScenarioKind::GlobularEqual:
      require(param > 0.0 && param <= 10.0, ErrorCode::OutOfRange, "cluster std must lie in (0, 10]");
      break;
    case ScenarioKind::GlobularOutliers:
      require(param >= 0.0 && param < 1.0, ErrorCode::OutOfRange, "outlier fraction must lie in [0, 1)");
      break;
    case ScenarioKind::GlobularVarying:
      require(param >= 0.0 && param <= 50.0, ErrorCode::OutOfRange, "m must lie in [0, 50]");
      break;
    case ScenarioKind::Rings:
      require(param > 0.0 && param <= 100.0, ErrorCode::OutOfRange, "ring gap must lie in (0, 100]");
      break;
    case ScenarioKind::Moons:
      require(param >= 0.0 && param <= 10.0, ErrorCode::OutOfRange, "moon noise must lie in [0, 10]");
      break;
  }
}

LabeledDataset generate(const ScenarioSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(spec.kind)}));
  Builder b;
  switch (spec.kind) {
    case ScenarioKind::GlobularEqual: {
      const std::array<Point, 3> centers{{{1, 0}, {0, 1}, {1, 1}}};
      const std::array<double, 3> sds{spec.param, spec.param, spec.param};
      gaussian_clusters(b, rng, centers, sds, spec);
      break;
    }
    case ScenarioKind::GlobularOutliers: {
      const std::array<Point, 3> centers{{{1, 0}, {0, 1}, {1, 1}}};
      const std::array<double, 3> sds{0.25, 0.25, 0.25};
      gaussian_clusters(b, rng, centers, sds, spec);
      const std::array<Point, 3> outlier_centers{{{3, 0}, {0, 3}, {3, 3}}};
      for (std::size_t c = 0; c < 3; ++c) {
        const auto n_out = static_cast<std::size_t>(std::llround(spec.param * static_cast<double>(spec.size_of(c))));
        for (std::size_t i = 0; i < n_out; ++i) {
          const double x = rng.normal(outlier_centers[c].x, 1.0);
          const double y = rng.normal(outlier_centers[c].y, 1.0);
          b.add({x, y}, static_cast<int>(c));
        }
      }
      break;
    }
    case ScenarioKind::GlobularVarying: {
      const std::array<Point, 3> centers{{{0, 0}, {1, 1}, {-2, 2}}};
      const std::array<double, 3> sds{0.1, 0.1 + 0.1 * spec.param, 0.1 + 0.2 * spec.param};
      gaussian_clusters(b, rng, centers, sds, spec);
      break;
    }
    case ScenarioKind::Rings:
      ring(b, rng, 1.0, 2.0, spec.size_of(0), 0);
      ring(b, rng, 2.0 + spec.param, 3.0 + spec.param, spec.size_of(1), 1);
      break;
    case ScenarioKind::Moons:
      for (std::size_t i = 0; i < spec.size_of(0); ++i) {
        const double t = rng.uniform(0.0, kPi);
        b.add({std::cos(t) + rng.normal(0.0, spec.param), std::sin(t) + rng.normal(0.0, spec.param)}, 0);
      }
      for (std::size_t i = 0; i < spec.size_of(1); ++i) {
        const double t = rng.uniform(0.0, kPi);
        b.add({1.0 - std::cos(t) + rng.normal(0.0, spec.param), 0.5 - std::sin(t) + rng.normal(0.0, spec.param)}, 1);
      }
      break;
  }
  return b.finish();
}

}  // namespace urf
