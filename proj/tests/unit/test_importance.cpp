#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "forest.hpp"
#include "helpers.hpp"
#include "importance.hpp"
#include "oracles.hpp"

using urf::ErrorCode;

namespace {

// Tree splitting feature `f` at `thr`.
urf::Tree stump(int f, double thr) {
  urf::Tree t;
  t.nodes.resize(3);
  t.nodes[0] = {0, false, f, thr, 1, 2, 0};
  t.nodes[1] = {1, true, -1, 0.0, -1, -1, 1};
  t.nodes[2] = {2, true, -1, 0.0, -1, -1, 1};
  return t;
}

double gini(double n, double pos) {
  if (n <= 0) return 0.0;
  const double p = pos / n;
  return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

}  // namespace

TEST_CASE("stump that isolates the target cluster scores its root impurity") {
  std::vector<std::vector<double>> rows;
  std::vector<int> raw;
  for (int i = 0; i < 10; ++i) {
    rows.push_back({0.0, 1.0 * i, 2.0, i < 4 ? 0.0 : 1.0, -1.0 * i});
    raw.push_back(i < 4 ? 1 : 0);
  }
  const auto m = th::matrix(rows);
  urf::Forest f;
  f.n_features = 5;
  f.trees.push_back(stump(3, 0.5));
  const auto labels = urf::ClusterAssignment::from_raw(raw, m.sample_ids());
  const auto imp = urf::cluster_importance(f, m, labels, 1);
  CHECK(imp.scores[3] == doctest::Approx(0.48).epsilon(1e-15));
  for (int j : {0, 1, 2, 4}) CHECK(imp.scores[static_cast<std::size_t>(j)] == 0.0);
  // One-vs-all for the complementary cluster is the same split.
  CHECK(urf::cluster_importance(f, m, labels, 0).scores[3] == doctest::Approx(0.48));

  const auto norm = urf::normalized(imp);
  CHECK(norm.normalized);
  CHECK(norm.scores[3] == 1.0);
  urf::ImportanceVector zero{0, std::vector<double>(3, 0.0), false};
  CHECK(urf::normalized(zero).scores == std::vector<double>(3, 0.0));

  CHECK(th::code_of([&] { urf::cluster_importance(f, m, labels, 2); }) == ErrorCode::OutOfRange);
}

TEST_CASE("importance of an empty target cluster is an error") {
  const auto m = th::matrix({{0.0}, {1.0}, {2.0}});
  urf::Forest f;
  f.n_features = 1;
  f.trees.push_back(stump(0, 0.5));
  urf::ClusterAssignment a;
  a.labels = {0, 0, 0};
  a.k = 2;
  a.sample_ids = m.sample_ids();
  CHECK(th::code_of([&] { urf::cluster_importance(f, m, a, 1); }) == ErrorCode::EmptyCluster);
}

TEST_CASE("importance sums to the impurity removed by the leaf partition") {
  std::mt19937_64 g(31);
  for (int rep = 0; rep < 10; ++rep) {
    const auto m = th::random_matrix(g, 40, 6);
    const auto f = urf::train_forest(m, {15, 2, 2, true, static_cast<std::uint64_t>(rep)});
    const auto raw = oracle::random_labels(g, 40, 3);
    const auto a = urf::ClusterAssignment::from_raw(raw, m.sample_ids());
    const auto leaves = urf::assign_leaves(f, m);
    for (int c = 0; c < a.k; ++c) {
      const auto imp = urf::cluster_importance(f, m, a, c);
      double total = 0.0;
      for (double s : imp.scores) {
        CHECK(s >= 0.0);
        total += s;
      }
      double want = 0.0;
      for (std::size_t t = 0; t < f.trees.size(); ++t) {
        std::map<int, std::pair<double, double>> per_leaf;
        double pos = 0.0;
        for (std::size_t i = 0; i < 40; ++i) {
          auto& cell = per_leaf[leaves.at(t, i)];
          cell.first += 1.0;
          const bool hit = a.labels[i] == c;
          cell.second += hit ? 1.0 : 0.0;
          pos += hit ? 1.0 : 0.0;
        }
        double leaf_term = 0.0;
        for (const auto& [leaf, cell] : per_leaf) leaf_term += cell.first / 40.0 * gini(cell.first, cell.second);
        want += gini(40.0, pos) - leaf_term;
      }
      want /= static_cast<double>(f.trees.size());
      CHECK(total == doctest::Approx(want).epsilon(1e-10));
    }
  }
}

TEST_CASE("importance only sees the target versus the rest") {
  std::mt19937_64 g(32);
  const auto m = th::random_matrix(g, 30, 4);
  const auto f = urf::train_forest(m, {10, 2, 2, true, 3});
  std::vector<int> raw(30);
  for (std::size_t i = 0; i < 30; ++i) raw[i] = static_cast<int>(i % 3);
  std::vector<int> merged = raw;
  for (auto& v : merged) v = v == 0 ? 0 : 1;
  const auto a = urf::ClusterAssignment::from_raw(raw, m.sample_ids());
  const auto b = urf::ClusterAssignment::from_raw(merged, m.sample_ids());
  const auto x = urf::cluster_importance(f, m, a, 0);
  const auto y = urf::cluster_importance(f, m, b, 0);
  for (std::size_t j = 0; j < 4; ++j) CHECK(x.scores[j] == doctest::Approx(y.scores[j]).epsilon(1e-14));
}

TEST_CASE("importance correlation") {
  std::vector<urf::ImportanceVector> v(3);
  v[0].scores = {1, 2, 3, 4, 5};
  v[1].scores = {10, 8, 6, 4, 2};
  v[2].scores = {2, 1, 4, 3, 5};
  const auto c = urf::importance_correlation(v);
  for (int i = 0; i < 3; ++i) CHECK(c[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] == 1.0);
  CHECK(c[0][1] == doctest::Approx(-1.0));
  CHECK(c[0][2] == doctest::Approx(0.8));
  CHECK(c[1][2] == doctest::Approx(oracle::pearson(v[1].scores, v[2].scores)));
  CHECK(c[2][1] == c[1][2]);

  std::ostringstream out;
  const std::vector<std::string> ids{"a", "b", "c", "d", "e"};
  urf::write_importance_csv(out, ids, std::span<const urf::ImportanceVector>(v.data(), 1));
  CHECK(out.str().rfind("feature_id,", 0) == 0);
}
