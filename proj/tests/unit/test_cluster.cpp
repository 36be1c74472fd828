#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cluster.hpp"
#include "helpers.hpp"
#include "metrics.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"

using urf::ErrorCode;

namespace {

urf::DistanceMatrix dist_from(const std::vector<std::vector<double>>& d) {
  urf::DistanceMatrix m;
  m.n = d.size();
  for (const auto& r : d) m.values.insert(m.values.end(), r.begin(), r.end());
  for (std::size_t i = 0; i < m.n; ++i) m.sample_ids.push_back("s" + std::to_string(i));
  return m;
}

std::vector<std::vector<double>> random_dissimilarity(std::mt19937_64& g, std::size_t n, bool euclidean) {
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<std::array<double, 3>> pts(n);
  for (auto& p : pts) p = {u(g) * 4, u(g) * 4, u(g) * 4};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = u(g);
      if (euclidean) {
        v = 0;
        for (int k = 0; k < 3; ++k) v += (pts[i][k] - pts[j][k]) * (pts[i][k] - pts[j][k]);
        v = std::sqrt(v);
      }
      d[i][j] = d[j][i] = v;
    }
  return d;
}

}  // namespace

TEST_CASE("ward: two points merge at their distance") {
  const auto dend = urf::ward_linkage(dist_from({{0, 0.7}, {0.7, 0}}));
  REQUIRE(dend.merges.size() == 1);
  CHECK(dend.merges[0].a == 0);
  CHECK(dend.merges[0].b == 1);
  CHECK(dend.merges[0].height == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(dend.merges[0].size == 2);
}

TEST_CASE("ward: collinear points 0, 1, 10") {
  const auto d = dist_from({{0, 1, 10}, {1, 0, 9}, {10, 9, 0}});
  const auto dend = urf::ward_linkage(d);
  CHECK(dend.merges[0].a == 0);
  CHECK(dend.merges[0].b == 1);
  CHECK(dend.merges[1].a == 2);
  CHECK(dend.merges[1].b == 3);
  // Ward.D2 criterion for {0,1} vs {2}: 2*2*1/3 * |0.5 - 10|^2
  CHECK(dend.merges[1].height == doctest::Approx(std::sqrt(4.0 / 3.0 * 90.25)).epsilon(1e-12));
  const auto two = urf::cut(dend, 2);
  CHECK(two.labels == std::vector<int>{0, 0, 1});
  CHECK(urf::cut(dend, 1).labels == std::vector<int>{0, 0, 0});
  CHECK(urf::cut(dend, 3).labels == std::vector<int>{0, 1, 2});
  CHECK(th::code_of([&] { urf::cut(dend, 4); }) == ErrorCode::OutOfRange);
  CHECK(th::code_of([&] { urf::cut(dend, 0); }) == ErrorCode::OutOfRange);
}

TEST_CASE("ward ties go to the smallest id pair") {
  // all pairs equidistant
  const auto dend = urf::ward_linkage(dist_from({{0, 1, 1, 1}, {1, 0, 1, 1}, {1, 1, 0, 1}, {1, 1, 1, 0}}));
  CHECK(dend.merges[0].a == 0);
  CHECK(dend.merges[0].b == 1);
  CHECK(dend.merges[1].a == 2);
  CHECK(dend.merges[1].b == 3);
}

TEST_CASE("ward rejects invalid input") {
  CHECK(th::code_of([] { urf::ward_linkage(dist_from({{0}})); }) == ErrorCode::InvalidArgument);
  CHECK(th::code_of([] { urf::ward_linkage(dist_from({{0, 1}, {2, 0}})); }) == ErrorCode::InvalidArgument);
  CHECK(th::code_of([] { urf::ward_linkage(dist_from({{0, -1}, {-1, 0}})); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("oracle: ward merge sequence equals naive agglomeration on 200 random 8-point matrices") {
  std::mt19937_64 g(808);
  int exact = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const auto d = random_dissimilarity(g, 8, inst % 2 == 0);
    const auto got = urf::ward_linkage(dist_from(d));
    const auto ref = oracle::naive_ward(d);
    REQUIRE(got.merges.size() == ref.size());
    bool same = true;
    for (std::size_t m = 0; m < ref.size(); ++m) {
      same &= got.merges[m].a == ref[m].a && got.merges[m].b == ref[m].b && got.merges[m].size == ref[m].size &&
              std::fabs(got.merges[m].height - ref[m].height) <= 1e-9 * (1.0 + ref[m].height);
    }
    CHECK(same);
    exact += same ? 1 : 0;
  }
  CHECK(exact == 200);
}

TEST_CASE("oracle: ward agrees with naive agglomeration for n up to 12") {
  std::mt19937_64 g(909);
  for (std::size_t n = 2; n <= 12; ++n) {
    for (int rep = 0; rep < 5; ++rep) {
      const auto d = random_dissimilarity(g, n, rep % 2 == 1);
      const auto got = urf::ward_linkage(dist_from(d));
      const auto ref = oracle::naive_ward(d);
      for (std::size_t m = 0; m < ref.size(); ++m) {
        CHECK(got.merges[m].a == ref[m].a);
        CHECK(got.merges[m].b == ref[m].b);
        CHECK(got.merges[m].height == doctest::Approx(ref[m].height).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("ward heights are non-decreasing and cuts partition all samples") {
  std::mt19937_64 g(10);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 3 + g() % 25;
    const auto d = dist_from(random_dissimilarity(g, n, rep % 3 == 0));
    const auto dend = urf::ward_linkage(d);
    CHECK(dend.merges.size() == n - 1);
    std::set<int> used;
    for (std::size_t m = 0; m < dend.merges.size(); ++m) {
      if (m > 0) CHECK(dend.merges[m].height >= dend.merges[m - 1].height - 1e-12);
      CHECK(used.insert(dend.merges[m].a).second);
      CHECK(used.insert(dend.merges[m].b).second);
      CHECK(dend.merges[m].a < dend.merges[m].b);
    }
    for (int k = 1; k <= static_cast<int>(n); ++k) {
      const auto a = urf::cut(dend, k);
      CHECK(a.k == k);
      CHECK(a.labels.size() == n);
      // labels numbered by first appearance
      int next = 0;
      for (int l : a.labels) {
        CHECK(l <= next);
        if (l == next) ++next;
      }
    }
  }
}

TEST_CASE("silhouette selection picks two far-separated blobs") {
  std::vector<std::vector<double>> d(10, std::vector<double>(10, 0.0));
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(0.0, 0.05);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = i + 1; j < 10; ++j) d[i][j] = d[j][i] = ((i < 5) == (j < 5) ? u(g) : 5.0 + u(g));
  const auto sel = urf::select_k_silhouette(dist_from(d), 2, 5);
  CHECK(sel.k == 2);
  CHECK(sel.scores.size() == 4);
  CHECK(th::code_of([&] { urf::select_k_silhouette(dist_from(d), 1, 5); }) == ErrorCode::OutOfRange);
  CHECK(th::code_of([&] { urf::select_k_silhouette(dist_from(d), 2, 10); }) == ErrorCode::OutOfRange);
}

TEST_CASE("oracle: silhouette scores per k match the direct definition") {
  std::mt19937_64 g(12);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 6 + g() % 7;
    const auto raw = random_dissimilarity(g, n, rep % 2 == 0);
    const auto d = dist_from(raw);
    const auto dend = urf::ward_linkage(d);
    const auto sel = urf::select_k_silhouette(d, dend, 2, static_cast<int>(n) - 1);
    double best = -2.0;
    int best_k = 0;
    for (const auto& [k, score] : sel.scores) {
      const auto labels = urf::cut(dend, k).labels;
      const auto s = oracle::silhouette(raw, labels);
      double mean = 0.0;
      for (double v : s) mean += v;
      mean /= static_cast<double>(n);
      CHECK(score == doctest::Approx(mean).epsilon(1e-12));
      if (mean > best + 1e-12) {
        best = mean;
        best_k = k;
      }
    }
    CHECK(sel.k == best_k);
  }
}

TEST_CASE("dendrogram CSV") {
  const auto dend = urf::ward_linkage(dist_from({{0, 0.5}, {0.5, 0}}));
  std::ostringstream out;
  urf::write_dendrogram_csv(out, dend);
  CHECK(out.str() == "a,b,height,size\n0,1,0.5,2\n");
}

TEST_CASE("labels CSV parsing matches ids and compacts labels") {
  const std::vector<std::string> ids{"a", "b", "c"};
  const auto x = urf::parse_labels_text("sample_id,label\nc,7\na,3\nb,7\n", ids);
  CHECK(x.labels == std::vector<int>{0, 1, 1});
  CHECK(x.k == 2);
  const auto y = urf::parse_labels_text("sample_id,label\na,setosa\nb,virginica\nc,setosa\n", ids);
  CHECK(y.labels == std::vector<int>{0, 1, 0});
  CHECK(th::code_of([&] { urf::parse_labels_text("a,1\nb,1\nzz,2\nc,1\n", ids); }) == ErrorCode::UnmatchedId);
  CHECK(th::code_of([&] { urf::parse_labels_text("a,1\nb,1\n", ids); }) == ErrorCode::UnmatchedId);
  std::ostringstream out;
  urf::write_labels_csv(out, x);
  CHECK(out.str() == "sample_id,label\na,0\nb,1\nc,1\n");
}

TEST_CASE("stability diagnostic: determinism, shape and guards") {
  std::mt19937_64 g(21);
  const auto m = th::blobs(g, 20, 3, 4.0);
  const auto f = urf::train_forest(m, {60, 2, 3, true, 4});
  const std::vector<int> ks{2, 3};
  const std::vector<std::size_t> grid{60, 30, 10};
  const auto a = urf::stability_diagnostic(f, m, ks, grid, 4, 99);
  const auto b = urf::stability_diagnostic(f, m, ks, grid, 4, 99);
  CHECK(a.grid == b.grid);
  CHECK(a.grid.size() == 6);
  for (const auto& [cell, aris] : a.grid) {
    CHECK(aris.size() == 4);
    for (double v : aris) CHECK((v >= -1.0 && v <= 1.0));
  }
  CHECK(a.median(3, 60) >= 0.9);
  const auto j = nlohmann::json::parse(urf::stability_to_json(a));
  CHECK(j.contains("suggested_k"));

  const std::vector<int> bad_k{1, 2};
  CHECK(th::code_of([&] { urf::stability_diagnostic(f, m, bad_k, grid, 2, 1); }) == ErrorCode::OutOfRange);
  const std::vector<std::size_t> big{61};
  CHECK(th::code_of([&] { urf::stability_diagnostic(f, m, ks, big, 2, 1); }) == ErrorCode::OutOfRange);
}

TEST_CASE("cluster_distance clamps the silhouette range") {
  const auto d = dist_from({{0, 1, 5}, {1, 0, 5}, {5, 5, 0}});
  urf::KChoice choice;
  const auto c = urf::cluster_distance(d, choice);
  CHECK(c.labels.k == 2);
  choice.fixed_k = 3;
  CHECK(urf::cluster_distance(d, choice).labels.k == 3);
}
