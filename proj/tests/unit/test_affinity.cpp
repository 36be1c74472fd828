#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "affinity.hpp"
#include "grouping.hpp"
#include "helpers.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"

using urf::ErrorCode;

namespace {

urf::Tree stump(int feature, double thr) {
  urf::Tree t;
  t.nodes = {{0, false, feature, thr, 1, 2, 0}, {1, true, -1, 0, -1, -1, 1}, {2, true, -1, 0, -1, -1, 1}};
  return t;
}

urf::CountMatrix counts_of(std::size_t n, std::vector<std::uint32_t> v, std::uint64_t trees) {
  urf::CountMatrix c;
  c.n = n;
  c.n_trees = trees;
  c.counts = std::move(v);
  for (std::size_t i = 0; i < n; ++i) c.sample_ids.push_back("s" + std::to_string(i));
  return c;
}

}  // namespace

TEST_CASE("single-leaf trees: every pair co-occurs in every tree") {
  urf::Forest f;
  f.n_features = 1;
  for (int i = 0; i < 4; ++i) {
    urf::Tree t;
    t.nodes = {{0, true, -1, 0, -1, -1, 0}};
    f.trees.push_back(t);
  }
  const auto m = th::matrix({{1.0}, {2.0}, {3.0}});
  const auto c = urf::count_matrix(f, m);
  CHECK(std::all_of(c.counts.begin(), c.counts.end(), [](std::uint32_t v) { return v == 4; }));
  CHECK(c.n_trees == 4);
}

TEST_CASE("5 samples and 3 hand-built stumps match the explicit tally") {
  urf::Forest f;
  f.n_features = 2;
  f.trees = {stump(0, 2.5), stump(1, 0.5), stump(0, 4.5)};
  const auto m = th::matrix({{1, 0}, {2, 1}, {3, 0}, {4, 1}, {5, 0}});
  const auto c = urf::count_matrix(f, m);
  // tree 1: {0,1}{2,3,4}; tree 2: {0,2,4}{1,3}; tree 3: {0,1,2,3}{4}
  const std::vector<std::uint32_t> expect{3, 2, 2, 1, 1,  //
                                          2, 3, 1, 2, 0,  //
                                          2, 1, 3, 2, 2,  //
                                          1, 2, 2, 3, 1,  //
                                          1, 0, 2, 1, 3};
  CHECK(c.counts == expect);
  const auto tally = oracle::grouping_counts(f.trees, m);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) CHECK(c.at(i, j) == tally[i][j]);
}

TEST_CASE("oracle: count_matrix equals per-tree grouping on random forests") {
  std::mt19937_64 g(31);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t n = 10 + g() % 11;
    const auto m = th::random_matrix(g, n, 1 + g() % 4);
    urf::ForestConfig cfg{1 + g() % 10, 1, 1 + g() % 3, rep % 2 == 0, g()};
    const auto f = urf::train_forest(m, cfg);
    const auto c = urf::count_matrix(f, m);
    const auto tally = oracle::grouping_counts(f.trees, m);
    bool same = true;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) same &= c.at(i, j) == tally[i][j];
    CHECK(same);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(c.at(i, i) == cfg.n_trees);
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(c.at(i, j) == c.at(j, i));
        CHECK(c.at(i, j) <= cfg.n_trees);
      }
    }
  }
}

TEST_CASE("a pair split by every tree has count zero") {
  urf::Forest f;
  f.n_features = 1;
  f.trees = {stump(0, 0.5), stump(0, 0.7)};
  const auto c = urf::count_matrix(f, th::matrix({{0.0}, {1.0}}));
  CHECK(c.at(0, 1) == 0);
  CHECK(c.at(0, 0) == 2);
}

TEST_CASE("normalize examples") {
  auto c = counts_of(2, {500, 250, 250, 500}, 500);
  const auto a = urf::normalize(c);
  CHECK(a.at(0, 1) == 0.5);
  CHECK(a.at(0, 0) == 1.0);

  std::mt19937_64 g(3);
  const auto m = th::random_matrix(g, 15, 2);
  const auto f = urf::train_forest(m, {1, 1, 2, true, 9});
  const auto a1 = urf::normalize(urf::count_matrix(f, m));
  for (double v : a1.values) CHECK((v == 0.0 || v == 1.0));
  for (std::size_t i = 0; i < a1.n; ++i) CHECK(a1.at(i, i) == 1.0);
  CHECK(th::code_of([] { urf::normalize(counts_of(1, {0}, 0)); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("fuse examples") {
  std::mt19937_64 g(4);
  const auto m = th::random_matrix(g, 12, 3);
  const auto c = urf::count_matrix(urf::train_forest(m, {20, 2, 2, true, 1}), m);
  const std::vector<urf::CountMatrix> one{c}, two{c, c};
  CHECK(urf::fuse(one) == urf::normalize(c));
  CHECK(urf::fuse(two) == urf::normalize(c));

  const auto x = counts_of(3, {4, 1, 0, 1, 4, 2, 0, 2, 4}, 4);
  const auto y = counts_of(3, {6, 3, 5, 3, 6, 0, 5, 0, 6}, 6);
  const std::vector<urf::CountMatrix> xy{x, y}, yx{y, x};
  const auto sum = urf::sum_counts(xy);
  CHECK(sum.counts == std::vector<std::uint32_t>{10, 4, 5, 4, 10, 2, 5, 2, 10});
  CHECK(sum.n_trees == 10);
  CHECK(urf::fuse(xy) == urf::fuse(yx));
  CHECK(urf::fuse(xy).at(0, 2) == 0.5);

  auto z = x;
  z.sample_ids[0] = "other";
  const std::vector<urf::CountMatrix> bad{x, z};
  CHECK(th::code_of([&] { urf::fuse(bad); }) == ErrorCode::SampleMismatch);
  CHECK(th::code_of([] { urf::fuse(std::vector<urf::CountMatrix>{}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("to_distance maps affinity to 1 - affinity with zero diagonal") {
  std::mt19937_64 g(5);
  const auto m = th::random_matrix(g, 14, 3);
  const auto a = urf::normalize(urf::count_matrix(urf::train_forest(m, {30, 2, 2, true, 2}), m));
  const auto d = urf::to_distance(a);
  for (std::size_t i = 0; i < d.n; ++i) {
    CHECK(d.at(i, i) == 0.0);
    for (std::size_t j = 0; j < d.n; ++j) {
      CHECK(d.at(i, j) == 1.0 - a.at(i, j));
      CHECK(d.at(i, j) == d.at(j, i));
      CHECK(a.at(i, j) <= a.at(i, i));
    }
  }
}

TEST_CASE("fused counts across layers are the sum of per-layer counts") {
  std::mt19937_64 g(6);
  const std::vector<urf::OmicsMatrix> layers{th::random_matrix(g, 16, 3), th::random_matrix(g, 16, 5)};
  const auto forests = urf::train_layers(layers, {15, 0, 3, true, 8});
  const auto fused = urf::fused_counts(forests, layers);
  const auto c0 = urf::count_matrix(forests[0], layers[0]);
  const auto c1 = urf::count_matrix(forests[1], layers[1]);
  for (std::size_t k = 0; k < fused.counts.size(); ++k) CHECK(fused.counts[k] == c0.counts[k] + c1.counts[k]);
  CHECK(fused.n_trees == 30);
  CHECK(forests[0].config.mtry == 2);  // ceil(sqrt(3))
  CHECK(forests[1].config.mtry == 3);  // ceil(sqrt(5))
}

TEST_CASE("square matrix CSV has a sample header and round-trip decimals") {
  urf::SquareMatrix s;
  s.n = 2;
  s.values = {0.0, 0.1, 0.1, 0.0};
  s.sample_ids = {"a", "b"};
  std::ostringstream out;
  urf::write_square_csv(out, s);
  CHECK(out.str() == "sample_id,a,b\na,0,0.1\nb,0.1,0\n");
}

TEST_CASE("euclidean distance") {
  const auto d = urf::euclidean_distance(th::matrix({{0, 0}, {3, 4}}));
  CHECK(d.at(0, 1) == 5.0);
  CHECK(d.at(1, 1) == 0.0);
}

TEST_CASE("wine cultivars are recovered from the forest affinity") {
  const std::string dir = URF_TEST_DATA_DIR;
  const auto m = urf::preprocess(urf::parse_matrix(dir + "/wine.csv"), {});
  const auto truth = urf::read_labels(dir + "/wine_labels.csv", m.sample_ids());
  const auto f = urf::train_forest(m, urf::resolve_config({200, 0, 5, true, 1}, m.n_features()));
  const auto d = urf::to_distance(urf::normalize(urf::count_matrix(f, m)));
  const auto labels = urf::cut(urf::ward_linkage(d), 3, d.sample_ids);
  CHECK(urf::ari(labels, truth) > 0.5);
}
