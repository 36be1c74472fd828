#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#if URF_HAVE_BOOST
#include <boost/math/special_functions/gamma.hpp>
#endif

#include "helpers.hpp"
#include "metrics.hpp"
#include "oracles.hpp"

using urf::ErrorCode;

namespace {

urf::ClusterAssignment assignment(const std::vector<int>& labels) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < labels.size(); ++i) ids.push_back("s" + std::to_string(i));
  return urf::ClusterAssignment::from_raw(labels, ids);
}

std::vector<urf::SurvivalRecord> records(const std::vector<std::pair<double, int>>& te) {
  std::vector<urf::SurvivalRecord> out;
  for (std::size_t i = 0; i < te.size(); ++i) out.push_back({"s" + std::to_string(i), te[i].first, te[i].second != 0});
  return out;
}

urf::DistanceMatrix line_distance(const std::vector<double>& x) {
  urf::DistanceMatrix d;
  d.n = x.size();
  d.values.resize(d.n * d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    d.sample_ids.push_back("s" + std::to_string(i));
    for (std::size_t j = 0; j < d.n; ++j) d.values[i * d.n + j] = std::fabs(x[i] - x[j]);
  }
  return d;
}

}  // namespace

TEST_CASE("ARI examples") {
  const std::vector<int> a{0, 0, 1, 1}, b{0, 1, 0, 1};
  CHECK(urf::ari(a, b) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(urf::ari(a, a) == 1.0);
  const std::vector<int> relabeled{5, 5, 2, 2};
  CHECK(urf::ari(a, relabeled) == doctest::Approx(1.0));
  const std::vector<int> one(4, 0);
  CHECK(urf::ari(one, one) == 1.0);
  const std::vector<int> short_one{0, 1};
  CHECK(th::code_of([&] { urf::ari(a, short_one); }) == ErrorCode::SampleMismatch);
}

TEST_CASE("oracle: ARI matches the pair-count formula on 200 random partition pairs") {
  std::mt19937_64 g(5150);
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 2 + g() % 60;
    const int ka = 1 + static_cast<int>(g() % 6), kb = 1 + static_cast<int>(g() % 6);
    const auto x = oracle::random_labels(g, n, ka);
    const auto y = oracle::random_labels(g, n, kb);
    const double got = urf::ari(x, y);
    CHECK(got == doctest::Approx(oracle::ari(x, y)).epsilon(1e-12));
    CHECK(got == doctest::Approx(urf::ari(y, x)).epsilon(1e-12));
    CHECK(got <= 1.0 + 1e-12);
    // label permutation invariance
    std::vector<int> perm(static_cast<std::size_t>(ka));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), g);
    std::vector<int> xp(n);
    for (std::size_t i = 0; i < n; ++i) xp[i] = perm[static_cast<std::size_t>(x[i])] + 10;
    CHECK(urf::ari(xp, y) == doctest::Approx(got).epsilon(1e-12));
  }
}

TEST_CASE("silhouette examples") {
  const auto d = line_distance({0, 1, 10});
  const std::vector<int> labels{0, 0, 1};
  const auto s = urf::silhouette(d, labels);
  CHECK(s.per_sample[0] == doctest::Approx(0.9));
  CHECK(s.per_sample[1] == doctest::Approx(8.0 / 9.0));
  CHECK(s.per_sample[2] == 0.0);
  CHECK(s.mean == doctest::Approx((0.9 + 8.0 / 9.0) / 3.0));
  const std::vector<int> one(3, 0);
  CHECK(th::code_of([&] { urf::silhouette(d, one); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("oracle: silhouette matches the direct definition") {
  std::mt19937_64 g(77);
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 3 + g() % 20;
    std::vector<double> x(n);
    std::normal_distribution<double> z;
    for (auto& v : x) v = z(g);
    auto labels = oracle::random_labels(g, n, 2 + static_cast<int>(g() % 3));
    labels[0] = 0;
    labels[1] = 1;
    const auto d = line_distance(x);
    std::vector<std::vector<double>> raw(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) raw[i][j] = d.at(i, j);
    const auto ref = oracle::silhouette(raw, labels);
    const auto got = urf::silhouette(d, labels);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(got.per_sample[i] == doctest::Approx(ref[i]).epsilon(1e-12));
      CHECK((got.per_sample[i] >= -1.0 && got.per_sample[i] <= 1.0));
    }
  }
}

TEST_CASE("chi-square survival function") {
  CHECK(urf::chi_square_sf(3.841, 1) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(urf::chi_square_sf(3.841, 1) == doctest::Approx(0.050013683763956804).epsilon(1e-10));
  CHECK(urf::chi_square_sf(7.5, 3) == doctest::Approx(0.0575584519726364).epsilon(1e-10));
  CHECK(urf::chi_square_sf(0.5, 4) == doctest::Approx(0.9735009788392561).epsilon(1e-10));
  CHECK(urf::chi_square_sf(20, 2) == doctest::Approx(4.539992976248486e-05).epsilon(1e-10));
  CHECK(urf::chi_square_sf(0, 2) == 1.0);
  CHECK(th::code_of([] { urf::chi_square_sf(1, 0); }) == ErrorCode::InvalidArgument);
}

#if URF_HAVE_BOOST
TEST_CASE("oracle: gamma_q agrees with boost over a grid") {
  for (double a : {0.5, 1.0, 1.5, 2.0, 3.5, 10.0, 50.0}) {
    for (double x : {0.0, 0.01, 0.3, 1.0, 2.5, 7.0, 20.0, 60.0, 120.0}) {
      const double want = boost::math::gamma_q(a, x);
      const double got = urf::gamma_q(a, x);
      CHECK(std::fabs(got - want) <= 1e-12 + 1e-10 * want);
    }
  }
}
#endif

TEST_CASE("log-rank: identical groups give zero") {
  const auto recs = records({{1, 1}, {2, 1}, {3, 0}, {1, 1}, {2, 1}, {3, 0}});
  const auto r = urf::logrank_test(recs, assignment({0, 0, 0, 1, 1, 1}));
  CHECK(r.chi_square == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(1.0));
  CHECK(r.degrees_of_freedom == 1);
}

TEST_CASE("log-rank: early events against late censoring") {
  const auto recs = records({{1, 1}, {1, 1}, {1, 1}, {1, 1}, {1, 1}, {10, 0}, {10, 0}, {10, 0}, {10, 0}, {10, 0}});
  const auto r = urf::logrank_test(recs, assignment({0, 0, 0, 0, 0, 1, 1, 1, 1, 1}));
  CHECK(r.chi_square == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(std::erfc(std::sqrt(4.5))).epsilon(1e-10));
}

TEST_CASE("log-rank hand fixture with ties and censoring") {
  // A: (1,1) (3,1) (3,0) (6,1) (8,0)   B: (2,1) (3,1) (5,1) (5,1) (9,1)
  const auto recs = records({{1, 1}, {3, 1}, {3, 0}, {6, 1}, {8, 0}, {2, 1}, {3, 1}, {5, 1}, {5, 1}, {9, 1}});
  const auto r = urf::logrank_test(recs, assignment({0, 0, 0, 0, 0, 1, 1, 1, 1, 1}));
  CHECK(std::fabs(r.chi_square - 9583.0 / 85487.0) <= 1e-9);
  CHECK(std::fabs(r.p_value - 0.737767087708854) <= 1e-9);
  CHECK(r.observed[0] == 3.0);
  CHECK(r.observed[0] - r.expected[0] == doctest::Approx(-37.0 / 90.0).epsilon(1e-12));
}

TEST_CASE("oracle: two-group log-rank matches direct summation") {
  std::mt19937_64 g(404);
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 6 + g() % 30;
    std::vector<oracle::Obs> obs;
    std::vector<std::pair<double, int>> te;
    std::vector<int> groups;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = 1.0 + static_cast<double>(g() % 8);
      const int e = (g() % 3) != 0 ? 1 : 0;
      const int grp = i < 2 ? static_cast<int>(i) : static_cast<int>(g() % 2);
      obs.push_back({t, e != 0, grp});
      te.push_back({t, e});
      groups.push_back(grp);
    }
    if (std::none_of(te.begin(), te.end(), [](const auto& p) { return p.second == 1; })) continue;
    const double want = oracle::logrank_two_group(obs);
    if (!std::isfinite(want)) continue;
    const auto r = urf::logrank_test(records(te), assignment(groups));
    CHECK(r.chi_square == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("log-rank with three groups has two degrees of freedom") {
  const auto recs = records({{1, 1}, {2, 1}, {3, 1}, {4, 1}, {5, 1}, {6, 1}, {7, 0}, {8, 1}, {9, 1}});
  const auto r = urf::logrank_test(recs, assignment({0, 0, 0, 1, 1, 1, 2, 2, 2}));
  CHECK(r.degrees_of_freedom == 2);
  CHECK(r.chi_square > 0.0);
  CHECK(r.p_value == doctest::Approx(urf::chi_square_sf(r.chi_square, 2)));
}

TEST_CASE("log-rank errors") {
  const auto censored = records({{1, 0}, {2, 0}, {3, 0}, {4, 0}});
  CHECK(th::code_of([&] { urf::logrank_test(censored, assignment({0, 0, 1, 1})); }) == ErrorCode::AllCensored);
  const auto recs = records({{1, 1}, {2, 1}});
  CHECK(th::code_of([&] { urf::logrank_test(recs, assignment({0, 0})); }) == ErrorCode::InvalidArgument);
  std::vector<urf::SurvivalRecord> stray{{"nobody", 1.0, true}};
  CHECK(th::code_of([&] { urf::logrank_test(stray, assignment({0, 1})); }) == ErrorCode::UnmatchedId);
}

TEST_CASE("pearson examples") {
  const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 1, 4, 3, 5};
  CHECK(urf::pearson(x, y) == doctest::Approx(0.8).epsilon(1e-12));
  std::vector<double> rev(x.rbegin(), x.rend());
  CHECK(urf::pearson(x, rev) == doctest::Approx(-1.0));
  const std::vector<double> flat(5, 2.0);
  CHECK(th::code_of([&] { urf::pearson(x, flat); }) == ErrorCode::ZeroVariance);
  std::mt19937_64 g(1);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> a(12), b(12);
    for (auto& v : a) v = z(g);
    for (auto& v : b) v = z(g);
    CHECK(urf::pearson(a, b) == doctest::Approx(oracle::pearson(a, b)).epsilon(1e-10));
  }
}

TEST_CASE("Kaplan-Meier hand case") {
  const auto recs = records({{1, 1}, {2, 0}, {3, 1}, {3, 1}, {5, 0}});
  const auto rows = urf::km_table(recs, assignment({0, 0, 0, 0, 0}));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].time == 1.0);
  CHECK(rows[0].at_risk == 5);
  CHECK(rows[0].survival == doctest::Approx(0.8));
  CHECK(rows[1].survival == doctest::Approx(0.8));
  CHECK(rows[2].at_risk == 3);
  CHECK(rows[2].events == 2);
  CHECK(rows[2].survival == doctest::Approx(0.8 / 3.0));
  CHECK(rows[3].survival == doctest::Approx(0.8 / 3.0));
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].survival <= rows[i - 1].survival);

  const auto none = urf::km_table(records({{1, 0}, {2, 0}}), assignment({0, 0}));
  for (const auto& r : none) CHECK(r.survival == 1.0);
  const auto single = urf::km_table(records({{4, 1}}), assignment({0}));
  REQUIRE(single.size() == 1);
  CHECK(single[0].survival == 0.0);

  std::ostringstream out;
  urf::write_km_csv(out, rows);
  CHECK(out.str().rfind("group,time,at_risk,events,survival\n0,1,5,1,0.8\n", 0) == 0);
}
