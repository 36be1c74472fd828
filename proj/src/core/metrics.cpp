#include "metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

#include "error.hpp"

namespace urf {

namespace {

double choose2(double x) { return x * (x - 1.0) / 2.0; }

std::vector<int> compact(std::span<const int> labels) {
  std::map<int, int> remap;
  for (int l : labels) remap.emplace(l, 0);
  int next = 0;
  for (auto& [raw, idx] : remap) idx = next++;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = remap[labels[i]];
  return out;
}

}  // namespace

ContingencyTable contingency(std::span<const int> a, std::span<const int> b) {
  require(a.size() == b.size(), ErrorCode::SampleMismatch, "partitions differ in length");
  const auto ca = compact(a);
  const auto cb = compact(b);
  ContingencyTable t;
  t.n = a.size();
  t.rows = ca.empty() ? 0 : static_cast<std::size_t>(*std::max_element(ca.begin(), ca.end()) + 1);
  t.cols = cb.empty() ? 0 : static_cast<std::size_t>(*std::max_element(cb.begin(), cb.end()) + 1);
  t.counts.assign(t.rows * t.cols, 0);
  t.row_sums.assign(t.rows, 0);
  t.col_sums.assign(t.cols, 0);
  for (std::size_t i = 0; i < t.n; ++i) {
    const auto r = static_cast<std::size_t>(ca[i]);
    const auto c = static_cast<std::size_t>(cb[i]);
    ++t.counts[r * t.cols + c];
    ++t.row_sums[r];
    ++t.col_sums[c];
  }
  return t;
}

double ari(std::span<const int> a, std::span<const int> b) {
  const ContingencyTable t = contingency(a, b);
  require(t.n >= 1, ErrorCode::InvalidArgument, "ARI of empty partitions");
  double index = 0.0;
  for (auto c : t.counts) index += choose2(static_cast<double>(c));
  double sum_a = 0.0;
  for (auto c : t.row_sums) sum_a += choose2(static_cast<double>(c));
  double sum_b = 0.0;
  for (auto c : t.col_sums) sum_b += choose2(static_cast<double>(c));
  const double total = choose2(static_cast<double>(t.n));
  const double expected = total > 0.0 ? sum_a * sum_b / total : 0.0;
  const double max_index = (sum_a + sum_b) / 2.0;
  const double denom = max_index - expected;
  // Zero denominator only arises when both partitions are identical.
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

double ari(const ClusterAssignment& a, const ClusterAssignment& b) {
  require(a.sample_ids.empty() || b.sample_ids.empty() || a.sample_ids == b.sample_ids,
          ErrorCode::SampleMismatch, "assignments cover different samples");
  return ari(std::span<const int>(a.labels), std::span<const int>(b.labels));
}

SilhouetteResult silhouette(const DistanceMatrix& d, std::span<const int> labels) {
  require(labels.size() == d.n, ErrorCode::SampleMismatch, "label count does not match distance matrix");
  const auto lab = compact(labels);
  const int k = lab.empty() ? 0 : *std::max_element(lab.begin(), lab.end()) + 1;
  require(k >= 2, ErrorCode::InvalidArgument, "silhouette needs at least two clusters");

  std::vector<std::size_t> size(static_cast<std::size_t>(k), 0);
  for (int l : lab) ++size[static_cast<std::size_t>(l)];

  SilhouetteResult out;
  out.per_sample.assign(d.n, 0.0);
  std::vector<double> sums(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < d.n; ++i) {
    const auto own = static_cast<std::size_t>(lab[i]);
    if (size[own] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < d.n; ++j) {
      if (j != i) sums[static_cast<std::size_t>(lab[j])] += d.at(i, j);
    }
    const double a = sums[own] / static_cast<double>(size[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sums.size(); ++c) {
      if (c != own) b = std::min(b, sums[c] / static_cast<double>(size[c]));
    }
    const double m = std::max(a, b);
    out.per_sample[i] = m > 0.0 ? (b - a) / m : 0.0;
  }
  out.mean = std::accumulate(out.per_sample.begin(), out.per_sample.end(), 0.0) / static_cast<double>(d.n);
  return out;
}

SilhouetteResult silhouette(const DistanceMatrix& d, const ClusterAssignment& a) {
  return silhouette(d, std::span<const int>(a.labels));
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorCode::InvalidArgument, "pearson inputs differ in length");
  require(x.size() >= 2, ErrorCode::InvalidArgument, "pearson needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0 && syy > 0.0, ErrorCode::ZeroVariance, "pearson input has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---------------------------------------------------------------------------

double gamma_q(double a, double x) {
  require(a > 0.0 && x >= 0.0, ErrorCode::InvalidArgument, "gamma_q needs a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
  constexpr double eps = 1e-16;
  constexpr int max_iter = 10000;
  if (x < a + 1.0) {
    // series for P(a, x)
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int i = 0; i < max_iter; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * eps) break;
    }
    return std::clamp(1.0 - sum * std::exp(log_prefix), 0.0, 1.0);
  }
  // modified Lentz continued fraction for Q(a, x)
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= max_iter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < eps) break;
  }
  return std::clamp(std::exp(log_prefix) * h, 0.0, 1.0);
}

double chi_square_sf(double x, double df) {
  require(df > 0.0, ErrorCode::InvalidArgument, "degrees of freedom must be positive");
  if (x <= 0.0) return 1.0;
  return gamma_q(df / 2.0, x / 2.0);
}

namespace {

struct MatchedRecord {
  double time;
  bool event;
  std::size_t group;
};

std::vector<MatchedRecord> match_records(std::span<const SurvivalRecord> records, const ClusterAssignment& a,
                                         std::vector<int>& groups) {
  a.validate();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < a.sample_ids.size(); ++i) index.emplace(a.sample_ids[i], i);
  std::vector<std::pair<const SurvivalRecord*, int>> raw;
  for (const auto& r : records) {
    const auto it = index.find(r.sample_id);
    require(it != index.end(), ErrorCode::UnmatchedId, "survival record for unknown sample '" + r.sample_id + "'");
    raw.emplace_back(&r, a.labels[it->second]);
  }
  std::map<int, std::size_t> gidx;
  for (const auto& [r, g] : raw) gidx.emplace(g, 0);
  groups.clear();
  for (auto& [g, idx] : gidx) {
    idx = groups.size();
    groups.push_back(g);
  }
  std::vector<MatchedRecord> out;
  for (const auto& [r, g] : raw) out.push_back({r->time, r->event, gidx[g]});
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.time < y.time; });
  return out;
}

}  // namespace

LogRankResult logrank_test(std::span<const SurvivalRecord> records, const ClusterAssignment& a) {
  LogRankResult res;
  const auto recs = match_records(records, a, res.groups);
  const std::size_t g = res.groups.size();
  require(g >= 2, ErrorCode::InvalidArgument, "log-rank test needs at least two nonempty groups");
  require(std::any_of(recs.begin(), recs.end(), [](const auto& r) { return r.event; }), ErrorCode::AllCensored,
          "every survival record is censored");

  std::vector<double> at_risk(g, 0.0);
  for (const auto& r : recs) at_risk[r.group] += 1.0;
  res.observed.assign(g, 0.0);
  res.expected.assign(g, 0.0);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(g));

  std::vector<double> deaths(g);
  std::vector<double> leaving(g);
  for (std::size_t pos = 0; pos < recs.size();) {
    const double t = recs[pos].time;
    std::fill(deaths.begin(), deaths.end(), 0.0);
    std::fill(leaving.begin(), leaving.end(), 0.0);
    std::size_t end = pos;
    for (; end < recs.size() && recs[end].time == t; ++end) {
      leaving[recs[end].group] += 1.0;
      if (recs[end].event) deaths[recs[end].group] += 1.0;
    }
    const double d = std::accumulate(deaths.begin(), deaths.end(), 0.0);
    const double n = std::accumulate(at_risk.begin(), at_risk.end(), 0.0);
    if (d > 0.0) {
      for (std::size_t k = 0; k < g; ++k) {
        res.observed[k] += deaths[k];
        res.expected[k] += d * at_risk[k] / n;
      }
      if (n > 1.0) {
        const double scale = d * (n - d) / (n - 1.0);
        for (std::size_t k = 0; k < g; ++k) {
          for (std::size_t h = 0; h < g; ++h) {
            const double delta = k == h ? 1.0 : 0.0;
            cov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(h)) +=
                scale * (at_risk[k] / n) * (delta - at_risk[h] / n);
          }
        }
      }
    }
    for (std::size_t k = 0; k < g; ++k) at_risk[k] -= leaving[k];
    pos = end;
  }

  const auto m = static_cast<Eigen::Index>(g - 1);
  Eigen::VectorXd diff(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    diff(k) = res.observed[static_cast<std::size_t>(k)] - res.expected[static_cast<std::size_t>(k)];
  }
  const Eigen::MatrixXd reduced = cov.topLeftCorner(m, m);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(reduced);
  lu.setThreshold(1e-12);
  double chi2 = 0.0;
  if (lu.isInvertible()) {
    chi2 = diff.dot(lu.solve(diff));
  } else {
    // Degenerate risk sets: fall back to the Moore-Penrose inverse of the full matrix.
    Eigen::VectorXd full(static_cast<Eigen::Index>(g));
    for (std::size_t k = 0; k < g; ++k) full(static_cast<Eigen::Index>(k)) = res.observed[k] - res.expected[k];
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(cov);
    cod.setThreshold(1e-12);
    chi2 = full.dot(cod.pseudoInverse() * full);
  }
  res.chi_square = std::max(0.0, chi2);
  res.degrees_of_freedom = static_cast<int>(g - 1);
  res.p_value = chi_square_sf(res.chi_square, res.degrees_of_freedom);
  return res;
}

std::vector<KmRow> km_table(std::span<const SurvivalRecord> records, const ClusterAssignment& a) {
  std::vector<int> groups;
  const auto recs = match_records(records, a, groups);
  std::vector<KmRow> rows;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    std::vector<MatchedRecord> mine;
    for (const auto& r : recs) {
      if (r.group == gi) mine.push_back(r);
    }
    std::size_t at_risk = mine.size();
    double surv = 1.0;
    for (std::size_t pos = 0; pos < mine.size();) {
      const double t = mine[pos].time;
      std::size_t events = 0;
      std::size_t end = pos;
      for (; end < mine.size() && mine[end].time == t; ++end) events += mine[end].event ? 1 : 0;
      surv *= 1.0 - static_cast<double>(events) / static_cast<double>(at_risk);
      rows.push_back({groups[gi], t, at_risk, events, surv});
      at_risk -= end - pos;
      pos = end;
    }
  }
  return rows;
}

void write_km_csv(std::ostream& out, std::span<const KmRow> rows) {
  out << "group,time,at_risk,events,survival\n";
  for (const auto& r : rows) {
    out << r.group << ',' << format_double(r.time) << ',' << r.at_risk << ',' << r.events << ','
        << format_double(r.survival) << '\n';
  }
}

}  // namespace urf
