#include "cluster.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <tuple>

#include <json.hpp>

#include "error.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace urf {

ClusterAssignment ClusterAssignment::from_raw(std::span<const int> raw, std::vector<std::string> sample_ids) {
  std::vector<int> distinct(raw.begin(), raw.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  ClusterAssignment a;
  a.k = static_cast<int>(distinct.size());
  a.labels.reserve(raw.size());
  for (int v : raw) {
    a.labels.push_back(static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), v) - distinct.begin()));
  }
  a.sample_ids = std::move(sample_ids);
  a.validate();
  return a;
}

ClusterAssignment parse_labels_text(const std::string& text, const std::vector<std::string>& sample_ids) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < sample_ids.size(); ++i) index.emplace(sample_ids[i], i);
  std::vector<std::optional<std::string>> raw(sample_ids.size());
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    require(comma != std::string::npos && line.find(',', comma + 1) == std::string::npos, ErrorCode::RaggedRow,
            "labels line " + std::to_string(line_no) + " must have two cells");
    std::string id = line.substr(0, comma);
    std::string label = line.substr(comma + 1);
    if (!header_seen) {
      header_seen = true;
      if (id == "sample_id") continue;
    }
    const auto it = index.find(id);
    require(it != index.end(), ErrorCode::UnmatchedId, "labels file names unknown sample '" + id + "'");
    require(!raw[it->second], ErrorCode::DuplicateId, "duplicate label for '" + id + "'");
    raw[it->second] = std::move(label);
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    require(raw[i].has_value(), ErrorCode::UnmatchedId, "no label for sample '" + sample_ids[i] + "'");
  }
  std::vector<int> ints;
  for (const auto& r : raw) {
    int v = 0;
    const auto res = std::from_chars(r->data(), r->data() + r->size(), v);
    if (res.ec != std::errc() || res.ptr != r->data() + r->size()) break;
    ints.push_back(v);
  }
  if (ints.size() != raw.size()) {
    std::vector<std::string> distinct;
    for (const auto& r : raw) distinct.push_back(*r);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    ints.clear();
    for (const auto& r : raw) {
      ints.push_back(static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), *r) - distinct.begin()));
    }
  }
  return ClusterAssignment::from_raw(ints, sample_ids);
}

ClusterAssignment read_labels(const std::string& path, const std::vector<std::string>& sample_ids) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_labels_text(ss.str(), sample_ids);
}

void write_labels_csv(std::ostream& out, const ClusterAssignment& a) {
  out << "sample_id,label\n";
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    out << (a.sample_ids.empty() ? std::to_string(i) : a.sample_ids[i]) << ',' << a.labels[i] << '\n';
  }
}

void write_labels_csv(const std::string& path, const ClusterAssignment& a) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path + "'");
  write_labels_csv(out, a);
  if (!out) fail(ErrorCode::Io, "write failure on '" + path + "'");
}

void ClusterAssignment::validate() const {
  require(sample_ids.empty() || sample_ids.size() == labels.size(), ErrorCode::SampleMismatch,
          "assignment sample ids do not match label count");
  require(k >= 1, ErrorCode::InvalidArgument, "assignment needs at least one cluster");
  std::vector<std::size_t> size(static_cast<std::size_t>(k), 0);
  for (int l : labels) {
    require(l >= 0 && l < k, ErrorCode::OutOfRange, "cluster label out of range");
    ++size[static_cast<std::size_t>(l)];
  }
  for (std::size_t c = 0; c < size.size(); ++c) {
    require(size[c] > 0, ErrorCode::EmptyCluster, "cluster " + std::to_string(c) + " is empty");
  }
}

// ---------------------------------------------------------------------------

namespace {

void check_distance(const DistanceMatrix& d) {
  require(d.n >= 2, ErrorCode::InvalidArgument, "linkage needs at least two samples");
  require(d.values.size() == d.n * d.n, ErrorCode::InvalidArgument, "distance matrix is not square");
  for (std::size_t i = 0; i < d.n; ++i) {
    require(std::fabs(d.at(i, i)) <= 1e-12, ErrorCode::InvalidArgument, "distance diagonal must be zero");
    for (std::size_t j = i + 1; j < d.n; ++j) {
      const double x = d.at(i, j);
      const double y = d.at(j, i);
      require(std::isfinite(x) && x >= 0.0, ErrorCode::InvalidArgument, "distances must be finite and nonnegative");
      require(std::fabs(x - y) <= 1e-12 * std::max(1.0, std::fabs(x)), ErrorCode::InvalidArgument,
              "distance matrix is not symmetric");
    }
  }
}

}  // namespace

Dendrogram ward_linkage(const DistanceMatrix& d) {
  check_distance(d);
  const std::size_t n = d.n;
  std::vector<double> sq(n * n);
  for (std::size_t k = 0; k < sq.size(); ++k) sq[k] = d.values[k] * d.values[k];

  std::vector<int> id(n);
  std::iota(id.begin(), id.end(), 0);
  std::vector<double> size(n, 1.0);
  std::vector<char> alive(n, 1);
  std::vector<std::size_t> nn(n, 0);
  std::vector<double> nn_dist(n, 0.0);

  // Candidate order: distance, then the (smaller id, larger id) pair.
  auto key = [&](std::size_t r, std::size_t s) {
    return std::make_tuple(sq[r * n + s], std::min(id[r], id[s]), std::max(id[r], id[s]));
  };
  auto refresh = [&](std::size_t r) {
    bool found = false;
    std::tuple<double, int, int> best{};
    for (std::size_t s = 0; s < n; ++s) {
      if (s == r || !alive[s]) continue;
      const auto k = key(r, s);
      if (!found || k < best) {
        best = k;
        nn[r] = s;
        found = true;
      }
    }
    nn_dist[r] = std::get<0>(best);
  };
  for (std::size_t r = 0; r < n; ++r) refresh(r);

  Dendrogram dend;
  dend.n_leaves = static_cast<int>(n);
  dend.merges.reserve(n - 1);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t s = n;
    for (std::size_t r = 0; r < n; ++r) {
      if (!alive[r]) continue;
      if (s == n || key(r, nn[r]) < key(s, nn[s])) s = r;
    }
    const std::size_t t = nn[s];
    const double merge_sq = sq[s * n + t];
    const int new_id = static_cast<int>(n + step);
    dend.merges.push_back(Merge{std::min(id[s], id[t]), std::max(id[s], id[t]), std::sqrt(std::max(0.0, merge_sq)),
                                static_cast<int>(size[s] + size[t])});

    // Lance-Williams update into slot s; slot t retires.
    for (std::size_t r = 0; r < n; ++r) {
      if (!alive[r] || r == s || r == t) continue;
      const double total = size[r] + size[s] + size[t];
      const double v = ((size[r] + size[s]) * sq[r * n + s] + (size[r] + size[t]) * sq[r * n + t] -
                        size[r] * merge_sq) / total;
      sq[r * n + s] = sq[s * n + r] = v;
    }
    alive[t] = 0;
    size[s] += size[t];
    id[s] = new_id;

    if (step + 2 >= n) break;
    refresh(s);
    for (std::size_t r = 0; r < n; ++r) {
      if (!alive[r] || r == s) continue;
      if (nn[r] == s || nn[r] == t) {
        refresh(r);
      } else if (key(r, s) < key(r, nn[r])) {
        nn[r] = s;
        nn_dist[r] = sq[r * n + s];
      }
    }
  }
  return dend;
}

ClusterAssignment cut(const Dendrogram& dend, int k, std::vector<std::string> sample_ids) {
  const int n = dend.n_leaves;
  require(k >= 1 && k <= n, ErrorCode::OutOfRange,
          "k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  require(static_cast<int>(dend.merges.size()) == n - 1, ErrorCode::InvalidArgument, "malformed dendrogram");

  std::vector<int> parent(static_cast<std::size_t>(2 * n - 1));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (int m = 0; m < n - k; ++m) {
    const Merge& mg = dend.merges[static_cast<std::size_t>(m)];
    parent[static_cast<std::size_t>(find(mg.a))] = n + m;
    parent[static_cast<std::size_t>(find(mg.b))] = n + m;
  }

  ClusterAssignment out;
  out.k = k;
  out.labels.assign(static_cast<std::size_t>(n), -1);
  std::vector<int> label_of_root(static_cast<std::size_t>(2 * n - 1), -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    const int root = find(i);
    int& lab = label_of_root[static_cast<std::size_t>(root)];
    if (lab < 0) lab = next++;
    out.labels[static_cast<std::size_t>(i)] = lab;
  }
  if (sample_ids.empty()) {
    for (int i = 0; i < n; ++i) sample_ids.push_back(std::to_string(i));
  }
  require(static_cast<int>(sample_ids.size()) == n, ErrorCode::SampleMismatch,
          "sample id count does not match dendrogram");
  out.sample_ids = std::move(sample_ids);
  return out;
}

KSelection select_k_silhouette(const DistanceMatrix& d, const Dendrogram& dend, int k_min, int k_max) {
  const int n = static_cast<int>(d.n);
  require(k_min >= 2 && k_min <= k_max && k_max <= n - 1, ErrorCode::OutOfRange,
          "k range must satisfy 2 <= k_min <= k_max <= n-1");
  KSelection sel;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    const ClusterAssignment a = cut(dend, k, d.sample_ids);
    const double s = silhouette(d, a).mean;
    sel.scores.emplace_back(k, s);
    if (s > best) {
      best = s;
      sel.k = k;
    }
  }
  return sel;
}

KSelection select_k_silhouette(const DistanceMatrix& d, int k_min, int k_max) {
  return select_k_silhouette(d, ward_linkage(d), k_min, k_max);
}

void write_dendrogram_csv(std::ostream& out, const Dendrogram& dend) {
  out << "a,b,height,size\n";
  for (const auto& m : dend.merges) out << m.a << ',' << m.b << ',' << format_double(m.height) << ',' << m.size << '\n';
}

void write_dendrogram_csv(const std::string& path, const Dendrogram& dend) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path + "'");
  write_dendrogram_csv(out, dend);
}

// ---------------------------------------------------------------------------

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : (v[h - 1] + v[h]) / 2.0;
}

}  // namespace

double StabilityReport::median(int k, std::size_t trees) const {
  const auto it = grid.find({k, trees});
  require(it != grid.end(), ErrorCode::OutOfRange, "no stability cell for the requested (k, trees)");
  return median_of(it->second);
}

StabilityReport stability_diagnostic(const Forest& f, const OmicsMatrix& layer, std::span<const int> k_values,
                                     std::span<const std::size_t> tree_grid, int reps, std::uint64_t seed) {
  require(!k_values.empty() && !tree_grid.empty(), ErrorCode::InvalidArgument, "empty k range or tree grid");
  require(reps >= 1, ErrorCode::InvalidArgument, "reps must be at least 1");
  for (int k : k_values) {
    require(k >= 2, ErrorCode::OutOfRange, "stability k values must start at 2");
    require(k <= static_cast<int>(layer.n_samples()), ErrorCode::OutOfRange, "k exceeds sample count");
  }
  for (auto t : tree_grid) {
    require(t >= 1 && t <= f.trees.size(), ErrorCode::OutOfRange,
            "tree budget " + std::to_string(t) + " outside [1, " + std::to_string(f.trees.size()) + "]");
  }

  const DistanceMatrix dist = to_distance(normalize(count_matrix(f, layer)));
  const Dendrogram dend = ward_linkage(dist);

  StabilityReport report;
  report.k_values.assign(k_values.begin(), k_values.end());
  report.tree_grid.assign(tree_grid.begin(), tree_grid.end());
  report.reps = reps;
  report.seed = seed;

  std::vector<ClusterAssignment> base;
  std::vector<LeafLabels> leaf_labels;
  for (int k : k_values) {
    base.push_back(cut(dend, k, layer.sample_ids()));
    leaf_labels.push_back(label_leaves(f, layer, base.back().labels));
  }

  const std::size_t nk = k_values.size();
  const std::size_t nt = tree_grid.size();
  const std::size_t cells = nk * nt * static_cast<std::size_t>(reps);
  std::vector<double> results(cells);
  parallel_for(cells, [&](std::size_t c) {
    const std::size_t ki = c / (nt * static_cast<std::size_t>(reps));
    const std::size_t ti = (c / static_cast<std::size_t>(reps)) % nt;
    const std::size_t rep = c % static_cast<std::size_t>(reps);
    const std::size_t budget = tree_grid[ti];
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(k_values[ki]), budget, rep}));
    std::vector<std::size_t> pool(f.trees.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t j = 0; j < budget; ++j) {
      std::swap(pool[j], pool[j + static_cast<std::size_t>(rng.below(pool.size() - j))]);
    }
    pool.resize(budget);
    const Forest sub = f.subset(pool);
    LeafLabels sub_labels;
    for (auto t : pool) sub_labels.push_back(leaf_labels[ki][t]);
    const auto pred = predict_labels(sub, sub_labels, layer);
    results[c] = ari(std::span<const int>(pred), std::span<const int>(base[ki].labels));
  });

  for (std::size_t c = 0; c < cells; ++c) {
    const std::size_t ki = c / (nt * static_cast<std::size_t>(reps));
    const std::size_t ti = (c / static_cast<std::size_t>(reps)) % nt;
    report.grid[{k_values[ki], tree_grid[ti]}].push_back(results[c]);
  }

  const std::size_t smallest = *std::min_element(tree_grid.begin(), tree_grid.end());
  const std::size_t largest = *std::max_element(tree_grid.begin(), tree_grid.end());
  for (int k : k_values) {
    if (std::fabs(report.median(k, smallest) - report.median(k, largest)) <= report.epsilon) {
      if (!report.suggested_k || k > *report.suggested_k) report.suggested_k = k;
    }
  }
  return report;
}

std::string stability_to_json(const StabilityReport& report) {
  nlohmann::ordered_json j;
  j["k_values"] = report.k_values;
  j["tree_grid"] = report.tree_grid;
  j["reps"] = report.reps;
  j["seed"] = report.seed;
  j["epsilon"] = report.epsilon;
  j["suggested_k"] = report.suggested_k ? nlohmann::ordered_json(*report.suggested_k) : nlohmann::ordered_json();
  auto& cells = j["cells"] = nlohmann::ordered_json::array();
  for (const auto& [key, values] : report.grid) {
    cells.push_back({{"k", key.first}, {"n_trees", key.second}, {"ari", values}, {"median", median_of(values)}});
  }
  return j.dump(2);
}

}  // namespace urf
