#include "data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace urf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_line(std::string_view line, char delim) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      cells.emplace_back(trim(line.substr(start)));
      break;
    }
    cells.emplace_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return cells;
}

std::vector<std::vector<std::string>> read_grid(const std::string& text, char delim) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    rows.push_back(split_line(line, delim));
  }
  return rows;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorCode::Io, "read failure on '" + path + "'");
  return ss.str();
}

std::optional<double> parse_number(std::string_view cell) {
  if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "na") {
    return std::nullopt;
  }
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

void check_unique(const std::vector<std::string>& ids, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      fail(ErrorCode::DuplicateId, std::string("duplicate ") + what + " id '" + id + "'");
    }
  }
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

// ---------------------------------------------------------------------------

OmicsMatrix::OmicsMatrix(std::vector<std::string> sample_ids, std::vector<std::string> feature_ids,
                         std::vector<double> values, std::vector<std::uint8_t> missing)
    : sample_ids_(std::move(sample_ids)),
      feature_ids_(std::move(feature_ids)),
      values_(std::move(values)),
      missing_(std::move(missing)) {
  require(!sample_ids_.empty() && !feature_ids_.empty(), ErrorCode::EmptyMatrix,
          "matrix needs at least one sample and one feature");
  require(values_.size() == n_samples() * n_features(), ErrorCode::InvalidArgument,
          "value count does not match dimensions");
  check_unique(sample_ids_, "sample");
  check_unique(feature_ids_, "feature");
  if (missing_.empty()) missing_.assign(values_.size(), 0);
  require(missing_.size() == values_.size(), ErrorCode::InvalidArgument,
          "missing mask does not match dimensions");
  for (std::size_t c = 0; c < values_.size(); ++c) {
    if (missing_[c]) {
      values_[c] = kNaN;
    } else if (!std::isfinite(values_[c])) {
      fail(ErrorCode::InvalidArgument, "non-finite observed value");
    }
  }
}

std::size_t OmicsMatrix::missing_count() const noexcept {
  return static_cast<std::size_t>(std::count(missing_.begin(), missing_.end(), 1));
}

std::vector<double> OmicsMatrix::column(std::size_t j) const {
  std::vector<double> col(n_samples());
  for (std::size_t i = 0; i < n_samples(); ++i) col[i] = at(i, j);
  return col;
}

OmicsMatrix OmicsMatrix::select_samples(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  std::vector<double> vals;
  std::vector<std::uint8_t> miss;
  ids.reserve(rows.size());
  vals.reserve(rows.size() * n_features());
  miss.reserve(rows.size() * n_features());
  for (auto r : rows) {
    ids.push_back(sample_ids_.at(r));
    for (std::size_t j = 0; j < n_features(); ++j) {
      vals.push_back(at(r, j));
      miss.push_back(missing_[r * n_features() + j]);
    }
  }
  return OmicsMatrix(std::move(ids), feature_ids_, std::move(vals), std::move(miss));
}

OmicsMatrix OmicsMatrix::select_features(std::span<const std::size_t> cols) const {
  std::vector<std::string> ids;
  for (auto c : cols) ids.push_back(feature_ids_.at(c));
  std::vector<double> vals;
  std::vector<std::uint8_t> miss;
  vals.reserve(n_samples() * cols.size());
  miss.reserve(n_samples() * cols.size());
  for (std::size_t i = 0; i < n_samples(); ++i) {
    for (auto c : cols) {
      vals.push_back(at(i, c));
      miss.push_back(missing_[i * n_features() + c]);
    }
  }
  return OmicsMatrix(sample_ids_, std::move(ids), std::move(vals), std::move(miss));
}

void MultiOmicsDataset::validate() const {
  require(!layers.empty(), ErrorCode::InvalidArgument, "dataset has no layers");
  for (std::size_t l = 1; l < layers.size(); ++l) {
    require(layers[l].sample_ids() == layers[0].sample_ids(), ErrorCode::SampleMismatch,
            "layer " + std::to_string(l) + " sample ids differ from layer 0");
  }
  if (survival) {
    std::unordered_set<std::string> known(layers[0].sample_ids().begin(),
                                          layers[0].sample_ids().end());
    for (const auto& r : *survival) {
      require(known.count(r.sample_id) > 0, ErrorCode::UnmatchedId,
              "survival record for unknown sample '" + r.sample_id + "'");
    }
  }
}

MultiOmicsDataset MultiOmicsDataset::select_samples(std::span<const std::size_t> rows) const {
  MultiOmicsDataset out;
  for (const auto& layer : layers) out.layers.push_back(layer.select_samples(rows));
  if (survival) {
    std::unordered_set<std::string> keep;
    for (auto r : rows) keep.insert(sample_ids().at(r));
    std::vector<SurvivalRecord> recs;
    for (const auto& rec : *survival) {
      if (keep.count(rec.sample_id)) recs.push_back(rec);
    }
    out.survival = std::move(recs);
  }
  return out;
}

// ---------------------------------------------------------------------------

OmicsMatrix parse_matrix_text(const std::string& text, const ParseOptions& options) {
  auto grid = read_grid(text, options.delimiter);
  if (grid.size() < 2) fail(ErrorCode::EmptyMatrix, "matrix file needs a header and one data row");
  const std::size_t width = grid.front().size();
  if (width < 2) fail(ErrorCode::EmptyMatrix, "matrix file needs an id column and one value column");
  for (std::size_t r = 1; r < grid.size(); ++r) {
    if (grid[r].size() != width) {
      fail(ErrorCode::RaggedRow, "row " + std::to_string(r + 1) + " has " +
                                     std::to_string(grid[r].size()) + " cells, expected " +
                                     std::to_string(width));
    }
  }

  // Row-major view: outer ids down the first column, inner ids across the header.
  std::vector<std::string> col_ids(grid.front().begin() + 1, grid.front().end());
  std::vector<std::string> row_ids;
  for (std::size_t r = 1; r < grid.size(); ++r) row_ids.push_back(grid[r][0]);

  const std::size_t rows = row_ids.size();
  const std::size_t cols = col_ids.size();
  std::vector<double> vals(rows * cols);
  std::vector<std::uint8_t> miss(rows * cols, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto v = parse_number(grid[r + 1][c + 1]);
      const std::size_t idx = options.transpose ? c * rows + r : r * cols + c;
      vals[idx] = v.value_or(kNaN);
      miss[idx] = v ? 0 : 1;
    }
  }
  if (options.transpose) return OmicsMatrix(std::move(col_ids), std::move(row_ids), std::move(vals), std::move(miss));
  return OmicsMatrix(std::move(row_ids), std::move(col_ids), std::move(vals), std::move(miss));
}

OmicsMatrix parse_matrix(const std::string& path, const ParseOptions& options) {
  return parse_matrix_text(read_file(path), options);
}

std::vector<SurvivalRecord> parse_survival_text(const std::string& text) {
  const char delim = text.find('\t') != std::string::npos && text.find(',') == std::string::npos ? '\t' : ',';
  auto grid = read_grid(text, delim);
  require(!grid.empty(), ErrorCode::Parse, "empty survival file");
  std::size_t start = 0;
  if (!parse_number(grid[0].size() > 1 ? grid[0][1] : "")) start = 1;  // header row
  std::vector<SurvivalRecord> out;
  std::unordered_set<std::string> seen;
  for (std::size_t r = start; r < grid.size(); ++r) {
    const auto& row = grid[r];
    require(row.size() == 3, ErrorCode::RaggedRow,
            "survival row " + std::to_string(r + 1) + " must have 3 cells");
    const auto t = parse_number(row[1]);
    const auto e = parse_number(row[2]);
    require(t && *t >= 0.0, ErrorCode::Parse, "invalid survival time in row " + std::to_string(r + 1));
    require(e && (*e == 0.0 || *e == 1.0), ErrorCode::Parse,
            "event must be 0 or 1 in row " + std::to_string(r + 1));
    require(seen.insert(row[0]).second, ErrorCode::DuplicateId,
            "duplicate survival record for '" + row[0] + "'");
    out.push_back({row[0], *t, *e == 1.0});
  }
  return out;
}

std::vector<SurvivalRecord> parse_survival(const std::string& path) {
  return parse_survival_text(read_file(path));
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_matrix_csv(std::ostream& out, const OmicsMatrix& m) {
  out << "sample_id";
  for (const auto& f : m.feature_ids()) out << ',' << f;
  out << '\n';
  for (std::size_t i = 0; i < m.n_samples(); ++i) {
    out << m.sample_ids()[i];
    for (std::size_t j = 0; j < m.n_features(); ++j) out << ',' << (m.missing(i, j) ? "NA" : format_double(m.at(i, j)));
    out << '\n';
  }
}

void write_matrix_csv(const std::string& path, const OmicsMatrix& m) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path + "'");
  write_matrix_csv(out, m);
  if (!out) fail(ErrorCode::Io, "write failure on '" + path + "'");
}

// ---------------------------------------------------------------------------

OmicsMatrix knn_impute(const OmicsMatrix& m, std::size_t k) {
  const std::size_t n = m.n_samples();
  const std::size_t p = m.n_features();
  require(k >= 1 && k < n, ErrorCode::InvalidArgument,
          "impute k must satisfy 1 <= k < n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
  if (m.missing_count() == 0) return m;

  std::vector<double> feature_mean(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double sum = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!m.missing(i, j)) {
        sum += m.at(i, j);
        ++cnt;
      }
    }
    require(cnt > 0, ErrorCode::FeatureAllMissing,
            "feature '" + m.feature_ids()[j] + "' has no observed values");
    feature_mean[j] = sum / static_cast<double>(cnt);
  }
  for (std::size_t i = 0; i < n; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < p && !any; ++j) any = !m.missing(i, j);
    require(any, ErrorCode::InvalidArgument,
            "sample '" + m.sample_ids()[i] + "' has no observed values");
  }

  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      if (m.missing(i, j)) {
        targets.push_back(i);
        break;
      }
    }
  }

  std::vector<double> out(m.values().begin(), m.values().end());
  parallel_for(targets.size(), [&](std::size_t t) {
    const std::size_t i = targets[t];
    // (distance, index): lexicographic order breaks ties by lower index.
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(n - 1);
    for (std::size_t s = 0; s < n; ++s) {
      if (s == i) continue;
      double sq = 0.0;
      std::size_t shared = 0;
      for (std::size_t j = 0; j < p; ++j) {
        if (m.missing(i, j) || m.missing(s, j)) continue;
        const double diff = m.at(i, j) - m.at(s, j);
        sq += diff * diff;
        ++shared;
      }
      const double d = shared == 0 ? std::numeric_limits<double>::infinity()
                                   : std::sqrt(sq * static_cast<double>(p) / static_cast<double>(shared));
      dist.emplace_back(d, s);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t j = 0; j < p; ++j) {
      if (!m.missing(i, j)) continue;
      double sum = 0.0;
      std::size_t cnt = 0;
      for (std::size_t r = 0; r < k; ++r) {
        const std::size_t s = dist[r].second;
        if (!m.missing(s, j)) {
          sum += m.at(s, j);
          ++cnt;
        }
      }
      out[i * p + j] = cnt > 0 ? sum / static_cast<double>(cnt) : feature_mean[j];
    }
  });
  return OmicsMatrix(m.sample_ids(), m.feature_ids(), std::move(out));
}

OmicsMatrix standardize(const OmicsMatrix& m) {
  require(m.missing_count() == 0, ErrorCode::InvalidArgument, "standardize needs a complete matrix");
  const std::size_t n = m.n_samples();
  const std::size_t p = m.n_features();
  std::vector<double> out(m.values().begin(), m.values().end());
  for (std::size_t j = 0; j < p; ++j) {
    const auto col = m.column(j);
    const double mu = mean_of(col);
    double ss = 0.0;
    for (double v : col) ss += (v - mu) * (v - mu);
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      // Constant features carry no information; they are centred to zero.
      out[i * p + j] = sd > 0.0 ? (col[i] - mu) / sd : 0.0;
    }
  }
  return OmicsMatrix(m.sample_ids(), m.feature_ids(), std::move(out));
}

OmicsMatrix preprocess(const OmicsMatrix& m, const PreprocessConfig& cfg) {
  require(cfg.max_missing_fraction >= 0.0 && cfg.max_missing_fraction <= 1.0,
          ErrorCode::InvalidArgument, "max_missing_fraction must lie in [0,1]");
  require(cfg.impute_k >= 1, ErrorCode::InvalidArgument, "impute_k must be positive");
  require(!cfg.top_variance_features || *cfg.top_variance_features >= 1, ErrorCode::InvalidArgument,
          "top_variance_features must be positive");

  // 1. samples, then features, above the missing threshold
  std::vector<std::size_t> keep_rows;
  for (std::size_t i = 0; i < m.n_samples(); ++i) {
    std::size_t miss = 0;
    for (std::size_t j = 0; j < m.n_features(); ++j) miss += m.missing(i, j);
    if (static_cast<double>(miss) / static_cast<double>(m.n_features()) <= cfg.max_missing_fraction) {
      keep_rows.push_back(i);
    }
  }
  require(!keep_rows.empty(), ErrorCode::AllSamplesDropped,
          "every sample exceeds the missing-value threshold");
  OmicsMatrix cur = m.select_samples(keep_rows);

  std::vector<std::size_t> keep_cols;
  for (std::size_t j = 0; j < cur.n_features(); ++j) {
    std::size_t miss = 0;
    for (std::size_t i = 0; i < cur.n_samples(); ++i) miss += cur.missing(i, j);
    if (static_cast<double>(miss) / static_cast<double>(cur.n_samples()) <= cfg.max_missing_fraction) {
      keep_cols.push_back(j);
    }
  }
  require(!keep_cols.empty(), ErrorCode::EmptyMatrix, "every feature exceeds the missing-value threshold");
  cur = cur.select_features(keep_cols);
  require(cur.n_samples() >= 2, ErrorCode::InsufficientSamples,
          "fewer than two samples remain after filtering");

  // 2. imputation
  if (cur.missing_count() > 0) {
    require(cfg.impute_k < cur.n_samples(), ErrorCode::InvalidArgument,
            "impute_k (" + std::to_string(cfg.impute_k) + ") must be below the remaining sample count (" +
                std::to_string(cur.n_samples()) + ")");
    cur = knn_impute(cur, cfg.impute_k);
  }

  // 3. top-variance feature selection
  if (cfg.top_variance_features && *cfg.top_variance_features < cur.n_features()) {
    std::vector<double> var(cur.n_features());
    for (std::size_t j = 0; j < cur.n_features(); ++j) {
      const auto col = cur.column(j);
      const double mu = mean_of(col);
      double ss = 0.0;
      for (double v : col) ss += (v - mu) * (v - mu);
      var[j] = ss / static_cast<double>(col.size() - 1);
    }
    std::vector<std::size_t> order(cur.n_features());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return var[a] > var[b]; });
    order.resize(*cfg.top_variance_features);
    std::sort(order.begin(), order.end());
    cur = cur.select_features(order);
  }

  // 4. z-scores
  if (cfg.standardize) cur = standardize(cur);
  return cur;
}

// ---------------------------------------------------------------------------

std::vector<std::vector<std::size_t>> partition_indices(std::size_t n, std::size_t n_clients,
                                                        std::uint64_t seed) {
  require(n_clients >= 1, ErrorCode::InvalidArgument, "n_clients must be positive");
  require(n_clients <= n, ErrorCode::InvalidArgument,
          "n_clients (" + std::to_string(n_clients) + ") exceeds sample count (" + std::to_string(n) + ")");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(perm));

  std::vector<std::vector<std::size_t>> parts(n_clients);
  const std::size_t base = n / n_clients;
  const std::size_t extra = n % n_clients;
  std::size_t pos = 0;
  for (std::size_t c = 0; c < n_clients; ++c) {
    const std::size_t size = base + (c < extra ? 1 : 0);
    parts[c].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                    perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
    std::sort(parts[c].begin(), parts[c].end());
    pos += size;
  }
  return parts;
}

std::vector<MultiOmicsDataset> partition_clients(const MultiOmicsDataset& d, std::size_t n_clients,
                                                 std::uint64_t seed) {
  d.validate();
  std::vector<MultiOmicsDataset> out;
  for (const auto& idx : partition_indices(d.n_samples(), n_clients, seed)) {
    out.push_back(d.select_samples(idx));
  }
  return out;
}

}  // namespace urf
