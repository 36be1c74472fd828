#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace urf {

// Dense samples x features matrix, row-major. Missing cells carry NaN in
// `values` and a set bit in the mask; observed cells are always finite.
class OmicsMatrix {
 public:
  OmicsMatrix() = default;
  OmicsMatrix(std::vector<std::string> sample_ids, std::vector<std::string> feature_ids,
              std::vector<double> values, std::vector<std::uint8_t> missing = {});

  std::size_t n_samples() const noexcept { return sample_ids_.size(); }
  std::size_t n_features() const noexcept { return feature_ids_.size(); }

  const std::vector<std::string>& sample_ids() const noexcept { return sample_ids_; }
  const std::vector<std::string>& feature_ids() const noexcept { return feature_ids_; }

  double at(std::size_t i, std::size_t j) const noexcept { return values_[i * n_features() + j]; }
  bool missing(std::size_t i, std::size_t j) const noexcept {
    return missing_[i * n_features() + j] != 0;
  }
  std::span<const double> row(std::size_t i) const noexcept {
    return {values_.data() + i * n_features(), n_features()};
  }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const std::uint8_t> missing_mask() const noexcept { return missing_; }

  std::size_t missing_count() const noexcept;
  std::vector<double> column(std::size_t j) const;

  OmicsMatrix select_samples(std::span<const std::size_t> rows) const;
  OmicsMatrix select_features(std::span<const std::size_t> cols) const;

 private:
  std::vector<std::string> sample_ids_;
  std::vector<std::string> feature_ids_;
  std::vector<double> values_;
  std::vector<std::uint8_t> missing_;
};

struct SurvivalRecord {
  std::string sample_id;
  double time = 0.0;
  bool event = false;
};

struct MultiOmicsDataset {
  std::vector<OmicsMatrix> layers;
  std::optional<std::vector<SurvivalRecord>> survival;

  std::size_t n_samples() const noexcept {
    return layers.empty() ? 0 : layers.front().n_samples();
  }
  const std::vector<std::string>& sample_ids() const { return layers.front().sample_ids(); }

  // Throws unless all layers share identical sample ids and every survival
  // record refers to a known sample.
  void validate() const;
  MultiOmicsDataset select_samples(std::span<const std::size_t> rows) const;
};

struct PreprocessConfig {
  double max_missing_fraction = 0.2;
  std::size_t impute_k = 5;
  std::optional<std::size_t> top_variance_features;
  bool standardize = true;
};

struct ParseOptions {
  char delimiter = ',';
  bool transpose = false;
};

OmicsMatrix parse_matrix(const std::string& path, const ParseOptions& options = {});
OmicsMatrix parse_matrix_text(const std::string& text, const ParseOptions& options = {});

// Columns sample_id,time,event with event in {0,1}.
std::vector<SurvivalRecord> parse_survival(const std::string& path);
std::vector<SurvivalRecord> parse_survival_text(const std::string& text);

// Header "sample_id,<feature ids>"; missing cells are written as NA.
void write_matrix_csv(std::ostream& out, const OmicsMatrix& m);
void write_matrix_csv(const std::string& path, const OmicsMatrix& m);

// Shortest decimal that reads back to the same double.
std::string format_double(double v);

OmicsMatrix preprocess(const OmicsMatrix& m, const PreprocessConfig& cfg);
OmicsMatrix knn_impute(const OmicsMatrix& m, std::size_t k);
OmicsMatrix standardize(const OmicsMatrix& m);

// Seeded shuffle followed by a near-equal split. Client sample lists are kept
// in original order.
std::vector<std::vector<std::size_t>> partition_indices(std::size_t n, std::size_t n_clients,
                                                        std::uint64_t seed);
std::vector<MultiOmicsDataset> partition_clients(const MultiOmicsDataset& d,
                                                 std::size_t n_clients, std::uint64_t seed);

}  // namespace urf
