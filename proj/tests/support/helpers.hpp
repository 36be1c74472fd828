#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "data.hpp"
#include "error.hpp"

namespace th {

inline urf::OmicsMatrix matrix(const std::vector<std::vector<double>>& rows, const std::string& prefix = "s") {
  std::vector<std::string> sids, fids;
  std::vector<double> vals;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    sids.push_back(prefix + std::to_string(i));
    vals.insert(vals.end(), rows[i].begin(), rows[i].end());
  }
  for (std::size_t j = 0; j < rows.front().size(); ++j) fids.push_back("f" + std::to_string(j));
  return urf::OmicsMatrix(sids, fids, vals);
}

inline urf::OmicsMatrix random_matrix(std::mt19937_64& g, std::size_t n, std::size_t p) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<std::vector<double>> rows(n, std::vector<double>(p));
  for (auto& r : rows)
    for (auto& v : r) v = z(g);
  return matrix(rows);
}

// Three Gaussian blobs in p dimensions; labels returned through `labels`.
inline urf::OmicsMatrix blobs(std::mt19937_64& g, std::size_t per, std::size_t p, double sep,
                              std::vector<int>* labels = nullptr, const std::string& prefix = "s") {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < per; ++i) {
      std::vector<double> r(p);
      for (std::size_t j = 0; j < p; ++j) r[j] = z(g) + (static_cast<int>(j % 3) == c ? sep : 0.0);
      rows.push_back(r);
      if (labels) labels->push_back(c);
    }
  }
  return matrix(rows, prefix);
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("urf_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name, const std::string& content) const {
    const auto p = path / name;
    std::ofstream(p) << content;
    return p.string();
  }
};

template <class F>
urf::ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const urf::Error& e) {
    return e.code();
  }
  return urf::ErrorCode::Ok;
}

}  // namespace th
