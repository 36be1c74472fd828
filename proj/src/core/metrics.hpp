#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "affinity.hpp"
#include "cluster.hpp"
#include "data.hpp"

namespace urf {

struct ContingencyTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> counts;  // row-major
  std::vector<std::size_t> row_sums;
  std::vector<std::size_t> col_sums;
  std::size_t n = 0;
};

ContingencyTable contingency(std::span<const int> a, std::span<const int> b);

double ari(std::span<const int> a, std::span<const int> b);
double ari(const ClusterAssignment& a, const ClusterAssignment& b);

struct SilhouetteResult {
  double mean = 0.0;
  std::vector<double> per_sample;
};

// Members of singleton clusters score 0.
SilhouetteResult silhouette(const DistanceMatrix& d, std::span<const int> labels);
SilhouetteResult silhouette(const DistanceMatrix& d, const ClusterAssignment& a);

double pearson(std::span<const double> x, std::span<const double> y);

// Upper tail of the chi-square distribution.
double chi_square_sf(double x, double df);
// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

struct LogRankResult {
  double chi_square = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
  std::vector<int> groups;
  std::vector<double> observed;
  std::vector<double> expected;
};

// Samples without a record are ignored; records for unknown ids are errors.
LogRankResult logrank_test(std::span<const SurvivalRecord> records, const ClusterAssignment& a);

struct KmRow {
  int group = 0;
  double time = 0.0;
  std::size_t at_risk = 0;
  std::size_t events = 0;
  double survival = 1.0;
};

std::vector<KmRow> km_table(std::span<const SurvivalRecord> records, const ClusterAssignment& a);
void write_km_csv(std::ostream& out, std::span<const KmRow> rows);

}  // namespace urf
