#pragma once

// Eigenvalues of symmetric matrices, histograms, spectral distances and
// outlier trimming.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace nls {

struct SpectralSample {
  int n = 0;
  std::vector<double> eigenvalues;  // ascending
  std::string ensemble_id;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  std::vector<double> removed;  // trimmed eigenvalues
  std::string trim_note;
};

// Full spectrum through Eigen's tridiagonalization + implicit QR. For
// N <= `residual_check_max_n` eigenvectors are also computed and the
// residuals ||Mv - lambda v|| of a few random pairs are checked against
// 1e-8 ||M||. The trace identity is always checked.
SpectralSample eigenvalues(const Eigen::MatrixXd& m, std::string ensemble_id = "", std::uint64_t seed = 0,
                           std::uint64_t index = 0, int residual_check_max_n = 200);

struct Histogram {
  std::vector<double> edges;  // bins + 1, strictly increasing
  std::vector<long long> counts;
  long long total = 0;       // values inside the range
  long long outside = 0;     // values outside a user range
  int bins() const { return static_cast<int>(counts.size()); }
  double width(int b) const { return edges[b + 1] - edges[b]; }
  double density(int b) const;  // count / (total * width)
};

// bins <= 0 selects Freedman-Diaconis. Without a range the histogram spans
// [min, max] of the data.
Histogram histogram(std::span<const double> values, int bins = 0,
                    std::optional<std::pair<double, double>> range = std::nullopt);
int freedman_diaconis_bins(std::span<const double> values);

// Sup distance between empirical CDFs.
double ks_distance(std::span<const double> a, std::span<const double> b);
// Integral of |F_a - F_b|.
double wasserstein1(std::span<const double> a, std::span<const double> b);

struct TrimRule {
  enum class Kind { None, TopK, Iqr };
  Kind kind = Kind::None;
  int k = 1;
  double c = 3.0;

  static TrimRule none() { return {}; }
  static TrimRule top_k(int k) { return {Kind::TopK, k, 0.0}; }
  static TrimRule iqr(double c) { return {Kind::Iqr, 0, c}; }
  std::string to_string() const;
};

SpectralSample trim_outliers(const SpectralSample& s, const TrimRule& rule);
// lambda_max / lambda_second (by value); +inf when the second is <= 0.
double outlier_dominance(const SpectralSample& s);

// Empirical quantile with linear interpolation, sorted input.
double quantile_sorted(std::span<const double> sorted, double p);

}  // namespace nls
