#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "nls/ensemble.hpp"
#include "nls/error.hpp"
#include "nls/spectral.hpp"

using namespace nls;

namespace {

double ecdf(const std::vector<double>& v, double x) {
  return static_cast<double>(std::count_if(v.begin(), v.end(), [x](double y) { return y <= x; })) / v.size();
}

// Sup of |F_a - F_b| over every data point, evaluated directly.
double brute_ks(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (const auto* v : {&a, &b})
    for (double x : *v) d = std::max(d, std::abs(ecdf(a, x) - ecdf(b, x)));
  return d;
}

// Integral of |F_a - F_b| by a fine Riemann sum.
double brute_w1(const std::vector<double>& a, const std::vector<double>& b) {
  const double lo = std::min(*std::min_element(a.begin(), a.end()), *std::min_element(b.begin(), b.end()));
  const double hi = std::max(*std::max_element(a.begin(), a.end()), *std::max_element(b.begin(), b.end()));
  const int steps = 200000;
  const double h = (hi - lo) / steps;
  double s = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double x = lo + (i + 0.5) * h;
    s += std::abs(ecdf(a, x) - ecdf(b, x)) * h;
  }
  return s;
}

}  // namespace

TEST_CASE("eigenvalues of small matrices") {
  Eigen::MatrixXd d = Eigen::Vector3d(3.0, -1.0, 2.0).asDiagonal();
  CHECK(eigenvalues(d).eigenvalues == std::vector<double>{-1.0, 2.0, 3.0});

  Eigen::MatrixXd m(2, 2);
  m << 2.0, 1.0, 1.0, 2.0;
  const auto s = eigenvalues(m, "m", 7, 1);
  REQUIRE(s.eigenvalues.size() == 2);
  CHECK(s.eigenvalues[0] == doctest::Approx(1.0));
  CHECK(s.eigenvalues[1] == doctest::Approx(3.0));
  CHECK(s.ensemble_id == "m");
  CHECK(s.seed == 7);

  const auto g = sample_goe(150, 4);
  const auto e = eigenvalues(g);
  CHECK(std::is_sorted(e.eigenvalues.begin(), e.eigenvalues.end()));
  double tr = 0.0, tr2 = 0.0;
  for (double x : e.eigenvalues) {
    tr += x;
    tr2 += x * x;
  }
  CHECK(tr == doctest::Approx(g.trace()).epsilon(1e-10).scale(1));
  CHECK(tr2 == doctest::Approx(g.squaredNorm()).epsilon(1e-10));

  Eigen::MatrixXd bad = m;
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(eigenvalues(bad), Error);
}

TEST_CASE("histograms") {
  const std::vector<double> v = {0.0, 1.0, 2.0, 3.0};
  const auto h = histogram(v, 4, std::make_pair(0.0, 4.0));
  CHECK(h.counts == std::vector<long long>{1, 1, 1, 1});
  CHECK(h.total == 4);
  CHECK(h.density(0) == doctest::Approx(0.25));

  // The right edge is closed.
  const auto edge = histogram(std::vector<double>{0.0, 0.0, 0.0, 1.0}, 4);
  CHECK(edge.counts == std::vector<long long>{3, 0, 0, 1});
  const auto right = histogram(std::vector<double>{1.0}, 4, std::make_pair(-1.0, 1.0));
  CHECK(right.counts == std::vector<long long>{0, 0, 0, 1});

  const auto out = histogram(std::vector<double>{-5.0, 0.5, 9.0}, 2, std::make_pair(0.0, 1.0));
  CHECK(out.outside == 2);
  CHECK(out.total == 1);

  std::mt19937 rng(1);
  std::normal_distribution<double> d;
  std::vector<double> big(10000);
  for (auto& x : big) x = d(rng);
  const auto fd = histogram(big);
  double mass = 0.0;
  for (int b = 0; b < fd.bins(); ++b) mass += fd.density(b) * fd.width(b);
  CHECK(mass == doctest::Approx(1.0));
  CHECK(fd.bins() == freedman_diaconis_bins(big));
  CHECK(fd.bins() > 20);
  CHECK_THROWS_AS(histogram(std::vector<double>{}), Error);
}

TEST_CASE("KS and W1 against brute force") {
  std::mt19937 rng(2);
  std::normal_distribution<double> d;
  for (int t = 0; t < 5; ++t) {
    std::vector<double> a(200 + 37 * t), b(150 + 11 * t);
    for (auto& x : a) x = d(rng);
    for (auto& x : b) x = 0.3 * t + d(rng);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(ks_distance(a, b) == doctest::Approx(brute_ks(a, b)).epsilon(1e-12));
    CHECK(wasserstein1(a, b) == doctest::Approx(brute_w1(a, b)).epsilon(1e-4));
  }
  const std::vector<double> x = {0.0, 1.0}, y = {2.0, 3.0};
  CHECK(ks_distance(x, y) == 1.0);
  CHECK(wasserstein1(x, y) == doctest::Approx(2.0));
  CHECK(ks_distance(x, x) == 0.0);
  // Ties count once per value.
  CHECK(ks_distance(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 2}) == doctest::Approx(1.0 / 3));
}

TEST_CASE("trimming and dominance") {
  SpectralSample s;
  s.eigenvalues = {-1.0, 0.0, 0.5, 1.0, 1.2, 30.0};
  s.n = 6;
  CHECK(outlier_dominance(s) == doctest::Approx(25.0));
  const auto t = trim_outliers(s, TrimRule::top_k(1));
  CHECK(t.eigenvalues.size() == 5);
  CHECK(t.removed == std::vector<double>{30.0});
  CHECK(t.n == 5);
  CHECK(t.trim_note == "topK(1) removed 1");

  const auto iq = trim_outliers(s, TrimRule::iqr(3.0));
  CHECK(iq.removed == std::vector<double>{30.0});
  CHECK(TrimRule::iqr(1.5).to_string() == "iqr(1.5)");
  CHECK(trim_outliers(s, TrimRule::none()).eigenvalues == s.eigenvalues);
  CHECK_THROWS_AS(trim_outliers(s, TrimRule::top_k(6)), Error);

  SpectralSample neg;
  neg.eigenvalues = {-3.0, -2.0, -1.0};
  CHECK(std::isinf(outlier_dominance(neg)));

  const std::vector<double> q = {1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK(quantile_sorted(q, 0.25) == doctest::Approx(2.0));
  CHECK(quantile_sorted(q, 0.1) == doctest::Approx(1.4));
}
