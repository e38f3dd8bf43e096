#include <doctest.h>

#include <cmath>
#include <set>

#include "nls/ensemble.hpp"
#include "nls/error.hpp"

using namespace nls;

TEST_CASE("GOE entries have the stated variances") {
  const int n = 400;
  const auto a = sample_goe(n, 123);
  CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
  double off = 0.0, diag = 0.0, mean = 0.0;
  for (int i = 0; i < n; ++i) {
    diag += a(i, i) * a(i, i);
    for (int j = i + 1; j < n; ++j) {
      off += a(i, j) * a(i, j);
      mean += a(i, j);
    }
  }
  const double pairs = n * (n - 1) / 2.0;
  // Relative SE of a chi-square mean over k terms is sqrt(2 / k).
  CHECK(off / pairs * n == doctest::Approx(1.0).epsilon(4 * std::sqrt(2 / pairs)));
  CHECK(diag == doctest::Approx(2.0).epsilon(4 * std::sqrt(2.0 / n)));
  CHECK(std::abs(mean / pairs) < 4 / std::sqrt(pairs * n));
}

TEST_CASE("seeding is deterministic and streams are disjoint") {
  CHECK(sample_goe(30, 9) == sample_goe(30, 9));
  CHECK(sample_goe(30, 9) != sample_goe(30, 10));
  std::set<std::uint64_t> seeds;
  for (auto s : {SeedStream::Letter, SeedStream::Noise, SeedStream::BaselineLetter, SeedStream::BaselineNoise,
                 SeedStream::Relabel})
    for (std::uint64_t idx = 0; idx < 4; ++idx)
      for (char c : std::string("ABZ")) seeds.insert(derive_seed(42, s, label_hash(std::string(1, c)), idx));
  CHECK(seeds.size() == 5 * 4 * 3);
  CHECK(splitmix64(1) != splitmix64(2));

  std::map<char, std::uint64_t> used;
  const auto l1 = sample_letters("AB", 20, 7, 3, SeedStream::Letter, &used);
  const auto l2 = sample_letters("AB", 20, 7, 3);
  CHECK(l1.at('A') == l2.at('A'));
  CHECK(l1.at('A') != l1.at('B'));
  CHECK(used.size() == 2);
  // The letter stream of a realization does not depend on the other letters.
  CHECK(sample_letters("A", 20, 7, 3).at('A') == l1.at('A'));
}

TEST_CASE("expression evaluation matches direct products") {
  const auto letters = sample_letters("ABC", 25, 5, 0);
  const auto& A = letters.at('A');
  const auto& B = letters.at('B');
  const auto& C = letters.at('C');
  const MatrixExpression e({{"A^2", 1}, {"A", 1}, {"BA", 1}, {"AB", 1}, {"B", 1}});
  const Eigen::MatrixXd want = A * A + A + B * A + A * B + B;
  CHECK((evaluate_expression(e, letters) - want).cwiseAbs().maxCoeff() < 1e-12);

  const MatrixExpression f({{"C^4", 1}, {"ABCBA", 2}, {"1", -1}}, 3.0);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(25, 25);
  const Eigen::MatrixXd want2 = (C * C * C * C + 2 * A * B * C * B * A - I) / 3.0;
  CHECK((evaluate_expression(f, letters) - want2).cwiseAbs().maxCoeff() < 1e-12);

  EnsembleTuple t;
  t.members = {e, MatrixExpression::letter('C')};
  const auto r = realize_tuple(t, 25, 5, 0);
  REQUIRE(r.size() == 2);
  CHECK((r[0].entries - want).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r[1].entries == C);
  CHECK(r[1].letter_seeds.count('C') == 1);
}

TEST_CASE("entrywise nonlinearity") {
  const int n = 16;
  const auto x1 = sample_goe(n, 1), x2 = sample_goe(n, 2);
  const double s = std::sqrt(static_cast<double>(n));
  const Eigen::MatrixXd* one[] = {&x1};
  const auto y = apply_nonlinearity(one, FunctionDescriptor::relu(), 0.25);
  const Eigen::MatrixXd* two[] = {&x1, &x2};
  const auto z = apply_nonlinearity(two, FunctionDescriptor::max2());
  const auto cube = apply_nonlinearity(one, FunctionDescriptor(Polynomial::monomial({3}, 2.0)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        CHECK(y(i, i) == 0.0);
        CHECK(z(i, i) == 0.0);
        continue;
      }
      CHECK(y(i, j) == doctest::Approx((std::max(s * x1(i, j), 0.0) - 0.25) / s));
      CHECK(z(i, j) == doctest::Approx(std::max(s * x1(i, j), s * x2(i, j)) / s));
      CHECK(cube(i, j) == doctest::Approx(2 * std::pow(s * x1(i, j), 3) / s));
    }
  CHECK_THROWS_AS(apply_nonlinearity(one, FunctionDescriptor::max2()), Error);
}

TEST_CASE("Gaussian equivalent") {
  const int n = 10;
  const auto x1 = sample_goe(n, 1), x2 = sample_goe(n, 2), z = sample_goe(n, 3);
  EquivalenceParams p;
  p.theta = {0.5, -2.0};
  p.theta_noise = 0.7;
  const Eigen::MatrixXd* in[] = {&x1, &x2};
  const double shifts[] = {1.0, 0.25};
  const auto y = build_gaussian_equivalent(in, p, z, shifts);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd want = 0.5 * (x1 - I) - 2.0 * (x2 - 0.25 * I) + 0.7 * z;
  CHECK((y - want).cwiseAbs().maxCoeff() < 1e-14);
  const auto y0 = build_gaussian_equivalent(in, p, z);
  CHECK((y0 - (0.5 * x1 - 2.0 * x2 + 0.7 * z)).cwiseAbs().maxCoeff() < 1e-14);
  p.theta = {1.0};
  CHECK_THROWS_AS(build_gaussian_equivalent(in, p, z), Error);
}
