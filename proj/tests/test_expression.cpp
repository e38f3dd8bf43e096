#include <doctest.h>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "nls/error.hpp"
#include "nls/expression.hpp"

using namespace nls;

namespace {

// All pairings of positions, keeping those that are noncrossing and pair
// equal letters.
long long brute_word_moment(const std::string& w) {
  const int n = static_cast<int>(w.size());
  if (n % 2) return 0;
  long long count = 0;
  std::vector<int> mate(n, -1);
  std::function<void()> rec = [&]() {
    int i = 0;
    while (i < n && mate[i] >= 0) ++i;
    if (i == n) {
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          if (a < b && mate[a] > a && mate[b] > b && b < mate[a] && mate[a] < mate[b]) return;
      ++count;
      return;
    }
    for (int j = i + 1; j < n; ++j)
      if (mate[j] < 0 && w[i] == w[j]) {
        mate[i] = j;
        mate[j] = i;
        rec();
        mate[i] = mate[j] = -1;
      }
  };
  rec();
  return count;
}

MatrixExpression fig1() {
  return MatrixExpression({{"AA", 1}, {"A", 1}, {"BA", 1}, {"AB", 1}, {"B", 1}});
}

}  // namespace

TEST_CASE("word canonicalization") {
  CHECK(MatrixExpression::canonical_word("A^2B") == "AAB");
  CHECK(MatrixExpression::canonical_word("C^4") == "CCCC");
  CHECK(MatrixExpression::canonical_word("1") == "");
  CHECK_THROWS_AS(MatrixExpression::canonical_word("a"), Error);
  CHECK_THROWS_AS(MatrixExpression::canonical_word("A^"), Error);
}

TEST_CASE("expressions must be formally symmetric") {
  CHECK_THROWS_AS(MatrixExpression({{"AB", 1}}), Error);
  CHECK_THROWS_AS(MatrixExpression({{"AB", 1}, {"BA", 2}}), Error);
  CHECK_NOTHROW(MatrixExpression({{"AB", 1}, {"BA", 1}}));
  const auto e = MatrixExpression({{"A^2", 1}, {"B", -std::sqrt(2.0)}}, std::sqrt(3.0));
  CHECK(e.letters() == "AB");
  CHECK(e.max_word_length() == 2);
  CHECK(e.terms().at("AA") == doctest::Approx(1 / std::sqrt(3.0)));
}

TEST_CASE("semicircular word moments against brute force") {
  for (const char* w : {"", "A", "AA", "AAAA", "ABAB", "ABBA", "AABB", "AAAAAA", "ABCABC", "ABACBC", "AABAAB",
                        "AAAAAAAA", "ABABABAB", "AABBAABB", "ABCCBA", "AAAABBBB", "ABBAABBA"}) {
    CHECK(semicircular_word_moment(w) == brute_word_moment(w));
  }
  CHECK(semicircular_word_moment("AAAAAA") == 5);
  CHECK(semicircular_word_moment("ABAB") == 0);
}

TEST_CASE("polynomial multiplication") {
  const WordPolynomial a = {{"A", 1.0}, {"", 2.0}}, b = {{"B", 3.0}};
  const auto ab = multiply(a, b);
  CHECK(ab.at("AB") == 3.0);
  CHECK(ab.at("B") == 6.0);
  CHECK(semicircular_moment(multiply(a, a)) == doctest::Approx(1 + 4));
}

TEST_CASE("analytic moments and free cumulants") {
  // A^2 is free Poisson: every free cumulant is 1.
  const auto sq = MatrixExpression({{"AA", 1}});
  const auto k = analytic_free_cumulants(sq, 6);
  for (int j = 1; j <= 6; ++j) CHECK(k[j] == doctest::Approx(1));

  // A alone: semicircle.
  const auto ka = analytic_free_cumulants(MatrixExpression::letter('A'), 6);
  for (int j = 1; j <= 6; ++j) CHECK(ka[j] == doctest::Approx(j == 2 ? 1.0 : 0.0).scale(1));

  // Free sum A + B has kappa_2 = 2.
  CHECK(analytic_free_cumulants(MatrixExpression({{"A", 1}, {"B", 1}}), 2)[2] == doctest::Approx(2));

  // A^2 + A + BA + AB + B: mean 1, variance 1 + 1 + 2 + 1 from A^2, A,
  // AB + BA and B; cross terms vanish.
  const auto m = analytic_moments(fig1(), 2);
  CHECK(m[1] == doctest::Approx(1));
  CHECK(m[2] - m[1] * m[1] == doctest::Approx(5));
  CHECK(analytic_free_cumulants(fig1(), 2)[2] == doctest::Approx(5));
}

TEST_CASE("mixed cumulants of a tuple") {
  EnsembleTuple t;
  t.members.push_back(MatrixExpression({{"A^2", 1}, {"B", -std::sqrt(2.0)}}, std::sqrt(3.0)));
  t.members.push_back(MatrixExpression({{"A^4", 1}, {"CA", 1}, {"AC", 1}}, std::sqrt(12.0)));
  const auto c = analytic_mixed_kappa2(t);
  // tr(X1 X2) - tr X1 tr X2 = 5/6 - 2/6.
  CHECK(c(0, 1) == doctest::Approx(0.5));
  CHECK(c(1, 0) == doctest::Approx(0.5));
  // kappa_2(X1) = (tr A^4 + 2 tr B^2) / 3 - 1 / 3.
  CHECK(c(0, 0) == doctest::Approx(1.0));
  // kappa_2(X2) = (tr A^8 + tr(CAAC) + tr(ACCA) - (tr A^4)^2) / 12.
  const double direct = (analytic_mixed_moment(t, std::vector<int>{1, 1}) -
                         std::pow(analytic_mixed_moment(t, std::vector<int>{1}), 2));
  CHECK(c(1, 1) == doctest::Approx(direct));
  CHECK(c(1, 1) == doctest::Approx((14.0 + 2.0 - 4.0) / 12.0));

  const auto mixed = analytic_mixed_free_cumulants(t, 3);
  CHECK(mixed.at({0, 1}) == doctest::Approx(0.5));
  CHECK(mixed.at({0, 0, 1}) == doctest::Approx(mixed.at({1, 0, 0})));
}
