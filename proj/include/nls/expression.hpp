#pragma once

// Formally symmetric noncommutative polynomials in independent GOE letters,
// and their exact large-N moments and free cumulants computed in free
// semicircular variables.

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nls/cumulants.hpp"

namespace nls {

// Longest word allowed when expanding moments of an expression.
inline constexpr int kMaxMomentWordLength = 16;

struct ExpressionTerm {
  std::string word;  // letters 'A'..'Z'; "" or "1" is the identity; "C^4" expands to "CCCC"
  double coefficient = 1.0;
};

class MatrixExpression {
 public:
  // The expression is (sum_t c_t w_t) / divisor. Throws InvalidArgument when
  // a word's reversal does not carry the same coefficient.
  explicit MatrixExpression(std::vector<ExpressionTerm> terms, double divisor = 1.0, std::string id = "");
  static MatrixExpression letter(char c);

  const std::string& id() const { return id_; }
  // Canonical words (identity = "") with coefficients already divided.
  const std::map<std::string, double>& terms() const { return terms_; }
  double divisor() const { return divisor_; }
  std::string letters() const;  // sorted, distinct
  int max_word_length() const;
  std::string to_string() const;

  // Normalizes "A^2B" to "AAB", "1" to "". Throws on bad syntax.
  static std::string canonical_word(const std::string& raw);

 private:
  std::string id_;
  double divisor_;
  std::map<std::string, double> terms_;
};

// Expressions over a shared alphabet; common letters correlate the members.
struct EnsembleTuple {
  std::vector<MatrixExpression> members;

  int size() const { return static_cast<int>(members.size()); }
  std::string letters() const;
};

// Noncommutative polynomial as word -> coefficient.
using WordPolynomial = std::map<std::string, double>;

WordPolynomial multiply(const WordPolynomial& a, const WordPolynomial& b, int max_length = kMaxMomentWordLength);

// Limit of tr(w) for free standard semicircular letters: the number of
// noncrossing pairings of the positions of w that pair equal letters.
long long semicircular_word_moment(const std::string& word);
double semicircular_moment(const WordPolynomial& p);

// Limiting mixed moment tr(X_{r_1} ... X_{r_n}) of tuple members.
double analytic_mixed_moment(const EnsembleTuple& tuple, std::span<const int> labels);

// Limiting moments m_1..m_K and free cumulants of an expression.
MomentVector analytic_moments(const MatrixExpression& expr, int order);
CumulantVector analytic_free_cumulants(const MatrixExpression& expr, int order);

// kappa_2^{(r,s)} = lim tr(X_r X_s) - lim tr(X_r) lim tr(X_s).
Eigen::MatrixXd analytic_mixed_kappa2(const EnsembleTuple& tuple);
// Joint free cumulants of the tuple through `order` (<= 8).
MixedFreeCumulants analytic_mixed_free_cumulants(const EnsembleTuple& tuple, int order);

}  // namespace nls
