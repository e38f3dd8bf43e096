#include "nls/expression.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "nls/error.hpp"

namespace nls {

std::string MatrixExpression::canonical_word(const std::string& raw) {
  if (raw == "1") return "";
  std::string out;
  for (std::size_t i = 0; i < raw.size();) {
    const char c = raw[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c < 'A' || c > 'Z')
      fail(ErrorKind::InvalidArgument, "expression word '" + raw + "': letters must be upper-case A-Z");
    ++i;
    int power = 1;
    if (i < raw.size() && raw[i] == '^') {
      ++i;
      std::size_t start = i;
      while (i < raw.size() && std::isdigit(static_cast<unsigned char>(raw[i]))) ++i;
      if (start == i) fail(ErrorKind::InvalidArgument, "expression word '" + raw + "': '^' needs a power");
      power = std::stoi(raw.substr(start, i - start));
      if (power < 1 || power > 64) fail(ErrorKind::InvalidArgument, "expression word '" + raw + "': bad power");
    }
    out.append(static_cast<std::size_t>(power), c);
  }
  return out;
}

MatrixExpression::MatrixExpression(std::vector<ExpressionTerm> terms, double divisor, std::string id)
    : id_(std::move(id)), divisor_(divisor) {
  require(!terms.empty(), "expression needs at least one term");
  require(std::isfinite(divisor) && divisor != 0.0, "expression divisor must be finite and nonzero");
  std::map<std::string, double> raw;
  for (const auto& t : terms) {
    require(std::isfinite(t.coefficient), "expression coefficients must be finite");
    raw[canonical_word(t.word)] += t.coefficient;
  }
  for (const auto& [w, c] : raw) {
    std::string rev(w.rbegin(), w.rend());
    auto it = raw.find(rev);
    const double cr = it == raw.end() ? 0.0 : it->second;
    if (std::abs(c - cr) > 1e-12 * std::max(1.0, std::abs(c))) {
      fail(ErrorKind::InvalidArgument, "expression is not symmetric: word " + w + " has coefficient " +
                                           std::to_string(c) + " but its reversal " + rev + " has " +
                                           std::to_string(cr));
    }
  }
  for (const auto& [w, c] : raw)
    if (c != 0.0) terms_[w] = c / divisor_;
  require(!terms_.empty(), "expression has only zero coefficients");
}

MatrixExpression MatrixExpression::letter(char c) {
  return MatrixExpression({{std::string(1, c), 1.0}}, 1.0, std::string(1, c));
}

std::string MatrixExpression::letters() const {
  std::set<char> s;
  for (const auto& [w, c] : terms_) s.insert(w.begin(), w.end());
  return std::string(s.begin(), s.end());
}

int MatrixExpression::max_word_length() const {
  int m = 0;
  for (const auto& [w, c] : terms_) m = std::max(m, static_cast<int>(w.size()));
  return m;
}

std::string MatrixExpression::to_string() const {
  std::ostringstream os;
  os.precision(12);
  bool first = true;
  for (const auto& [w, c] : terms_) {
    if (!first) os << (c < 0 ? " - " : " + ");
    else if (c < 0) os << "-";
    first = false;
    os << std::abs(c);
    if (!w.empty()) os << "*" << w;
  }
  return os.str();
}

std::string EnsembleTuple::letters() const {
  std::set<char> s;
  for (const auto& m : members) {
    const auto l = m.letters();
    s.insert(l.begin(), l.end());
  }
  return std::string(s.begin(), s.end());
}

// ---------------------------------------------------------------------------

WordPolynomial multiply(const WordPolynomial& a, const WordPolynomial& b, int max_length) {
  WordPolynomial out;
  for (const auto& [wa, ca] : a)
    for (const auto& [wb, cb] : b) {
      if (static_cast<int>(wa.size() + wb.size()) > max_length)
        fail(ErrorKind::SizeLimit, "moment word length exceeds " + std::to_string(max_length));
      out[wa + wb] += ca * cb;
    }
  return out;
}

long long semicircular_word_moment(const std::string& word) {
  const int n = static_cast<int>(word.size());
  if (n % 2 == 1) return 0;
  std::array<int, 26> counts{};
  for (char c : word) ++counts[c - 'A'];
  for (int c : counts)
    if (c % 2 == 1) return 0;
  // count[i][j]: noncrossing letter-respecting pairings of word[i, j).
  std::vector<long long> count((n + 1) * (n + 1), 0);
  auto at = [&](int i, int j) -> long long& { return count[i * (n + 1) + j]; };
  for (int i = 0; i <= n; ++i) at(i, i) = 1;
  for (int len = 2; len <= n; len += 2)
    for (int i = 0; i + len <= n; ++i) {
      const int j = i + len;
      long long total = 0;
      for (int k = i + 1; k < j; k += 2)
        if (word[k] == word[i]) total += at(i + 1, k) * at(k + 1, j);
      at(i, j) = total;
    }
  return at(0, n);
}

double semicircular_moment(const WordPolynomial& p) {
  double sum = 0.0;
  for (const auto& [w, c] : p)
    if (c != 0.0) sum += c * static_cast<double>(semicircular_word_moment(w));
  return sum;
}

double analytic_mixed_moment(const EnsembleTuple& tuple, std::span<const int> labels) {
  WordPolynomial p{{"", 1.0}};
  for (int r : labels) {
    require(r >= 0 && r < tuple.size(), "analytic_mixed_moment: label out of range");
    p = multiply(p, tuple.members[r].terms());
  }
  return semicircular_moment(p);
}

MomentVector analytic_moments(const MatrixExpression& expr, int order) {
  require(order >= 1, "analytic_moments: order must be positive");
  if (order * expr.max_word_length() > kMaxMomentWordLength)
    fail(ErrorKind::SizeLimit, "analytic moments of order " + std::to_string(order) +
                                   " need words of length " + std::to_string(order * expr.max_word_length()) +
                                   " > " + std::to_string(kMaxMomentWordLength));
  std::vector<double> m;
  WordPolynomial p{{"", 1.0}};
  for (int k = 1; k <= order; ++k) {
    p = multiply(p, expr.terms());
    m.push_back(semicircular_moment(p));
  }
  return make_moments(m);
}

CumulantVector analytic_free_cumulants(const MatrixExpression& expr, int order) {
  return free_cumulants_from_moments(analytic_moments(expr, order));
}

Eigen::MatrixXd analytic_mixed_kappa2(const EnsembleTuple& tuple) {
  const int l = tuple.size();
  require(l >= 1, "analytic_mixed_kappa2: empty tuple");
  Eigen::VectorXd mean(l);
  for (int r = 0; r < l; ++r) {
    const int label[1] = {r};
    mean(r) = analytic_mixed_moment(tuple, label);
  }
  Eigen::MatrixXd k2(l, l);
  for (int r = 0; r < l; ++r)
    for (int s = r; s < l; ++s) {
      const int labels[2] = {r, s};
      k2(r, s) = k2(s, r) = analytic_mixed_moment(tuple, labels) - mean(r) * mean(s);
    }
  return k2;
}

MixedFreeCumulants analytic_mixed_free_cumulants(const EnsembleTuple& tuple, int order) {
  std::map<std::vector<int>, double> cache;
  return mixed_free_cumulants_from_moments(tuple.size(), order, [&](const std::vector<int>& labels) {
    auto it = cache.find(labels);
    if (it != cache.end()) return it->second;
    const double v = analytic_mixed_moment(tuple, labels);
    cache.emplace(labels, v);
    return v;
  });
}

}  // namespace nls
