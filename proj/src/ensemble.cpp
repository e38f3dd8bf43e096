#include "nls/ensemble.hpp"

#include <cmath>
#include <random>

#include "nls/error.hpp"

namespace nls {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t label_hash(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, SeedStream stream, std::uint64_t label, std::uint64_t index) {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ static_cast<std::uint64_t>(stream));
  s = splitmix64(s ^ label);
  return splitmix64(s ^ index);
}

Eigen::MatrixXd sample_goe(int n, std::uint64_t seed) {
  require(n >= 1, "sample_goe: N must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double off = 1.0 / std::sqrt(static_cast<double>(n));
  const double diag = std::sqrt(2.0 / n);
  Eigen::MatrixXd m(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < j; ++i) m(i, j) = off * normal(rng);
    m(j, j) = diag * normal(rng);
  }
  for (int j = 0; j < n; ++j)
    for (int i = j + 1; i < n; ++i) m(i, j) = m(j, i);
  return m;
}

LetterMatrices sample_letters(const std::string& letters, int n, std::uint64_t master, std::uint64_t index,
                              SeedStream stream, std::map<char, std::uint64_t>* seeds_out) {
  LetterMatrices out;
  for (char c : letters) {
    const auto seed = derive_seed(master, stream, label_hash(std::string_view(&c, 1)), index);
    if (seeds_out) (*seeds_out)[c] = seed;
    out.emplace(c, sample_goe(n, seed));
  }
  return out;
}

namespace {

class WordEvaluator {
 public:
  explicit WordEvaluator(const LetterMatrices& letters) : letters_(letters) {}

  const Eigen::MatrixXd& product(const std::string& word) {
    if (word.size() == 1) {
      auto it = letters_.find(word[0]);
      if (it == letters_.end()) fail(ErrorKind::InvalidArgument, std::string("no matrix for letter ") + word);
      return it->second;
    }
    if (auto it = cache_.find(word); it != cache_.end()) return it->second;
    const std::size_t mid = word.size() / 2;
    const std::string left = word.substr(0, mid), right = word.substr(mid);
    const Eigen::MatrixXd& a = product(left);
    const Eigen::MatrixXd& b = product(right);
    Eigen::MatrixXd p(a.rows(), b.cols());
    p.noalias() = a * b;
    return cache_.emplace(word, std::move(p)).first->second;
  }

  int dimension() const { return static_cast<int>(letters_.begin()->second.rows()); }

 private:
  const LetterMatrices& letters_;
  std::map<std::string, Eigen::MatrixXd> cache_;
};

Eigen::MatrixXd evaluate_with(const MatrixExpression& expr, WordEvaluator& ev) {
  const int n = ev.dimension();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const auto& terms = expr.terms();
  for (const auto& [w, c] : terms) {
    if (w.empty()) {
      m.diagonal().array() += c;
      continue;
    }
    const std::string rev(w.rbegin(), w.rend());
    if (rev == w) {
      m += c * ev.product(w);
    } else if (w < rev) {
      // The reversed word is the transpose; the constructor guarantees equal coefficients.
      const Eigen::MatrixXd& p = ev.product(w);
      m += c * p;
      m += c * p.transpose();
    }
  }
  const double scale = std::max(1e-300, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale)
    fail(ErrorKind::Numeric, "expression " + expr.id() + ": asymmetry residual " + std::to_string(asym / scale));
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  return sym;
}

}  // namespace

Eigen::MatrixXd evaluate_expression(const MatrixExpression& expr, const LetterMatrices& letters) {
  require(!letters.empty(), "evaluate_expression: no letter matrices");
  WordEvaluator ev(letters);
  return evaluate_with(expr, ev);
}

std::vector<Eigen::MatrixXd> evaluate_tuple(const EnsembleTuple& tuple, const LetterMatrices& letters) {
  require(!letters.empty(), "evaluate_tuple: no letter matrices");
  WordEvaluator ev(letters);
  std::vector<Eigen::MatrixXd> out;
  for (const auto& e : tuple.members) out.push_back(evaluate_with(e, ev));
  return out;
}

std::vector<RealizedMatrix> realize_tuple(const EnsembleTuple& tuple, int n, std::uint64_t master,
                                          std::uint64_t index, SeedStream stream) {
  std::map<char, std::uint64_t> seeds;
  const auto letters = sample_letters(tuple.letters(), n, master, index, stream, &seeds);
  auto mats = evaluate_tuple(tuple, letters);
  std::vector<RealizedMatrix> out;
  for (std::size_t r = 0; r < mats.size(); ++r) {
    RealizedMatrix rm;
    rm.entries = std::move(mats[r]);
    rm.expression_id = tuple.members[r].id();
    rm.index = index;
    for (char c : tuple.members[r].letters()) rm.letter_seeds[c] = seeds.at(c);
    out.push_back(std::move(rm));
  }
  return out;
}

namespace {

template <class F>
Eigen::MatrixXd entrywise(std::span<const Eigen::MatrixXd* const> inputs, double center, F&& f) {
  const int n = static_cast<int>(inputs[0]->rows());
  const double root = std::sqrt(static_cast<double>(n));
  const double inv_root = 1.0 / root;
  const std::size_t l = inputs.size();
  Eigen::MatrixXd y(n, n);
  double x[8];
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < j; ++i) {
      for (std::size_t r = 0; r < l; ++r) x[r] = root * (*inputs[r])(i, j);
      y(i, j) = (f(std::span<const double>(x, l)) - center) * inv_root;
    }
    y(j, j) = 0.0;
  }
  for (int j = 0; j < n; ++j)
    for (int i = j + 1; i < n; ++i) y(i, j) = y(j, i);
  return y;
}

}  // namespace

Eigen::MatrixXd apply_nonlinearity(std::span<const Eigen::MatrixXd* const> inputs, const FunctionDescriptor& f,
                                   double center) {
  require(!inputs.empty(), "apply_nonlinearity: no inputs");
  if (static_cast<int>(inputs.size()) != f.arity())
    fail(ErrorKind::InvalidArgument, "apply_nonlinearity: " + f.name() + " takes " + std::to_string(f.arity()) +
                                         " inputs, got " + std::to_string(inputs.size()));
  require(inputs.size() <= 8, "apply_nonlinearity: at most 8 inputs");
  const auto n = inputs[0]->rows();
  for (const auto* m : inputs)
    require(m->rows() == n && m->cols() == n, "apply_nonlinearity: inputs must be square of equal size");

  const auto& v = f.variant();
  if (std::holds_alternative<Relu>(v))
    return entrywise(inputs, center, [](std::span<const double> x) { return x[0] > 0.0 ? x[0] : 0.0; });
  if (std::holds_alternative<Max2>(v))
    return entrywise(inputs, center, [](std::span<const double> x) { return std::max(x[0], x[1]); });
  if (const auto* p = std::get_if<Polynomial>(&v); p && p->arity == 1) {
    std::vector<double> coef(p->degree() + 1, 0.0);
    for (const auto& [e, c] : p->terms) coef[e[0]] += c;
    return entrywise(inputs, center, [&](std::span<const double> x) {
      double acc = 0.0;
      for (auto it = coef.rbegin(); it != coef.rend(); ++it) acc = acc * x[0] + *it;
      return acc;
    });
  }
  return entrywise(inputs, center, [&](std::span<const double> x) { return f(x); });
}

Eigen::MatrixXd build_gaussian_equivalent(std::span<const Eigen::MatrixXd* const> inputs,
                                          const EquivalenceParams& params, const Eigen::MatrixXd& noise,
                                          std::span<const double> shifts) {
  require(!inputs.empty(), "build_gaussian_equivalent: no inputs");
  require(params.theta.size() == inputs.size(), "build_gaussian_equivalent: theta dimension mismatch");
  require(shifts.empty() || shifts.size() == inputs.size(), "build_gaussian_equivalent: shift count mismatch");
  const auto n = inputs[0]->rows();
  require(noise.rows() == n && noise.cols() == n, "build_gaussian_equivalent: noise size mismatch");
  Eigen::MatrixXd y = params.theta_noise * noise;
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    require(inputs[r]->rows() == n, "build_gaussian_equivalent: input size mismatch");
    y += params.theta[r] * *inputs[r];
    if (!shifts.empty()) y.diagonal().array() -= params.theta[r] * shifts[r];
  }
  return y;
}

}  // namespace nls
