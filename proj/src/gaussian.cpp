#include "nls/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "nls/error.hpp"

namespace nls {

namespace {

const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double relu_value(double x) { return x > 0.0 ? x : 0.0; }

void check_arity(const FunctionDescriptor& f, const GaussianLaw& law, const char* what) {
  if (f.arity() != law.dimension())
    fail(ErrorKind::InvalidArgument, std::string(what) + ": function " + f.name() + " has arity " +
                                         std::to_string(f.arity()) + " but the law has dimension " +
                                         std::to_string(law.dimension()));
}

double poly_expect(const Polynomial& p, const GaussianLaw& law) {
  require(p.arity == law.dimension(), "polynomial arity does not match law dimension");
  double sum = 0.0;
  for (const auto& [exps, coef] : p.terms)
    if (coef != 0.0) sum += coef * gaussian_monomial_moment(exps, law);
  return sum;
}

// Variance of g1 - g2.
double difference_variance(const GaussianLaw& law) {
  return std::max(0.0, law.variance(0) + law.variance(1) - 2.0 * law.covariance(0, 1));
}

// Custom functions always use the panel rule: Gauss-Hermite converges slowly
// when the integrand has complex singularities near the real axis (tanh).
bool kinked(const FunctionDescriptor& f) {
  return std::visit(Overloaded{[](const Polynomial&) { return false; }, [](const Relu&) { return true; },
                               [](const Max2&) { return true; },
                               [](const Custom1D&) { return true; }},
                    f.variant());
}

// E[h(g)] by quadrature, dimension 1 or 2. Non-smooth univariate integrands
// are assumed to kink at 0; Max2 kinks along x1 = x2.
double integrate(const std::function<double(std::span<const double>)>& h, const GaussianLaw& law, bool kink,
                 bool max_kink, const QuadratureOptions& q) {
  if (law.dimension() == 1) {
    return normal_expectation([&](double x) { return h(std::span<const double>(&x, 1)); }, law.variance(0),
                              kink, q);
  }
  if (law.dimension() == 2) {
    Eigen::Matrix2d cov = law.covariance();
    Eigen::Vector2d normal = max_kink ? Eigen::Vector2d(1.0, -1.0) : Eigen::Vector2d::Zero();
    return bivariate_normal_expectation(
        [&](double a, double b) {
          const double x[2] = {a, b};
          return h(std::span<const double>(x, 2));
        },
        cov, normal, q);
  }
  fail(ErrorKind::InvalidArgument, "quadrature is only available in dimension 1 and 2");
}

double integrate_product(const FunctionDescriptor& f, const FunctionDescriptor& g, const GaussianLaw& law,
                         const QuadratureOptions& q) {
  const bool max_kink = std::holds_alternative<Max2>(f.variant()) || std::holds_alternative<Max2>(g.variant());
  return integrate([&](std::span<const double> x) { return f(x) * g(x); }, law, kinked(f) || kinked(g),
                   max_kink, q);
}

}  // namespace

// ---------------------------------------------------------------------------

GaussianLaw::GaussianLaw(Eigen::MatrixXd covariance) : covariance_(std::move(covariance)) {
  const auto l = covariance_.rows();
  require(l >= 1 && covariance_.cols() == l, "GaussianLaw: covariance must be a nonempty square matrix");
  require(covariance_.allFinite(), "GaussianLaw: covariance entries must be finite");
  const double scale = std::max(1.0, covariance_.cwiseAbs().maxCoeff());
  for (Eigen::Index r = 0; r < l; ++r)
    for (Eigen::Index s = r + 1; s < l; ++s)
      require(std::abs(covariance_(r, s) - covariance_(s, r)) <= 1e-12 * scale,
              "GaussianLaw: covariance is not symmetric");
  covariance_ = 0.5 * (covariance_ + covariance_.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance_);
  const double smallest = eig.eigenvalues().minCoeff();
  if (smallest < -1e-12 * scale)
    fail(ErrorKind::InvalidArgument,
         "GaussianLaw: covariance is not positive semidefinite (eigenvalue " + std::to_string(smallest) + ")");
  if (smallest < 0.0) {
    const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
    covariance_ = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
    covariance_ = 0.5 * (covariance_ + covariance_.transpose()).eval();
  }
}

GaussianLaw GaussianLaw::univariate(double variance) {
  Eigen::MatrixXd c(1, 1);
  c(0, 0) = variance;
  return GaussianLaw(c);
}

GaussianLaw GaussianLaw::diagonal(std::span<const double> variances) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(variances.size(), variances.size());
  for (std::size_t i = 0; i < variances.size(); ++i) c(i, i) = variances[i];
  return GaussianLaw(c);
}

bool GaussianLaw::is_diagonal() const {
  for (Eigen::Index r = 0; r < covariance_.rows(); ++r)
    for (Eigen::Index s = 0; s < covariance_.cols(); ++s)
      if (r != s && covariance_(r, s) != 0.0) return false;
  return true;
}

// ---------------------------------------------------------------------------

Polynomial Polynomial::monomial(std::vector<int> exponents, double coefficient) {
  require(!exponents.empty(), "Polynomial: empty exponent tuple");
  for (int e : exponents) require(e >= 0, "Polynomial: negative exponent");
  Polynomial p;
  p.arity = static_cast<int>(exponents.size());
  p.terms[std::move(exponents)] = coefficient;
  return p;
}

Polynomial Polynomial::identity() { return monomial({1}); }

double Polynomial::operator()(std::span<const double> x) const {
  require(static_cast<int>(x.size()) == arity, "Polynomial: argument count does not match arity");
  double sum = 0.0;
  for (const auto& [exps, coef] : terms) {
    double term = coef;
    for (int i = 0; i < arity; ++i)
      for (int k = 0; k < exps[i]; ++k) term *= x[i];
    sum += term;
  }
  return sum;
}

double Polynomial::operator()(double x) const { return (*this)(std::span<const double>(&x, 1)); }

Polynomial Polynomial::derivative(int coordinate) const {
  require(coordinate >= 0 && coordinate < arity, "Polynomial: coordinate out of range");
  Polynomial d;
  d.arity = arity;
  for (const auto& [exps, coef] : terms) {
    if (exps[coordinate] == 0) continue;
    auto e = exps;
    --e[coordinate];
    d.terms[e] += coef * exps[coordinate];
  }
  return d;
}

Polynomial Polynomial::times(const Polynomial& other) const {
  require(arity == other.arity, "Polynomial: arity mismatch in product");
  Polynomial p;
  p.arity = arity;
  for (const auto& [ea, ca] : terms)
    for (const auto& [eb, cb] : other.terms) {
      std::vector<int> e(arity);
      for (int i = 0; i < arity; ++i) e[i] = ea[i] + eb[i];
      p.terms[e] += ca * cb;
    }
  return p;
}

Polynomial Polynomial::times_coordinate(int coordinate) const {
  require(coordinate >= 0 && coordinate < arity, "Polynomial: coordinate out of range");
  Polynomial p;
  p.arity = arity;
  for (const auto& [exps, coef] : terms) {
    auto e = exps;
    ++e[coordinate];
    p.terms[e] += coef;
  }
  return p;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [exps, coef] : terms)
    if (coef != 0.0) d = std::max(d, std::accumulate(exps.begin(), exps.end(), 0));
  return d;
}

bool Polynomial::is_even() const {
  for (const auto& [exps, coef] : terms)
    if (coef != 0.0 && std::accumulate(exps.begin(), exps.end(), 0) % 2 != 0) return false;
  return true;
}

// ---------------------------------------------------------------------------

FunctionDescriptor::FunctionDescriptor(Variant v) : v_(std::move(v)) {
  if (const auto* p = std::get_if<Polynomial>(&v_)) {
    require(p->arity >= 1, "polynomial arity must be positive");
    for (const auto& [exps, coef] : p->terms) {
      require(static_cast<int>(exps.size()) == p->arity, "polynomial exponent tuple length must equal arity");
      require(std::isfinite(coef), "polynomial coefficients must be finite");
    }
  }
  if (const auto* c = std::get_if<Custom1D>(&v_)) require(static_cast<bool>(c->evaluate), "custom function needs an evaluator");
}

int FunctionDescriptor::arity() const {
  return std::visit(Overloaded{[](const Polynomial& p) { return p.arity; }, [](const Relu&) { return 1; },
                               [](const Max2&) { return 2; }, [](const Custom1D&) { return 1; }},
                    v_);
}

std::string FunctionDescriptor::name() const {
  return std::visit(Overloaded{[](const Polynomial&) { return std::string("poly"); },
                               [](const Relu&) { return std::string("relu"); },
                               [](const Max2&) { return std::string("max2"); },
                               [](const Custom1D& c) { return c.name; }},
                    v_);
}

double FunctionDescriptor::operator()(std::span<const double> x) const {
  return std::visit(Overloaded{[&](const Polynomial& p) { return p(x); },
                               [&](const Relu&) {
                                 require(x.size() == 1, "relu takes one argument");
                                 return relu_value(x[0]);
                               },
                               [&](const Max2&) {
                                 require(x.size() == 2, "max2 takes two arguments");
                                 return std::max(x[0], x[1]);
                               },
                               [&](const Custom1D& c) {
                                 require(x.size() == 1, "custom function takes one argument");
                                 return c.evaluate(x[0]);
                               }},
                    v_);
}

double FunctionDescriptor::operator()(double x) const { return (*this)(std::span<const double>(&x, 1)); }

// ---------------------------------------------------------------------------

double gaussian_monomial_moment(std::span<const int> exponents, const GaussianLaw& law) {
  require(static_cast<int>(exponents.size()) == law.dimension(), "monomial length must equal law dimension");
  int total = 0;
  for (int e : exponents) {
    require(e >= 0, "negative exponent");
    total += e;
  }
  if (total > kMaxWickDegree)
    fail(ErrorKind::SizeLimit, "Gaussian monomial degree " + std::to_string(total) + " exceeds " +
                                   std::to_string(kMaxWickDegree));
  if (total % 2 == 1) return 0.0;

  // E[g_i * m] = sum_j Sigma_ij d_j m  (Stein), applied to the first live coordinate.
  std::map<std::vector<int>, double> memo;
  std::function<double(std::vector<int>&)> rec = [&](std::vector<int>& e) -> double {
    int i = 0;
    while (i < static_cast<int>(e.size()) && e[i] == 0) ++i;
    if (i == static_cast<int>(e.size())) return 1.0;
    if (auto it = memo.find(e); it != memo.end()) return it->second;
    const auto key = e;
    --e[i];
    double sum = 0.0;
    for (int j = 0; j < static_cast<int>(e.size()); ++j) {
      if (e[j] == 0 || law.covariance(i, j) == 0.0) continue;
      const int mult = e[j];
      --e[j];
      sum += law.covariance(i, j) * mult * rec(e);
      ++e[j];
    }
    ++e[i];
    memo.emplace(key, sum);
    return sum;
  };
  std::vector<int> e(exponents.begin(), exponents.end());
  return rec(e);
}

double expect(const FunctionDescriptor& f, const GaussianLaw& law, const QuadratureOptions& q) {
  check_arity(f, law, "expect");
  return std::visit(
      Overloaded{[&](const Polynomial& p) { return poly_expect(p, law); },
                 [&](const Relu&) { return std::sqrt(law.variance(0)) * kInvSqrt2Pi; },
                 [&](const Max2&) { return std::sqrt(difference_variance(law)) * kInvSqrt2Pi; },
                 [&](const Custom1D& c) {
                   return normal_expectation(c.evaluate, law.variance(0), true, q);
                 }},
      f.variant());
}

double expect_product(const FunctionDescriptor& f, const FunctionDescriptor& g, const GaussianLaw& law,
                      const QuadratureOptions& q) {
  check_arity(f, law, "expect_product");
  check_arity(g, law, "expect_product");
  const auto* pf = std::get_if<Polynomial>(&f.variant());
  const auto* pg = std::get_if<Polynomial>(&g.variant());
  if (pf && pg) return poly_expect(pf->times(*pg), law);
  if (std::holds_alternative<Relu>(f.variant()) && std::holds_alternative<Relu>(g.variant()))
    return 0.5 * law.variance(0);
  // max^2 = (s^2 + 2 s|d| + d^2)/4 with s = g1+g2, d = g1-g2; E[s|d|] = 0.
  if (std::holds_alternative<Max2>(f.variant()) && std::holds_alternative<Max2>(g.variant()))
    return 0.5 * (law.variance(0) + law.variance(1));
  return integrate_product(f, g, law, q);
}

double covariance_f(const FunctionDescriptor& f, const FunctionDescriptor& g, const GaussianLaw& law,
                    const QuadratureOptions& q) {
  return expect_product(f, g, law, q) - expect(f, law, q) * expect(g, law, q);
}

double expect_partial(const FunctionDescriptor& f, int coordinate, const GaussianLaw& law,
                      const QuadratureOptions& q) {
  check_arity(f, law, "expect_partial");
  require(coordinate >= 0 && coordinate < f.arity(), "expect_partial: coordinate out of range");
  return std::visit(
      Overloaded{[&](const Polynomial& p) { return poly_expect(p.derivative(coordinate), law); },
                 // P(g > 0); the value of the derivative at the kink is irrelevant.
                 [&](const Relu&) { return 0.5; },
                 // P(g_j is the maximum): g1 - g2 is symmetric about 0.
                 [&](const Max2&) { return 0.5; },
                 [&](const Custom1D& c) {
                   if (c.derivative) return normal_expectation(c.derivative, law.variance(0), true, q);
                   if (!c.smooth && !c.stein_fallback)
                     fail(ErrorKind::InvalidArgument, "expect_partial: custom function " + c.name +
                                                          " has no derivative, is not smooth and Stein "
                                                          "fallback is disabled");
                   const double var = law.variance(0);
                   if (var <= 0.0)
                     fail(ErrorKind::InvalidArgument, "expect_partial: Stein form needs positive variance");
                   return normal_expectation([&](double x) { return x * c.evaluate(x); }, var, true, q) / var;
                 }},
      f.variant());
}

double expect_times_coordinate(const FunctionDescriptor& f, int coordinate, const GaussianLaw& law,
                               const QuadratureOptions& q) {
  check_arity(f, law, "expect_times_coordinate");
  require(coordinate >= 0 && coordinate < f.arity(), "expect_times_coordinate: coordinate out of range");
  return std::visit(
      Overloaded{[&](const Polynomial& p) { return poly_expect(p.times_coordinate(coordinate), law); },
                 [&](const Relu&) { return 0.5 * law.variance(0); },
                 [&](const Max2&) {
                   return 0.5 * (law.covariance(coordinate, 0) + law.covariance(coordinate, 1));
                 },
                 [&](const Custom1D& c) {
                   return normal_expectation([&](double x) { return x * c.evaluate(x); }, law.variance(0),
                                             true, q);
                 }},
      f.variant());
}

// ---------------------------------------------------------------------------

EquivalenceParams theta_params(const FunctionDescriptor& f, const GaussianLaw& law, bool auto_center,
                               const QuadratureOptions& q) {
  check_arity(f, law, "theta_params");
  EquivalenceParams out;
  const int l = law.dimension();
  out.theta.resize(l);
  for (int r = 0; r < l; ++r) out.theta[r] = expect_partial(f, r, law, q);
  out.kappa2f = covariance_f(f, f, law, q);

  double explained = 0.0;
  for (int r = 0; r < l; ++r)
    for (int s = 0; s < l; ++s) explained += law.covariance(r, s) * out.theta[r] * out.theta[s];
  out.discriminant = out.kappa2f - explained;

  const bool numeric = std::holds_alternative<Custom1D>(f.variant());
  double tol = 1e-10 * std::max(1.0, out.kappa2f);
  if (numeric) tol = std::max(tol, 10.0 * q.tolerance * std::max(1.0, out.kappa2f));
  if (out.discriminant < -tol)
    fail(ErrorKind::Internal, "theta_params: negative discriminant " + std::to_string(out.discriminant) +
                                  " (Cauchy-Schwarz violated; inconsistent Gaussian calculus)");
  out.theta_noise = std::sqrt(std::max(0.0, out.discriminant));

  // Stein form: theta_1 = E[g f(g)] / kappa_2.
  if (l == 1 && law.variance(0) > 0.0) {
    const double var = law.variance(0);
    const double theta1 = expect_times_coordinate(f, 0, law, q) / var;
    const double noise = std::sqrt(std::max(0.0, out.kappa2f - var * theta1 * theta1));
    out.stein_theta_noise = noise;
    const double check_tol = numeric ? 10.0 * q.tolerance : 1e-8;
    if (std::abs(noise - out.theta_noise) > check_tol * std::max(1.0, out.theta_noise))
      fail(ErrorKind::Numeric, "theta_params: Stein cross-check disagrees (" + std::to_string(noise) + " vs " +
                                   std::to_string(out.theta_noise) + ")");
  }
  out.center_shift = auto_center ? expect(f, law, q) : 0.0;
  out.conjectural = f.conjectural();
  return out;
}

CumulantVector predict_free_cumulants(const FunctionDescriptor& f, const GaussianLaw& law,
                                      std::span<const CumulantVector> individual, const MixedFreeCumulants* mixed,
                                      int order, const QuadratureOptions& q) {
  check_arity(f, law, "predict_free_cumulants");
  if (order < 1 || order > kMaxFreeOrder)
    fail(ErrorKind::SizeLimit, "predict_free_cumulants: order must be in [1, " + std::to_string(kMaxFreeOrder) + "]");
  const int l = law.dimension();
  std::vector<double> kappa(order, 0.0);
  // The diagonal of Y is removed, so the normalized trace vanishes.
  kappa[0] = 0.0;
  if (order >= 2) kappa[1] = covariance_f(f, f, law, q);
  if (order < 3) return make_cumulants(CumulantKind::Free, kappa);

  std::vector<double> theta(l);
  for (int r = 0; r < l; ++r) theta[r] = expect_partial(f, r, law, q);

  if (mixed) {
    require(mixed->labels() == l, "predict_free_cumulants: mixed cumulant labels do not match law dimension");
    if (mixed->order() < order)
      fail(ErrorKind::InvalidArgument, "predict_free_cumulants: mixed free cumulants only through order " +
                                           std::to_string(mixed->order()));
    for (int n = 3; n <= order; ++n) {
      std::vector<int> word(n, 0);
      double sum = 0.0;
      while (true) {
        double prod = 1.0;
        for (int r : word) prod *= theta[r];
        if (prod != 0.0) sum += mixed->at(word) * prod;
        int pos = n - 1;
        while (pos >= 0 && word[pos] == l - 1) word[pos--] = 0;
        if (pos < 0) break;
        ++word[pos];
      }
      kappa[n - 1] = sum;
    }
    return make_cumulants(CumulantKind::Free, kappa);
  }

  if (!law.is_diagonal())
    fail(ErrorKind::InvalidArgument,
         "predict_free_cumulants: correlated inputs need mixed free cumulants for orders >= 3");
  require(static_cast<int>(individual.size()) == l,
          "predict_free_cumulants: need one cumulant vector per input matrix");
  for (const auto& c : individual) {
    require(c.kind == CumulantKind::Free, "predict_free_cumulants: input cumulants must be free cumulants");
    if (c.order() < order)
      fail(ErrorKind::InvalidArgument, "predict_free_cumulants: input free cumulants only through order " +
                                           std::to_string(c.order()));
  }
  for (int n = 3; n <= order; ++n) {
    double sum = 0.0;
    for (int r = 0; r < l; ++r) sum += individual[r][n] * std::pow(theta[r], n);
    kappa[n - 1] = sum;
  }
  return make_cumulants(CumulantKind::Free, kappa);
}

}  // namespace nls
