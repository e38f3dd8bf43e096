#pragma once

// Gaussian calculus for entrywise nonlinearities: expectations of f, f*g,
// partial derivatives and g_j * f under a centered Gaussian law, and from
// them the parameters of the linear (Gaussian-equivalent) surrogate and the
// predicted free cumulants of the nonlinear ensemble.

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "nls/cumulants.hpp"
#include "nls/quadrature.hpp"

namespace nls {

inline constexpr int kMaxWickDegree = 24;

// Centered Gaussian law on R^l.
class GaussianLaw {
 public:
  // Validates symmetry and positive semidefiniteness (smallest eigenvalue
  // >= -1e-12 * scale); tiny negative eigenvalues are clipped.
  explicit GaussianLaw(Eigen::MatrixXd covariance);
  static GaussianLaw univariate(double variance);
  static GaussianLaw diagonal(std::span<const double> variances);

  int dimension() const { return static_cast<int>(covariance_.rows()); }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  double covariance(int r, int s) const { return covariance_(r, s); }
  double variance(int r) const { return covariance_(r, r); }
  bool is_diagonal() const;

 private:
  Eigen::MatrixXd covariance_;
};

// Multivariate polynomial: exponent tuple (length = arity) -> coefficient.
struct Polynomial {
  int arity = 1;
  std::map<std::vector<int>, double> terms;

  static Polynomial monomial(std::vector<int> exponents, double coefficient = 1.0);
  static Polynomial identity();  // f(x) = x
  double operator()(std::span<const double> x) const;
  double operator()(double x) const;
  Polynomial derivative(int coordinate) const;
  Polynomial times(const Polynomial& other) const;
  Polynomial times_coordinate(int coordinate) const;
  int degree() const;
  bool is_even() const;  // univariate: only even powers
};

struct Relu {};
struct Max2 {};

struct Custom1D {
  std::function<double(double)> evaluate;
  std::function<double(double)> derivative;  // optional
  bool smooth = true;
  bool stein_fallback = true;  // allow E[g f(g)] / var for the derivative
  std::string name = "custom";
};

class FunctionDescriptor {
 public:
  using Variant = std::variant<Polynomial, Relu, Max2, Custom1D>;

  FunctionDescriptor(Variant v);  // NOLINT: implicit on purpose
  static FunctionDescriptor relu() { return {Relu{}}; }
  static FunctionDescriptor max2() { return {Max2{}}; }
  static FunctionDescriptor identity() { return {Polynomial::identity()}; }

  const Variant& variant() const { return v_; }
  int arity() const;
  bool is_polynomial() const { return std::holds_alternative<Polynomial>(v_); }
  // The theorems behind the predictions are proven for polynomials only.
  bool conjectural() const { return !is_polynomial(); }
  std::string name() const;

  double operator()(std::span<const double> x) const;
  double operator()(double x) const;

 private:
  Variant v_;
};

// E[prod_r g_r^{e_r}] by Wick/Isserlis. Total degree <= 24.
double gaussian_monomial_moment(std::span<const int> exponents, const GaussianLaw& law);

double expect(const FunctionDescriptor& f, const GaussianLaw& law, const QuadratureOptions& q = {});
// E[f g]
double expect_product(const FunctionDescriptor& f, const FunctionDescriptor& g, const GaussianLaw& law,
                      const QuadratureOptions& q = {});
double covariance_f(const FunctionDescriptor& f, const FunctionDescriptor& g, const GaussianLaw& law,
                    const QuadratureOptions& q = {});
// E[d_j f], j 0-based.
double expect_partial(const FunctionDescriptor& f, int coordinate, const GaussianLaw& law,
                      const QuadratureOptions& q = {});
// E[g_j f(g)], j 0-based.
double expect_times_coordinate(const FunctionDescriptor& f, int coordinate, const GaussianLaw& law,
                               const QuadratureOptions& q = {});

// Parameters of Y_hat = sum_r theta_r X_r + theta_noise Z.
struct EquivalenceParams {
  std::vector<double> theta;
  double theta_noise = 0.0;
  double kappa2f = 0.0;        // c_2(f(g), f(g))
  double center_shift = 0.0;   // E[f(g)] when auto-centering, else 0
  double discriminant = 0.0;   // theta_noise^2 before clipping
  std::optional<double> stein_theta_noise;  // univariate cross-check
  bool conjectural = false;
};

EquivalenceParams theta_params(const FunctionDescriptor& f, const GaussianLaw& law, bool auto_center,
                               const QuadratureOptions& q = {});

// Free cumulants kappa_1..kappa_K of the limit of Y. `individual` holds the
// free cumulants of each input matrix; `mixed` the joint ones, required when
// the law has off-diagonal covariance and K >= 3.
CumulantVector predict_free_cumulants(const FunctionDescriptor& f, const GaussianLaw& law,
                                      std::span<const CumulantVector> individual,
                                      const MixedFreeCumulants* mixed, int order,
                                      const QuadratureOptions& q = {});

}  // namespace nls
