#include "nls/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "nls/error.hpp"

namespace nls {

namespace {

constexpr double kSplitRange = 12.0;
constexpr int kPanelPoints = 20;

// Golub-Welsch: eigen-decomposition of the Jacobi matrix of the orthogonal
// polynomial family. Returns nodes and first-component-squared weights.
QuadratureRule golub_welsch(const Eigen::VectorXd& diagonal, const Eigen::VectorXd& off_diagonal,
                            double total_mass) {
  const int n = static_cast<int>(diagonal.size());
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) jacobi(i, i) = diagonal(i);
  for (int i = 0; i + 1 < n; ++i) jacobi(i, i + 1) = jacobi(i + 1, i) = off_diagonal(i);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success) fail(ErrorKind::Numeric, "Golub-Welsch eigensolver failed");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);
    const double v = solver.eigenvectors()(0, i);
    rule.weights[i] = total_mass * v * v;
  }
  return rule;
}

QuadratureRule make_gauss_hermite(int n) {
  // Probabilists' Hermite: x He_k = He_{k+1} + k He_{k-1}.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(static_cast<double>(k));
  auto rule = golub_welsch(diag, off, 1.0);
  // Symmetrize to remove eigensolver round-off.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

QuadratureRule make_gauss_legendre(int n) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  return golub_welsch(diag, off, 2.0);
}

QuadratureRule make_split_normal(int n) {
  const int panels = std::max(1, n / kPanelPoints);
  const QuadratureRule gl = make_gauss_legendre(kPanelPoints);
  const double width = kSplitRange / panels;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  QuadratureRule rule;
  for (int side : {-1, 1})
    for (int p = 0; p < panels; ++p)
      for (int i = 0; i < kPanelPoints; ++i) {
        const double x = side * (width * p + 0.5 * width * (gl.nodes[i] + 1.0));
        rule.nodes.push_back(x);
        rule.weights.push_back(0.5 * width * gl.weights[i] * inv_sqrt_2pi * std::exp(-0.5 * x * x));
      }
  return rule;
}

template <class Make>
const QuadratureRule& cached_rule(std::map<int, std::unique_ptr<QuadratureRule>>& cache, std::mutex& mutex,
                                  int n, Make make) {
  require(n >= 2 && n <= 4096, "quadrature node count must be in [2, 4096]");
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<QuadratureRule>(make(n));
  return *slot;
}

double apply_1d(const QuadratureRule& rule, const std::function<double(double)>& h, double sigma) {
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * h(sigma * rule.nodes[i]);
  return sum;
}

void check_convergence(double coarse, double fine, double tolerance, const char* what) {
  if (!std::isfinite(fine))
    fail(ErrorKind::Numeric, std::string(what) + ": quadrature produced a non-finite value");
  if (std::abs(fine - coarse) > tolerance * std::max(1.0, std::abs(fine)))
    fail(ErrorKind::Numeric, std::string(what) + ": quadrature did not converge (node-doubling change " +
                                 std::to_string(std::abs(fine - coarse)) + ")");
}

}  // namespace

const QuadratureRule& gauss_hermite_rule(int nodes) {
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  static std::mutex mutex;
  return cached_rule(cache, mutex, nodes, make_gauss_hermite);
}

const QuadratureRule& split_normal_rule(int nodes) {
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  static std::mutex mutex;
  return cached_rule(cache, mutex, nodes, make_split_normal);
}

double normal_expectation(const std::function<double(double)>& h, double variance, bool kink_at_zero,
                          const QuadratureOptions& options) {
  require(variance >= 0.0, "normal_expectation: negative variance");
  const double sigma = std::sqrt(variance);
  auto rule = [&](int n) -> const QuadratureRule& {
    return kink_at_zero ? split_normal_rule(n) : gauss_hermite_rule(n);
  };
  const double coarse = apply_1d(rule(options.nodes), h, sigma);
  const double fine = apply_1d(rule(2 * options.nodes), h, sigma);
  check_convergence(coarse, fine, options.tolerance, "normal_expectation");
  return fine;
}

double bivariate_normal_expectation(const std::function<double(double, double)>& h,
                                    const Eigen::Matrix2d& cov, const Eigen::Vector2d& kink_normal,
                                    const QuadratureOptions& options) {
  // Square root of the covariance through its eigendecomposition so that
  // singular laws (e.g. g1 = g2) are handled.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const Eigen::Vector2d lambda = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::Matrix2d root = eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal();

  Eigen::Vector2d e1(1.0, 0.0), e2(0.0, 1.0);
  bool kinked = false;
  const Eigen::Vector2d normal = root.transpose() * kink_normal;
  if (normal.norm() > 1e-12 * std::max(1.0, kink_normal.norm() * std::sqrt(cov.trace()))) {
    e1 = normal.normalized();
    e2 = Eigen::Vector2d(-e1(1), e1(0));
    kinked = true;
  }

  auto evaluate = [&](int n) {
    const QuadratureRule& across = kinked ? split_normal_rule(n) : gauss_hermite_rule(n);
    const QuadratureRule& along = gauss_hermite_rule(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < across.nodes.size(); ++i)
      for (std::size_t j = 0; j < along.nodes.size(); ++j) {
        const Eigen::Vector2d z = across.nodes[i] * e1 + along.nodes[j] * e2;
        const Eigen::Vector2d x = root * z;
        sum += across.weights[i] * along.weights[j] * h(x(0), x(1));
      }
    return sum;
  };
  const int n = std::min(options.nodes, 200);
  const double coarse = evaluate(n / 2);
  const double fine = evaluate(n);
  check_convergence(coarse, fine, options.tolerance, "bivariate_normal_expectation");
  return fine;
}

}  // namespace nls
