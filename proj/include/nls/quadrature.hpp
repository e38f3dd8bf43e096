#pragma once

// Quadrature against centered Gaussian laws in one and two dimensions.
//
// Smooth integrands use Gauss-Hermite rules. Integrands with a kink (ReLU at
// 0, max along x1 = x2) lose the spectral convergence of Gauss-Hermite, so
// the coordinate normal to the kink is integrated with composite
// Gauss-Legendre panels on [-L, 0] and [0, L] against the normal density.

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace nls {

// Nodes/weights with sum_i w_i h(x_i) ~= E[h(Z)], Z ~ N(0, 1).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Cached and immutable after construction; safe to share across threads.
const QuadratureRule& gauss_hermite_rule(int nodes);
// Split rule: `nodes` Gauss-Legendre points on each of [-L, 0] and [0, L]
// (panels of 20), weighted by the standard normal density.
const QuadratureRule& split_normal_rule(int nodes);

struct QuadratureOptions {
  int nodes = 200;
  double tolerance = 1e-8;  // node-doubling change allowed before failing
};

// E[h(g)], g ~ N(0, variance). `kink_at_zero` selects the split rule.
double normal_expectation(const std::function<double(double)>& h, double variance, bool kink_at_zero,
                          const QuadratureOptions& options = {});

// E[h(g1, g2)] for a centered bivariate normal with covariance `cov`.
// `kink_normal`, if nonzero, is a direction a such that h is smooth on both
// sides of the line a . x = 0.
double bivariate_normal_expectation(const std::function<double(double, double)>& h,
                                    const Eigen::Matrix2d& cov, const Eigen::Vector2d& kink_normal,
                                    const QuadratureOptions& options = {});

}  // namespace nls
