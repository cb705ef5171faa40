#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace isihd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A smooth convex test problem with exact oracles: value, gradient, the
// smoothness/strong-convexity constants, the exact minimum, and the Euclidean
// projection onto the solution set (so trajectory diagnostics carry no
// estimation error).
struct Objective {
  int dim = 0;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  double lipschitz_L = 0.0;
  double strong_mu = 0.0;
  double min_value = 0.0;
  std::function<Vector(const Vector&)> project_solution;
  std::string name;
};

// Quadratic 0.5 (x - x_star)' A (x - x_star) + f_star with A = diag(spectrum).
// L = max spectrum, mu = min spectrum; projection handles zero eigenvalues
// (those coordinates are free).
Objective make_quadratic(const std::vector<double>& spectrum, const Vector& x_star,
                         double f_star);

// 1-D convenience wrapper for hand-checkable tests.
Objective make_scalar_quadratic(double curvature, double x_star, double f_star);

// Least squares 0.5 ||M x - y||^2 with y required to lie in range(M)
// (residual <= 1e-10), so min_value = 0 exactly. Rank deficiency gives a
// nontrivial affine solution set; the projection uses the pseudoinverse.
Objective make_least_squares(const Matrix& M, const Vector& y);

// Smoothed symmetric log-sum-exp:
//   f(x) = rho * log( sum_i exp(+a_i.(x - x_star)/rho) + exp(-a_i.(x - x_star)/rho) )
// Non-quadratic, convex, mu = 0, with known unique minimizer x_star when the
// rows of A span R^dim (required at construction).
Objective make_smoothed_logsumexp(const Matrix& A, const Vector& x_star, double rho);

// || x - project_solution(x) ||
double distance_to_solution_set(const Objective& obj, const Vector& x);

}  // namespace isihd
