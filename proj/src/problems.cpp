#include "isihd/problems.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace isihd {

Objective make_quadratic(const std::vector<double>& spectrum, const Vector& x_star,
                         double f_star) {
  const int d = static_cast<int>(spectrum.size());
  if (d == 0) throw std::invalid_argument("make_quadratic: empty spectrum");
  if (x_star.size() != d)
    throw std::invalid_argument("make_quadratic: spectrum/x_star size mismatch");
  double lmax = 0.0, lmin = std::numeric_limits<double>::infinity();
  for (double lam : spectrum) {
    if (lam < 0.0) throw std::invalid_argument("make_quadratic: negative eigenvalue");
    lmax = std::max(lmax, lam);
    lmin = std::min(lmin, lam);
  }
  if (lmax == 0.0) throw std::invalid_argument("make_quadratic: all-zero spectrum");

  auto lam = std::make_shared<Vector>(Eigen::Map<const Vector>(spectrum.data(), d));
  auto xs = std::make_shared<Vector>(x_star);

  Objective obj;
  obj.dim = d;
  obj.lipschitz_L = lmax;
  obj.strong_mu = lmin;
  obj.min_value = f_star;
  obj.name = "quadratic";
  obj.value = [lam, xs, f_star](const Vector& x) {
    const Vector e = x - *xs;
    return 0.5 * e.cwiseProduct(e).dot(*lam) + f_star;
  };
  obj.gradient = [lam, xs](const Vector& x) -> Vector {
    return lam->cwiseProduct(x - *xs);
  };
  obj.project_solution = [lam, xs](const Vector& x) -> Vector {
    Vector p = *xs;
    for (int i = 0; i < x.size(); ++i)
      if ((*lam)[i] == 0.0) p[i] = x[i];  // flat direction: argmin is free there
    return p;
  };
  return obj;
}

Objective make_scalar_quadratic(double curvature, double x_star, double f_star) {
  Vector xs(1);
  xs[0] = x_star;
  return make_quadratic({curvature}, xs, f_star);
}

Objective make_least_squares(const Matrix& M, const Vector& y) {
  if (M.rows() != y.size())
    throw std::invalid_argument("make_least_squares: M/y size mismatch");
  const int d = static_cast<int>(M.cols());

  auto cod = std::make_shared<Eigen::CompleteOrthogonalDecomposition<Matrix>>(M);
  auto pinv = std::make_shared<Matrix>(cod->pseudoInverse());
  const Vector x_ls = (*pinv) * y;
  const double resid = (M * x_ls - y).norm();
  if (resid > 1e-10 * (1.0 + y.norm()))
    throw std::invalid_argument(
        "make_least_squares: y is not in range(M); the minimum value would be unknown");

  Eigen::SelfAdjointEigenSolver<Matrix> es(M.transpose() * M);
  const Vector evs = es.eigenvalues();
  const double lmax = evs.maxCoeff();
  const int rank = static_cast<int>(cod->rank());

  auto Mp = std::make_shared<Matrix>(M);
  auto yp = std::make_shared<Vector>(y);

  Objective obj;
  obj.dim = d;
  obj.lipschitz_L = lmax;
  obj.strong_mu = rank < d ? 0.0 : std::max(0.0, evs.minCoeff());
  obj.min_value = 0.0;
  obj.name = "least_squares";
  obj.value = [Mp, yp](const Vector& x) { return 0.5 * ((*Mp) * x - *yp).squaredNorm(); };
  obj.gradient = [Mp, yp](const Vector& x) -> Vector {
    return Mp->transpose() * ((*Mp) * x - *yp);
  };
  // Euclidean projection onto {x : Mx = y}: subtract the row-space component
  // of the residual equation, x - pinv(M) (Mx - y).
  obj.project_solution = [Mp, yp, pinv](const Vector& x) -> Vector {
    return x - (*pinv) * ((*Mp) * x - *yp);
  };
  return obj;
}

Objective make_smoothed_logsumexp(const Matrix& A, const Vector& x_star, double rho) {
  if (rho <= 0.0) throw std::invalid_argument("make_smoothed_logsumexp: rho must be > 0");
  const int d = static_cast<int>(A.cols());
  const int m = static_cast<int>(A.rows());
  if (x_star.size() != d)
    throw std::invalid_argument("make_smoothed_logsumexp: A/x_star size mismatch");
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A);
  if (static_cast<int>(cod.rank()) < d)
    throw std::invalid_argument(
        "make_smoothed_logsumexp: rows of A must span the space (unique minimizer)");

  auto Ap = std::make_shared<Matrix>(A);
  auto xs = std::make_shared<Vector>(x_star);
  double row_sq_max = 0.0;
  for (int i = 0; i < m; ++i) row_sq_max = std::max(row_sq_max, A.row(i).squaredNorm());

  Objective obj;
  obj.dim = d;
  obj.lipschitz_L = row_sq_max / rho;  // Hessian is a softmax average of a_i a_i'
  obj.strong_mu = 0.0;
  obj.min_value = rho * std::log(2.0 * m);  // symmetric pieces cancel at x_star
  obj.name = "smoothed_logsumexp";

  // stabilized evaluation around the running max exponent
  auto logsum = [Ap, xs, rho](const Vector& x, Vector* softmax_diff) -> double {
    const Vector z = (*Ap) * (x - *xs) / rho;
    double zmax = 0.0;
    for (int i = 0; i < z.size(); ++i) zmax = std::max(zmax, std::abs(z[i]));
    double s = 0.0;
    Vector wp(z.size()), wm(z.size());
    for (int i = 0; i < z.size(); ++i) {
      wp[i] = std::exp(z[i] - zmax);
      wm[i] = std::exp(-z[i] - zmax);
      s += wp[i] + wm[i];
    }
    if (softmax_diff) *softmax_diff = (wp - wm) / s;
    return rho * (std::log(s) + zmax);
  };
  obj.value = [logsum](const Vector& x) { return logsum(x, nullptr); };
  obj.gradient = [Ap, logsum](const Vector& x) -> Vector {
    Vector w;
    logsum(x, &w);
    return Ap->transpose() * w;
  };
  obj.project_solution = [xs](const Vector&) -> Vector { return *xs; };
  return obj;
}

double distance_to_solution_set(const Objective& obj, const Vector& x) {
  return (x - obj.project_solution(x)).norm();
}

}  // namespace isihd
