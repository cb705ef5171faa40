#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "isihd/problems.hpp"
#include "isihd/schedules.hpp"

namespace isihd {

// Coefficient functions (a, b, c, d) with derivatives and a validity
// threshold t_hat, feeding the Lyapunov energy and the system verifier.
struct CoefficientQuadruple {
  enum class Provenance { cor1, corabcdd, custom };

  Provenance provenance = Provenance::custom;
  std::function<double(double)> a, da, b, db, c, dc, d, dd;
  double t_hat = 0.0;

  // constructor parameters kept for reporting
  double p_alpha = 0.0, p_gamma0 = 0.0, p_beta1 = 0.0, p_b = 0.0, p_beta = 0.0;
};

// gamma = alpha/t, beta = gamma0 + beta1/t, alpha > 3, b in (2, alpha-1):
//   a(t) = t^2 (1 + N/D), N = (alpha-b) gamma0 t + beta1 (alpha+1-b),
//                         D = t^2 - alpha gamma0 t - beta1 (alpha+1),
//   c(t) = t, d = b (alpha-1-b).
// t_hat is set past the largest root of D and past the onset of the first
// system inequality (found by scanning).
CoefficientQuadruple quadruple_cor1(double alpha, double gamma0, double beta1, double b);

// Decreasing, vanishing gamma with constant beta:
//   a = Gamma (Gamma - beta b) / (1 - beta gamma), c = Gamma, d = b (1-b),
// using Gamma' = gamma Gamma - 1 analytically. Requires the damping-decay
// hypothesis (gamma*Gamma <= m < 3/2) and b in (2(m-1), 1).
CoefficientQuadruple quadruple_corabcdd(const DampingSchedule& gamma, double beta_const,
                                        double b);

// Custom quadruple with numeric derivatives (central differences, step 1e-5*t).
CoefficientQuadruple quadruple_custom(std::function<double(double)> a,
                                      std::function<double(double)> b,
                                      std::function<double(double)> c,
                                      std::function<double(double)> d, double t_hat);

struct ConditionVerdict {
  bool pass = false;
  double worst_margin = 0.0;  // most positive violation (inequalities) or
                              // largest scaled residual (equalities)
  double binding_t = 0.0;
  std::vector<std::pair<double, double>> margins;  // (t, margin) per grid point
};

struct SystemReport {
  std::array<ConditionVerdict, 6> conditions;
  bool all_pass = false;
  // smallest grid time from which all six conditions hold through the grid
  // end; NaN when no such point exists
  double t_hat_found = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> grid;

  std::string to_json() const;
};

// Evaluates the six system relations at every grid point. Equalities are
// accepted when |residual| <= 1e-8 * (1 + scale), scale = max term magnitude.
SystemReport verify_system(const CoefficientQuadruple& q, const DampingSchedule& gamma,
                           const GeometricSchedule& beta, const std::vector<double>& grid);

// E(t,x,v) = a (f(x+beta v) - min f) + 1/2 ||b (x-x*) + c v||^2 + d/2 ||x-x*||^2
double energy_general(const CoefficientQuadruple& q, const GeometricSchedule& beta,
                      double t, const Vector& x, const Vector& v, const Objective& obj,
                      const Vector& x_star);

// Strongly convex energy: f(x+beta v) - min f + 1/2 ||sqrt(mu)(x-x*) + v||^2
double energy_strongly_convex(double mu, double beta_const, double t, const Vector& x,
                              const Vector& v, const Objective& obj);

// Theta(t) = max{ exp(-(sqrt(mu)/4)(t-t0)), sigma_inf((t+t0)/2)^2 }
double theta_envelope(double mu, const DiffusionSchedule& sigma, double t0, double t);

}  // namespace isihd
