#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace isihd {

// Raised when a mathematical hypothesis required by an operation does not
// hold (e.g. a divergent tail integral). Deliberately distinct from
// std::invalid_argument: the input is well-formed, the math says no.
class hypothesis_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when adaptive quadrature cannot reach the requested tolerance;
// carries the tolerance that was actually achieved.
class quadrature_error : public std::runtime_error {
 public:
  quadrature_error(const std::string& what, double achieved_tol)
      : std::runtime_error(what), achieved_tol(achieved_tol) {}
  double achieved_tol;
};

// ---------------------------------------------------------------------------
// Schedule families
// ---------------------------------------------------------------------------

// Viscous damping gamma(t).
struct DampingSchedule {
  enum class Kind { power, constant, table };

  Kind kind = Kind::constant;
  double alpha = 0.0;      // power: gamma(t) = alpha * t^(-r)
  double r = 0.0;          // power exponent, r in [0, 1]
  double gamma_bar = 0.0;  // constant value
  double t0 = 1.0;         // left endpoint of the time domain

  // table kind: strictly increasing knots, monotone-cubic interpolation
  std::vector<double> knot_t, knot_v, knot_m;  // m = Hermite tangents

  static DampingSchedule power_kind(double alpha, double r, double t0 = 1.0);
  static DampingSchedule constant_kind(double gamma_bar, double t0 = 1.0);
  static DampingSchedule table_kind(std::vector<std::pair<double, double>> knots);

  double value(double t) const;
  double derivative(double t) const;
};

// Geometric (Hessian-driven) damping beta(t).
struct GeometricSchedule {
  enum class Kind { zero, constant, affine_inverse };

  Kind kind = Kind::zero;
  double beta_bar = 0.0;  // constant value
  double gamma0 = 0.0;    // affine_inverse: beta(t) = gamma0 + beta1/t
  double beta1 = 0.0;
  double t0 = 1.0;

  static GeometricSchedule zero_kind(double t0 = 1.0);
  static GeometricSchedule constant_kind(double beta_bar, double t0 = 1.0);
  static GeometricSchedule affine_inverse_kind(double gamma0, double beta1,
                                               double t0 = 1.0);

  bool is_zero() const { return kind == Kind::zero; }
  double value(double t) const;
  double derivative(double t) const;
};

// Diffusion magnitude sigma_inf(t); all kinds are nonincreasing in t.
struct DiffusionSchedule {
  enum class Kind { zero, constant, power, exponential };

  Kind kind = Kind::zero;
  double sigma0 = 0.0;
  double q = 0.0;  // power: sigma0 * t^(-q)
  double c = 0.0;  // exponential: sigma0 * exp(-c*t)
  double t0 = 1.0;

  static DiffusionSchedule zero_kind(double t0 = 1.0);
  static DiffusionSchedule constant_kind(double sigma0, double t0 = 1.0);
  static DiffusionSchedule power_kind(double sigma0, double q, double t0 = 1.0);
  static DiffusionSchedule exponential_kind(double sigma0, double c,
                                            double t0 = 1.0);

  bool is_zero() const { return kind == Kind::zero; }
  double value(double t) const;
  double derivative(double t) const;
};

// Uniform evaluation entry point: (value, derivative) at time t.
std::pair<double, double> eval_schedule(const DampingSchedule& s, double t);
std::pair<double, double> eval_schedule(const GeometricSchedule& s, double t);
std::pair<double, double> eval_schedule(const DiffusionSchedule& s, double t);

// ---------------------------------------------------------------------------
// Adaptive quadrature (Simpson with Richardson acceptance test)
// ---------------------------------------------------------------------------

// Integrates f over [a, b] to relative tolerance rel_tol; throws
// quadrature_error with the achieved tolerance on non-convergence.
double adaptive_quad(const std::function<double(double)>& f, double a, double b,
                     double rel_tol = 1e-10);

// ---------------------------------------------------------------------------
// Derived quantities of the damping schedule
// ---------------------------------------------------------------------------

// log p(t), with p(t) = exp(integral of gamma over [t0, t]).
double compute_log_p(const DampingSchedule& gamma, double t);

// p(t); closed form for power/constant kinds, quadrature (rel tol 1e-8) for
// tables.
double compute_p(const DampingSchedule& gamma, double t);

// Gamma(t) = p(t) * integral_t^inf ds/p(s). Closed forms:
//   gamma = alpha/t        -> t/(alpha-1)            (needs alpha > 1)
//   gamma = const g        -> 1/g
//   gamma = alpha/t^r, r in (0,1) -> incomplete-gamma form (overflow-safe)
// Tables fall back to quadrature with a doubling truncation horizon.
double compute_Gamma(const DampingSchedule& gamma, double t);

// Quadrature-only evaluation of Gamma(t) (oracle for the closed forms).
double compute_Gamma_quadrature(const DampingSchedule& gamma, double t,
                                double rel_tol = 1e-9);

// lambda_c(t) = p(t) / (c + integral_{t0}^t p); closed form for power r=1.
double compute_lambda_c(const DampingSchedule& gamma, double c, double t);

// theta(t) = integral_{t0}^t Gamma(s) ds; analytic where Gamma is analytic.
double compute_theta(const DampingSchedule& gamma, double t);

// Upper incomplete gamma function, 1e-10 relative accuracy
// (continued fraction for x >= a+1, series otherwise).
double upper_incomplete_gamma(double a, double x);

// log of the above; use for x > 700 where the direct value underflows.
double log_upper_incomplete_gamma(double a, double x);

// ---------------------------------------------------------------------------
// DerivedQuantity: a named weight function of t, usable by the diagnostics
// ---------------------------------------------------------------------------

struct DerivedQuantity {
  enum class Quantity { p, Gamma, lambda_c, theta, power };
  enum class Evaluation { automatic, closed_form, quadrature };

  DampingSchedule source;
  Quantity quantity = Quantity::Gamma;
  Evaluation evaluation = Evaluation::automatic;
  double c = 0.0;         // lambda_c constant
  double exponent = 1.0;  // power: weight(t) = t^exponent

  double operator()(double t) const;
};

// ---------------------------------------------------------------------------
// Hypothesis checks
// ---------------------------------------------------------------------------

struct HypothesisVerdict {
  std::string name;
  bool pass = false;
  bool skipped = false;
  double binding_t = 0.0;  // grid point where the inequality breaks (on fail)
  std::string detail;
};

struct HypothesisReport {
  HypothesisVerdict h_gamma;        // tail integral of 1/p finite
  HypothesisVerdict h_beta;         // beta bounded, ratio bounded
  HypothesisVerdict h_gamma_prime;  // gamma*Gamma <= m < 3/2 from some t2
  HypothesisVerdict noise;          // integral of m_weight * sigma_inf^2 finite

  // witnessing constants
  double c1 = 0.0, c2 = 0.0;              // beta bounds
  double m = 0.0, t2 = 0.0;               // gamma*Gamma bound and onset
  double noise_integral = 0.0;            // grid value of the integral
  double noise_tail_bound = 0.0;          // extrapolated tail contribution

  bool all_pass() const;
};

// Grid-based certification of the standing hypotheses on the schedules.
// `grid` must cover [t0, T] with >= 100 log-spaced points; m_weight is the
// weight in the noise integrability condition.
HypothesisReport check_hypotheses(const DampingSchedule& gamma,
                                  const GeometricSchedule& beta,
                                  const DiffusionSchedule& sigma,
                                  const std::vector<double>& grid,
                                  const std::function<double(double)>& m_weight);

// Log-spaced grid helper (n points from a to b inclusive).
std::vector<double> log_grid(double a, double b, int n);

}  // namespace isihd
