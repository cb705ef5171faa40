#include "isihd/schedules.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace isihd {

namespace {

constexpr double kTiny = 1e-300;

// ---------------------------------------------------------------------------
// Monotone cubic interpolation (Fritsch-Carlson tangents)
// ---------------------------------------------------------------------------

std::vector<double> fritsch_carlson_tangents(const std::vector<double>& t,
                                             const std::vector<double>& v) {
  const size_t n = t.size();
  std::vector<double> delta(n - 1), m(n);
  for (size_t i = 0; i + 1 < n; ++i) delta[i] = (v[i + 1] - v[i]) / (t[i + 1] - t[i]);
  m[0] = delta[0];
  m[n - 1] = delta[n - 2];
  for (size_t i = 1; i + 1 < n; ++i) m[i] = 0.5 * (delta[i - 1] + delta[i]);
  for (size_t i = 0; i + 1 < n; ++i) {
    if (delta[i] == 0.0) {
      m[i] = 0.0;
      m[i + 1] = 0.0;
      continue;
    }
    const double a = m[i] / delta[i];
    const double b = m[i + 1] / delta[i];
    // clip tangents so the interpolant cannot overshoot (keeps monotone data
    // monotone, which the hypothesis checks rely on)
    const double s = a * a + b * b;
    if (s > 9.0) {
      const double tau = 3.0 / std::sqrt(s);
      m[i] = tau * a * delta[i];
      m[i + 1] = tau * b * delta[i];
    }
  }
  return m;
}

size_t table_interval(const std::vector<double>& knots, double t) {
  // largest i with knots[i] <= t, clamped to a valid interval index
  auto it = std::upper_bound(knots.begin(), knots.end(), t);
  size_t i = static_cast<size_t>(it - knots.begin());
  if (i > 0) --i;
  if (i + 1 >= knots.size()) i = knots.size() - 2;
  return i;
}

double hermite_value(const std::vector<double>& kt, const std::vector<double>& kv,
                     const std::vector<double>& km, double t) {
  const size_t i = table_interval(kt, t);
  const double h = kt[i + 1] - kt[i];
  const double s = (t - kt[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * kv[i] + h * h10 * km[i] + h01 * kv[i + 1] + h * h11 * km[i + 1];
}

double hermite_derivative(const std::vector<double>& kt, const std::vector<double>& kv,
                          const std::vector<double>& km, double t) {
  const size_t i = table_interval(kt, t);
  const double h = kt[i + 1] - kt[i];
  const double s = (t - kt[i]) / h;
  const double s2 = s * s;
  const double dh00 = (6 * s2 - 6 * s) / h;
  const double dh10 = 3 * s2 - 4 * s + 1;
  const double dh01 = (-6 * s2 + 6 * s) / h;
  const double dh11 = 3 * s2 - 2 * s;
  return dh00 * kv[i] + dh10 * km[i] + dh01 * kv[i + 1] + dh11 * km[i + 1];
}

// Table gamma extended past the last knot by its final value; used only for
// tail integrals, where some continuation is needed for the improper part.
double table_gamma_extended(const DampingSchedule& g, double s) {
  if (s >= g.knot_t.back()) return g.knot_v.back();
  if (s <= g.knot_t.front()) return g.knot_v.front();
  return hermite_value(g.knot_t, g.knot_v, g.knot_m, s);
}

}  // namespace

// ---------------------------------------------------------------------------
// DampingSchedule
// ---------------------------------------------------------------------------

DampingSchedule DampingSchedule::power_kind(double alpha, double r, double t0) {
  if (alpha <= 0.0) throw std::invalid_argument("power damping: alpha must be > 0");
  if (r < 0.0 || r > 1.0) throw std::invalid_argument("power damping: r must lie in [0, 1]");
  if (r > 0.0 && t0 <= 0.0)
    throw std::invalid_argument("power damping: t0 must be > 0 when r > 0");
  DampingSchedule s;
  s.kind = Kind::power;
  s.alpha = alpha;
  s.r = r;
  s.t0 = t0;
  return s;
}

DampingSchedule DampingSchedule::constant_kind(double gamma_bar, double t0) {
  if (gamma_bar < 0.0) throw std::invalid_argument("constant damping must be >= 0");
  DampingSchedule s;
  s.kind = Kind::constant;
  s.gamma_bar = gamma_bar;
  s.t0 = t0;
  return s;
}

DampingSchedule DampingSchedule::table_kind(std::vector<std::pair<double, double>> knots) {
  if (knots.size() < 2) throw std::invalid_argument("damping table needs >= 2 knots");
  DampingSchedule s;
  s.kind = Kind::table;
  for (size_t i = 0; i < knots.size(); ++i) {
    if (i > 0 && knots[i].first <= knots[i - 1].first)
      throw std::invalid_argument("damping table knots must be strictly increasing");
    if (knots[i].second < 0.0)
      throw std::invalid_argument("damping table values must be >= 0");
    s.knot_t.push_back(knots[i].first);
    s.knot_v.push_back(knots[i].second);
  }
  s.knot_m = fritsch_carlson_tangents(s.knot_t, s.knot_v);
  s.t0 = s.knot_t.front();
  return s;
}

double DampingSchedule::value(double t) const {
  if (t < t0) throw std::domain_error("damping schedule evaluated before t0");
  switch (kind) {
    case Kind::power:
      return r == 0.0 ? alpha : alpha * std::pow(t, -r);
    case Kind::constant:
      return gamma_bar;
    case Kind::table:
      if (t > knot_t.back()) throw std::domain_error("damping table evaluated past last knot");
      return hermite_value(knot_t, knot_v, knot_m, t);
  }
  return 0.0;
}

double DampingSchedule::derivative(double t) const {
  if (t < t0) throw std::domain_error("damping schedule evaluated before t0");
  switch (kind) {
    case Kind::power:
      return r == 0.0 ? 0.0 : -r * alpha * std::pow(t, -r - 1.0);
    case Kind::constant:
      return 0.0;
    case Kind::table:
      if (t > knot_t.back()) throw std::domain_error("damping table evaluated past last knot");
      return hermite_derivative(knot_t, knot_v, knot_m, t);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// GeometricSchedule
// ---------------------------------------------------------------------------

GeometricSchedule GeometricSchedule::zero_kind(double t0) {
  GeometricSchedule s;
  s.kind = Kind::zero;
  s.t0 = t0;
  return s;
}

GeometricSchedule GeometricSchedule::constant_kind(double beta_bar, double t0) {
  if (beta_bar < 0.0) throw std::invalid_argument("constant beta must be >= 0");
  GeometricSchedule s;
  s.kind = Kind::constant;
  s.beta_bar = beta_bar;
  s.t0 = t0;
  return s;
}

GeometricSchedule GeometricSchedule::affine_inverse_kind(double gamma0, double beta1,
                                                         double t0) {
  if (gamma0 <= 0.0) throw std::invalid_argument("affine_inverse beta: gamma0 must be > 0");
  if (beta1 < 0.0) throw std::invalid_argument("affine_inverse beta: beta1 must be >= 0");
  if (t0 <= 0.0) throw std::invalid_argument("affine_inverse beta: t0 must be > 0");
  GeometricSchedule s;
  s.kind = Kind::affine_inverse;
  s.gamma0 = gamma0;
  s.beta1 = beta1;
  s.t0 = t0;
  return s;
}

double GeometricSchedule::value(double t) const {
  if (t < t0) throw std::domain_error("geometric schedule evaluated before t0");
  switch (kind) {
    case Kind::zero:
      return 0.0;
    case Kind::constant:
      return beta_bar;
    case Kind::affine_inverse:
      return gamma0 + beta1 / t;
  }
  return 0.0;
}

double GeometricSchedule::derivative(double t) const {
  if (t < t0) throw std::domain_error("geometric schedule evaluated before t0");
  switch (kind) {
    case Kind::zero:
    case Kind::constant:
      return 0.0;
    case Kind::affine_inverse:
      return -beta1 / (t * t);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// DiffusionSchedule
// ---------------------------------------------------------------------------

DiffusionSchedule DiffusionSchedule::zero_kind(double t0) {
  DiffusionSchedule s;
  s.kind = Kind::zero;
  s.t0 = t0;
  return s;
}

DiffusionSchedule DiffusionSchedule::constant_kind(double sigma0, double t0) {
  if (sigma0 < 0.0) throw std::invalid_argument("constant sigma must be >= 0");
  DiffusionSchedule s;
  s.kind = Kind::constant;
  s.sigma0 = sigma0;
  s.t0 = t0;
  return s;
}

DiffusionSchedule DiffusionSchedule::power_kind(double sigma0, double q, double t0) {
  if (sigma0 < 0.0) throw std::invalid_argument("power sigma: sigma0 must be >= 0");
  if (q < 0.0) throw std::invalid_argument("power sigma: q must be >= 0 (nonincreasing)");
  if (t0 <= 0.0) throw std::invalid_argument("power sigma: t0 must be > 0");
  DiffusionSchedule s;
  s.kind = Kind::power;
  s.sigma0 = sigma0;
  s.q = q;
  s.t0 = t0;
  return s;
}

DiffusionSchedule DiffusionSchedule::exponential_kind(double sigma0, double c, double t0) {
  if (sigma0 < 0.0) throw std::invalid_argument("exponential sigma: sigma0 must be >= 0");
  if (c <= 0.0) throw std::invalid_argument("exponential sigma: c must be > 0");
  DiffusionSchedule s;
  s.kind = Kind::exponential;
  s.sigma0 = sigma0;
  s.c = c;
  s.t0 = t0;
  return s;
}

double DiffusionSchedule::value(double t) const {
  if (t < t0) throw std::domain_error("diffusion schedule evaluated before t0");
  switch (kind) {
    case Kind::zero:
      return 0.0;
    case Kind::constant:
      return sigma0;
    case Kind::power:
      return sigma0 * std::pow(t, -q);
    case Kind::exponential:
      return sigma0 * std::exp(-c * t);
  }
  return 0.0;
}

double DiffusionSchedule::derivative(double t) const {
  if (t < t0) throw std::domain_error("diffusion schedule evaluated before t0");
  switch (kind) {
    case Kind::zero:
    case Kind::constant:
      return 0.0;
    case Kind::power:
      return -q * sigma0 * std::pow(t, -q - 1.0);
    case Kind::exponential:
      return -c * sigma0 * std::exp(-c * t);
  }
  return 0.0;
}

std::pair<double, double> eval_schedule(const DampingSchedule& s, double t) {
  return {s.value(t), s.derivative(t)};
}
std::pair<double, double> eval_schedule(const GeometricSchedule& s, double t) {
  return {s.value(t), s.derivative(t)};
}
std::pair<double, double> eval_schedule(const DiffusionSchedule& s, double t) {
  return {s.value(t), s.derivative(t)};
}

// ---------------------------------------------------------------------------
// Adaptive quadrature
// ---------------------------------------------------------------------------

namespace {

struct QuadState {
  const std::function<double(double)>* f;
  double eps;       // absolute tolerance budget for the whole interval
  long evals = 0;
  long max_evals = 4'000'000;
  double worst_local = 0.0;  // largest unresolved local error (for reporting)
};

double simpson_rec(QuadState& st, double a, double b, double fa, double fm, double fb,
                   double whole, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = (*st.f)(lm), frm = (*st.f)(rm);
  st.evals += 2;
  const double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || st.evals > st.max_evals) {
    st.worst_local = std::max(st.worst_local, std::abs(delta));
    return left + right + delta / 15.0;
  }
  if (std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
  return simpson_rec(st, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
         simpson_rec(st, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

}  // namespace

double adaptive_quad(const std::function<double(double)>& f, double a, double b,
                     double rel_tol) {
  if (a == b) return 0.0;
  QuadState st;
  st.f = &f;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  st.evals = 3;
  const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
  // two-pass tolerance: coarse estimate fixes the absolute budget
  double eps = rel_tol * std::max(std::abs(whole), kTiny);
  st.eps = eps;
  double result = simpson_rec(st, a, b, fa, fm, fb, whole, eps, 48);
  // refresh the budget if the coarse estimate was badly off
  if (std::abs(result) > 10.0 * std::abs(whole) && std::abs(result) > 0.0) {
    QuadState st2;
    st2.f = &f;
    st2.evals = 3;
    eps = rel_tol * std::abs(result);
    result = simpson_rec(st2, a, b, fa, fm, fb, whole, eps, 48);
    st = st2;
  }
  if (st.evals > st.max_evals || st.worst_local > 15.0 * eps) {
    const double achieved = st.worst_local / std::max(std::abs(result), kTiny);
    throw quadrature_error("adaptive quadrature did not converge", achieved);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Incomplete gamma
// ---------------------------------------------------------------------------

namespace {

// Lentz continued fraction: Gamma_inc(a,x) = exp(-x + a*log x) * F(a,x),
// valid for x >= a + 1.
double upper_gamma_cf(double a, double x) {
  const double fpmin = std::numeric_limits<double>::min() / 1e-30;
  double b = x + 1.0 - a;
  double c = 1.0 / fpmin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 2000; ++i) {
    const double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < fpmin) d = fpmin;
    c = b + an / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) return h;
  }
  throw quadrature_error("incomplete gamma continued fraction did not converge", 1e-15);
}

// Series for the regularized lower part; valid (and fast) for x < a + 1.
double lower_gamma_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n <= 2000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16)
      return sum * std::exp(-x + a * std::log(x));
  }
  throw quadrature_error("incomplete gamma series did not converge", 1e-16);
}

}  // namespace

double log_upper_incomplete_gamma(double a, double x) {
  if (a <= 0.0 || x <= 0.0)
    throw std::invalid_argument("upper_incomplete_gamma requires a > 0, x > 0");
  if (x >= a + 1.0) return -x + a * std::log(x) + std::log(upper_gamma_cf(a, x));
  if (x <= 700.0) {
    const double v = std::tgamma(a) - lower_gamma_series(a, x);
    return std::log(v);
  }
  // x > 700 with x < a+1 means a is huge; the integral is dominated by the
  // complete gamma function there
  return std::lgamma(a);
}

double upper_incomplete_gamma(double a, double x) {
  if (a <= 0.0 || x <= 0.0)
    throw std::invalid_argument("upper_incomplete_gamma requires a > 0, x > 0");
  double result;
  if (x > 700.0) {
    result = std::exp(log_upper_incomplete_gamma(a, x));  // may underflow to 0
  } else if (x >= a + 1.0) {
    result = std::exp(-x + a * std::log(x)) * upper_gamma_cf(a, x);
  } else {
    result = std::tgamma(a) - lower_gamma_series(a, x);
  }
#ifndef NDEBUG
  // scaled bounds: x^(1-a) e^x Gamma_inc(a,x) <= 1 for a <= 1, >= 1 for a >= 1
  const double log_s = x + (1.0 - a) * std::log(x) + log_upper_incomplete_gamma(a, x);
  if (a <= 1.0) assert(log_s <= 1e-9);
  if (a >= 1.0) assert(log_s >= -1e-9);
#endif
  return result;
}

// S(a,x) = e^x x^(1-a) Gamma_inc(a,x), overflow-safe for large x.
static double scaled_upper_gamma(double a, double x) {
  if (x >= a + 1.0) return x * upper_gamma_cf(a, x);
  return std::exp(x) * std::pow(x, 1.0 - a) * upper_incomplete_gamma(a, x);
}

// ---------------------------------------------------------------------------
// Derived quantities
// ---------------------------------------------------------------------------

namespace {

// log p with the table extended by its final value past the last knot (needed
// for improper tail integrals; the public value() stays strict).
double log_p_extended(const DampingSchedule& g, double t) {
  switch (g.kind) {
    case DampingSchedule::Kind::power:
      if (g.r == 1.0) return g.alpha * std::log(t / g.t0);
      if (g.r == 0.0) return g.alpha * (t - g.t0);
      return g.alpha / (1.0 - g.r) *
             (std::pow(t, 1.0 - g.r) - std::pow(g.t0, 1.0 - g.r));
    case DampingSchedule::Kind::constant:
      return g.gamma_bar * (t - g.t0);
    case DampingSchedule::Kind::table: {
      const double t_end = g.knot_t.back();
      const double t_in = std::min(t, t_end);
      double lp = adaptive_quad([&](double s) { return table_gamma_extended(g, s); },
                                g.t0, t_in, 1e-8);
      if (t > t_end) lp += g.knot_v.back() * (t - t_end);
      return lp;
    }
  }
  return 0.0;
}

double gamma_extended(const DampingSchedule& g, double t) {
  if (g.kind == DampingSchedule::Kind::table) return table_gamma_extended(g, t);
  return g.value(t);
}

}  // namespace

double compute_log_p(const DampingSchedule& gamma, double t) {
  if (t < gamma.t0) throw std::domain_error("compute_p: t < t0");
  return log_p_extended(gamma, t);
}

double compute_p(const DampingSchedule& gamma, double t) {
  return std::exp(compute_log_p(gamma, t));
}

double compute_Gamma_quadrature(const DampingSchedule& gamma, double t, double rel_tol) {
  if (t < gamma.t0) throw std::domain_error("compute_Gamma: t < t0");
  const double log_pt = log_p_extended(gamma, t);
  const auto integrand = [&](double s) {
    return std::exp(log_pt - log_p_extended(gamma, s));  // p(t)/p(s) <= 1 for s >= t
  };
  // grow the truncation horizon until the geometric tail estimate is
  // negligible: the tail beyond H is at most (p(t)/p(H)) / gamma(H)
  double H = std::max(2.0 * t, t + 1.0);
  double value = 0.0;
  double lo = t;
  for (int iter = 0; iter < 200; ++iter) {
    value += adaptive_quad(integrand, lo, H, rel_tol);
    const double g_end = gamma_extended(gamma, H);
    if (g_end <= 0.0)
      throw hypothesis_error("Gamma tail integral diverges: damping vanishes at horizon");
    const double tail = std::exp(log_pt - log_p_extended(gamma, H)) / g_end;
    if (tail < 1e-9 * std::max(value, kTiny)) return value;
    lo = H;
    H *= 2.0;
  }
  throw hypothesis_error("Gamma tail integral did not converge (hypothesis on gamma fails)");
}

double compute_Gamma(const DampingSchedule& gamma, double t) {
  if (t < gamma.t0) throw std::domain_error("compute_Gamma: t < t0");
  switch (gamma.kind) {
    case DampingSchedule::Kind::power: {
      if (gamma.r == 1.0) {
        if (gamma.alpha <= 1.0)
          throw hypothesis_error("Gamma undefined: gamma=alpha/t needs alpha > 1");
        return t / (gamma.alpha - 1.0);
      }
      if (gamma.r == 0.0) return 1.0 / gamma.alpha;
      // gamma = alpha/t^r, r in (0,1): incomplete-gamma closed form,
      // evaluated through the scaled function to avoid overflow of e^x
      const double a = 1.0 / (1.0 - gamma.r);
      const double c = gamma.alpha / (1.0 - gamma.r);
      const double x = c * std::pow(t, 1.0 - gamma.r);
      return std::pow(t, gamma.r) * scaled_upper_gamma(a, x) / gamma.alpha;
    }
    case DampingSchedule::Kind::constant:
      if (gamma.gamma_bar <= 0.0)
        throw hypothesis_error("Gamma undefined: constant damping must be > 0");
      return 1.0 / gamma.gamma_bar;
    case DampingSchedule::Kind::table:
      return compute_Gamma_quadrature(gamma, t);
  }
  return 0.0;
}

double compute_lambda_c(const DampingSchedule& gamma, double c, double t) {
  if (t < gamma.t0) throw std::domain_error("compute_lambda_c: t < t0");
  if (c <= 0.0) throw std::invalid_argument("compute_lambda_c: c must be > 0");
  if (gamma.kind == DampingSchedule::Kind::power && gamma.r == 1.0) {
    // p = (t/t0)^alpha; integral of p = t0/(alpha+1) ((t/t0)^(alpha+1) - 1)
    const double ratio = t / gamma.t0;
    const double int_p = gamma.t0 / (gamma.alpha + 1.0) *
                         (std::pow(ratio, gamma.alpha + 1.0) - 1.0);
    return std::pow(ratio, gamma.alpha) / (c + int_p);
  }
  // generic: 1 / (c/p(t) + integral of p(s)/p(t)); the integrand is <= 1
  const double log_pt = log_p_extended(gamma, t);
  double denom = c * std::exp(-log_pt);
  if (t > gamma.t0) {
    denom += adaptive_quad(
        [&](double s) { return std::exp(log_p_extended(gamma, s) - log_pt); },
        gamma.t0, t, 1e-9);
  }
  return 1.0 / denom;
}

double compute_theta(const DampingSchedule& gamma, double t) {
  if (t < gamma.t0) throw std::domain_error("compute_theta: t < t0");
  if (t == gamma.t0) return 0.0;
  switch (gamma.kind) {
    case DampingSchedule::Kind::power:
      if (gamma.r == 1.0) {
        if (gamma.alpha <= 1.0)
          throw hypothesis_error("theta undefined: gamma=alpha/t needs alpha > 1");
        return (t * t - gamma.t0 * gamma.t0) / (2.0 * (gamma.alpha - 1.0));
      }
      if (gamma.r == 0.0) return (t - gamma.t0) / gamma.alpha;
      return adaptive_quad([&](double s) { return compute_Gamma(gamma, s); },
                           gamma.t0, t, 1e-8);
    case DampingSchedule::Kind::constant:
      if (gamma.gamma_bar <= 0.0)
        throw hypothesis_error("theta undefined: constant damping must be > 0");
      return (t - gamma.t0) / gamma.gamma_bar;
    case DampingSchedule::Kind::table:
      return adaptive_quad([&](double s) { return compute_Gamma(gamma, s); },
                           gamma.t0, t, 1e-6);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// DerivedQuantity
// ---------------------------------------------------------------------------

double DerivedQuantity::operator()(double t) const {
  const bool force_quad = evaluation == Evaluation::quadrature;
  switch (quantity) {
    case Quantity::p:
      return compute_p(source, t);
    case Quantity::Gamma:
      return force_quad ? compute_Gamma_quadrature(source, t) : compute_Gamma(source, t);
    case Quantity::lambda_c:
      return compute_lambda_c(source, c, t);
    case Quantity::theta:
      if (force_quad)
        return adaptive_quad(
            [&](double s) { return compute_Gamma_quadrature(source, s); }, source.t0, t,
            1e-7);
      return compute_theta(source, t);
    case Quantity::power:
      return std::pow(t, exponent);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Hypothesis checks
// ---------------------------------------------------------------------------

bool HypothesisReport::all_pass() const {
  const auto ok = [](const HypothesisVerdict& v) { return v.pass || v.skipped; };
  return ok(h_gamma) && ok(h_beta) && ok(h_gamma_prime) && ok(noise);
}

std::vector<double> log_grid(double a, double b, int n) {
  if (n < 2 || a <= 0.0 || b <= a) throw std::invalid_argument("log_grid: bad range");
  std::vector<double> g(n);
  const double la = std::log(a), lb = std::log(b);
  for (int i = 0; i < n; ++i)
    g[i] = std::exp(la + (lb - la) * static_cast<double>(i) / (n - 1));
  g.front() = a;
  g.back() = b;
  return g;
}

HypothesisReport check_hypotheses(const DampingSchedule& gamma,
                                  const GeometricSchedule& beta,
                                  const DiffusionSchedule& sigma,
                                  const std::vector<double>& grid,
                                  const std::function<double(double)>& m_weight) {
  if (grid.size() < 100)
    throw std::invalid_argument("check_hypotheses: grid needs >= 100 points");
  HypothesisReport rep;

  // (integrable damping) tail integral of 1/p must be finite
  rep.h_gamma.name = "H_gamma";
  try {
    const double G = compute_Gamma(gamma, grid.front());
    rep.h_gamma.pass = std::isfinite(G) && G > 0.0;
    rep.h_gamma.detail = "Gamma(t_first) = " + std::to_string(G);
  } catch (const hypothesis_error& e) {
    rep.h_gamma.pass = false;
    rep.h_gamma.detail = e.what();
  }

  // (bounded geometric damping) beta <= c1 and |(beta' - gamma*beta + 1)/beta| <= c2
  rep.h_beta.name = "H_beta";
  if (beta.is_zero()) {
    rep.h_beta.skipped = true;
    rep.h_beta.detail = "beta == 0: routed to the beta-free integrator, check not applicable";
  } else {
    double c1 = 0.0, c2 = 0.0;
    bool finite = true;
    double bad_t = 0.0;
    for (double t : grid) {
      const double b = beta.value(t);
      const double db = beta.derivative(t);
      const double g = gamma.value(t);
      c1 = std::max(c1, b);
      const double ratio = b > 0.0 ? std::abs((db - g * b + 1.0) / b)
                                   : std::numeric_limits<double>::infinity();
      if (!std::isfinite(ratio)) {
        finite = false;
        bad_t = t;
        break;
      }
      c2 = std::max(c2, ratio);
    }
    rep.c1 = c1;
    rep.c2 = c2;
    rep.h_beta.pass = finite;
    rep.h_beta.binding_t = bad_t;
    rep.h_beta.detail = "c1 = " + std::to_string(c1) + ", c2 = " + std::to_string(c2);
  }

  // (tame damping decay) gamma*Gamma <= m < 3/2 from some grid point t2 on
  rep.h_gamma_prime.name = "H_gamma_prime";
  {
    std::vector<double> gg(grid.size());
    bool ok_eval = true;
    try {
      for (size_t i = 0; i < grid.size(); ++i)
        gg[i] = gamma.value(grid[i]) * compute_Gamma(gamma, grid[i]);
    } catch (const hypothesis_error& e) {
      ok_eval = false;
      rep.h_gamma_prime.pass = false;
      rep.h_gamma_prime.detail = e.what();
    }
    if (ok_eval) {
      // suffix maxima: find the first index whose suffix stays below 3/2
      std::vector<double> suffix(grid.size());
      double run = -std::numeric_limits<double>::infinity();
      for (size_t i = grid.size(); i-- > 0;) {
        run = std::max(run, gg[i]);
        suffix[i] = run;
      }
      size_t onset = grid.size();
      for (size_t i = 0; i < grid.size(); ++i)
        if (suffix[i] < 1.5) {
          onset = i;
          break;
        }
      if (onset < grid.size()) {
        rep.m = suffix[onset];
        rep.t2 = grid[onset];
        rep.h_gamma_prime.pass = true;
        rep.h_gamma_prime.detail =
            "m = " + std::to_string(rep.m) + " from t2 = " + std::to_string(rep.t2);
      } else {
        rep.h_gamma_prime.pass = false;
        rep.h_gamma_prime.binding_t = grid.back();
        rep.h_gamma_prime.detail =
            "gamma*Gamma = " + std::to_string(gg.back()) + " >= 3/2 at grid end";
      }
    }
  }

  // (noise integrability) integral of m_weight * sigma_inf^2 must be finite
  rep.noise.name = "noise_integrability";
  {
    std::vector<double> y(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
      const double s = sigma.value(grid[i]);
      y[i] = m_weight(grid[i]) * s * s;
    }
    double integral = 0.0;
    for (size_t i = 0; i + 1 < grid.size(); ++i)
      integral += 0.5 * (y[i] + y[i + 1]) * (grid[i + 1] - grid[i]);
    rep.noise_integral = integral;
    const double yn = y.back(), ym = y[y.size() - 2];
    if (yn <= 0.0) {
      rep.noise.pass = true;
      rep.noise_tail_bound = 0.0;
    } else if (ym <= 0.0) {
      rep.noise.pass = false;
      rep.noise.binding_t = grid.back();
      rep.noise.detail = "integrand not decaying at grid end";
    } else {
      // extrapolate the tail with the local power-law exponent
      const double w = std::log(yn / ym) / std::log(grid.back() / grid[grid.size() - 2]);
      if (w < -1.0 - 1e-9) {
        rep.noise_tail_bound = yn * grid.back() / (-1.0 - w);
        rep.noise.pass = true;
        rep.noise.detail = "tail exponent " + std::to_string(w);
      } else {
        rep.noise.pass = false;
        rep.noise.binding_t = grid.back();
        rep.noise.detail =
            "tail exponent " + std::to_string(w) + " >= -1: integral diverges";
      }
    }
  }
  return rep;
}

}  // namespace isihd
