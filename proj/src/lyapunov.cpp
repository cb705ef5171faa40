#include "isihd/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

namespace isihd {

namespace {

// inequality slack and equality tolerance, both scale-aware
double ineq_tol(double scale) { return 1e-9 * (1.0 + scale); }
double eq_tol(double scale) { return 1e-8 * (1.0 + scale); }

}  // namespace

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

CoefficientQuadruple quadruple_cor1(double alpha, double gamma0, double beta1, double b) {
  if (alpha <= 3.0) throw std::invalid_argument("quadruple_cor1: alpha must exceed 3");
  if (gamma0 <= 0.0) throw std::invalid_argument("quadruple_cor1: gamma0 must be > 0");
  if (beta1 < 0.0) throw std::invalid_argument("quadruple_cor1: beta1 must be >= 0");
  if (b <= 2.0 || b >= alpha - 1.0)
    throw std::invalid_argument("quadruple_cor1: b must lie in (2, alpha-1)");

  CoefficientQuadruple q;
  q.provenance = CoefficientQuadruple::Provenance::cor1;
  q.p_alpha = alpha;
  q.p_gamma0 = gamma0;
  q.p_beta1 = beta1;
  q.p_b = b;

  // a(t) = t^2 (D + N)/D with
  //   N = (alpha-b) gamma0 t + beta1 (alpha+1-b)   (sign chosen so that the
  //       third system relation holds exactly: a D / t^2 = t^2 - b t beta(t))
  //   D = t^2 - alpha gamma0 t - beta1 (alpha+1)
  const double n1 = (alpha - b) * gamma0;
  const double n0 = beta1 * (alpha + 1.0 - b);
  const double d1 = -alpha * gamma0;
  const double d0 = -beta1 * (alpha + 1.0);
  q.a = [n1, n0, d1, d0](double t) {
    const double N = n1 * t + n0;
    const double D = t * t + d1 * t + d0;
    return t * t * (1.0 + N / D);
  };
  q.da = [n1, n0, d1, d0](double t) {
    const double N = n1 * t + n0;
    const double D = t * t + d1 * t + d0;
    const double dN = n1;
    const double dD = 2.0 * t + d1;
    const double u = t * t * (D + N);
    const double du = 2.0 * t * (D + N) + t * t * (dD + dN);
    return (du * D - u * dD) / (D * D);
  };
  q.b = [b](double) { return b; };
  q.db = [](double) { return 0.0; };
  q.c = [](double t) { return t; };
  q.dc = [](double) { return 1.0; };
  const double d_val = b * (alpha - 1.0 - b);
  q.d = [d_val](double) { return d_val; };
  q.dd = [](double) { return 0.0; };

  // validity: past the largest root of D, then refined by the grid verifier
  const double root =
      0.5 * (alpha * gamma0 + std::sqrt(alpha * alpha * gamma0 * gamma0 +
                                        4.0 * beta1 * (alpha + 1.0)));
  const double scan_lo = std::max(root * 1.02, 1e-6);
  const auto gamma_s = DampingSchedule::power_kind(alpha, 1.0, scan_lo);
  const auto beta_s = GeometricSchedule::affine_inverse_kind(gamma0, beta1, scan_lo);
  q.t_hat = scan_lo;
  const auto rep = verify_system(q, gamma_s, beta_s, log_grid(scan_lo, 2e4, 600));
  if (!std::isfinite(rep.t_hat_found))
    throw std::invalid_argument("quadruple_cor1: no validity threshold found on the scan grid");
  q.t_hat = rep.t_hat_found;
  return q;
}

CoefficientQuadruple quadruple_corabcdd(const DampingSchedule& gamma, double beta_const,
                                        double b) {
  if (beta_const <= 0.0)
    throw std::invalid_argument("quadruple_corabcdd: beta must be > 0");

  // damping-decay hypothesis: gamma * Gamma <= m < 3/2 from some t2 on
  const double scan_hi = 2e4;
  const auto grid = log_grid(std::max(gamma.t0, 1e-6), scan_hi, 400);
  std::vector<double> gg(grid.size());
  for (size_t i = 0; i < grid.size(); ++i)
    gg[i] = gamma.value(grid[i]) * compute_Gamma(gamma, grid[i]);
  double run = -std::numeric_limits<double>::infinity();
  std::vector<double> suffix(grid.size());
  for (size_t i = grid.size(); i-- > 0;) {
    run = std::max(run, gg[i]);
    suffix[i] = run;
  }
  if (suffix[grid.size() - 1] >= 1.5)
    throw hypothesis_error("quadruple_corabcdd: gamma*Gamma does not drop below 3/2");
  if (b >= 1.0) throw std::invalid_argument("quadruple_corabcdd: b must be < 1");
  // b must exceed 2(m-1) for an admissible bound m = sup_{t>=t2} gamma*Gamma;
  // pick the earliest onset t2 whose suffix supremum leaves b in range
  size_t onset = grid.size();
  for (size_t i = 0; i < grid.size(); ++i)
    if (suffix[i] < 1.5 && b > 2.0 * (suffix[i] - 1.0)) {
      onset = i;
      break;
    }
  if (onset == grid.size())
    throw std::invalid_argument("quadruple_corabcdd: b must lie in (2(m-1), 1)");
  const double t2 = grid[onset];

  // beta <= 1/gamma(t1) for the first grid point t1 where this holds
  double t1 = std::numeric_limits<double>::quiet_NaN();
  for (double t : grid)
    if (beta_const <= 1.0 / gamma.value(t)) {
      t1 = t;
      break;
    }
  if (!std::isfinite(t1))
    throw std::invalid_argument("quadruple_corabcdd: beta exceeds 1/gamma on the whole grid");

  CoefficientQuadruple q;
  q.provenance = CoefficientQuadruple::Provenance::corabcdd;
  q.p_beta = beta_const;
  q.p_b = b;

  const DampingSchedule gs = gamma;  // captured by value
  const double bb = beta_const;
  q.a = [gs, bb, b](double t) {
    const double G = compute_Gamma(gs, t);
    return G * (G - bb * b) / (1.0 - bb * gs.value(t));
  };
  q.da = [gs, bb, b](double t) {
    const double G = compute_Gamma(gs, t);
    const double g = gs.value(t);
    const double dG = g * G - 1.0;  // Gamma ODE, used analytically
    const double dg = gs.derivative(t);
    const double num = G * (G - bb * b);
    const double dnum = dG * (2.0 * G - bb * b);
    const double den = 1.0 - bb * g;
    const double dden = -bb * dg;
    return (dnum * den - num * dden) / (den * den);
  };
  q.b = [b](double) { return b; };
  q.db = [](double) { return 0.0; };
  q.c = [gs](double t) { return compute_Gamma(gs, t); };
  q.dc = [gs](double t) { return gs.value(t) * compute_Gamma(gs, t) - 1.0; };
  const double d_val = b * (1.0 - b);
  q.d = [d_val](double) { return d_val; };
  q.dd = [](double) { return 0.0; };

  const double scan_lo = std::max({t1, t2, gamma.t0}) * 1.001;
  const auto beta_s = GeometricSchedule::constant_kind(beta_const, gamma.t0);
  q.t_hat = scan_lo;
  const auto rep = verify_system(q, gamma, beta_s, log_grid(scan_lo, scan_hi, 400));
  if (!std::isfinite(rep.t_hat_found))
    throw std::invalid_argument(
        "quadruple_corabcdd: no validity threshold found on the scan grid");
  q.t_hat = rep.t_hat_found;
  return q;
}

CoefficientQuadruple quadruple_custom(std::function<double(double)> a,
                                      std::function<double(double)> b,
                                      std::function<double(double)> c,
                                      std::function<double(double)> d, double t_hat) {
  CoefficientQuadruple q;
  q.provenance = CoefficientQuadruple::Provenance::custom;
  q.t_hat = t_hat;
  const auto numeric_diff = [](std::function<double(double)> f) {
    return [f](double t) {
      const double h = 1e-5 * std::max(std::abs(t), 1.0);
      return (f(t + h) - f(t - h)) / (2.0 * h);
    };
  };
  q.da = numeric_diff(a);
  q.db = numeric_diff(b);
  q.dc = numeric_diff(c);
  q.dd = numeric_diff(d);
  q.a = std::move(a);
  q.b = std::move(b);
  q.c = std::move(c);
  q.d = std::move(d);
  return q;
}

// ---------------------------------------------------------------------------
// System verifier
// ---------------------------------------------------------------------------

SystemReport verify_system(const CoefficientQuadruple& q, const DampingSchedule& gamma,
                           const GeometricSchedule& beta, const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("verify_system: empty grid");
  SystemReport rep;
  rep.grid = grid;
  for (auto& cond : rep.conditions) cond.margins.reserve(grid.size());

  // per-point pass flags to locate the overall threshold afterwards
  std::vector<std::array<bool, 6>> ok(grid.size());

  for (size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    const double av = q.a(t), dav = q.da(t);
    const double bv = q.b(t), dbv = q.db(t);
    const double cv = q.c(t), dcv = q.dc(t);
    const double dv = q.d(t), ddv = q.dd(t);
    const double g = gamma.value(t);
    const double bs = beta.value(t);
    const double dbs = beta.derivative(t);

    // 1: a' - b c <= 0
    {
      const double m = dav - bv * cv;
      const double scale = std::max(std::abs(dav), std::abs(bv * cv));
      ok[i][0] = m <= ineq_tol(scale);
      rep.conditions[0].margins.emplace_back(t, m);
    }
    // 2: -a beta <= 0
    {
      const double m = -av * bs;
      ok[i][1] = m <= ineq_tol(std::abs(av * bs));
      rep.conditions[1].margins.emplace_back(t, m);
    }
    // 3 (equality): -a gamma beta + a beta' + a - c^2 + b c beta = 0
    {
      const double terms[] = {-av * g * bs, av * dbs, av, -cv * cv, bv * cv * bs};
      double r = 0.0, scale = 0.0;
      for (double x : terms) {
        r += x;
        scale = std::max(scale, std::abs(x));
      }
      ok[i][2] = std::abs(r) <= eq_tol(scale);
      rep.conditions[2].margins.emplace_back(t, std::abs(r) / (1.0 + scale));
    }
    // 4: b' b + d'/2 <= 0
    {
      const double m = dbv * bv + 0.5 * ddv;
      ok[i][3] = m <= ineq_tol(std::max(std::abs(dbv * bv), std::abs(0.5 * ddv)));
      rep.conditions[3].margins.emplace_back(t, m);
    }
    // 5 (equality): b' c + b (b + c' - c gamma) + d = 0
    {
      const double terms[] = {dbv * cv, bv * (bv + dcv - cv * g), dv};
      double r = 0.0, scale = 0.0;
      for (double x : terms) {
        r += x;
        scale = std::max(scale, std::abs(x));
      }
      ok[i][4] = std::abs(r) <= eq_tol(scale);
      rep.conditions[4].margins.emplace_back(t, std::abs(r) / (1.0 + scale));
    }
    // 6: c (b + c' - c gamma) <= 0
    {
      const double m = cv * (bv + dcv - cv * g);
      ok[i][5] = m <= ineq_tol(std::abs(cv) * (std::abs(bv) + std::abs(dcv) +
                                               std::abs(cv * g)));
      rep.conditions[5].margins.emplace_back(t, m);
    }
  }

  rep.all_pass = true;
  for (int cnd = 0; cnd < 6; ++cnd) {
    auto& v = rep.conditions[cnd];
    v.pass = true;
    v.worst_margin = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < grid.size(); ++i) {
      if (!ok[i][cnd]) v.pass = false;
      const double m = v.margins[i].second;
      if (m > v.worst_margin) {
        v.worst_margin = m;
        v.binding_t = grid[i];
      }
    }
    rep.all_pass = rep.all_pass && v.pass;
  }

  // smallest grid index from which all six hold through the grid end
  size_t threshold = grid.size();
  for (size_t i = grid.size(); i-- > 0;) {
    bool all = true;
    for (int cnd = 0; cnd < 6; ++cnd) all = all && ok[i][cnd];
    if (all)
      threshold = i;
    else
      break;
  }
  if (threshold < grid.size()) rep.t_hat_found = grid[threshold];
  return rep;
}

std::string SystemReport::to_json() const {
  nlohmann::json j;
  j["all_pass"] = all_pass;
  if (std::isfinite(t_hat_found))
    j["t_hat"] = t_hat_found;
  else
    j["t_hat"] = nullptr;
  for (int c = 0; c < 6; ++c) {
    nlohmann::json jc;
    jc["pass"] = conditions[c].pass;
    jc["worst_margin"] = conditions[c].worst_margin;
    jc["binding_t"] = conditions[c].binding_t;
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& [t, m] : conditions[c].margins) pts.push_back({t, m});
    jc["margins"] = std::move(pts);
    j["conditions"].push_back(std::move(jc));
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Energies
// ---------------------------------------------------------------------------

double energy_general(const CoefficientQuadruple& q, const GeometricSchedule& beta,
                      double t, const Vector& x, const Vector& v, const Objective& obj,
                      const Vector& x_star) {
  const double bs = beta.value(t);
  const Vector shifted = bs == 0.0 ? x : Vector(x + bs * v);
  const double gap = obj.value(shifted) - obj.min_value;
  const Vector mix = q.b(t) * (x - x_star) + q.c(t) * v;
  return q.a(t) * gap + 0.5 * mix.squaredNorm() + 0.5 * q.d(t) * (x - x_star).squaredNorm();
}

double energy_strongly_convex(double mu, double beta_const, double t, const Vector& x,
                              const Vector& v, const Objective& obj) {
  if (mu <= 0.0) throw std::invalid_argument("energy_strongly_convex: mu must be > 0");
  if (obj.strong_mu < mu)
    throw std::invalid_argument("energy_strongly_convex: objective is not mu-strongly convex");
  const double sq = std::sqrt(mu);
  if (beta_const < 0.0 || beta_const > 1.0 / (2.0 * sq))
    throw std::invalid_argument("energy_strongly_convex: beta outside [0, 1/(2 sqrt(mu))]");
  (void)t;
  const Vector x_star = obj.project_solution(x);
  const Vector shifted = beta_const == 0.0 ? x : Vector(x + beta_const * v);
  const double gap = obj.value(shifted) - obj.min_value;
  return gap + 0.5 * (sq * (x - x_star) + v).squaredNorm();
}

double theta_envelope(double mu, const DiffusionSchedule& sigma, double t0, double t) {
  if (t < t0) throw std::domain_error("theta_envelope: t < t0");
  const double decay = std::exp(-0.25 * std::sqrt(mu) * (t - t0));
  const double s = sigma.is_zero() ? 0.0 : sigma.value(0.5 * (t + t0));
  return std::max(decay, s * s);
}

}  // namespace isihd
