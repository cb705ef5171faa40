#include "isihd/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "isihd/rng.hpp"

namespace isihd {

// ---------------------------------------------------------------------------
// NoiseModel
// ---------------------------------------------------------------------------

NoiseModel NoiseModel::isotropic(DiffusionSchedule schedule, int dim) {
  if (dim <= 0) throw std::invalid_argument("NoiseModel: dim must be positive");
  NoiseModel n;
  n.kind = Kind::isotropic;
  n.schedule = std::move(schedule);
  n.dim = dim;
  return n;
}

NoiseModel NoiseModel::state_modulated(DiffusionSchedule schedule, int dim) {
  if (dim <= 0) throw std::invalid_argument("NoiseModel: dim must be positive");
  NoiseModel n;
  n.kind = Kind::state_modulated;
  n.schedule = std::move(schedule);
  n.dim = dim;
  return n;
}

namespace {
// componentwise modulation: bounded by 1, Lipschitz with constant 3*sqrt(3)/8
inline double modulation(double u) { return 1.0 / (1.0 + u * u); }
constexpr double kModulationLipschitz = 0.649519052838329;  // 3*sqrt(3)/8
}  // namespace

Vector NoiseModel::apply(double t, const Vector& x, const Vector& g) const {
  const double s = schedule.value(t) / std::sqrt(static_cast<double>(dim));
  if (kind == Kind::isotropic) return s * g;
  Vector out(dim);
  for (int i = 0; i < dim; ++i) out[i] = s * modulation(x[i]) * g[i];
  return out;
}

double NoiseModel::hs_norm(double t, const Vector& x) const {
  const double s = schedule.value(t) / std::sqrt(static_cast<double>(dim));
  if (kind == Kind::isotropic) return schedule.value(t);
  double acc = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double m = modulation(x[i]);
    acc += m * m;
  }
  return s * std::sqrt(acc);
}

double NoiseModel::lipschitz_l0() const {
  if (kind == Kind::isotropic) return 0.0;
  // sigma_inf is nonincreasing, so its value at t0 dominates
  return schedule.value(schedule.t0) * kModulationLipschitz /
         std::sqrt(static_cast<double>(dim));
}

// ---------------------------------------------------------------------------
// SdeConfig
// ---------------------------------------------------------------------------

int SdeConfig::n_steps() const {
  return static_cast<int>(std::llround((T - t0) / h));
}

std::vector<long> SdeConfig::checkpoint_steps() const {
  const long n = n_steps();
  std::vector<long> steps;
  steps.reserve(checkpoints.size());
  for (double tc : checkpoints) {
    long k = std::llround((tc - t0) / h);
    k = std::clamp(k, 0L, n);
    steps.push_back(k);
  }
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  return steps;
}

std::vector<double> SdeConfig::geometric_checkpoints(double t0, double T, double h, int n) {
  if (n < 2) throw std::invalid_argument("geometric_checkpoints: n must be >= 2");
  std::vector<double> cps;
  cps.push_back(t0);
  const double lo = t0 + h, hi = T;
  if (lo >= hi) throw std::invalid_argument("geometric_checkpoints: empty range");
  for (int i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / (n - 1);
    cps.push_back(lo * std::pow(hi / lo, u));
  }
  cps.back() = T;
  return cps;
}

void SdeConfig::validate() const {
  if (h <= 0.0) throw std::invalid_argument("SdeConfig: h must be > 0");
  if (T <= t0) throw std::invalid_argument("SdeConfig: T must exceed t0");
  if (objective.dim <= 0) throw std::invalid_argument("SdeConfig: objective missing");
  if (x0.size() != objective.dim || v0.size() != objective.dim)
    throw std::invalid_argument("SdeConfig: x0/v0 dimension mismatch");
  if (!noise.is_zero() && noise.dim != objective.dim)
    throw std::invalid_argument("SdeConfig: noise dimension mismatch");
  const double g0 = gamma.value(t0);
  if (g0 > 0.0 && h > 1.0 / (2.0 * g0))
    throw std::invalid_argument(
        "SdeConfig: explicit-scheme stability guard requires h <= 1/(2*gamma(t0))");
  double prev = -std::numeric_limits<double>::infinity();
  for (double tc : checkpoints) {
    if (tc < t0 || tc > T)
      throw std::invalid_argument("SdeConfig: checkpoint outside [t0, T]");
    if (tc <= prev) throw std::invalid_argument("SdeConfig: checkpoints must increase");
    prev = tc;
  }
}

// ---------------------------------------------------------------------------
// One-step maps
// ---------------------------------------------------------------------------

PathState step_isihd(const PathState& state, const SdeConfig& cfg, const Vector& gaussian) {
  const double t = state.t, h = cfg.h;
  const double gk = cfg.gamma.value(t);
  const double bk = cfg.beta.value(t);
  const Vector shifted = bk == 0.0 ? state.X : Vector(state.X + bk * state.V);
  PathState next;
  next.t = t + h;
  next.X = state.X + h * state.V;
  next.V = (1.0 - gk * h) * state.V - h * cfg.objective.gradient(shifted);
  if (!cfg.noise.is_zero())
    next.V += std::sqrt(h) * cfg.noise.apply(t, shifted, gaussian);
  return next;
}

ReforState step_refor(const ReforState& state, const SdeConfig& cfg, const Vector& gaussian) {
  if (cfg.beta.is_zero())
    throw std::invalid_argument("step_refor: the reformulated system needs beta > 0");
  const double t = state.t, h = cfg.h;
  const double bk = cfg.beta.value(t);
  const double dbk = cfg.beta.derivative(t);
  const double gk = cfg.gamma.value(t);
  const Vector diff = (state.X - state.Y) / bk;
  ReforState next;
  next.t = t + h;
  next.X = state.X - h * diff;
  next.Y = state.Y - h * bk * cfg.objective.gradient(state.Y) -
           h * (dbk - gk * bk + 1.0) * diff;
  if (!cfg.noise.is_zero())
    next.Y += std::sqrt(h) * bk * cfg.noise.apply(t, state.Y, gaussian);
  return next;
}

PathState step_igs(const PathState& state, const SdeConfig& cfg, const Vector& gaussian) {
  if (!cfg.beta.is_zero())
    throw std::invalid_argument("step_igs: requires the zero geometric schedule");
  const double t = state.t, h = cfg.h;
  const double gk = cfg.gamma.value(t);
  PathState next;
  next.t = t + h;
  next.X = state.X + h * state.V;
  next.V = (1.0 - gk * h) * state.V - h * cfg.objective.gradient(state.X);
  if (!cfg.noise.is_zero()) next.V += std::sqrt(h) * cfg.noise.apply(t, state.X, gaussian);
  return next;
}

Vector step_sgf(double t, const Vector& x, const SdeConfig& cfg, const Vector& gaussian) {
  Vector next = x - cfg.h * cfg.objective.gradient(x);
  if (!cfg.noise.is_zero()) next += std::sqrt(cfg.h) * cfg.noise.apply(t, x, gaussian);
  return next;
}

// ---------------------------------------------------------------------------
// Path simulation
// ---------------------------------------------------------------------------

namespace {

bool is_divergent(const Vector& v) {
  for (int i = 0; i < v.size(); ++i) {
    const double a = v[i];
    if (!std::isfinite(a) || std::abs(a) > kDivergenceThreshold) return true;
  }
  return false;
}

void fill_gaussians(const SdeConfig& cfg, int path_id, long step, Vector& g) {
  for (int i = 0; i < g.size(); ++i)
    g[i] = rng::gaussian(cfg.master_seed, static_cast<uint64_t>(path_id),
                         static_cast<uint64_t>(step), static_cast<uint64_t>(i));
}

TrajectoryRecord make_record(const SdeConfig& cfg, double t, const Vector& X,
                             const Vector& V, const EnergyFn& energy) {
  TrajectoryRecord rec;
  rec.t = t;
  rec.f_gap = cfg.objective.value(X) - cfg.objective.min_value;
  rec.speed2 = V.squaredNorm();
  rec.grad2 = cfg.objective.gradient(X).squaredNorm();
  const double b = cfg.beta.value(t);
  rec.grad_shift2 =
      b == 0.0 ? rec.grad2 : cfg.objective.gradient(X + b * V).squaredNorm();
  rec.dist2 = std::pow(distance_to_solution_set(cfg.objective, X), 2);
  if (energy) rec.energy = energy(t, X, V);
  return rec;
}

}  // namespace

Trajectory simulate_path(const SdeConfig& cfg, int path_id, Integrator integrator,
                         const EnergyFn& energy) {
  cfg.validate();
  const long n = cfg.n_steps();
  const auto cp_steps = cfg.checkpoint_steps();

  Trajectory traj;
  traj.path_id = path_id;
  traj.records.reserve(cp_steps.size());

  const bool use_noise = !cfg.noise.is_zero();
  Vector g = Vector::Zero(cfg.objective.dim);

  // state holders; only the pair relevant to the integrator is active
  PathState ps{cfg.t0, cfg.x0, cfg.v0};
  ReforState rs;
  if (integrator == Integrator::refor) {
    if (cfg.beta.is_zero())
      throw std::invalid_argument("simulate_path: refor integrator needs beta > 0");
    rs.t = cfg.t0;
    rs.X = cfg.x0;
    rs.Y = cfg.x0 + cfg.beta.value(cfg.t0) * cfg.v0;  // exact initialization
  }
  if (integrator == Integrator::igs && !cfg.beta.is_zero())
    throw std::invalid_argument("simulate_path: igs integrator needs the zero beta kind");

  size_t cp_idx = 0;
  const Vector zero_v = Vector::Zero(cfg.objective.dim);

  const auto record_if_checkpoint = [&](long k, double t) {
    if (cp_idx >= cp_steps.size() || cp_steps[cp_idx] != k) return;
    ++cp_idx;
    switch (integrator) {
      case Integrator::isihd:
      case Integrator::igs:
        traj.records.push_back(make_record(cfg, t, ps.X, ps.V, energy));
        break;
      case Integrator::refor: {
        const Vector v = (rs.Y - rs.X) / cfg.beta.value(t);
        traj.records.push_back(make_record(cfg, t, rs.X, v, energy));
        break;
      }
      case Integrator::sgf:
        traj.records.push_back(make_record(cfg, t, ps.X, zero_v, energy));
        break;
    }
  };

  record_if_checkpoint(0, cfg.t0);
  for (long k = 0; k < n; ++k) {
    if (use_noise) fill_gaussians(cfg, path_id, k, g);
    const double t_next = cfg.t0 + static_cast<double>(k + 1) * cfg.h;
    bool bad = false;
    switch (integrator) {
      case Integrator::isihd:
        ps = step_isihd(ps, cfg, g);
        ps.t = t_next;  // avoid accumulated roundoff in the clock
        bad = is_divergent(ps.X) || is_divergent(ps.V);
        break;
      case Integrator::igs:
        ps = step_igs(ps, cfg, g);
        ps.t = t_next;
        bad = is_divergent(ps.X) || is_divergent(ps.V);
        break;
      case Integrator::refor:
        rs = step_refor(rs, cfg, g);
        rs.t = t_next;
        bad = is_divergent(rs.X) || is_divergent(rs.Y);
        break;
      case Integrator::sgf:
        ps.X = step_sgf(ps.t, ps.X, cfg, g);
        ps.t = t_next;
        bad = is_divergent(ps.X);
        break;
    }
    if (bad) {
      traj.diverged = true;
      traj.divergence_time = t_next;
      break;  // keep the checkpoints recorded so far
    }
    record_if_checkpoint(k + 1, t_next);
  }
  return traj;
}

}  // namespace isihd
