#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "isihd/problems.hpp"
#include "isihd/schedules.hpp"

namespace isihd {

// component magnitude beyond which a path is declared divergent
constexpr double kDivergenceThreshold = 1e12;

// Diffusion operator sigma(t, x) applied to a Gaussian increment.
struct NoiseModel {
  enum class Kind { isotropic, state_modulated };

  Kind kind = Kind::isotropic;
  DiffusionSchedule schedule;
  int dim = 0;

  static NoiseModel isotropic(DiffusionSchedule schedule, int dim);
  static NoiseModel state_modulated(DiffusionSchedule schedule, int dim);

  bool is_zero() const { return schedule.is_zero(); }

  // sigma(t, x) g  (g: i.i.d. standard normals)
  Vector apply(double t, const Vector& x, const Vector& g) const;

  // Hilbert-Schmidt norm of sigma(t, x); equals sigma_inf(t) for the
  // isotropic kind and is bounded by it for the modulated kind
  double hs_norm(double t, const Vector& x) const;

  // Lipschitz constant of x -> sigma(t, x) in HS norm, uniform over t
  double lipschitz_l0() const;
};

struct SdeConfig {
  double t0 = 1.0, T = 10.0, h = 0.01;
  DampingSchedule gamma;
  GeometricSchedule beta;
  NoiseModel noise;
  Objective objective;
  Vector x0, v0;
  uint64_t master_seed = 0;
  std::vector<double> checkpoints;  // strictly increasing, within [t0, T]

  int n_steps() const;
  // checkpoint times snapped to the step grid, as step indices (sorted, unique)
  std::vector<long> checkpoint_steps() const;
  // geometric grid of n points over [t0+h, T] (plus the initial time)
  static std::vector<double> geometric_checkpoints(double t0, double T, double h, int n);

  void validate() const;  // throws std::invalid_argument on violations
};

struct PathState {
  double t = 0.0;
  Vector X, V;
};

// (X, Y) state of the reformulated system, Y = X + beta V
struct ReforState {
  double t = 0.0;
  Vector X, Y;
};

struct TrajectoryRecord {
  double t = 0.0;
  double f_gap = 0.0;       // f(X) - min f
  double speed2 = 0.0;      // ||V||^2
  double grad2 = 0.0;       // ||grad f(X)||^2
  double grad_shift2 = 0.0; // ||grad f(X + beta V)||^2
  double dist2 = 0.0;       // dist(X, S)^2
  double energy = std::numeric_limits<double>::quiet_NaN();  // if evaluator attached
};

struct Trajectory {
  int path_id = 0;
  std::vector<TrajectoryRecord> records;
  bool diverged = false;
  double divergence_time = std::numeric_limits<double>::quiet_NaN();
};

enum class Integrator { isihd, refor, igs, sgf };

// Single Euler-Maruyama steps. `gaussian` must hold cfg.objective.dim i.i.d.
// standard normals for the increment at state.t.
PathState step_isihd(const PathState& state, const SdeConfig& cfg, const Vector& gaussian);
ReforState step_refor(const ReforState& state, const SdeConfig& cfg, const Vector& gaussian);
PathState step_igs(const PathState& state, const SdeConfig& cfg, const Vector& gaussian);
Vector step_sgf(double t, const Vector& x, const SdeConfig& cfg, const Vector& gaussian);

// Optional Lyapunov-energy hook evaluated at checkpoints.
using EnergyFn = std::function<double(double t, const Vector& x, const Vector& v)>;

// Simulates one path; deterministic function of (cfg.master_seed, path_id).
Trajectory simulate_path(const SdeConfig& cfg, int path_id, Integrator integrator,
                         const EnergyFn& energy = nullptr);

}  // namespace isihd
