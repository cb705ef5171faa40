#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "isihd/dynamics.hpp"

namespace isihd {

// statistics tracked per trajectory field
struct FieldStats {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean (NaN when N < 2)
  double q10 = 0.0, q50 = 0.0, q90 = 0.0;
};

// the six per-checkpoint trajectory fields, in record order
constexpr int kNumFields = 6;
extern const std::array<const char*, kNumFields> kFieldNames;  // f_gap, speed2, ...

struct EnsembleStats {
  std::vector<double> times;
  // fields[f][k]: statistics of field f at checkpoint k over surviving paths
  std::array<std::vector<FieldStats>, kNumFields> fields;
  int n_paths = 0;
  int n_divergent = 0;  // divergent paths are excluded from every statistic

  std::string to_csv() const;
};

struct EnsembleResult {
  EnsembleStats stats;
  std::vector<Trajectory> trajectories;  // path-id order, kept when requested
};

// Simulates paths 0..N-1 in parallel; the reduction is sequential in path-id
// order, so results are bit-identical for any worker count.
EnsembleResult run_ensemble(const SdeConfig& cfg, int n_paths, Integrator integrator,
                            int threads = 1, const EnergyFn& energy = nullptr,
                            bool keep_paths = true);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_se = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
  int n_used = 0;
  int n_excluded = 0;  // nonpositive values skipped before taking logs

  std::string to_json() const;
};

using Series = std::vector<std::pair<double, double>>;

// OLS of log y on log t over the window; needs >= 5 usable points.
RateFit estimate_rate(const Series& series, double t_lo, double t_hi);

// OLS of log y on t over the window (slope in 1/time units).
RateFit estimate_exponential_rate(const Series& series, double t_lo, double t_hi);

// default rate window: the last decade of the horizon
inline std::pair<double, double> default_rate_window(double T) { return {T / 10.0, T}; }

struct AsDiagnostics {
  double tail_integral = 0.0;      // trapezoid of weight*(f_gap+speed2) on [t_w, T]
  Series scaled_series;            // weight(t)*(f_gap(t)+speed2(t))
  double tail_sup = 0.0;           // sup of the scaled series over [T/10, T]
  double half_sup_late = 0.0;      // sup over [T/2, T]
  double half_sup_early = 0.0;     // sup over [T/10, T/2]
  double halving_ratio = 0.0;      // half_sup_late / half_sup_early
  Series dist_series;              // (t, dist(X,S)^2)

  std::string to_json() const;
};

// Per-path almost-sure diagnostics; the tail starts at
// t_w = t_first + tail_fraction * (t_last - t_first).
AsDiagnostics as_diagnostics(const Trajectory& traj, const std::function<double(double)>& weight,
                             double tail_fraction = 0.5);

// Minimal C with y(t) <= C * envelope(t) over the window.
double envelope_fit(const Series& series, const std::function<double(double)>& envelope,
                    double t_lo, double t_hi);

// series extraction helpers
Series extract_series(const Trajectory& traj, int field);
Series mean_series(const EnsembleStats& stats, int field);

// index of the path with median terminal f_gap (a.s. diagnostics avoid means)
int median_terminal_path(const std::vector<Trajectory>& trajs);

}  // namespace isihd
