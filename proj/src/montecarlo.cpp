#include "isihd/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace isihd {

const std::array<const char*, kNumFields> kFieldNames = {
    "f_gap", "speed2", "grad2", "grad_shift2", "dist2", "energy"};

namespace {

double field_value(const TrajectoryRecord& r, int f) {
  switch (f) {
    case 0: return r.f_gap;
    case 1: return r.speed2;
    case 2: return r.grad2;
    case 3: return r.grad_shift2;
    case 4: return r.dist2;
    default: return r.energy;
  }
}

double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * (v.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

std::string fmt(double x) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, p);
}

RateFit ols_fit(const Series& series, double t_lo, double t_hi, bool log_abscissa) {
  std::vector<double> xs, ys;
  int excluded = 0;
  for (const auto& [t, y] : series) {
    if (t < t_lo || t > t_hi) continue;
    if (!(y > 0.0) || !std::isfinite(y)) {
      ++excluded;
      continue;
    }
    xs.push_back(log_abscissa ? std::log(t) : t);
    ys.push_back(std::log(y));
  }
  const int n = static_cast<int>(xs.size());
  if (n < 5) throw std::invalid_argument("rate fit: fewer than 5 usable points in window");

  double sx = 0.0, sy = 0.0;
  for (int i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    rss += r * r;
  }
  fit.residual_se = n > 2 ? std::sqrt(rss / (n - 2)) : 0.0;
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  fit.n_used = n;
  fit.n_excluded = excluded;
  return fit;
}

double window_sup(const Series& s, double lo, double hi) {
  double sup = 0.0;
  for (const auto& [t, y] : s)
    if (t >= lo && t <= hi) sup = std::max(sup, y);
  return sup;
}

}  // namespace

// ---------------------------------------------------------------------------
// Ensemble execution
// ---------------------------------------------------------------------------

EnsembleResult run_ensemble(const SdeConfig& cfg, int n_paths, Integrator integrator,
                            int threads, const EnergyFn& energy, bool keep_paths) {
  if (n_paths < 1) throw std::invalid_argument("run_ensemble: n_paths must be >= 1");
  cfg.validate();

  std::vector<Trajectory> trajs(n_paths);
  const int workers = std::clamp(threads, 1, n_paths);
  if (workers == 1) {
    for (int p = 0; p < n_paths; ++p) trajs[p] = simulate_path(cfg, p, integrator, energy);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int p = next.fetch_add(1); p < n_paths; p = next.fetch_add(1))
          trajs[p] = simulate_path(cfg, p, integrator, energy);
      });
    for (auto& th : pool) th.join();
  }

  // sequential reduction in path-id order; divergent paths are excluded
  EnsembleResult result;
  auto& st = result.stats;
  st.n_paths = n_paths;
  std::vector<const Trajectory*> alive;
  alive.reserve(n_paths);
  for (const auto& tr : trajs) {
    if (tr.diverged)
      ++st.n_divergent;
    else
      alive.push_back(&tr);
  }

  if (!alive.empty()) {
    const size_t n_cp = alive[0]->records.size();
    st.times.reserve(n_cp);
    for (const auto& rec : alive[0]->records) st.times.push_back(rec.t);
    const int m = static_cast<int>(alive.size());
    std::vector<double> vals(m);
    for (int f = 0; f < kNumFields; ++f) {
      st.fields[f].resize(n_cp);
      for (size_t k = 0; k < n_cp; ++k) {
        for (int i = 0; i < m; ++i) vals[i] = field_value(alive[i]->records[k], f);
        FieldStats fs;
        const bool all_equal =
            std::all_of(vals.begin(), vals.end(), [&](double v) { return v == vals[0]; });
        if (all_equal) {
          // exact short-circuit; naive summation of m identical doubles is
          // not exactly m*v, which would break the sigma=0 invariants
          fs.mean = vals[0];
          fs.se = m >= 2 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
          fs.q10 = fs.q50 = fs.q90 = vals[0];
          st.fields[f][k] = fs;
          continue;
        }
        double sum = 0.0;
        for (double v : vals) sum += v;
        fs.mean = sum / m;
        if (m >= 2) {
          double var = 0.0;
          for (double v : vals) var += (v - fs.mean) * (v - fs.mean);
          var /= (m - 1);
          fs.se = std::sqrt(var / m);
        } else {
          fs.se = std::numeric_limits<double>::quiet_NaN();
        }
        std::sort(vals.begin(), vals.end());
        fs.q10 = quantile_sorted(vals, 0.1);
        fs.q50 = quantile_sorted(vals, 0.5);
        fs.q90 = quantile_sorted(vals, 0.9);
        st.fields[f][k] = fs;
      }
    }
  }

  if (keep_paths) result.trajectories = std::move(trajs);
  return result;
}

std::string EnsembleStats::to_csv() const {
  std::string out = "t";
  for (const char* name : kFieldNames)
    for (const char* stat : {"mean", "se", "q10", "q50", "q90"})
      out += std::string(",") + name + "_" + stat;
  out += "\n";
  for (size_t k = 0; k < times.size(); ++k) {
    out += fmt(times[k]);
    for (int f = 0; f < kNumFields; ++f) {
      const auto& fs = fields[f][k];
      for (double v : {fs.mean, fs.se, fs.q10, fs.q50, fs.q90}) out += "," + fmt(v);
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rate fits
// ---------------------------------------------------------------------------

RateFit estimate_rate(const Series& series, double t_lo, double t_hi) {
  if (!(t_lo > 0.0)) throw std::invalid_argument("estimate_rate: window must be positive");
  return ols_fit(series, t_lo, t_hi, /*log_abscissa=*/true);
}

RateFit estimate_exponential_rate(const Series& series, double t_lo, double t_hi) {
  return ols_fit(series, t_lo, t_hi, /*log_abscissa=*/false);
}

std::string RateFit::to_json() const {
  nlohmann::json j;
  j["slope"] = slope;
  j["intercept"] = intercept;
  j["residual_se"] = residual_se;
  j["window"] = {t_lo, t_hi};
  j["n_used"] = n_used;
  j["n_excluded"] = n_excluded;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Almost-sure diagnostics
// ---------------------------------------------------------------------------

AsDiagnostics as_diagnostics(const Trajectory& traj,
                             const std::function<double(double)>& weight,
                             double tail_fraction) {
  if (traj.records.size() < 2)
    throw std::invalid_argument("as_diagnostics: need at least two checkpoints");
  if (tail_fraction < 0.0 || tail_fraction >= 1.0)
    throw std::invalid_argument("as_diagnostics: tail_fraction must be in [0, 1)");

  AsDiagnostics d;
  const double t_first = traj.records.front().t;
  const double t_last = traj.records.back().t;
  const double t_w = t_first + tail_fraction * (t_last - t_first);

  d.scaled_series.reserve(traj.records.size());
  d.dist_series.reserve(traj.records.size());
  for (const auto& r : traj.records) {
    d.scaled_series.emplace_back(r.t, weight(r.t) * (r.f_gap + r.speed2));
    d.dist_series.emplace_back(r.t, r.dist2);
  }

  // trapezoid of the weighted integrand over [t_w, t_last]
  double prev_t = 0.0, prev_y = 0.0;
  bool have_prev = false;
  for (const auto& [t, y] : d.scaled_series) {
    if (t < t_w) continue;
    if (have_prev) d.tail_integral += 0.5 * (y + prev_y) * (t - prev_t);
    prev_t = t;
    prev_y = y;
    have_prev = true;
  }

  d.tail_sup = window_sup(d.scaled_series, t_last / 10.0, t_last);
  d.half_sup_late = window_sup(d.scaled_series, t_last / 2.0, t_last);
  d.half_sup_early = window_sup(d.scaled_series, t_last / 10.0, t_last / 2.0);
  d.halving_ratio = d.half_sup_early > 0.0
                        ? d.half_sup_late / d.half_sup_early
                        : (d.half_sup_late > 0.0
                               ? std::numeric_limits<double>::infinity()
                               : 0.0);
  return d;
}

std::string AsDiagnostics::to_json() const {
  nlohmann::json j;
  j["tail_integral"] = tail_integral;
  j["tail_sup"] = tail_sup;
  j["half_sup_late"] = half_sup_late;
  j["half_sup_early"] = half_sup_early;
  j["halving_ratio"] = std::isfinite(halving_ratio) ? nlohmann::json(halving_ratio)
                                                    : nlohmann::json(nullptr);
  nlohmann::json scaled = nlohmann::json::array();
  for (const auto& [t, y] : scaled_series) scaled.push_back({t, y});
  j["scaled_series"] = std::move(scaled);
  nlohmann::json dist = nlohmann::json::array();
  for (const auto& [t, y] : dist_series) dist.push_back({t, y});
  j["dist_series"] = std::move(dist);
  return j.dump(2);
}

double envelope_fit(const Series& series, const std::function<double(double)>& envelope,
                    double t_lo, double t_hi) {
  double c = 0.0;
  int used = 0;
  for (const auto& [t, y] : series) {
    if (t < t_lo || t > t_hi) continue;
    const double e = envelope(t);
    if (!(e > 0.0)) throw std::invalid_argument("envelope_fit: envelope must be positive");
    c = std::max(c, y / e);
    ++used;
  }
  if (used == 0) throw std::invalid_argument("envelope_fit: empty window");
  return c;
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

Series extract_series(const Trajectory& traj, int field) {
  Series s;
  s.reserve(traj.records.size());
  for (const auto& r : traj.records) s.emplace_back(r.t, field_value(r, field));
  return s;
}

Series mean_series(const EnsembleStats& stats, int field) {
  Series s;
  s.reserve(stats.times.size());
  for (size_t k = 0; k < stats.times.size(); ++k)
    s.emplace_back(stats.times[k], stats.fields[field][k].mean);
  return s;
}

int median_terminal_path(const std::vector<Trajectory>& trajs) {
  std::vector<std::pair<double, int>> order;
  for (const auto& tr : trajs)
    if (!tr.diverged && !tr.records.empty())
      order.emplace_back(tr.records.back().f_gap, tr.path_id);
  if (order.empty()) throw std::invalid_argument("median_terminal_path: no surviving paths");
  std::sort(order.begin(), order.end());
  return order[order.size() / 2].second;
}

}  // namespace isihd
