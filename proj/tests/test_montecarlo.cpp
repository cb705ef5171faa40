#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "isihd/montecarlo.hpp"

using namespace isihd;

namespace {

SdeConfig quadratic_config(double sigma0 = 0.05, double T = 100.0) {
  const int dim = 4;
  SdeConfig cfg;
  cfg.t0 = 10.0;
  cfg.T = T;
  cfg.h = 0.02;
  cfg.gamma = DampingSchedule::power_kind(4.0, 1.0, cfg.t0);
  cfg.beta = GeometricSchedule::affine_inverse_kind(1.0, 0.5, cfg.t0);
  if (sigma0 > 0.0)
    cfg.noise =
        NoiseModel::isotropic(DiffusionSchedule::power_kind(sigma0, 1.6, cfg.t0), dim);
  cfg.objective = make_quadratic({0.5, 1.0, 2.0, 4.0}, Vector::Zero(dim), 0.0);
  cfg.x0 = Vector::Ones(dim);
  cfg.v0 = Vector::Zero(dim);
  cfg.master_seed = 17u;
  cfg.checkpoints = SdeConfig::geometric_checkpoints(cfg.t0, cfg.T, cfg.h, 30);
  return cfg;
}

Trajectory synthetic_flat(double t0, double T, int n, double f_gap) {
  Trajectory tr;
  for (int i = 0; i < n; ++i) {
    TrajectoryRecord r;
    r.t = t0 + (T - t0) * i / (n - 1);
    r.f_gap = f_gap;
    tr.records.push_back(r);
  }
  return tr;
}

}  // namespace

TEST_CASE("run_ensemble basics") {
  auto cfg = quadratic_config();

  SUBCASE("N=1 reproduces simulate_path exactly") {
    auto single = simulate_path(cfg, 0, Integrator::isihd);
    auto res = run_ensemble(cfg, 1, Integrator::isihd);
    REQUIRE(res.trajectories.size() == 1);
    REQUIRE(res.trajectories[0].records.size() == single.records.size());
    for (size_t k = 0; k < single.records.size(); ++k) {
      CHECK(res.trajectories[0].records[k].f_gap == single.records[k].f_gap);
      CHECK(res.stats.fields[0][k].mean == single.records[k].f_gap);
      CHECK(res.stats.fields[1][k].mean == single.records[k].speed2);
    }
  }
  SUBCASE("sigma=0: all paths identical, standard errors exactly 0") {
    auto det = quadratic_config(0.0);
    auto res = run_ensemble(det, 8, Integrator::isihd);
    auto ref = simulate_path(det, 0, Integrator::isihd);
    for (size_t k = 0; k < res.stats.times.size(); ++k) {
      CHECK(res.stats.fields[0][k].mean == ref.records[k].f_gap);
      CHECK(res.stats.fields[0][k].se == 0.0);
      CHECK(res.stats.fields[4][k].se == 0.0);
      CHECK(res.stats.fields[0][k].q10 == res.stats.fields[0][k].q90);
    }
  }
  SUBCASE("bit-identical stats across worker counts 1, 4, 8") {
    auto r1 = run_ensemble(cfg, 24, Integrator::isihd, 1);
    auto r4 = run_ensemble(cfg, 24, Integrator::isihd, 4);
    auto r8 = run_ensemble(cfg, 24, Integrator::isihd, 8);
    CHECK(r1.stats.to_csv() == r4.stats.to_csv());
    CHECK(r1.stats.to_csv() == r8.stats.to_csv());
  }
  SUBCASE("256 quadratic paths complete with no divergence") {
    auto res = run_ensemble(cfg, 256, Integrator::isihd, 4, nullptr, /*keep_paths=*/false);
    CHECK(res.stats.n_divergent == 0);
    CHECK(res.stats.n_paths == 256);
    CHECK(res.trajectories.empty());
    for (size_t k = 0; k < res.stats.times.size(); ++k)
      CHECK(std::isfinite(res.stats.fields[0][k].mean));
  }
  SUBCASE("divergent paths are counted and excluded") {
    auto bad = quadratic_config(0.0, 20.0);
    bad.h = 0.9;  // gamma(t0)=0.4 keeps the guard satisfied, lambda*h^2 explodes
    bad.objective = make_quadratic({100.0}, Vector::Zero(1), 0.0);
    bad.x0 = Vector::Ones(1);
    bad.v0 = Vector::Zero(1);
    bad.checkpoints = {bad.t0, bad.T};
    auto res = run_ensemble(bad, 3, Integrator::isihd);
    CHECK(res.stats.n_divergent == 3);
    CHECK(res.stats.times.empty());
  }
  SUBCASE("invalid path count rejected") {
    CHECK_THROWS_AS(run_ensemble(cfg, 0, Integrator::isihd), std::invalid_argument);
  }
}

TEST_CASE("estimate_rate on synthetic data") {
  SUBCASE("planted power law recovered to machine precision") {
    Series s;
    for (int i = 0; i < 20; ++i) {
      const double t = std::pow(10.0, 1.0 + 2.0 * i / 19.0);
      s.emplace_back(t, 100.0 * std::pow(t, -2.0));
    }
    auto fit = estimate_rate(s, 10.0, 1000.0);
    CHECK(fit.slope == doctest::Approx(-2.0).epsilon(1e-6));
    CHECK(fit.n_used == 20);
    CHECK(fit.n_excluded == 0);
  }
  SUBCASE("constant series has slope 0") {
    Series s;
    for (int i = 0; i < 10; ++i) s.emplace_back(1.0 + i, 3.5);
    auto fit = estimate_rate(s, 1.0, 10.0);
    CHECK(fit.slope == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("exponential data rejected by the power fitter, matched by the exponential one") {
    Series s;
    for (int i = 0; i <= 40; ++i) {
      const double t = 1.0 + i;
      s.emplace_back(t, std::exp(-t / 4.0));
    }
    auto pow_fit = estimate_rate(s, 1.0, 41.0);
    auto exp_fit = estimate_exponential_rate(s, 1.0, 41.0);
    CHECK(pow_fit.residual_se > 10.0 * exp_fit.residual_se + 0.1);
    CHECK(exp_fit.slope == doctest::Approx(-0.25).epsilon(1e-10));
  }
  SUBCASE("dominated exponential tail: slope in (-0.26, -0.24) on [20, 40]") {
    Series s;
    for (int i = 0; i <= 80; ++i) {
      const double t = 0.5 * i;
      s.emplace_back(t, std::exp(-t) + std::exp(-t / 4.0));
    }
    auto fit = estimate_exponential_rate(s, 20.0, 40.0);
    CHECK(fit.slope > -0.26);
    CHECK(fit.slope < -0.24);
  }
  SUBCASE("planted exponents with 1% noise recovered within 0.05") {
    std::mt19937_64 gen(7);
    std::normal_distribution<double> noise(0.0, 0.01);
    for (double p : {-0.5, -1.0, -2.0, -3.0}) {
      Series s;
      for (int i = 0; i < 40; ++i) {
        const double t = std::pow(10.0, 1.0 + 2.0 * i / 39.0);
        s.emplace_back(t, std::pow(t, p) * (1.0 + noise(gen)));
      }
      auto fit = estimate_rate(s, 10.0, 1000.0);
      CHECK(std::abs(fit.slope - p) < 0.05);
    }
  }
  SUBCASE("nonpositive values excluded with count; short windows rejected") {
    Series s;
    for (int i = 0; i < 10; ++i) s.emplace_back(1.0 + i, (i % 2 == 0) ? 1.0 : -1.0);
    auto fit = estimate_rate(s, 1.0, 10.0);
    CHECK(fit.n_used == 5);
    CHECK(fit.n_excluded == 5);
    Series tiny(s.begin(), s.begin() + 4);
    CHECK_THROWS_AS(estimate_rate(tiny, 1.0, 10.0), std::invalid_argument);
  }
  SUBCASE("JSON export") {
    Series s;
    for (int i = 0; i < 10; ++i) s.emplace_back(1.0 + i, 2.0 / (1.0 + i));
    auto js = estimate_rate(s, 1.0, 10.0).to_json();
    CHECK(js.find("\"slope\"") != std::string::npos);
    CHECK(js.find("\"window\"") != std::string::npos);
  }
}

TEST_CASE("as_diagnostics") {
  SUBCASE("deterministic quadratic: Gamma^2-scaled gap bounded and decaying on the tail") {
    auto cfg = quadratic_config(0.0, 200.0);
    auto traj = simulate_path(cfg, 0, Integrator::isihd);
    auto gamma = cfg.gamma;
    auto weight = [gamma](double t) {
      const double G = compute_Gamma(gamma, t);
      return G * G;
    };
    auto d = as_diagnostics(traj, weight);
    CHECK(std::isfinite(d.tail_sup));
    CHECK(d.tail_sup > 0.0);
    CHECK(d.half_sup_late <= d.half_sup_early);
    CHECK(d.tail_integral >= 0.0);
  }
  SUBCASE("constant weight on a flat gap grows linearly with the horizon") {
    auto one = [](double) { return 1.0; };
    auto d1 = as_diagnostics(synthetic_flat(0.0, 100.0, 201, 1.0), one, 0.5);
    auto d2 = as_diagnostics(synthetic_flat(0.0, 200.0, 401, 1.0), one, 0.5);
    CHECK(d1.tail_integral == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(d2.tail_integral == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(d1.halving_ratio == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("trajectory started at the minimizer is identically zero") {
    auto cfg = quadratic_config(0.0, 50.0);
    cfg.x0 = Vector::Zero(4);
    auto traj = simulate_path(cfg, 0, Integrator::isihd);
    auto d = as_diagnostics(traj, [](double) { return 1.0; });
    CHECK(d.tail_integral == 0.0);
    CHECK(d.tail_sup == 0.0);
    for (const auto& [t, y] : d.dist_series) CHECK(y == 0.0);
  }
  SUBCASE("argument validation and JSON export") {
    auto tr = synthetic_flat(0.0, 10.0, 11, 1.0);
    CHECK_THROWS_AS(as_diagnostics(tr, [](double) { return 1.0; }, 1.0),
                    std::invalid_argument);
    Trajectory empty;
    CHECK_THROWS_AS(as_diagnostics(empty, [](double) { return 1.0; }),
                    std::invalid_argument);
    auto js = as_diagnostics(tr, [](double) { return 1.0; }).to_json();
    CHECK(js.find("\"tail_integral\"") != std::string::npos);
    CHECK(js.find("\"halving_ratio\"") != std::string::npos);
  }
}

TEST_CASE("envelope_fit") {
  auto env = [](double t) { return std::exp(-t / 4.0); };
  SUBCASE("y = 3 env gives C = 3") {
    Series s;
    for (int i = 0; i <= 20; ++i) s.emplace_back(i, 3.0 * env(i));
    CHECK(envelope_fit(s, env, 0.0, 20.0) == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("y = env (1 + 1/t) on t >= 1 gives C = 2 at t = 1") {
    Series s;
    for (int i = 1; i <= 20; ++i) s.emplace_back(i, env(i) * (1.0 + 1.0 / i));
    CHECK(envelope_fit(s, env, 1.0, 20.0) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("nonpositive envelope and empty windows rejected") {
    Series s{{1.0, 1.0}, {2.0, 1.0}};
    CHECK_THROWS_AS(envelope_fit(s, [](double) { return 0.0; }, 1.0, 2.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(envelope_fit(s, env, 5.0, 6.0), std::invalid_argument);
  }
}

TEST_CASE("monotone coupling: terminal mean f_gap nondecreasing in sigma0") {
  const int n_paths = 48;
  double prev_mean = -1.0, prev_se = 0.0;
  for (double sigma0 : {0.02, 0.08, 0.32}) {
    auto cfg = quadratic_config(sigma0, 60.0);
    auto res = run_ensemble(cfg, n_paths, Integrator::isihd, 4, nullptr, false);
    REQUIRE(res.stats.n_divergent == 0);
    const auto& terminal = res.stats.fields[0].back();
    if (prev_mean >= 0.0)
      CHECK(terminal.mean + 2.0 * (terminal.se + prev_se) >= prev_mean);
    prev_mean = terminal.mean;
    prev_se = terminal.se;
  }
}

TEST_CASE("median_terminal_path picks a surviving path with median terminal gap") {
  auto cfg = quadratic_config(0.1, 60.0);
  auto res = run_ensemble(cfg, 9, Integrator::isihd);
  const int id = median_terminal_path(res.trajectories);
  CHECK(id >= 0);
  CHECK(id < 9);
  const double med = res.trajectories[id].records.back().f_gap;
  int below = 0, above = 0;
  for (const auto& tr : res.trajectories) {
    if (tr.records.back().f_gap < med) ++below;
    if (tr.records.back().f_gap > med) ++above;
  }
  CHECK(below <= 4);
  CHECK(above <= 4);
}
