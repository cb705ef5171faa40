#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "isihd/lyapunov.hpp"
#include "isihd/montecarlo.hpp"

namespace isihd {

// configuration problems carry the offending field for actionable messages
struct config_error : std::runtime_error {
  explicit config_error(const std::string& field, const std::string& what)
      : std::runtime_error("config field '" + field + "': " + what), field(field) {}
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
  std::string field;
};

// Lyapunov-verification block of an experiment
struct LyapunovSpec {
  std::string quadruple = "none";  // none | cor1 | corabcdd | custom
  double alpha = 4.0, gamma0 = 1.0, beta1 = 0.5, b = 2.5;  // cor1
  double beta = 0.1;                                       // corabcdd
  // custom: a, b, d constant; c affine in t
  double q_a = 0.0, q_b = 0.0, q_c0 = 0.0, q_c1 = 1.0, q_d = 0.0, q_t_hat = 1.0;
  double grid_lo = 0.0;  // 0 = quadruple t_hat
  double grid_hi = 1e4;
  int grid_n = 500;
};

// rate-fit block
struct RatesSpec {
  std::string field = "f_gap_plus_speed2";  // f_gap | speed2 | f_gap_plus_speed2 | energy
  std::string fit = "power";                // power | exponential
  double window_lo = 0.0, window_hi = 0.0;  // 0,0 = last decade [T/10, T]
  double band_lo = -1e300, band_hi = 1e300; // acceptance band on the slope
};

struct ExperimentConfig {
  std::string name = "experiment";

  // objective
  std::string problem = "quadratic";  // quadratic | least-squares | logsumexp
  int dim = 1;
  std::vector<double> spectrum;  // quadratic eigenvalues / least-squares singular values^2
  int rank = 0;                  // least-squares rank (0 = dim)
  double rho = 1.0;              // logsumexp smoothing

  // schedules
  std::string gamma_kind = "power";  // power | constant
  double gamma_alpha = 4.0, gamma_r = 1.0, gamma_bar = 1.0;
  std::string beta_kind = "zero";  // zero | constant | affine-inverse
  double beta_gamma0 = 0.0, beta_beta1 = 0.0, beta_const = 0.0;
  std::string sigma_kind = "none";  // none | constant | power | exponential
  double sigma0 = 0.0, sigma_q = 0.0, sigma_c = 0.0;
  std::string noise_kind = "isotropic";  // isotropic | state-modulated

  std::string integrator = "isihd";  // isihd | refor | igs | sgf
  double t0 = 1.0, T = 10.0, h = 0.01;
  int n_checkpoints = 200;  // geometric policy
  int n_paths = 1;
  uint64_t master_seed = 0;

  // initial state fills
  double x0_fill = 1.0, v0_fill = 0.0;

  // optional energy tracked along paths
  std::string energy_kind = "none";  // none | strongly-convex | quadruple
  double energy_mu = 1.0;

  LyapunovSpec lyapunov;
  RatesSpec rates;

  void validate() const;  // throws config_error
};

// --- configuration I/O -------------------------------------------------------

std::vector<std::string> list_presets();
ExperimentConfig preset_config(const std::string& name);

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);  // canonical (sorted keys)
std::string config_hash(const ExperimentConfig& cfg);       // FNV-1a 64, hex

// --- assembly ----------------------------------------------------------------

Objective make_objective(const ExperimentConfig& cfg);
SdeConfig make_sde(const ExperimentConfig& cfg);
Integrator integrator_of(const ExperimentConfig& cfg);
EnergyFn make_energy(const ExperimentConfig& cfg);  // may be null
// builds the quadruple of cfg.lyapunov; out-of-range cor1 parameters fall back
// to the raw formulas so the verifier can report the failure
CoefficientQuadruple make_quadruple(const ExperimentConfig& cfg);

// --- CLI operations (exit-code semantics: 0 ok, 1 analysis failed, 2 config) --

int cli_simulate(const ExperimentConfig& cfg, const std::string& out_dir, int threads,
                 const std::string& format = "csv");
int cli_ensemble(const ExperimentConfig& cfg, const std::string& out_dir, int threads,
                 const std::string& format = "csv");
int cli_verify_lyapunov(const ExperimentConfig& cfg, const std::string& out_dir);
int cli_rates(const ExperimentConfig& cfg, const std::string& out_dir, int threads);

void write_plot_script(const std::string& out_dir);

}  // namespace isihd
