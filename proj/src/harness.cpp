#include "isihd/harness.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace isihd {

namespace {

std::string fmt(double x) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, p);
}

const std::vector<std::string> kPresets = {"cor1",          "corabcdd-tr",
                                           "strongly-convex", "beta-zero-atr",
                                           "weak-convergence", "sgf-baseline"};

std::vector<double> log_spectrum(double lo, double hi, int n) {
  std::vector<double> s;
  for (int i = 0; i < n; ++i)
    s.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return s;
}

// --- typed JSON accessors with field-level errors ---------------------------

template <typename T>
T get_as(const json& j, const std::string& field);

template <>
double get_as<double>(const json& j, const std::string& field) {
  if (!j.is_number()) throw config_error(field, "expected a number");
  return j.get<double>();
}
template <>
int get_as<int>(const json& j, const std::string& field) {
  if (!j.is_number_integer()) throw config_error(field, "expected an integer");
  return j.get<int>();
}
template <>
uint64_t get_as<uint64_t>(const json& j, const std::string& field) {
  if (!j.is_number_unsigned() && !j.is_number_integer())
    throw config_error(field, "expected a nonnegative integer");
  return j.get<uint64_t>();
}
template <>
std::string get_as<std::string>(const json& j, const std::string& field) {
  if (!j.is_string()) throw config_error(field, "expected a string");
  return j.get<std::string>();
}
template <>
std::vector<double> get_as<std::vector<double>>(const json& j, const std::string& field) {
  if (!j.is_array()) throw config_error(field, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : j) {
    if (!e.is_number()) throw config_error(field, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

// assigns j[key] into dst when present, tracking consumed keys
struct Reader {
  const json& j;
  const std::string prefix;
  std::vector<std::string> seen;

  template <typename T>
  void opt(const std::string& key, T& dst) {
    seen.push_back(key);
    auto it = j.find(key);
    if (it != j.end()) dst = get_as<T>(*it, prefix + key);
  }
  void reject_unknown() const {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (std::find(seen.begin(), seen.end(), it.key()) == seen.end())
        throw config_error(prefix + it.key(), "unknown field");
  }
};

void read_lyapunov(const json& j, LyapunovSpec& s) {
  Reader r{j, "lyapunov."};
  r.opt("quadruple", s.quadruple);
  r.opt("alpha", s.alpha);
  r.opt("gamma0", s.gamma0);
  r.opt("beta1", s.beta1);
  r.opt("b", s.b);
  r.opt("beta", s.beta);
  r.opt("q_a", s.q_a);
  r.opt("q_b", s.q_b);
  r.opt("q_c0", s.q_c0);
  r.opt("q_c1", s.q_c1);
  r.opt("q_d", s.q_d);
  r.opt("q_t_hat", s.q_t_hat);
  r.opt("grid_lo", s.grid_lo);
  r.opt("grid_hi", s.grid_hi);
  r.opt("grid_n", s.grid_n);
  r.reject_unknown();
}

void read_rates(const json& j, RatesSpec& s) {
  Reader r{j, "rates."};
  r.opt("field", s.field);
  r.opt("fit", s.fit);
  r.opt("window_lo", s.window_lo);
  r.opt("window_hi", s.window_hi);
  r.opt("band_lo", s.band_lo);
  r.opt("band_hi", s.band_hi);
  r.reject_unknown();
}

json lyapunov_json(const LyapunovSpec& s) {
  return json{{"quadruple", s.quadruple}, {"alpha", s.alpha}, {"gamma0", s.gamma0},
              {"beta1", s.beta1},         {"b", s.b},         {"beta", s.beta},
              {"q_a", s.q_a},             {"q_b", s.q_b},     {"q_c0", s.q_c0},
              {"q_c1", s.q_c1},           {"q_d", s.q_d},     {"q_t_hat", s.q_t_hat},
              {"grid_lo", s.grid_lo},     {"grid_hi", s.grid_hi}, {"grid_n", s.grid_n}};
}

json rates_json(const RatesSpec& s) {
  return json{{"field", s.field},         {"fit", s.fit},
              {"window_lo", s.window_lo}, {"window_hi", s.window_hi},
              {"band_lo", s.band_lo},     {"band_hi", s.band_hi}};
}

bool one_of(const std::string& v, std::initializer_list<const char*> opts) {
  for (const char* o : opts)
    if (v == o) return true;
  return false;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
}

std::string trajectory_csv(const Trajectory& tr) {
  std::string out = "t,f_gap,speed2,grad2,grad_shift2,dist2,energy\n";
  for (const auto& r : tr.records) {
    out += fmt(r.t);
    for (double v : {r.f_gap, r.speed2, r.grad2, r.grad_shift2, r.dist2, r.energy})
      out += "," + fmt(v);
    out += "\n";
  }
  return out;
}

json trajectory_json(const Trajectory& tr) {
  json rows = json::array();
  for (const auto& r : tr.records)
    rows.push_back({{"t", r.t},
                    {"f_gap", r.f_gap},
                    {"speed2", r.speed2},
                    {"grad2", r.grad2},
                    {"grad_shift2", r.grad_shift2},
                    {"dist2", r.dist2},
                    {"energy", r.energy}});
  json j;
  j["path_id"] = tr.path_id;
  j["diverged"] = tr.diverged;
  j["records"] = std::move(rows);
  return j;
}

json stats_json(const EnsembleStats& st) {
  json j;
  j["n_paths"] = st.n_paths;
  j["n_divergent"] = st.n_divergent;
  j["times"] = st.times;
  for (int f = 0; f < kNumFields; ++f) {
    json col = json::array();
    for (const auto& fs : st.fields[f])
      col.push_back({{"mean", fs.mean},
                     {"se", fs.se},
                     {"q10", fs.q10},
                     {"q50", fs.q50},
                     {"q90", fs.q90}});
    j["fields"][kFieldNames[f]] = std::move(col);
  }
  return j;
}

json manifest_json(const ExperimentConfig& cfg, const std::vector<std::string>& files,
                   int n_divergent) {
  json j;
  j["config_hash"] = config_hash(cfg);
  j["config"] = json::parse(serialize_config(cfg));
  j["seed"] = cfg.master_seed;
  j["n_paths"] = cfg.n_paths;
  j["n_divergent"] = n_divergent;
  j["version"] = "1.0.0";
  j["files"] = files;
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (name.empty()) throw config_error("name", "must be nonempty");
  if (!one_of(problem, {"quadratic", "least-squares", "logsumexp"}))
    throw config_error("problem", "unknown problem '" + problem + "'");
  if (dim <= 0) throw config_error("dim", "must be positive");
  if (problem == "quadratic" && static_cast<int>(spectrum.size()) != dim)
    throw config_error("spectrum", "must list one eigenvalue per dimension");
  if (problem == "least-squares") {
    const int r = rank == 0 ? dim : rank;
    if (r < 1 || r > dim) throw config_error("rank", "must be in [1, dim]");
    if (static_cast<int>(spectrum.size()) != r)
      throw config_error("spectrum", "must list one value per nonzero singular direction");
  }
  if (problem == "logsumexp" && rho <= 0.0) throw config_error("rho", "must be positive");
  if (!one_of(gamma_kind, {"power", "constant"}))
    throw config_error("gamma_kind", "unknown kind '" + gamma_kind + "'");
  if (!one_of(beta_kind, {"zero", "constant", "affine-inverse"}))
    throw config_error("beta_kind", "unknown kind '" + beta_kind + "'");
  if (!one_of(sigma_kind, {"none", "constant", "power", "exponential"}))
    throw config_error("sigma_kind", "unknown kind '" + sigma_kind + "'");
  if (!one_of(noise_kind, {"isotropic", "state-modulated"}))
    throw config_error("noise_kind", "unknown kind '" + noise_kind + "'");
  if (!one_of(integrator, {"isihd", "refor", "igs", "sgf"}))
    throw config_error("integrator", "unknown integrator '" + integrator + "'");
  if (integrator == "igs" && beta_kind != "zero")
    throw config_error("integrator", "igs requires beta_kind 'zero'");
  if (integrator == "refor" && beta_kind == "zero")
    throw config_error("integrator", "refor requires a nonzero beta schedule");
  if (!(h > 0.0)) throw config_error("h", "must be positive");
  if (!(T > t0)) throw config_error("T", "must exceed t0");
  if (n_checkpoints < 2) throw config_error("n_checkpoints", "must be at least 2");
  if (n_paths < 1) throw config_error("n_paths", "must be at least 1");
  if (!one_of(energy_kind, {"none", "strongly-convex", "quadruple"}))
    throw config_error("energy_kind", "unknown kind '" + energy_kind + "'");
  if (!one_of(lyapunov.quadruple, {"none", "cor1", "corabcdd", "custom"}))
    throw config_error("lyapunov.quadruple", "unknown kind '" + lyapunov.quadruple + "'");
  if (lyapunov.grid_n < 2) throw config_error("lyapunov.grid_n", "must be at least 2");
  if (!one_of(rates.field, {"f_gap", "speed2", "f_gap_plus_speed2", "energy"}))
    throw config_error("rates.field", "unknown field '" + rates.field + "'");
  if (!one_of(rates.fit, {"power", "exponential"}))
    throw config_error("rates.fit", "unknown fit '" + rates.fit + "'");
  if (rates.field == "energy" && energy_kind == "none")
    throw config_error("rates.field", "energy fits need an energy_kind");
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

std::vector<std::string> list_presets() { return kPresets; }

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  if (name == "cor1") {
    // inertial dynamics with Hessian damping, gamma = 4/t, beta = 0.5 + 1/t
    c.problem = "quadratic";
    c.dim = 10;
    c.spectrum = log_spectrum(1.0, 100.0, 10);
    c.gamma_kind = "power";
    c.gamma_alpha = 4.0;
    c.gamma_r = 1.0;
    c.beta_kind = "affine-inverse";
    c.beta_gamma0 = 0.5;
    c.beta_beta1 = 1.0;
    c.sigma_kind = "power";
    c.sigma0 = 0.1;
    c.sigma_q = 1.6;
    c.integrator = "isihd";
    c.t0 = 1.0;
    c.T = 1000.0;
    c.h = 0.01;
    c.n_paths = 256;
    c.master_seed = 20260823u;
    c.lyapunov.quadruple = "cor1";
    c.rates.field = "f_gap_plus_speed2";
    c.rates.fit = "power";
    c.rates.window_lo = 100.0;
    c.rates.window_hi = 1000.0;
    c.rates.band_lo = -2.6;
    c.rates.band_hi = -1.8;
  } else if (name == "corabcdd-tr") {
    // constant geometric damping with slowly vanishing gamma = 1/sqrt(t)
    c.problem = "quadratic";
    c.dim = 10;
    c.spectrum = log_spectrum(0.02, 0.35, 10);
    c.gamma_kind = "power";
    c.gamma_alpha = 1.0;
    c.gamma_r = 0.5;
    c.beta_kind = "constant";
    c.beta_const = 0.1;
    c.sigma_kind = "power";
    c.sigma0 = 0.1;
    c.sigma_q = 1.1;
    c.integrator = "isihd";
    c.t0 = 1.0;
    c.T = 1e4;
    c.h = 0.02;
    c.n_paths = 64;
    c.master_seed = 20260824u;
    c.lyapunov.quadruple = "corabcdd";
    c.lyapunov.beta = 0.1;
    c.lyapunov.b = 0.9;
    c.rates.field = "f_gap_plus_speed2";
    c.rates.fit = "power";
    c.rates.band_lo = -3.0;
    c.rates.band_hi = 0.0;
  } else if (name == "strongly-convex") {
    c.problem = "quadratic";
    c.dim = 4;
    c.spectrum = {1.0, 2.0, 5.0, 10.0};
    c.gamma_kind = "constant";
    c.gamma_bar = 2.0;  // 2 sqrt(mu)
    c.beta_kind = "constant";
    c.beta_const = 0.25;
    c.sigma_kind = "exponential";
    c.sigma0 = 1.0;
    c.sigma_c = 0.5;
    c.integrator = "isihd";
    c.t0 = 0.0;
    c.T = 40.0;
    c.h = 0.005;
    c.n_paths = 256;
    c.master_seed = 20260825u;
    c.energy_kind = "strongly-convex";
    c.energy_mu = 1.0;
    c.rates.field = "energy";
    c.rates.fit = "exponential";
    c.rates.window_lo = 10.0;
    c.rates.window_hi = 40.0;
    c.rates.band_lo = -0.31;
    c.rates.band_hi = -0.19;
  } else if (name == "beta-zero-atr") {
    // no geometric damping, gamma = 1/sqrt(t), slower-decaying noise
    c.problem = "quadratic";
    c.dim = 10;
    c.spectrum = log_spectrum(0.02, 0.35, 10);
    c.gamma_kind = "power";
    c.gamma_alpha = 1.0;
    c.gamma_r = 0.5;
    c.beta_kind = "zero";
    c.sigma_kind = "power";
    c.sigma0 = 0.1;
    c.sigma_q = 1.1;
    c.integrator = "igs";
    c.t0 = 1.0;
    c.T = 1e4;
    c.h = 0.02;
    c.n_paths = 128;
    c.master_seed = 20260826u;
    c.rates.field = "f_gap";
    c.rates.fit = "power";
    c.rates.band_lo = -1.3;
    c.rates.band_hi = -0.8;
  } else if (name == "weak-convergence") {
    // rank-deficient least squares: the solution set is a 10-dim affine space
    c.problem = "least-squares";
    c.dim = 20;
    c.rank = 10;
    c.spectrum = log_spectrum(0.02, 0.15, 10);
    c.gamma_kind = "power";
    c.gamma_alpha = 4.0;
    c.gamma_r = 1.0;
    c.beta_kind = "zero";
    c.sigma_kind = "power";
    c.sigma0 = 0.1;
    c.sigma_q = 1.6;
    c.integrator = "igs";
    c.t0 = 1.0;
    c.T = 2000.0;
    c.h = 0.01;
    c.n_paths = 64;
    c.master_seed = 20260827u;
    c.x0_fill = 1.0;
    c.v0_fill = 0.5;
    c.rates.field = "f_gap";
    c.rates.fit = "power";
    c.rates.band_lo = -4.0;
    c.rates.band_hi = 0.0;
  } else if (name == "sgf-baseline") {
    // first-order stochastic gradient flow for comparison
    c.problem = "quadratic";
    c.dim = 10;
    c.spectrum = log_spectrum(1.0, 100.0, 10);
    c.gamma_kind = "constant";
    c.gamma_bar = 1.0;  // unused by the integrator, kept for the stability guard
    c.beta_kind = "zero";
    c.sigma_kind = "power";
    c.sigma0 = 0.1;
    c.sigma_q = 1.6;
    c.integrator = "sgf";
    c.t0 = 1.0;
    c.T = 1000.0;
    c.h = 0.01;
    c.n_paths = 64;
    c.master_seed = 20260828u;
    c.rates.field = "f_gap";
    c.rates.fit = "power";
    c.rates.band_lo = -4.0;
    c.rates.band_hi = 0.0;
  } else {
    throw config_error("preset", "unknown preset '" + name + "'");
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

std::string serialize_config(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["problem"] = c.problem;
  j["dim"] = c.dim;
  j["spectrum"] = c.spectrum;
  j["rank"] = c.rank;
  j["rho"] = c.rho;
  j["gamma_kind"] = c.gamma_kind;
  j["gamma_alpha"] = c.gamma_alpha;
  j["gamma_r"] = c.gamma_r;
  j["gamma_bar"] = c.gamma_bar;
  j["beta_kind"] = c.beta_kind;
  j["beta_gamma0"] = c.beta_gamma0;
  j["beta_beta1"] = c.beta_beta1;
  j["beta_const"] = c.beta_const;
  j["sigma_kind"] = c.sigma_kind;
  j["sigma0"] = c.sigma0;
  j["sigma_q"] = c.sigma_q;
  j["sigma_c"] = c.sigma_c;
  j["noise_kind"] = c.noise_kind;
  j["integrator"] = c.integrator;
  j["t0"] = c.t0;
  j["T"] = c.T;
  j["h"] = c.h;
  j["n_checkpoints"] = c.n_checkpoints;
  j["n_paths"] = c.n_paths;
  j["master_seed"] = c.master_seed;
  j["x0_fill"] = c.x0_fill;
  j["v0_fill"] = c.v0_fill;
  j["energy_kind"] = c.energy_kind;
  j["energy_mu"] = c.energy_mu;
  j["lyapunov"] = lyapunov_json(c.lyapunov);
  j["rates"] = rates_json(c.rates);
  return j.dump(2);  // keys are lexicographically sorted: canonical form
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw config_error("config root must be a JSON object");

  ExperimentConfig c;
  Reader r{j, ""};
  r.opt("name", c.name);
  r.opt("problem", c.problem);
  r.opt("dim", c.dim);
  r.opt("spectrum", c.spectrum);
  r.opt("rank", c.rank);
  r.opt("rho", c.rho);
  r.opt("gamma_kind", c.gamma_kind);
  r.opt("gamma_alpha", c.gamma_alpha);
  r.opt("gamma_r", c.gamma_r);
  r.opt("gamma_bar", c.gamma_bar);
  r.opt("beta_kind", c.beta_kind);
  r.opt("beta_gamma0", c.beta_gamma0);
  r.opt("beta_beta1", c.beta_beta1);
  r.opt("beta_const", c.beta_const);
  r.opt("sigma_kind", c.sigma_kind);
  r.opt("sigma0", c.sigma0);
  r.opt("sigma_q", c.sigma_q);
  r.opt("sigma_c", c.sigma_c);
  r.opt("noise_kind", c.noise_kind);
  r.opt("integrator", c.integrator);
  r.opt("t0", c.t0);
  r.opt("T", c.T);
  r.opt("h", c.h);
  r.opt("n_checkpoints", c.n_checkpoints);
  r.opt("n_paths", c.n_paths);
  r.opt("master_seed", c.master_seed);
  r.opt("x0_fill", c.x0_fill);
  r.opt("v0_fill", c.v0_fill);
  r.opt("energy_kind", c.energy_kind);
  r.opt("energy_mu", c.energy_mu);
  r.seen.push_back("lyapunov");
  r.seen.push_back("rates");
  r.reject_unknown();
  if (auto it = j.find("lyapunov"); it != j.end()) {
    if (!it->is_object()) throw config_error("lyapunov", "expected an object");
    read_lyapunov(*it, c.lyapunov);
  }
  if (auto it = j.find("rates"); it != j.end()) {
    if (!it->is_object()) throw config_error("rates", "expected an object");
    read_rates(*it, c.rates);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string canon = serialize_config(cfg);
  uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a 64
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = hex[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

Objective make_objective(const ExperimentConfig& c) {
  if (c.problem == "quadratic")
    return make_quadratic(c.spectrum, Vector::Zero(c.dim), 0.0);
  if (c.problem == "least-squares") {
    const int r = c.rank == 0 ? c.dim : c.rank;
    Matrix M = Matrix::Zero(c.dim, c.dim);
    for (int i = 0; i < r; ++i) M(i, i) = std::sqrt(c.spectrum[i]);
    const Vector z = 2.0 * Vector::Ones(c.dim);
    return make_least_squares(M, M * z);
  }
  // logsumexp: canonical directions, minimizer at the origin
  Matrix A = Matrix::Identity(c.dim, c.dim);
  return make_smoothed_logsumexp(A, Vector::Zero(c.dim), c.rho);
}

Integrator integrator_of(const ExperimentConfig& c) {
  if (c.integrator == "isihd") return Integrator::isihd;
  if (c.integrator == "refor") return Integrator::refor;
  if (c.integrator == "igs") return Integrator::igs;
  return Integrator::sgf;
}

SdeConfig make_sde(const ExperimentConfig& c) {
  c.validate();
  SdeConfig s;
  s.t0 = c.t0;
  s.T = c.T;
  s.h = c.h;
  const double sched_t0 = c.t0 > 0.0 ? c.t0 : 1e-9;
  s.gamma = c.gamma_kind == "power"
                ? DampingSchedule::power_kind(c.gamma_alpha, c.gamma_r, sched_t0)
                : DampingSchedule::constant_kind(c.gamma_bar, c.t0);
  if (c.beta_kind == "zero")
    s.beta = GeometricSchedule::zero_kind(c.t0);
  else if (c.beta_kind == "constant")
    s.beta = GeometricSchedule::constant_kind(c.beta_const, c.t0);
  else
    s.beta = GeometricSchedule::affine_inverse_kind(c.beta_gamma0, c.beta_beta1, sched_t0);
  if (c.sigma_kind != "none") {
    DiffusionSchedule sigma =
        c.sigma_kind == "constant"
            ? DiffusionSchedule::constant_kind(c.sigma0, c.t0)
            : (c.sigma_kind == "power"
                   ? DiffusionSchedule::power_kind(c.sigma0, c.sigma_q, sched_t0)
                   : DiffusionSchedule::exponential_kind(c.sigma0, c.sigma_c, c.t0));
    s.noise = c.noise_kind == "isotropic" ? NoiseModel::isotropic(sigma, c.dim)
                                          : NoiseModel::state_modulated(sigma, c.dim);
  }
  s.objective = make_objective(c);
  s.x0 = c.x0_fill * Vector::Ones(c.dim);
  s.v0 = c.v0_fill * Vector::Ones(c.dim);
  s.master_seed = c.master_seed;
  s.checkpoints = SdeConfig::geometric_checkpoints(c.t0, c.T, c.h, c.n_checkpoints);
  s.validate();
  return s;
}

EnergyFn make_energy(const ExperimentConfig& c) {
  if (c.energy_kind == "none") return nullptr;
  auto obj = make_objective(c);
  if (c.energy_kind == "strongly-convex") {
    const double mu = c.energy_mu;
    const double beta = c.beta_const;
    return [mu, beta, obj](double t, const Vector& x, const Vector& v) {
      return energy_strongly_convex(mu, beta, t, x, v, obj);
    };
  }
  // quadruple energy along the path
  auto q = make_quadruple(c);
  auto sde = make_sde(c);
  const Vector x_star = obj.project_solution(sde.x0);
  auto beta = sde.beta;
  return [q, beta, obj, x_star](double t, const Vector& x, const Vector& v) {
    return energy_general(q, beta, t, x, v, obj, x_star);
  };
}

CoefficientQuadruple make_quadruple(const ExperimentConfig& c) {
  const auto& l = c.lyapunov;
  if (l.quadruple == "cor1") {
    try {
      return quadruple_cor1(l.alpha, l.gamma0, l.beta1, l.b);
    } catch (const std::invalid_argument&) {
      // out-of-range parameters: keep the raw formulas so the verifier can
      // exhibit which condition breaks
      const double alpha = l.alpha, gamma0 = l.gamma0, beta1 = l.beta1, b = l.b;
      auto a = [=](double t) {
        const double N = (alpha - b) * gamma0 * t + beta1 * (alpha + 1.0 - b);
        const double D = t * t - alpha * gamma0 * t - beta1 * (alpha + 1.0);
        return t * t * (1.0 + N / D);
      };
      const double root =
          0.5 * (alpha * gamma0 + std::sqrt(alpha * alpha * gamma0 * gamma0 +
                                            4.0 * beta1 * (alpha + 1.0)));
      return quadruple_custom(a, [b](double) { return b; }, [](double t) { return t; },
                              [=](double) { return b * (alpha - 1.0 - b); },
                              std::max(1.05 * root, 1.0));
    }
  }
  if (l.quadruple == "corabcdd") {
    const double t0 = c.t0 > 0.0 ? c.t0 : 1e-9;
    const auto gamma = c.gamma_kind == "power"
                           ? DampingSchedule::power_kind(c.gamma_alpha, c.gamma_r, t0)
                           : DampingSchedule::constant_kind(c.gamma_bar, t0);
    return quadruple_corabcdd(gamma, l.beta, l.b);
  }
  if (l.quadruple == "custom") {
    const double a0 = l.q_a, b0 = l.q_b, c0 = l.q_c0, c1 = l.q_c1, d0 = l.q_d;
    return quadruple_custom([a0](double) { return a0; }, [b0](double) { return b0; },
                            [c0, c1](double t) { return c0 + c1 * t; },
                            [d0](double) { return d0; }, l.q_t_hat);
  }
  throw config_error("lyapunov.quadruple", "no quadruple configured");
}

// ---------------------------------------------------------------------------
// CLI operations
// ---------------------------------------------------------------------------

namespace {

int run_and_emit(const ExperimentConfig& cfg, const std::string& out_dir, int threads,
                 const std::string& format, bool per_path) {
  if (format != "csv" && format != "json")
    throw config_error("format", "must be 'csv' or 'json'");
  auto sde = make_sde(cfg);
  auto energy = make_energy(cfg);
  auto res = run_ensemble(sde, cfg.n_paths, integrator_of(cfg), threads, energy, per_path);

  fs::create_directories(out_dir);
  std::vector<std::string> files;
  const std::string ext = format == "csv" ? ".csv" : ".json";
  if (per_path) {
    for (const auto& tr : res.trajectories) {
      char name[32];
      std::snprintf(name, sizeof(name), "path_%04d%s", tr.path_id, ext.c_str());
      if (format == "csv")
        write_file(fs::path(out_dir) / name, trajectory_csv(tr));
      else
        write_file(fs::path(out_dir) / name, trajectory_json(tr).dump(2));
      files.push_back(name);
    }
  }
  if (format == "csv")
    write_file(fs::path(out_dir) / "ensemble.csv", res.stats.to_csv());
  else
    write_file(fs::path(out_dir) / "ensemble.json", stats_json(res.stats).dump(2));
  files.push_back("ensemble" + ext);
  write_plot_script(out_dir);
  files.push_back("plot.py");
  write_file(fs::path(out_dir) / "manifest.json",
             manifest_json(cfg, files, res.stats.n_divergent).dump(2));
  return res.stats.n_divergent > 0 ? 1 : 0;
}

}  // namespace

int cli_simulate(const ExperimentConfig& cfg, const std::string& out_dir, int threads,
                 const std::string& format) {
  return run_and_emit(cfg, out_dir, threads, format, /*per_path=*/true);
}

int cli_ensemble(const ExperimentConfig& cfg, const std::string& out_dir, int threads,
                 const std::string& format) {
  return run_and_emit(cfg, out_dir, threads, format, /*per_path=*/false);
}

int cli_verify_lyapunov(const ExperimentConfig& cfg, const std::string& out_dir) {
  auto q = make_quadruple(cfg);
  const auto& l = cfg.lyapunov;

  // the verification schedules must match the quadruple's own regime
  DampingSchedule gamma;
  GeometricSchedule beta;
  const double sched_t0 = 1e-3;
  if (l.quadruple == "cor1") {
    gamma = DampingSchedule::power_kind(l.alpha, 1.0, sched_t0);
    beta = GeometricSchedule::affine_inverse_kind(l.gamma0, l.beta1, sched_t0);
  } else if (l.quadruple == "corabcdd") {
    const double t0 = cfg.t0 > 0.0 ? cfg.t0 : 1e-9;
    gamma = cfg.gamma_kind == "power"
                ? DampingSchedule::power_kind(cfg.gamma_alpha, cfg.gamma_r, t0)
                : DampingSchedule::constant_kind(cfg.gamma_bar, t0);
    beta = GeometricSchedule::constant_kind(l.beta, t0);
  } else {
    auto sde = make_sde(cfg);
    gamma = sde.gamma;
    beta = sde.beta;
  }

  const double lo = l.grid_lo > 0.0 ? l.grid_lo : q.t_hat;
  auto rep = verify_system(q, gamma, beta, log_grid(lo, l.grid_hi, l.grid_n));

  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "system_report.json", rep.to_json());
  write_file(fs::path(out_dir) / "manifest.json",
             manifest_json(cfg, {"system_report.json"}, 0).dump(2));
  return rep.all_pass ? 0 : 1;
}

int cli_rates(const ExperimentConfig& cfg, const std::string& out_dir, int threads) {
  auto sde = make_sde(cfg);
  auto energy = make_energy(cfg);
  auto res =
      run_ensemble(sde, cfg.n_paths, integrator_of(cfg), threads, energy, false);

  Series series;
  if (cfg.rates.field == "f_gap")
    series = mean_series(res.stats, 0);
  else if (cfg.rates.field == "speed2")
    series = mean_series(res.stats, 1);
  else if (cfg.rates.field == "energy")
    series = mean_series(res.stats, 5);
  else {
    auto a = mean_series(res.stats, 0);
    auto b = mean_series(res.stats, 1);
    for (size_t i = 0; i < a.size(); ++i) series.emplace_back(a[i].first, a[i].second + b[i].second);
  }

  double lo = cfg.rates.window_lo, hi = cfg.rates.window_hi;
  if (lo == 0.0 && hi == 0.0) std::tie(lo, hi) = default_rate_window(cfg.T);
  auto fit = cfg.rates.fit == "power" ? estimate_rate(series, lo, hi)
                                      : estimate_exponential_rate(series, lo, hi);
  const bool in_band = fit.slope >= cfg.rates.band_lo && fit.slope <= cfg.rates.band_hi;

  json j = json::parse(fit.to_json());
  j["band"] = {cfg.rates.band_lo, cfg.rates.band_hi};
  j["in_band"] = in_band;
  j["n_divergent"] = res.stats.n_divergent;
  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "rates.json", j.dump(2));
  write_file(fs::path(out_dir) / "manifest.json",
             manifest_json(cfg, {"rates.json"}, res.stats.n_divergent).dump(2));
  return (in_band && res.stats.n_divergent == 0) ? 0 : 1;
}

void write_plot_script(const std::string& out_dir) {
  static const char* script = R"PY(#!/usr/bin/env python3
"""Plot ensemble statistics emitted next to this script."""
import csv
import os
import sys

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
path = os.path.join(here, "ensemble.csv")
if not os.path.exists(path):
    sys.exit("ensemble.csv not found; rerun with --format csv")

rows = list(csv.DictReader(open(path)))
t = [float(r["t"]) for r in rows]
fields = ["f_gap", "speed2", "grad2", "dist2"]
fig, ax = plt.subplots(figsize=(7, 5))
for name in fields:
    mean = [float(r[name + "_mean"]) for r in rows]
    if any(v > 0 for v in mean):
        ax.loglog(t, mean, label=name)
ax.set_xlabel("t")
ax.set_ylabel("ensemble mean")
ax.legend()
ax.grid(True, which="both", alpha=0.3)
fig.tight_layout()
out = os.path.join(here, "ensemble.png")
fig.savefig(out, dpi=150)
print("wrote", out)
)PY";
  write_file(fs::path(out_dir) / "plot.py", script);
}

}  // namespace isihd
