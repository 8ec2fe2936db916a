#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "nslab/fock.hpp"
#include "nslab/io.hpp"
#include "nslab/meanfield.hpp"
#include "nslab/nse.hpp"
#include "nslab/radial.hpp"
#include "nslab/sce.hpp"
#include "nslab/svg.hpp"

namespace nslab {

/// Parse or validation failure; line anchors the offending config entry.
struct ConfigError : std::runtime_error {
  int line;
  ConfigError(int line_, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

/// Flat dotted-key config: `section.key = value` lines, `#` comments.
class Config {
 public:
  static Config parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      std::string line = raw.substr(0, raw.find('#'));
      auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
      while (!line.empty() && is_space(line.back())) line.pop_back();
      size_t start = 0;
      while (start < line.size() && is_space(line[start])) ++start;
      line = line.substr(start);
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(line_no, "expected `key = value`");
      auto trim = [&](std::string s) {
        size_t a = 0, b = s.size();
        while (a < b && is_space(s[a])) ++a;
        while (b > a && is_space(s[b - 1])) --b;
        return s.substr(a, b - a);
      };
      std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError(line_no, "empty key");
      if (value.empty()) throw ConfigError(line_no, "empty value for `" + key + "`");
      if (cfg.entries_.count(key))
        throw ConfigError(line_no, "duplicate key `" + key + "`");
      cfg.entries_[key] = value;
      cfg.lines_[key] = line_no;
    }
    if (!cfg.entries_.count("scenario")) throw ConfigError(line_no, "missing `scenario` key");
    return cfg;
  }

  const std::string& scenario() const { return entries_.at("scenario"); }

  std::string get_string(const std::string& key, const std::string& dflt) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? dflt : it->second;
  }
  double get_double(const std::string& key, double dflt) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return dflt;
    try {
      size_t pos = 0;
      double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw ConfigError(lines_.at(key), "`" + key + "`: not a number: " + it->second);
    }
  }
  int get_int(const std::string& key, int dflt) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return dflt;
    try {
      size_t pos = 0;
      int v = std::stoi(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw ConfigError(lines_.at(key), "`" + key + "`: not an integer: " + it->second);
    }
  }

  int line_of(const std::string& key) const {
    auto it = lines_.find(key);
    return it == lines_.end() ? 0 : it->second;
  }

  /// Rejects keys outside the schema; returns quietly otherwise.
  void check_keys(const std::set<std::string>& allowed) const {
    for (const auto& [k, v] : entries_)
      if (!allowed.count(k)) throw ConfigError(lines_.at(k), "unknown key `" + k + "`");
  }

  /// Canonical re-emittable text: scenario first, remaining keys sorted.
  std::string echo() const {
    std::string out = "scenario = " + scenario() + "\n";
    for (const auto& [k, v] : entries_)
      if (k != "scenario") out += k + " = " + v + "\n";
    return out;
  }

 private:
  std::map<std::string, std::string> entries_; // ordered: echo is canonical
  std::map<std::string, int> lines_;
};

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunReport {
  std::string scenario;
  std::string config_echo;
  std::string config_sha1;
  std::vector<Assertion> assertions;
  nlohmann::json metrics;
  nlohmann::json plots = nlohmann::json::array();
  std::vector<std::string> files;
  double wall_ms = 0;

  bool all_pass() const {
    return std::all_of(assertions.begin(), assertions.end(),
                       [](const Assertion& a) { return a.pass; });
  }
  void require(const std::string& name, bool pass, const std::string& detail) {
    assertions.push_back({name, pass, detail});
  }
};

inline const std::set<std::string>& scenario_names() {
  static const std::set<std::string> names = {
      "nse-evolve",  "nse-ground",         "hartree-coulomb",   "fock-sectors",
      "meanfield-converge", "sce-misstep", "hydrogen-wrong-nse", "kernel-verify"};
  return names;
}

/// Allowed keys per scenario (plus the global scenario/seed/output.dir).
inline const std::set<std::string>& scenario_schema(const std::string& name) {
  static const std::map<std::string, std::set<std::string>> schemas = {
      {"kernel-verify", {"kernel.sigma", "kernel.r_max", "kernel.points"}},
      {"nse-evolve",
       {"grid.dim", "grid.n", "grid.spacing", "physics.mass", "physics.strength", "evolve.dt",
        "evolve.steps", "evolve.record_every", "evolve.bc", "initial.width", "initial.boost",
        "snapshots.every"}},
      {"nse-ground",
       {"grid.dim", "grid.n", "grid.spacing", "physics.mass", "physics.strength", "ground.itol",
        "ground.bc", "initial.width"}},
      {"hartree-coulomb",
       {"grid.dim", "grid.n", "grid.spacing", "physics.mass", "physics.strength", "evolve.dt",
        "evolve.steps", "evolve.record_every", "evolve.bc", "initial.width"}},
      {"fock-sectors",
       {"lattice.dim", "lattice.sites", "lattice.spacing", "physics.sigma", "physics.strength",
        "physics.mass", "checks.superpositions"}},
      {"meanfield-converge",
       {"lattice.sites", "lattice.spacing", "physics.sigma", "physics.g_total", "physics.mass",
        "run.t", "run.dt", "run.n_min", "run.n_max", "initial.width", "initial.center"}},
      {"sce-misstep",
       {"lattice.dim", "lattice.sites", "lattice.spacing", "physics.sigma", "physics.strength",
        "physics.mass", "run.t", "run.dt", "run.record_every", "initial.width",
        "initial.center"}},
      {"hydrogen-wrong-nse",
       {"radial.reduced_mass", "radial.alpha", "radial.r_max", "radial.n_points",
        "radial.self_strength"}}};
  return schemas.at(name);
}

namespace detail {

inline std::set<std::string> with_global(std::set<std::string> s) {
  s.insert("scenario");
  s.insert("seed");
  s.insert("output.dir");
  return s;
}

inline Eigen::VectorXcd lattice_lump(const Lattice& lat, double width, std::int64_t center) {
  Eigen::VectorXcd chi(lat.size());
  for (std::int64_t i = 0; i < lat.size(); ++i) {
    double r = lat.min_image_distance(i, center);
    chi[i] = std::exp(-r * r / (2.0 * width * width));
  }
  chi /= chi.norm();
  return chi;
}

inline void add_plot(RunReport& rep, const std::string& name, const std::string& csv,
                     const std::string& xcol, const std::string& ycol, const std::string& kind,
                     bool fit = false) {
  rep.plots.push_back({{"name", name},
                       {"csv", csv},
                       {"x", xcol},
                       {"y", ycol},
                       {"kind", kind},
                       {"fit", fit}});
}

// ---------------------------------------------------------------- scenarios

inline void run_kernel_verify(const Config& cfg, const std::filesystem::path& dir,
                              RunReport& rep) {
  cfg.check_keys(with_global(scenario_schema("kernel-verify")));
  const double sigma = cfg.get_double("kernel.sigma", 0.5);
  const double r_max = cfg.get_double("kernel.r_max", 10.0 * sigma);
  const int points = cfg.get_int("kernel.points", 400);

  CsvWriter csv(dir / "fsigma.csv", {"r", "f_sigma", "inv_r"});
  for (int i = 1; i <= points; ++i) {
    double r = r_max * i / points;
    csv.row({r, f_sigma(r, sigma), 1.0 / r});
  }
  rep.files.push_back("fsigma.csv");
  add_plot(rep, "fsigma", "fsigma.csv", "r", "f_sigma", "line");

  double sat = f_sigma(1.0, 0.01);
  rep.require("sigma_to_zero_limit", sat <= 1.0 && sat >= 1.0 - 1e-12,
              "F_{0.01}(1) = " + fmt17(sat));
  double zero = f_sigma(0.0, sigma), want = 1.0 / (sigma * std::sqrt(M_PI));
  rep.require("origin_series_value", std::abs(zero - want) <= 1e-10 * want,
              "F(0) = " + fmt17(zero));
  bool bounded = true, monotone = true;
  double prev = zero;
  for (int i = 1; i <= 10000; ++i) {
    double r = 100.0 * sigma * i / 10000.0;
    double f = f_sigma(r, sigma);
    bounded &= f <= 1.0 / r && f > 0;
    monotone &= f <= prev + 1e-15;
    prev = f;
  }
  rep.require("bounded_by_bare_kernel", bounded, "10^4-point scan");
  rep.require("monotone_non_increasing", monotone, "10^4-point scan");
  rep.metrics["f_sigma_at_origin"] = zero;
}

inline void run_nse_evolve(const Config& cfg, const std::filesystem::path& dir, RunReport& rep) {
  cfg.check_keys(with_global(scenario_schema("nse-evolve")));
  Grid grid(cfg.get_int("grid.dim", 3), cfg.get_int("grid.n", 32),
            cfg.get_double("grid.spacing", 0.25));
  const double mass = cfg.get_double("physics.mass", 1.0);
  CouplingSpec coupling(CouplingKind::GravityAttractive, cfg.get_double("physics.strength", 0.5),
                        0.0, mass);
  EvolutionParams params;
  params.dt = cfg.get_double("evolve.dt", 0.0);
  if (params.dt <= 0) params.dt = 0.5 * default_dt(grid, mass);
  params.steps = cfg.get_int("evolve.steps", 200);
  params.record_every = cfg.get_int("evolve.record_every", 10);
  std::string bc = cfg.get_string("evolve.bc", grid.dim == 3 ? "isolated" : "periodic-zero-mean");
  if (bc != "isolated" && bc != "periodic-zero-mean")
    throw ConfigError(cfg.line_of("evolve.bc"), "evolve.bc must be isolated|periodic-zero-mean");
  params.bc = bc == "isolated" ? PoissonBC::Isolated : PoissonBC::PeriodicZeroMean;
  const int snap_every = cfg.get_int("snapshots.every", 100);

  Eigen::Vector3d center = Eigen::Vector3d::Constant(grid.length() / 2);
  Eigen::Vector3d boost(cfg.get_double("initial.boost", 0.0), 0, 0);
  WaveField psi0 = gaussian_packet(grid, mass, center, cfg.get_double("initial.width", 1.0), boost);

  std::filesystem::create_directories(dir / "snapshots");
  WaveField final_state;
  SnapshotSink sink = [&](int step, const WaveField& psi) {
    if (snap_every > 0 && step % snap_every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "snapshots/snap_%06d.wf", step);
      write_snapshot(dir / name, psi, step * params.dt);
      rep.files.push_back(name);
    }
    if (step == params.steps) final_state = psi;
  };
  auto series = evolve(psi0, coupling, params, sink);

  CsvWriter csv(dir / "observables.csv",
                {"time", "norm", "energy", "rms_width", "peak_density", "com_x", "com_y", "com_z"});
  for (const auto& o : series)
    csv.row({o.time, o.norm, o.energy, o.rms_width, o.peak_density, o.center_of_mass[0],
             o.center_of_mass[1], o.center_of_mass[2]});
  rep.files.push_back("observables.csv");
  add_plot(rep, "energy", "observables.csv", "time", "energy", "line");
  add_plot(rep, "rms_width", "observables.csv", "time", "rms_width", "line");

  // final-density slice: the mid-plane in 3D, the full line in 1D
  {
    Eigen::VectorXd rho = final_state.density();
    const int n = grid.n;
    CsvWriter slice(dir / "density_slice.csv", {"row", "col", "value"});
    if (grid.dim == 3) {
      const int z = n / 2;
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
          slice.row({double(x), double(y), rho[(std::int64_t(x) * n + y) * n + z]});
    } else {
      for (int x = 0; x < n; ++x) slice.row({0.0, double(x), rho[x]});
    }
    rep.files.push_back("density_slice.csv");
    rep.plots.push_back({{"name", "density_slice"},
                         {"csv", "density_slice.csv"},
                         {"kind", "heatmap"},
                         {"nx", grid.dim == 3 ? n : 1},
                         {"ny", n}});
  }

  double norm_drift = 0;
  for (const auto& o : series) norm_drift = std::max(norm_drift, std::abs(o.norm - 1.0));
  norm_drift /= params.steps;
  double e0 = series.front().energy, e_drift = 0;
  for (const auto& o : series)
    e_drift = std::max(e_drift, std::abs(o.energy - e0) / std::max(std::abs(e0), 1e-300));
  rep.require("norm_drift_per_step", norm_drift < 1e-12, fmt17(norm_drift));
  rep.require("energy_relative_drift", e_drift < 1e-5, fmt17(e_drift));
  rep.metrics["energy_drift"] = e_drift;
  rep.metrics["final_rms_width"] = series.back().rms_width;
}

inline void run_nse_ground(const Config& cfg, const std::filesystem::path& dir, RunReport& rep) {
  cfg.check_keys(with_global(scenario_schema("nse-ground")));
  Grid grid(cfg.get_int("grid.dim", 3), cfg.get_int("grid.n", 32),
            cfg.get_double("grid.spacing", 0.25));
  const double mass = cfg.get_double("physics.mass", 1.0);
  const double itol = cfg.get_double("ground.itol", 1e-8);
  CouplingSpec coupling(CouplingKind::GravityAttractive, cfg.get_double("physics.strength", 2.0),
                        0.0, mass);
  GroundStateOptions opts;
  std::string bc = cfg.get_string("ground.bc", "isolated");
  if (bc != "isolated" && bc != "periodic-zero-mean")
    throw ConfigError(cfg.line_of("ground.bc"), "ground.bc must be isolated|periodic-zero-mean");
  opts.bc = bc == "isolated" ? PoissonBC::Isolated : PoissonBC::PeriodicZeroMean;

  WaveField psi0 = gaussian_packet(grid, mass, Eigen::Vector3d::Constant(grid.length() / 2),
                                   cfg.get_double("initial.width", 1.5));
  auto res = ground_state(psi0, coupling, itol, opts);

  CsvWriter hist(dir / "energy_history.csv", {"sweep", "energy"});
  for (size_t i = 0; i < res.energy_history.size(); ++i)
    hist.row({double(i), res.energy_history[i]});
  rep.files.push_back("energy_history.csv");
  add_plot(rep, "energy_history", "energy_history.csv", "sweep", "energy", "line");

  // density profile along an axis through the center
  CsvWriter prof(dir / "profile.csv", {"r", "density"});
  const int c = grid.n / 2;
  Eigen::VectorXd rho = res.state.density();
  for (int i = 0; i < grid.n / 2; ++i) {
    std::int64_t idx = grid.dim == 3 ? ((std::int64_t(c) * grid.n + c) * grid.n + c + i) : i;
    prof.row({i * grid.spacing, rho[idx]});
  }
  rep.files.push_back("profile.csv");
  add_plot(rep, "profile", "profile.csv", "r", "density", "line");
  write_snapshot(dir / "ground_state.wf", res.state, 0.0);
  rep.files.push_back("ground_state.wf");

  bool monotone = true;
  for (size_t i = 1; i < res.energy_history.size(); ++i)
    monotone &= res.energy_history[i] <=
                res.energy_history[i - 1] + 1e-10 * std::abs(res.energy_history[i - 1]);
  rep.require("stationarity_residual", res.residual < 10.0 * itol, fmt17(res.residual));
  rep.require("bound_state", res.energy < 0, fmt17(res.energy));
  rep.require("imaginary_time_monotone", monotone, "per-sweep energies");
  rep.metrics["energy"] = res.energy;
  rep.metrics["chemical_potential"] = res.chemical_potential;
  rep.metrics["iterations"] = res.iterations;
}

inline void run_hartree_coulomb(const Config& cfg, const std::filesystem::path& dir,
                                RunReport& rep) {
  cfg.check_keys(with_global(scenario_schema("hartree-coulomb")));
  Grid grid(cfg.get_int("grid.dim", 3), cfg.get_int("grid.n", 32),
            cfg.get_double("grid.spacing", 0.25));
  const double mass = cfg.get_double("physics.mass", 1.0);
  CouplingSpec coupling(CouplingKind::CoulombRepulsive, cfg.get_double("physics.strength", 0.3),
                        0.0, mass);
  EvolutionParams params;
  params.dt = cfg.get_double("evolve.dt", 0.0);
  if (params.dt <= 0) params.dt = default_dt(grid, mass);
  params.steps = cfg.get_int("evolve.steps", 100);
  params.record_every = cfg.get_int("evolve.record_every", 10);
  std::string bc = cfg.get_string("evolve.bc", "isolated");
  params.bc = bc == "isolated" ? PoissonBC::Isolated : PoissonBC::PeriodicZeroMean;

  WaveField chi0 = gaussian_packet(grid, mass, Eigen::Vector3d::Constant(grid.length() / 2),
                                   cfg.get_double("initial.width", 1.0));
  auto series = evolve(chi0, coupling, params);

  CsvWriter csv(dir / "observables.csv",
                {"time", "norm", "energy", "rms_width", "peak_density", "com_x", "com_y", "com_z"});
  for (const auto& o : series)
    csv.row({o.time, o.norm, o.energy, o.rms_width, o.peak_density, o.center_of_mass[0],
             o.center_of_mass[1], o.center_of_mass[2]});
  rep.files.push_back("observables.csv");
  add_plot(rep, "rms_width", "observables.csv", "time", "rms_width", "line");

  bool monotone = true;
  for (size_t i = 1; i < series.size(); ++i)
    monotone &= series[i].rms_width > series[i - 1].rms_width;
  double norm_drift = 0;
  for (const auto& o : series) norm_drift = std::max(norm_drift, std::abs(o.norm - 1.0));
  rep.require("width_monotone_increase", monotone, "repulsion plus dispersion spread");
  rep.require("norm_drift_per_step", norm_drift / params.steps < 1e-12,
              fmt17(norm_drift / params.steps));
  rep.metrics["final_rms_width"] = series.back().rms_width;
}

inline void run_fock_sectors(const Config& cfg, const std::filesystem::path& dir,
                             RunReport& rep) {
  cfg.check_keys(with_global(scenario_schema("fock-sectors")));
  Lattice lat(cfg.get_int("lattice.dim", 1), cfg.get_int("lattice.sites", 4),
              cfg.get_double("lattice.spacing", 1.0), 4096);
  const double sigma = cfg.get_double("physics.sigma", 2.0);
  const double g = cfg.get_double("physics.strength", 1.0);
  const double mass = cfg.get_double("physics.mass", 1.0);
  CouplingSpec grav(CouplingKind::GravityAttractive, g, sigma, mass);
  CouplingSpec free_c(CouplingKind::GravityAttractive, 0.0, sigma, mass);

  auto b1 = build_basis(lat, 1);
  Eigen::MatrixXd h1 = one_particle_matrix(build_hamiltonian(b1, grav));
  Eigen::MatrixXd h1_free = one_particle_matrix(build_hamiltonian(b1, free_c));
  Eigen::MatrixXd inter = h1 - h1_free;

  CsvWriter m1(dir / "one_particle.csv", {"row", "col", "value"});
  for (int i = 0; i < h1.rows(); ++i)
    for (int j = 0; j < h1.cols(); ++j) m1.row({double(i), double(j), h1(i, j)});
  rep.files.push_back("one_particle.csv");

  auto b2 = build_basis(lat, 2);
  auto H2 = build_hamiltonian(b2, grav);
  auto H2_free = build_hamiltonian(b2, free_c);
  CsvWriter m2(dir / "pair_diag.csv", {"site_i", "site_j", "distance", "pair_energy", "expected"});
  double pair_err = 0;
  const double dm = delta_m(grav);
  for (std::int64_t k = 0; k < b2->dimension(); ++k) {
    auto p = b2->positions(k);
    double d = lat.min_image_distance(p[0], p[1]);
    double got = H2.matrix.coeff(k, k) - H2_free.matrix.coeff(k, k) - 2.0 * dm;
    double want = -g * f_sigma(d, sigma);
    pair_err = std::max(pair_err, std::abs(got - want) / std::abs(want));
    m2.row({double(p[0]), double(p[1]), d, got, want});
  }
  rep.files.push_back("pair_diag.csv");

  CsvWriter sp(dir / "hamiltonian_n2.csv", {"row", "col", "re", "im"});
  for (const auto& t : H2.triplets()) sp.row({double(t.row()), double(t.col()), t.value(), 0.0});
  rep.files.push_back("hamiltonian_n2.csv");

  Eigen::MatrixXd off = inter - inter.diagonal().asDiagonal().toDenseMatrix();
  double diag_err = (inter.diagonal().array() - dm).abs().maxCoeff();
  rep.require("n1_interaction_is_identity", off.cwiseAbs().maxCoeff() == 0.0,
              "max off-diagonal " + fmt17(off.cwiseAbs().maxCoeff()));
  rep.require("n1_diagonal_is_delta_m", diag_err <= 1e-12 * std::abs(dm), fmt17(diag_err));
  rep.require("n2_pair_energies_match_kernel", pair_err <= 1e-12, fmt17(pair_err));
  Eigen::MatrixXd dense2(H2.matrix);
  rep.require("hermitian_by_construction",
              (dense2 - dense2.transpose()).cwiseAbs().maxCoeff() == 0.0, "exact");

  std::mt19937_64 rng(std::uint64_t(cfg.get_int("seed", 1)));
  std::normal_distribution<double> dist;
  double worst = 0;
  const int trials = cfg.get_int("checks.superpositions", 20);
  for (int trial = 0; trial < trials; ++trial) {
    FockVector v1(b2), v2(b2);
    for (std::int64_t k = 0; k < b2->dimension(); ++k) {
      v1.amplitudes[k] = std::complex<double>(dist(rng), dist(rng));
      v2.amplitudes[k] = std::complex<double>(dist(rng), dist(rng));
    }
    v1.normalize();
    v2.normalize();
    std::complex<double> a(dist(rng), dist(rng)), b(dist(rng), dist(rng));
    worst = std::max(worst, linearity_check(H2, v1, v2, a, b, 1.3));
  }
  rep.require("exact_evolution_linear", worst <= 1e-10,
              fmt17(worst) + " over " + std::to_string(trials) + " superpositions");
  rep.metrics["delta_m"] = dm;
  rep.metrics["linearity_worst"] = worst;
}

inline void run_meanfield_converge(const Config& cfg, const std::filesystem::path& dir,
                                   RunReport& rep) {
  cfg.check_keys(with_global(scenario_schema("meanfield-converge")));
  Lattice lat(1, cfg.get_int("lattice.sites", 4), cfg.get_double("lattice.spacing", 1.0));
  const double g_total = cfg.get_double("physics.g_total", 0.8);
  const double sigma = cfg.get_double("physics.sigma", 2.0);
  const double mass = cfg.get_double("physics.mass", 1.0);
  const double t = cfg.get_double("run.t", 1.5);
  const double dt = cfg.get_double("run.dt", 0.002);
  std::vector<int> ns;
  for (int n = cfg.get_int("run.n_min", 2); n <= cfg.get_int("run.n_max", 6); ++n)
    ns.push_back(n);
  Eigen::VectorXcd chi0 = lattice_lump(lat, cfg.get_double("initial.width", 0.9),
                                       cfg.get_int("initial.center", 1));

  auto report = convergence_experiment(lat, ns, g_total, sigma, mass, chi0, t, dt);

  CsvWriter csv(dir / "convergence.csv",
                {"N", "t", "trace_distance", "fidelity", "energy_exact", "energy_hartree",
                 "wall_ms"});
  for (const auto& r : report.rows)
    csv.row({double(r.n_particles), r.time, r.trace_distance, r.fidelity, r.energy_exact,
             r.energy_hartree, r.wall_ms});
  rep.files.push_back("convergence.csv");
  add_plot(rep, "distance_vs_N", "convergence.csv", "N", "trace_distance", "loglog", true);

  nlohmann::json summary;
  summary["fitted_exponent"] = report.fitted_exponent;
  summary["spearman_rho"] = report.spearman_rho;
  std::ofstream(dir / "summary.json") << summary.dump(2) << "\n";
  rep.files.push_back("summary.json");

  rep.require("distance_decreases_with_N", report.spearman_rho < 0,
              "spearman " + fmt17(report.spearman_rho));
  rep.require("fitted_exponent_negative", report.fitted_exponent < 0,
              fmt17(report.fitted_exponent));
  rep.metrics["fitted_exponent"] = report.fitted_exponent;
  rep.metrics["spearman_rho"] = report.spearman_rho;
}

inline void run_sce_misstep(const Config& cfg, const std::filesystem::path& dir, RunReport& rep) {
  cfg.check_keys(with_global(scenario_schema("sce-misstep")));
  Lattice lat(cfg.get_int("lattice.dim", 1), cfg.get_int("lattice.sites", 64),
              cfg.get_double("lattice.spacing", 1.0));
  const double sigma = cfg.get_double("physics.sigma", 2.0);
  const double g = cfg.get_double("physics.strength", 0.6);
  const double mass = cfg.get_double("physics.mass", 1.0);
  const double t = cfg.get_double("run.t", 6.0);
  const double dt = cfg.get_double("run.dt", 0.01);
  const int record_every = cfg.get_int("run.record_every", 10);
  CouplingSpec grav(CouplingKind::GravityAttractive, g, sigma, mass);
  Eigen::VectorXcd chi0 = lattice_lump(lat, cfg.get_double("initial.width", 2.0),
                                       cfg.get_int("initial.center", int(lat.size() / 2)));

  auto report = misstep_compare(chi0, lat, grav, t, dt, record_every);

  CsvWriter csv(dir / "misstep.csv", {"t", "l2_distance", "density_overlap", "norm_a", "norm_b"});
  for (const auto& r : report.rows)
    csv.row({r.time, r.l2_distance, r.density_overlap, r.norm_a, r.norm_b});
  rep.files.push_back("misstep.csv");
  add_plot(rep, "distance_vs_time", "misstep.csv", "t", "l2_distance", "line");

  // cross-solver: the shared lattice-NSE engine must reproduce mode (a)
  auto traj = hartree_evolve_lattice(chi0, 2, lat, grav, t, dt, record_every);
  double cross = 0;
  for (size_t i = 0; i < traj.size() && i < report.mean_field_trajectory.size(); ++i)
    cross = std::max(cross, (traj[i] - report.mean_field_trajectory[i]).norm());
  rep.require("mean_field_matches_lattice_nse", cross <= 1e-10, fmt17(cross));

  // exact-field density must not see the coupling
  CouplingSpec free_c(CouplingKind::GravityAttractive, 0.0, sigma, mass);
  auto base = misstep_compare(chi0, lat, free_c, t, dt, record_every);
  double dense_dev = 0;
  for (size_t i = 0; i < base.exact_field_trajectory.size(); ++i)
    dense_dev = std::max(dense_dev, (base.exact_field_trajectory[i].cwiseAbs2() -
                                     report.exact_field_trajectory[i].cwiseAbs2())
                                        .cwiseAbs()
                                        .maxCoeff());
  rep.require("exact_density_coupling_independent", dense_dev <= 1e-12, fmt17(dense_dev));
  rep.require("modes_diverge", report.max_distance > 0.01, fmt17(report.max_distance));
  double norm_dev = 0;
  for (const auto& r : report.rows)
    norm_dev = std::max({norm_dev, std::abs(r.norm_a - 1.0), std::abs(r.norm_b - 1.0)});
  rep.require("norms_conserved", norm_dev <= 1e-12, fmt17(norm_dev));
  rep.metrics["max_distance"] = report.max_distance;
}

inline void run_hydrogen_wrong_nse(const Config& cfg, const std::filesystem::path& dir,
                                   RunReport& rep) {
  cfg.check_keys(with_global(scenario_schema("hydrogen-wrong-nse")));
  RadialProblem hydrogen;
  hydrogen.reduced_mass = cfg.get_double("radial.reduced_mass", 1.0);
  hydrogen.external_coulomb_strength = cfg.get_double("radial.alpha", 1.0);
  hydrogen.r_max = cfg.get_double("radial.r_max", 60.0);
  hydrogen.n_points = cfg.get_int("radial.n_points", 4000);
  double e_h = radial_ground_state(hydrogen);

  RadialProblem wrong = hydrogen;
  wrong.self_interaction = CouplingSpec(
      CouplingKind::CoulombRepulsive,
      cfg.get_double("radial.self_strength", hydrogen.external_coulomb_strength), 0.0,
      hydrogen.reduced_mass);
  double e_w = radial_ground_state(wrong);
  double exact = -0.5 * hydrogen.reduced_mass * hydrogen.external_coulomb_strength *
                 hydrogen.external_coulomb_strength;

  CsvWriter csv(dir / "energies.csv", {"hydrogen", "wrong_nse", "exact"});
  csv.row({e_h, e_w, exact});
  rep.files.push_back("energies.csv");

  rep.require("hydrogen_within_0p1_percent", std::abs(e_h / exact - 1.0) < 1e-3,
              fmt17(e_h) + " vs " + fmt17(exact));
  rep.require("wrong_nse_deviates_over_10_percent", std::abs(e_w / exact - 1.0) > 0.10,
              fmt17(e_w));
  rep.metrics["hydrogen_energy"] = e_h;
  rep.metrics["wrong_nse_energy"] = e_w;
}

} // namespace detail

/// Parses and validates without running; throws ConfigError on any problem.
inline void validate_config(const std::string& text) {
  Config cfg = Config::parse(text);
  const std::string& s = cfg.scenario();
  if (!scenario_names().count(s))
    throw ConfigError(cfg.line_of("scenario"), "unknown scenario `" + s + "`");
  cfg.check_keys(detail::with_global(scenario_schema(s)));
}

/// Runs a scenario; writes data files, index.json and report.json into the
/// output directory. The report's assertions decide the process exit code.
inline RunReport run_scenario(const std::string& config_text,
                              const std::filesystem::path& outdir_override = {}) {
  validate_config(config_text);
  Config cfg = Config::parse(config_text);
  RunReport rep;
  rep.scenario = cfg.scenario();
  rep.config_echo = cfg.echo();
  rep.config_sha1 = sha1_hex(rep.config_echo);

  std::filesystem::path dir = outdir_override.empty()
                                  ? std::filesystem::path(cfg.get_string("output.dir", "nslab-out"))
                                  : outdir_override;
  std::filesystem::create_directories(dir);

  auto t0 = std::chrono::steady_clock::now();
  const std::string& s = cfg.scenario();
  if (s == "kernel-verify")
    detail::run_kernel_verify(cfg, dir, rep);
  else if (s == "nse-evolve")
    detail::run_nse_evolve(cfg, dir, rep);
  else if (s == "nse-ground")
    detail::run_nse_ground(cfg, dir, rep);
  else if (s == "hartree-coulomb")
    detail::run_hartree_coulomb(cfg, dir, rep);
  else if (s == "fock-sectors")
    detail::run_fock_sectors(cfg, dir, rep);
  else if (s == "meanfield-converge")
    detail::run_meanfield_converge(cfg, dir, rep);
  else if (s == "sce-misstep")
    detail::run_sce_misstep(cfg, dir, rep);
  else if (s == "hydrogen-wrong-nse")
    detail::run_hydrogen_wrong_nse(cfg, dir, rep);
  rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();

  nlohmann::json index;
  index["scenario"] = rep.scenario;
  index["files"] = rep.files;
  index["plots"] = rep.plots;
  std::ofstream(dir / "index.json") << index.dump(2) << "\n";

  nlohmann::json report;
  report["scenario"] = rep.scenario;
  report["config_echo"] = rep.config_echo;
  report["config_sha1"] = rep.config_sha1;
  report["wall_ms"] = rep.wall_ms;
  report["metrics"] = rep.metrics;
  report["assertions"] = nlohmann::json::array();
  for (const auto& a : rep.assertions)
    report["assertions"].push_back({{"name", a.name}, {"pass", a.pass}, {"detail", a.detail}});
  std::ofstream(dir / "report.json") << report.dump(2) << "\n";
  return rep;
}

/// Renders every plot listed in <dir>/index.json; missing series are skipped
/// with a warning. Returns the number of SVGs written.
inline int plot_report_dir(const std::filesystem::path& dir, std::ostream& log) {
  auto index_path = dir / "index.json";
  if (!std::filesystem::exists(index_path)) {
    log << "warning: no index.json in " << dir.string() << ", nothing to plot\n";
    return 0;
  }
  nlohmann::json index = nlohmann::json::parse(read_text_file(index_path));
  int written = 0;
  for (const auto& p : index["plots"]) {
    std::string csv_name = p["csv"].get<std::string>();
    auto csv_path = dir / csv_name;
    if (!std::filesystem::exists(csv_path)) {
      log << "warning: missing data series " << csv_name << ", skipping plot\n";
      continue;
    }
    if (p["kind"].get<std::string>() == "heatmap") {
      int nx = p["nx"].get<int>(), ny = p["ny"].get<int>();
      std::vector<double> values(std::size_t(nx) * ny, 0.0);
      std::ifstream in(csv_path);
      std::string line;
      std::getline(in, line); // header
      while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ls, cell, ',')) vals.push_back(std::strtod(cell.c_str(), nullptr));
        if (vals.size() < 3) continue;
        std::size_t idx = std::size_t(vals[0]) * ny + std::size_t(vals[1]);
        if (idx < values.size()) values[idx] = vals[2];
      }
      auto out = dir / (p["name"].get<std::string>() + ".svg");
      write_svg_heatmap(out, nx, ny, values,
                        index["scenario"].get<std::string>() + ": " +
                            p["name"].get<std::string>());
      ++written;
      continue;
    }
    // parse the CSV
    std::ifstream in(csv_path);
    std::string header;
    std::getline(in, header);
    std::vector<std::string> cols;
    {
      std::istringstream hs(header);
      std::string c;
      while (std::getline(hs, c, ',')) cols.push_back(c);
    }
    auto col_index = [&](const std::string& name) {
      for (size_t i = 0; i < cols.size(); ++i)
        if (cols[i] == name) return int(i);
      return -1;
    };
    int xi = col_index(p["x"].get<std::string>());
    int yi = col_index(p["y"].get<std::string>());
    if (xi < 0 || yi < 0) {
      log << "warning: columns not found in " << csv_name << ", skipping plot\n";
      continue;
    }
    SvgSeries series;
    series.label = p["y"].get<std::string>();
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::string cell;
      std::vector<double> vals;
      while (std::getline(ls, cell, ',')) vals.push_back(std::strtod(cell.c_str(), nullptr));
      if (int(vals.size()) <= std::max(xi, yi)) continue;
      series.x.push_back(vals[xi]);
      series.y.push_back(vals[yi]);
    }
    SvgPlotSpec spec;
    spec.title = index["scenario"].get<std::string>() + ": " + p["name"].get<std::string>();
    spec.xlabel = p["x"].get<std::string>();
    spec.ylabel = p["y"].get<std::string>();
    spec.logx = spec.logy = p["kind"].get<std::string>() == "loglog";
    spec.fit_line = p.value("fit", false);
    spec.series.push_back(std::move(series));
    auto out = dir / (p["name"].get<std::string>() + ".svg");
    write_svg_plot(out, spec);
    ++written;
  }
  return written;
}

} // namespace nslab
