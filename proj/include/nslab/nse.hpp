#pragma once

#include <Eigen/Core>
#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nslab/fft.hpp"
#include "nslab/kernels.hpp"
#include "nslab/poisson.hpp"
#include "nslab/wavefield.hpp"

namespace nslab {

enum class SplitScheme { StrangSplit };

struct EvolutionParams {
  double dt = 0;
  int steps = 0;
  SplitScheme scheme = SplitScheme::StrangSplit;
  PoissonBC bc = PoissonBC::PeriodicZeroMean;
  int record_every = 1;

  void validate() const {
    if (!(dt > 0)) throw std::invalid_argument("EvolutionParams: dt must be positive");
    if (steps <= 0) throw std::invalid_argument("EvolutionParams: steps must be positive");
    if (record_every <= 0 || record_every > steps)
      throw std::invalid_argument("EvolutionParams: record_every must be in [1, steps]");
  }
};

/// Default split-step time step for a grid and particle mass.
inline double default_dt(const Grid& grid, double mass) {
  return 0.5 * mass * grid.spacing * grid.spacing;
}

/// Strang split-step engine for i dpsi/dt = -grad^2 psi/(2m) + W[psi] psi with
/// the self-sourced kernel potential W = sign * strength * (1/r) * |psi|^2.
/// One engine per evolution: the FFT workspace and kick buffers are owned.
class SplitStepEngine {
 public:
  SplitStepEngine(const Grid& grid, double mass, const CouplingSpec& coupling, PoissonBC bc)
      : grid_(grid),
        mass_(mass),
        coupling_(coupling),
        fft_(grid),
        poisson_(grid, bc),
        kinetic_k2_(grid.size()) {
    if (coupling.kind == CouplingKind::CoulombExternalAttractive)
      throw std::invalid_argument("SplitStepEngine: external wells belong to the radial solver");
    const int n = grid_.n;
    if (grid_.dim == 1) {
      for (int j = 0; j < n; ++j) kinetic_k2_[j] = grid_.wavenumber(j) * grid_.wavenumber(j);
    } else {
      std::int64_t idx = 0;
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
          for (int z = 0; z < n; ++z, ++idx)
            kinetic_k2_[idx] = grid_.wavenumber(x) * grid_.wavenumber(x) +
                               grid_.wavenumber(y) * grid_.wavenumber(y) +
                               grid_.wavenumber(z) * grid_.wavenumber(z);
    }
  }

  const CouplingSpec& coupling() const { return coupling_; }

  /// W[rho]; attractive couplings give W <= 0 wells.
  Eigen::VectorXd potential(const Eigen::VectorXd& density) const {
    double s = pair_sign(coupling_.kind);
    // poisson_solve returns -G * (1/r) conv rho; flip for repulsive kinds
    return -s * poisson_.solve(density, coupling_.strength);
  }

  /// One kick(dt/2)-drift(dt)-kick(dt/2) step; the potential is recomputed
  /// from the instantaneous density at each kick.
  void step(Eigen::VectorXcd& psi, double dt, bool imaginary_time = false) {
    kick(psi, 0.5 * dt, imaginary_time);
    drift(psi, dt, imaginary_time);
    kick(psi, 0.5 * dt, imaginary_time);
  }

  void kick(Eigen::VectorXcd& psi, double dt, bool imaginary_time = false) {
    if (!(coupling_.strength > 0)) return;
    Eigen::VectorXd w = potential(psi.cwiseAbs2());
    if (imaginary_time) {
      // shift by the minimum so the exponent stays <= 0; the constant factor
      // is removed by the renormalization that follows every sweep
      psi.array() *= (-dt * (w.array() - w.minCoeff())).exp();
    } else {
      const std::complex<double> I(0, 1);
      psi.array() *= (-I * dt * w.array()).exp();
    }
  }

  void drift(Eigen::VectorXcd& psi, double dt, bool imaginary_time = false) {
    fft_.fwd(psi);
    const double c = dt / (2.0 * mass_);
    if (imaginary_time)
      psi.array() *= (-c * kinetic_k2_.array()).exp();
    else {
      const std::complex<double> I(0, 1);
      psi.array() *= (-I * c * kinetic_k2_.array()).exp();
    }
    fft_.inv(psi);
  }

  double kinetic_energy(const Eigen::VectorXcd& psi) const {
    Eigen::VectorXcd hat = psi;
    fft_.fwd(hat);
    double e = (kinetic_k2_.array() * hat.cwiseAbs2().array()).sum();
    return e / (2.0 * mass_) * grid_.cell_volume() / double(grid_.size());
  }

  /// E[psi] = kinetic + (1/2) int W[psi] |psi|^2; the 1/2 compensates the
  /// potential being sourced by psi itself, making E conserved in real time.
  double energy(const Eigen::VectorXcd& psi) const {
    Eigen::VectorXd rho = psi.cwiseAbs2();
    double pot = coupling_.strength > 0
                     ? 0.5 * (potential(rho).array() * rho.array()).sum() * grid_.cell_volume()
                     : 0.0;
    return kinetic_energy(psi) + pot;
  }

  /// <psi|H[psi]|psi> (full weight on the interaction, unlike energy()).
  double chemical_potential(const Eigen::VectorXcd& psi) const {
    Eigen::VectorXd rho = psi.cwiseAbs2();
    double pot = coupling_.strength > 0
                     ? (potential(rho).array() * rho.array()).sum() * grid_.cell_volume()
                     : 0.0;
    return kinetic_energy(psi) + pot;
  }

  /// H_V psi for a frozen potential (used by the ground-state polish).
  void apply_linear(const Eigen::VectorXd& w, const Eigen::VectorXcd& psi,
                    Eigen::VectorXcd& out) const {
    out = psi;
    fft_.fwd(out);
    out.array() *= kinetic_k2_.array() / (2.0 * mass_);
    fft_.inv(out);
    out.array() += w.array() * psi.array();
  }

  /// r <- (k^2/2m + shift)^{-1} r; kinetic preconditioner for eigensolves.
  void precondition(Eigen::VectorXcd& r, double shift) const {
    fft_.fwd(r);
    r.array() /= (kinetic_k2_.array() / (2.0 * mass_) + shift);
    fft_.inv(r);
  }

  /// || H[psi] psi - mu psi || / ||psi|| in the discrete L2 norm.
  double stationarity_residual(const Eigen::VectorXcd& psi) const {
    double mu = chemical_potential(psi);
    Eigen::VectorXcd hpsi = psi;
    fft_.fwd(hpsi);
    hpsi.array() *= kinetic_k2_.array() / (2.0 * mass_);
    fft_.inv(hpsi);
    if (coupling_.strength > 0) {
      Eigen::VectorXd w = potential(psi.cwiseAbs2());
      hpsi.array() += w.array() * psi.array();
    }
    hpsi -= mu * psi;
    return std::sqrt(hpsi.squaredNorm() / psi.squaredNorm());
  }

  Observables observe(const Eigen::VectorXcd& psi, double time) const {
    Observables o;
    o.time = time;
    o.norm = std::sqrt(psi.squaredNorm() * grid_.cell_volume());
    o.energy = energy(psi);
    Eigen::VectorXd rho = psi.cwiseAbs2();
    o.rms_width = rms_width(grid_, rho);
    o.peak_density = rho.maxCoeff();
    o.center_of_mass = center_of_mass(grid_, rho);
    return o;
  }

 private:
  Grid grid_;
  double mass_;
  CouplingSpec coupling_;
  mutable FourierWorkspace fft_;
  PoissonSolver poisson_;
  Eigen::VectorXd kinetic_k2_;
};

/// One Strang step of the Newton-Schroedinger flow (attractive self-gravity).
inline WaveField nse_step(const WaveField& psi, const CouplingSpec& coupling, double dt,
                          PoissonBC bc = PoissonBC::PeriodicZeroMean) {
  if (coupling.kind != CouplingKind::GravityAttractive)
    throw std::invalid_argument("nse_step: coupling must be GravityAttractive");
  WaveField out = psi;
  SplitStepEngine engine(psi.grid, psi.mass, coupling, bc);
  engine.step(out.amplitude, dt);
  if (!out.amplitude.allFinite())
    throw std::runtime_error("nse_step: non-finite amplitudes after step 0");
  return out;
}

/// Same engine with the repulsive Coulomb sign (time-dependent Hartree).
inline WaveField hartree_step(const WaveField& chi, const CouplingSpec& coupling, double dt,
                              PoissonBC bc = PoissonBC::PeriodicZeroMean) {
  if (coupling.kind != CouplingKind::CoulombRepulsive)
    throw std::invalid_argument("hartree_step: coupling must be CoulombRepulsive");
  WaveField out = chi;
  SplitStepEngine engine(chi.grid, chi.mass, coupling, bc);
  engine.step(out.amplitude, dt);
  if (!out.amplitude.allFinite())
    throw std::runtime_error("hartree_step: non-finite amplitudes after step 0");
  return out;
}

using SnapshotSink = std::function<void(int step, const WaveField&)>;

/// Time series driver. Records observables every record_every steps (plus the
/// initial and final state) and hands recorded states to the optional sink.
inline std::vector<Observables> evolve(const WaveField& psi0, const CouplingSpec& coupling,
                                       const EvolutionParams& params,
                                       const SnapshotSink& sink = nullptr) {
  params.validate();
  if (!psi0.amplitude.allFinite())
    throw std::runtime_error("evolve: non-finite amplitudes in the initial state (step 0)");
  WaveField psi = psi0;
  SplitStepEngine engine(psi.grid, psi.mass, coupling, params.bc);
  std::vector<Observables> series;
  series.push_back(engine.observe(psi.amplitude, 0.0));
  if (sink) sink(0, psi);
  for (int step = 1; step <= params.steps; ++step) {
    engine.step(psi.amplitude, params.dt);
    if (!psi.amplitude.allFinite())
      throw std::runtime_error("evolve: non-finite amplitudes after step " + std::to_string(step));
    if (step % params.record_every == 0 || step == params.steps) {
      series.push_back(engine.observe(psi.amplitude, step * params.dt));
      if (sink) sink(step, psi);
    }
  }
  return series;
}

/// Final state of an evolution (no recording overhead).
inline WaveField evolve_state(const WaveField& psi0, const CouplingSpec& coupling,
                              const EvolutionParams& params) {
  params.validate();
  if (!psi0.amplitude.allFinite())
    throw std::runtime_error("evolve: non-finite amplitudes in the initial state (step 0)");
  WaveField psi = psi0;
  SplitStepEngine engine(psi.grid, psi.mass, coupling, params.bc);
  for (int step = 1; step <= params.steps; ++step) {
    engine.step(psi.amplitude, params.dt);
    if (!psi.amplitude.allFinite())
      throw std::runtime_error("evolve: non-finite amplitudes after step " + std::to_string(step));
  }
  return psi;
}

struct GroundStateOptions {
  double dtau0 = 0; // 0: use 16 * default_dt
  int max_iters = 20000;
  int max_polish = 4000;
  PoissonBC bc = PoissonBC::PeriodicZeroMean;
};

struct GroundStateResult {
  WaveField state;
  double energy = 0;
  double chemical_potential = 0;
  double residual = 0;
  int iterations = 0;
  std::vector<double> energy_history; // one entry per sweep
};

/// Normalized imaginary-time flow, followed by a preconditioned
/// residual-descent polish that grinds the stationarity residual
/// ||H psi - mu psi||/||psi|| below 10*itol. The flow alone stalls at its
/// O(dtau^2) splitting floor, which is why the polish exists.
/// energy_history records the imaginary-time sweeps only.
inline GroundStateResult ground_state(const WaveField& psi0, const CouplingSpec& coupling,
                                      double itol, GroundStateOptions opts = {}) {
  if (coupling.kind != CouplingKind::GravityAttractive)
    throw std::invalid_argument("ground_state: coupling must be GravityAttractive");
  WaveField psi = psi0;
  if (!(psi.norm() > 0)) throw std::invalid_argument("ground_state: psi0 must be nonzero");
  psi.normalize();
  SplitStepEngine engine(psi.grid, psi.mass, coupling, opts.bc);
  const double dtau = opts.dtau0 > 0 ? opts.dtau0 : 16.0 * default_dt(psi.grid, psi.mass);
  // floor for the convergence denominator: the lowest kinetic quantum of the
  // grid, so the free flow (E -> 0) still terminates
  const double k1 = 2.0 * M_PI / psi.grid.length();
  const double e_floor = k1 * k1 / (2.0 * psi.mass);
  double e_prev = engine.energy(psi.amplitude);
  int iter = 0;
  std::vector<double> history{e_prev};
  Eigen::VectorXcd keep = psi.amplitude;
  for (; iter < opts.max_iters; ++iter) {
    engine.step(psi.amplitude, dtau, /*imaginary_time=*/true);
    psi.normalize();
    double e = engine.energy(psi.amplitude);
    if (e > e_prev) {
      // the finite-dtau fixed point has been reached; past this point the
      // discrete flow creeps back up by its O(dtau^2) bias, so hand over to
      // the polish with the last descending iterate
      psi.amplitude = keep;
      break;
    }
    history.push_back(e);
    keep = psi.amplitude;
    double rel = std::abs(e - e_prev) / std::max(std::abs(e), e_floor);
    e_prev = e;
    if (rel < itol) break;
  }
  // polish: preconditioned residual descent on the Rayleigh quotient with
  // the kinetic preconditioner 1/(k^2/2m + shift); the potential is refreshed
  // from the current density every step
  const double target = 10.0 * itol;
  double residual = engine.stationarity_residual(psi.amplitude);
  double step_size = 1.0;
  for (int it = 0; it < opts.max_polish && residual >= target; ++it) {
    Eigen::VectorXd w = engine.potential(psi.amplitude.cwiseAbs2());
    Eigen::VectorXcd hpsi;
    engine.apply_linear(w, psi.amplitude, hpsi);
    double mu = std::real(psi.amplitude.dot(hpsi)) / psi.amplitude.squaredNorm();
    Eigen::VectorXcd r = hpsi - mu * psi.amplitude;
    double res = std::sqrt(r.squaredNorm() / psi.amplitude.squaredNorm());
    if (res > residual + 1e-16) step_size = std::max(0.5 * step_size, 0.1);
    residual = res;
    if (residual < target) break;
    engine.precondition(r, std::max(std::abs(mu), e_floor));
    psi.amplitude -= step_size * r;
    psi.normalize();
  }
  if (residual >= target) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", residual);
    throw std::runtime_error("ground_state: no convergence after " + std::to_string(iter) +
                             " sweeps + polish (residual " + buf + ")");
  }
  GroundStateResult res;
  res.state = psi;
  res.energy = engine.energy(psi.amplitude);
  res.chemical_potential = engine.chemical_potential(psi.amplitude);
  res.residual = residual;
  res.iterations = iter + 1;
  res.energy_history = std::move(history);
  return res;
}

/// L2 distance between the evolution of a superposition and the superposition
/// of evolutions, both renormalized. Zero identically for a linear flow.
inline double linearity_violation(const WaveField& psi1, const WaveField& psi2,
                                  std::complex<double> a, std::complex<double> b,
                                  const CouplingSpec& coupling, double t, double dt,
                                  PoissonBC bc = PoissonBC::PeriodicZeroMean) {
  if (!(psi1.grid == psi2.grid) || psi1.mass != psi2.mass)
    throw std::invalid_argument("linearity_violation: mismatched fields");
  WaveField super = psi1;
  super.amplitude = a * psi1.amplitude + b * psi2.amplitude;
  if (std::abs(super.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("linearity_violation: a psi1 + b psi2 must be normalized");
  EvolutionParams params;
  params.dt = dt;
  params.steps = std::max(1, int(std::lround(t / dt)));
  params.bc = bc;
  params.record_every = params.steps;
  WaveField u = evolve_state(super, coupling, params);
  WaveField e1 = evolve_state(psi1, coupling, params);
  WaveField e2 = evolve_state(psi2, coupling, params);
  Eigen::VectorXcd w = a * e1.amplitude + b * e2.amplitude;
  w /= std::sqrt(w.squaredNorm() * psi1.grid.cell_volume());
  Eigen::VectorXcd un = u.amplitude / u.norm();
  return std::sqrt((un - w).squaredNorm() * psi1.grid.cell_volume());
}

} // namespace nslab
