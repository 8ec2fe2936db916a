#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <vector>

#include "nslab/fock.hpp"
#include "nslab/lattice.hpp"

namespace nslab {

/// Symmetrized product state |chi>^(x)N with multinomial amplitudes
/// sqrt(N!/prod n_i!) prod chi_i^{n_i}. chi is taken in the occupation
/// convention (unit l2 norm), which makes the embedding unit norm exactly.
inline FockVector product_embed(const Eigen::VectorXcd& chi, int N, FockBasisPtr basis) {
  if (chi.size() != basis->lattice().size())
    throw std::invalid_argument("product_embed: orbital does not match the basis lattice");
  if (basis->n_particles() != N)
    throw std::invalid_argument("product_embed: basis particle number mismatch");
  Eigen::VectorXcd orb = chi / chi.norm();
  FockVector v(basis);
  for (std::int64_t k = 0; k < basis->dimension(); ++k) {
    const std::int32_t* p = basis->positions(k);
    std::complex<double> amp = 1.0;
    double weight = 1.0; // N!/prod n_i!
    int run = 0;
    for (int a = 0; a < N; ++a) {
      amp *= orb[p[a]];
      run = (a > 0 && p[a] == p[a - 1]) ? run + 1 : 1;
      weight *= double(a + 1) / run;
    }
    v.amplitudes[k] = std::sqrt(weight) * amp;
  }
  v.normalize();
  return v;
}

/// One-body reduced density matrix rho_ij = <a_j^dag a_i>/N; trace one,
/// positive semidefinite, and exactly chi chi^dag on product states (the
/// index order is what makes that hold for complex orbitals).
inline Eigen::MatrixXcd one_body_rdm(const FockVector& v) {
  const FockBasis& b = *v.basis;
  const int N = b.n_particles();
  if (N == 0) throw std::invalid_argument("one_body_rdm: vacuum has no one-body sector");
  const auto M = b.lattice().size();
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(M, M);
  std::vector<std::int32_t> moved(N);
  for (std::int64_t k = 0; k < b.dimension(); ++k) {
    std::complex<double> c = v.amplitudes[k];
    if (c == std::complex<double>(0, 0)) continue;
    const std::int32_t* p = b.positions(k);
    for (int a = 0; a < N; ++a) {
      if (a > 0 && p[a] == p[a - 1]) continue;
      const std::int32_t j = p[a];
      int n_j = 0;
      for (int y = 0; y < N; ++y) n_j += p[y] == j;
      rho(j, j) += std::norm(c) * double(n_j);
      for (std::int32_t i = 0; i < M; ++i) {
        if (i == j) continue;
        int n_i = 0;
        for (int y = 0; y < N; ++y) n_i += p[y] == i;
        std::copy(p, p + N, moved.begin());
        *std::find(moved.begin(), moved.end(), j) = i;
        std::sort(moved.begin(), moved.end());
        std::int64_t kk = b.index_of(moved.data());
        // <a_i^dag a_j> lands at (j, i) in the chi chi^dag convention
        rho(j, i) += std::conj(v.amplitudes[kk]) * std::sqrt(double(n_j) * (n_i + 1)) * c;
      }
    }
  }
  return rho / double(N);
}

/// 0.5 * trace norm of the Hermitian difference.
inline double trace_distance(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A - B);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

/// i dchi/dt = h chi + (N-1) * sign * strength * (F_sigma conv |chi|^2) chi.
/// Returns the recorded orbitals (initial state first, final state last).
inline std::vector<Eigen::VectorXcd> hartree_evolve_lattice(const Eigen::VectorXcd& chi0, int N,
                                                            const Lattice& lat,
                                                            const CouplingSpec& coupling,
                                                            double t, double dt,
                                                            int record_every = 0) {
  if (N < 1) throw std::invalid_argument("hartree_evolve_lattice: N must be >= 1");
  if (chi0.size() != lat.size())
    throw std::invalid_argument("hartree_evolve_lattice: orbital does not match lattice");
  LatticeOrbitalEngine engine(lat, coupling.mass, coupling, double(N - 1));
  int steps = t > 0 ? std::max(1, int(std::lround(t / dt))) : 0;
  if (record_every <= 0) record_every = std::max(steps, 1);
  Eigen::VectorXcd chi = chi0 / chi0.norm();
  std::vector<Eigen::VectorXcd> out{chi};
  for (int s = 1; s <= steps; ++s) {
    engine.step(chi, dt);
    if (s % record_every == 0 || s == steps) out.push_back(chi);
  }
  return out;
}

/// Imaginary-time flow of the same lattice orbital equation.
inline Eigen::VectorXcd lattice_hartree_ground_state(const Eigen::VectorXcd& chi0, int N,
                                                     const Lattice& lat,
                                                     const CouplingSpec& coupling, double itol,
                                                     double dtau = 0.05, int max_iters = 200000) {
  LatticeOrbitalEngine engine(lat, coupling.mass, coupling, double(N - 1));
  Eigen::VectorXcd chi = chi0 / chi0.norm();
  double e_prev = engine.energy(chi);
  for (int i = 0; i < max_iters; ++i) {
    engine.step(chi, dtau, /*imaginary_time=*/true);
    double e = engine.energy(chi);
    if (std::abs(e - e_prev) < itol * std::max(std::abs(e), 1e-12)) return chi;
    e_prev = e;
  }
  throw std::runtime_error("lattice_hartree_ground_state: flow did not settle");
}

struct ConvergenceRow {
  int n_particles = 0;
  double time = 0;
  double trace_distance = 0;
  double fidelity = 0;
  double energy_exact = 0;
  double energy_hartree = 0;
  double wall_ms = 0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  double fitted_exponent = 0; // least-squares slope of log d vs log N
  double spearman_rho = 0;    // rank correlation of (N, distance)
};

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<int> idx(v.size());
    for (size_t i = 0; i < v.size(); ++i) idx[i] = int(i);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (size_t i = 0; i < v.size(); ++i) r[idx[i]] = double(i);
    return r;
  };
  auto rx = ranks(x), ry = ranks(y);
  double n = double(x.size());
  double d2 = 0;
  for (size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

inline std::pair<double, double> linear_fit(const std::vector<double>& x,
                                            const std::vector<double>& y) {
  double n = double(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

/// Exact N-body dynamics of the product state against the N-independent
/// Hartree flow (pair coupling g_total/(N-1)), one row per N.
inline ConvergenceReport convergence_experiment(const Lattice& lat,
                                                const std::vector<int>& n_list, double g_total,
                                                double sigma, double mass,
                                                const Eigen::VectorXcd& chi0, double t,
                                                double dt) {
  ConvergenceReport report;
  std::vector<double> log_n, log_d;
  for (int N : n_list) {
    if (N < 2) throw std::invalid_argument("convergence_experiment: N must be >= 2");
    auto t0 = std::chrono::steady_clock::now();
    CouplingSpec pair(CouplingKind::GravityAttractive, g_total / (N - 1), sigma, mass);
    auto basis = build_basis(lat, N);
    auto H = build_hamiltonian(basis, pair);
    FockVector psi0 = product_embed(chi0, N, basis);
    FockVector psit = evolve_exact(H, psi0, t);
    Eigen::MatrixXcd rho_exact = one_body_rdm(psit);

    auto traj = hartree_evolve_lattice(chi0, N, lat, pair, t, dt);
    const Eigen::VectorXcd& chit = traj.back();
    Eigen::MatrixXcd rho_h = chit * chit.adjoint();

    ConvergenceRow row;
    row.n_particles = N;
    row.time = t;
    row.trace_distance = trace_distance(rho_exact, rho_h);
    FockVector embedded = product_embed(chit, N, basis);
    row.fidelity = std::norm(embedded.amplitudes.dot(psit.amplitudes));
    Eigen::VectorXcd hpsi;
    H.apply(psi0.amplitudes, hpsi);
    row.energy_exact = std::real(psi0.amplitudes.dot(hpsi));
    LatticeOrbitalEngine engine(lat, mass, pair, double(N - 1));
    row.energy_hartree = N * engine.energy(chit) + N * delta_m(pair);
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    report.rows.push_back(row);
    log_n.push_back(std::log(double(N)));
    log_d.push_back(std::log(std::max(row.trace_distance, 1e-300)));
  }
  std::vector<double> ns, ds;
  for (auto& r : report.rows) {
    ns.push_back(double(r.n_particles));
    ds.push_back(r.trace_distance);
  }
  report.fitted_exponent = linear_fit(log_n, log_d).first;
  report.spearman_rho = spearman(ns, ds);
  return report;
}

} // namespace nslab
