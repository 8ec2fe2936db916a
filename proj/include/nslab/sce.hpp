#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "nslab/fock.hpp"
#include "nslab/lattice.hpp"
#include "nslab/poisson.hpp"

namespace nslab {

/// Newtonian potential sourced by <mu_reg> of a Fock state: the lattice form
/// of the weak-field constraint solution, with the same Green convention as
/// poisson_solve (bare minimum-image 1/r kernel with the self-cell average in
/// 3D, spectral zero-mean inverse Laplacian in 1D).
inline Eigen::VectorXd sce_potential(const FockVector& v, double sigma, double G, double mass) {
  const Lattice& lat = v.basis->lattice();
  const auto M = lat.size();
  Eigen::VectorXd mu = mass_density_expectation(v, sigma, mass);
  if (lat.dim == 3) {
    Eigen::VectorXd kernel(M);
    for (std::int64_t s = 0; s < M; ++s) {
      double r = lat.min_image_distance(s, 0);
      kernel[s] = r > 0 ? 1.0 / r : PoissonSolver::self_cell_kernel(lat.spacing);
    }
    return circulant_apply(lat, kernel, mu, -G);
  }
  // 1D: spectral inverse Laplacian with the k=0 mode removed
  const int n = lat.sites_per_axis;
  const double L = n * lat.spacing;
  Eigen::VectorXcd hat = Eigen::VectorXcd::Zero(n);
  const std::complex<double> I(0, 1);
  for (int k = 1; k < n; ++k) {
    int m = k <= n / 2 ? k : k - n;
    double kk = 2.0 * M_PI * m / L;
    std::complex<double> acc = 0;
    for (int j = 0; j < n; ++j) acc += mu[j] * std::exp(-I * (kk * j * lat.spacing));
    hat[k] = -4.0 * M_PI * G * acc / (kk * kk);
  }
  Eigen::VectorXd out(n);
  for (int j = 0; j < n; ++j) {
    std::complex<double> acc = 0;
    for (int k = 1; k < n; ++k) {
      int m = k <= n / 2 ? k : k - n;
      double kk = 2.0 * M_PI * m / L;
      acc += hat[k] * std::exp(I * (kk * j * lat.spacing));
    }
    out[j] = acc.real() / n;
  }
  return out;
}

struct MisstepRow {
  double time = 0;
  double l2_distance = 0;     // || chi_mf - chi_exact ||, both unit norm
  double density_overlap = 0; // sum_i sqrt(rho_a rho_b), 1 when identical
  double norm_a = 0;          // mean-field-sourced orbital
  double norm_b = 0;          // exact-field orbital
};

struct MisstepReport {
  std::vector<MisstepRow> rows;
  std::vector<Eigen::VectorXcd> mean_field_trajectory; // recorded alongside rows
  std::vector<Eigen::VectorXcd> exact_field_trajectory;
  double max_distance = 0;
};

/// Evolves one-particle initial data two ways from bit-identical input:
/// (a) mean-field-sourced, the operator mu_reg replaced by its expectation in
///     the interaction (the lattice NSE flow, independently coded here with a
///     fresh direct-sum potential each step), and
/// (b) the N=1 projection of the second-quantized Hamiltonian (free hopping
///     plus the delta_m counterterm phase).
/// resource_each_step=false freezes the source at the initial density.
inline MisstepReport misstep_compare(const Eigen::VectorXcd& chi0, const Lattice& lat,
                                     const CouplingSpec& coupling, double t, double dt,
                                     int record_every = 1, bool resource_each_step = true) {
  if (chi0.size() != lat.size())
    throw std::invalid_argument("misstep_compare: orbital does not match lattice");
  const auto M = lat.size();
  const int steps = std::max(1, int(std::lround(t / dt)));
  const double sg = pair_sign(coupling.kind) * coupling.strength;

  // (a) independent split-step loop; potential by direct summation
  Eigen::MatrixXd h = hopping_matrix(lat, coupling.mass);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  const Eigen::MatrixXd U = es.eigenvectors();
  const Eigen::VectorXd ev = es.eigenvalues();
  const std::complex<double> I(0, 1);
  Eigen::VectorXcd drift_phase = (-I * dt * ev.array()).exp();

  auto potential_of = [&](const Eigen::VectorXd& occupancy) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(M);
    if (coupling.strength > 0)
      for (std::int64_t i = 0; i < M; ++i)
        for (std::int64_t j = 0; j < M; ++j)
          v[i] += sg * f_sigma(lat.min_image_distance(i, j), coupling.sigma) * occupancy[j];
    return v;
  };

  Eigen::VectorXcd chi = chi0 / chi0.norm();
  const Eigen::VectorXd frozen = potential_of(chi.cwiseAbs2());

  // (b) exact one-particle sector
  auto basis = build_basis(lat, 1);
  auto H1 = build_hamiltonian(basis, coupling, /*include_rest_mass=*/false,
                              /*allow_unresolved_sigma=*/false);
  Eigen::MatrixXd dense1(H1.matrix);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es1(dense1);
  Eigen::VectorXcd exact_modal0 = es1.eigenvectors().transpose() * (chi0 / chi0.norm());

  MisstepReport report;
  auto record = [&](int step) {
    double time = step * dt;
    Eigen::VectorXcd exact =
        es1.eigenvectors() *
        (exact_modal0.array() * ((-I * time * es1.eigenvalues().array()).exp())).matrix();
    MisstepRow row;
    row.time = time;
    row.norm_a = chi.norm();
    row.norm_b = exact.norm();
    Eigen::VectorXcd an = chi / row.norm_a, bn = exact / row.norm_b;
    row.l2_distance = (an - bn).norm();
    row.density_overlap = (an.cwiseAbs2().cwiseProduct(bn.cwiseAbs2())).cwiseSqrt().sum();
    report.rows.push_back(row);
    report.mean_field_trajectory.push_back(chi);
    report.exact_field_trajectory.push_back(exact);
    report.max_distance = std::max(report.max_distance, row.l2_distance);
  };
  record(0);

  for (int s = 1; s <= steps; ++s) {
    // kick(dt/2) - drift(dt) - kick(dt/2), the same scheme as the shared
    // lattice engine but with locally computed potentials
    auto kick = [&](double half) {
      const Eigen::VectorXd v = resource_each_step ? potential_of(chi.cwiseAbs2()) : frozen;
      chi.array() *= (-I * half * v.array()).exp();
    };
    kick(0.5 * dt);
    Eigen::VectorXcd modal = U.transpose() * chi;
    modal.array() *= drift_phase.array();
    chi = U * modal;
    kick(0.5 * dt);
    if (s % record_every == 0 || s == steps) record(s);
  }
  return report;
}

} // namespace nslab
