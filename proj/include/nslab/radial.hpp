#pragma once

#include <Eigen/Core>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "nslab/kernels.hpp"

namespace nslab {

/// Radial s-wave problem -u''/(2 mu) + [V_ext + V_self]u = E u on [0, r_max],
/// u(0) = u(r_max) = 0, with V_ext = -alpha/r and an optional self-consistent
/// Hartree potential of the particle's own density (the "wrong" NSE variant).
struct RadialProblem {
  double reduced_mass = 1;
  double external_coulomb_strength = 0; // alpha >= 0
  std::optional<CouplingSpec> self_interaction;
  double r_max = 30;
  int n_points = 2000;

  void validate() const {
    if (!(reduced_mass > 0)) throw std::invalid_argument("RadialProblem: reduced_mass must be positive");
    if (external_coulomb_strength < 0)
      throw std::invalid_argument("RadialProblem: external strength must be non-negative");
    if (!(r_max > 0)) throw std::invalid_argument("RadialProblem: r_max must be positive");
    if (n_points < 1000) throw std::invalid_argument("RadialProblem: n_points must be >= 1000");
  }
};

namespace detail {

/// Numerov sweep for u'' = g(r) u with g = 2 mu (V - E); returns the number
/// of interior nodes and fills u (unnormalized).
inline int numerov_sweep(const Eigen::VectorXd& g, double h, Eigen::VectorXd& u) {
  const int n = int(g.size());
  u.resize(n);
  u[0] = 0.0;
  u[1] = h; // scale is arbitrary
  int nodes = 0;
  const double c = h * h / 12.0;
  for (int i = 1; i + 1 < n; ++i) {
    double num = 2.0 * (1.0 + 5.0 * c * g[i]) * u[i] - (1.0 - c * g[i - 1]) * u[i - 1];
    u[i + 1] = num / (1.0 - c * g[i + 1]);
    if (u[i + 1] == 0.0 || (u[i + 1] > 0) != (u[i] > 0)) ++nodes;
    // rescale to dodge overflow in classically forbidden tails
    if (std::abs(u[i + 1]) > 1e200) {
      u.head(i + 2) /= 1e200;
    }
  }
  return nodes;
}

} // namespace detail

/// Lowest eigenvalue by node-counting bisection; when a self-interaction is
/// present the Hartree potential of |u|^2 is iterated to self-consistency
/// with linear mixing.
inline double radial_ground_state(const RadialProblem& problem) {
  problem.validate();
  const int n = problem.n_points;
  const double h = problem.r_max / (n - 1);
  const double mu = problem.reduced_mass;
  const double alpha = problem.external_coulomb_strength;

  Eigen::VectorXd r(n);
  for (int i = 0; i < n; ++i) r[i] = i * h;

  Eigen::VectorXd v_ext(n);
  v_ext[0] = 0.0; // u(0) = 0 makes the origin sample irrelevant
  for (int i = 1; i < n; ++i) v_ext[i] = -alpha / r[i];

  Eigen::VectorXd v_self = Eigen::VectorXd::Zero(n);
  const bool self_consistent = problem.self_interaction.has_value();
  const double q = self_consistent ? pair_sign(problem.self_interaction->kind) *
                                         problem.self_interaction->strength
                                   : 0.0;

  Eigen::VectorXd u(n), g(n);
  auto solve_once = [&](double& energy_out) {
    // bracket: well below the hydrogenic ground state up to the continuum edge
    double scale = std::max(mu * alpha * alpha, 1e-6);
    double e_lo = -10.0 * scale - 1.0, e_hi = -1e-12 * scale;
    auto nodes_at = [&](double e) {
      for (int i = 0; i < n; ++i) g[i] = 2.0 * mu * (v_ext[i] + v_self[i] - e);
      return detail::numerov_sweep(g, h, u);
    };
    if (nodes_at(e_hi) == 0)
      throw std::runtime_error("radial_ground_state: no bound state in window");
    if (nodes_at(e_lo) != 0)
      throw std::runtime_error("radial_ground_state: bracket floor too shallow");
    for (int it = 0; it < 200 && e_hi - e_lo > 1e-13 * scale; ++it) {
      double mid = 0.5 * (e_lo + e_hi);
      (nodes_at(mid) >= 1 ? e_hi : e_lo) = mid;
    }
    energy_out = 0.5 * (e_lo + e_hi);
    nodes_at(energy_out); // leave u at the converged energy
  };

  double energy = 0;
  if (!self_consistent) {
    solve_once(energy);
    return energy;
  }

  // self-consistency loop on the Hartree potential of |u|^2
  // The outward sweep at the bisected energy is eigenvalue-accurate but its
  // tail is polluted by the growing solution; recover a clean eigenvector by
  // tridiagonal inverse iteration on the finite-difference Hamiltonian.
  auto eigvec_at = [&](double e) {
    const double off = -1.0 / (2.0 * mu * h * h);
    Eigen::VectorXd diag(n - 2);
    for (int i = 1; i + 1 < n; ++i)
      diag[i - 1] = 1.0 / (mu * h * h) + v_ext[i] + v_self[i] - e;
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n - 2);
    Eigen::VectorXd c(n - 2), d(n - 2);
    for (int pass = 0; pass < 2; ++pass) {
      // Thomas solve (T - e) y = x; tiny pivots are the point of the method
      c[0] = off / diag[0];
      d[0] = x[0] / diag[0];
      for (int i = 1; i < n - 2; ++i) {
        double m = diag[i] - off * c[i - 1];
        if (std::abs(m) < 1e-280) m = m < 0 ? -1e-280 : 1e-280;
        c[i] = off / m;
        d[i] = (x[i] - off * d[i - 1]) / m;
      }
      x[n - 3] = d[n - 3];
      for (int i = n - 4; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
      x /= x.norm();
    }
    u[0] = u[n - 1] = 0.0;
    u.segment(1, n - 2) = x;
  };

  double e_prev = 0;
  solve_once(e_prev);
  eigvec_at(e_prev);
  for (int iter = 0; iter < 200; ++iter) {
    // normalize int u^2 dr = 1 (trapezoid)
    double norm2 = 0;
    for (int i = 1; i < n; ++i) norm2 += 0.5 * h * (u[i] * u[i] + u[i - 1] * u[i - 1]);
    Eigen::VectorXd rho = u.cwiseAbs2() / norm2;
    // V_H(r) = q [ (1/r) int_0^r rho ds + int_r^rmax rho/s ds ]
    Eigen::VectorXd inner(n), outer(n);
    inner[0] = 0;
    for (int i = 1; i < n; ++i) inner[i] = inner[i - 1] + 0.5 * h * (rho[i] + rho[i - 1]);
    outer[n - 1] = 0;
    for (int i = n - 2; i >= 1; --i)
      outer[i] = outer[i + 1] + 0.5 * h * (rho[i] / r[i] + rho[i + 1] / r[i + 1]);
    outer[0] = outer[1];
    Eigen::VectorXd v_new(n);
    v_new[0] = 0;
    for (int i = 1; i < n; ++i) v_new[i] = q * (inner[i] / r[i] + outer[i]);
    v_self = 0.5 * v_self + 0.5 * v_new;
    solve_once(energy);
    eigvec_at(energy);
    if (std::abs(energy - e_prev) < 1e-11 * std::abs(energy)) return energy;
    e_prev = energy;
  }
  throw std::runtime_error("radial_ground_state: self-consistency loop did not settle");
}

} // namespace nslab
