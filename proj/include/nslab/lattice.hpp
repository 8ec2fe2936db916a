#pragma once

#include <Eigen/Dense>
#include <complex>

#include "nslab/grid.hpp"
#include "nslab/kernels.hpp"

namespace nslab {

/// Nearest-neighbor hopping matrix -(1/2m) grad^2, periodic. Row sums vanish.
inline Eigen::MatrixXd hopping_matrix(const Lattice& lat, double mass) {
  const auto M = lat.size();
  const double hop = 1.0 / (2.0 * mass * lat.spacing * lat.spacing);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(M, M);
  for (std::int64_t s = 0; s < M; ++s) {
    auto c = lat.unpack(s);
    h(s, s) = 2.0 * lat.dim * hop;
    for (int d = 0; d < lat.dim; ++d)
      for (int dir : {-1, +1}) {
        auto cn = c;
        cn[d] += dir;
        h(s, lat.pack(cn)) -= hop;
      }
  }
  return h;
}

/// Gaussian smearing samples centered on site 0, minimum-image metric.
inline Eigen::VectorXd lattice_gaussian(const Lattice& lat, double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("lattice_gaussian: sigma must be positive");
  const auto M = lat.size();
  const double norm = std::pow(2.0 * M_PI * sigma * sigma, -0.5 * lat.dim);
  Eigen::VectorXd g(M);
  for (std::int64_t s = 0; s < M; ++s) {
    double r = lat.min_image_distance(s, 0);
    g[s] = norm * std::exp(-r * r / (2.0 * sigma * sigma));
  }
  return g;
}

/// Circulant product out_i = sum_j kernel(d(i,j)) v_j * weight. kernel must be
/// indexed by displacement (site relative to 0). O(M^2); lattices are small.
inline Eigen::VectorXd circulant_apply(const Lattice& lat, const Eigen::VectorXd& kernel,
                                       const Eigen::VectorXd& v, double weight = 1.0) {
  const auto M = lat.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(M);
  for (std::int64_t i = 0; i < M; ++i) {
    auto ci = lat.unpack(i);
    for (std::int64_t j = 0; j < M; ++j) {
      auto cj = lat.unpack(j);
      std::array<int, 3> diff{0, 0, 0};
      for (int d = 0; d < lat.dim; ++d) diff[d] = ci[d] - cj[d];
      out[i] += kernel[lat.pack(diff)] * v[j];
    }
  }
  return out * weight;
}

/// Split-step evolution of a lattice orbital under
///   i dchi/dt = h_hop chi + factor * sign * strength * (F_sigma conv |chi|^2) chi
/// with |chi| in the occupation convention (sum |chi_i|^2 = 1, no volume
/// weights). The kinetic half is the exact propagator of the hopping matrix.
class LatticeOrbitalEngine {
 public:
  LatticeOrbitalEngine(const Lattice& lat, double mass, const CouplingSpec& coupling,
                       double factor)
      : lat_(lat), coupling_(coupling), factor_(factor) {
    Eigen::MatrixXd h = hopping_matrix(lat, mass);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    evecs_ = es.eigenvectors();
    evals_ = es.eigenvalues();
    const auto M = lat.size();
    kernel_.resize(M);
    if (coupling.sigma > 0)
      for (std::int64_t s = 0; s < M; ++s)
        kernel_[s] = f_sigma(lat.min_image_distance(s, 0), coupling.sigma);
    else
      kernel_.setZero();
  }

  const Lattice& lattice() const { return lat_; }

  Eigen::VectorXd mean_field_potential(const Eigen::VectorXd& occupancy) const {
    if (!(coupling_.strength > 0)) return Eigen::VectorXd::Zero(lat_.size());
    double g = pair_sign(coupling_.kind) * coupling_.strength * factor_;
    return circulant_apply(lat_, kernel_, occupancy, g);
  }

  void step(Eigen::VectorXcd& chi, double dt, bool imaginary_time = false) {
    kick(chi, 0.5 * dt, imaginary_time);
    drift(chi, dt, imaginary_time);
    kick(chi, 0.5 * dt, imaginary_time);
    if (imaginary_time) chi /= chi.norm();
  }

  void kick(Eigen::VectorXcd& chi, double dt, bool imaginary_time = false) {
    if (!(coupling_.strength > 0)) return;
    Eigen::VectorXd v = mean_field_potential(chi.cwiseAbs2());
    if (imaginary_time)
      chi.array() *= (-dt * (v.array() - v.minCoeff())).exp();
    else {
      const std::complex<double> I(0, 1);
      chi.array() *= (-I * dt * v.array()).exp();
    }
  }

  void drift(Eigen::VectorXcd& chi, double dt, bool imaginary_time = false) {
    Eigen::VectorXcd modal = evecs_.transpose() * chi;
    if (imaginary_time)
      modal.array() *= (-dt * evals_.array()).exp();
    else {
      const std::complex<double> I(0, 1);
      modal.array() *= (-I * dt * evals_.array()).exp();
    }
    chi = evecs_ * modal;
  }

  double energy(const Eigen::VectorXcd& chi) const {
    Eigen::VectorXcd modal = evecs_.transpose() * chi;
    double kin = (evals_.array() * modal.cwiseAbs2().array()).sum();
    Eigen::VectorXd rho = chi.cwiseAbs2();
    double pot = coupling_.strength > 0
                     ? 0.5 * (mean_field_potential(rho).array() * rho.array()).sum()
                     : 0.0;
    return kin + pot;
  }

 private:
  Lattice lat_;
  CouplingSpec coupling_;
  double factor_;
  Eigen::MatrixXd evecs_;
  Eigen::VectorXd evals_;
  Eigen::VectorXd kernel_;
};

} // namespace nslab
