#pragma once

#include <Eigen/Core>
#include <complex>

#include "nslab/grid.hpp"

namespace nslab {

/// Complex amplitude on a uniform periodic grid. Normalization convention is
/// ||psi||_L2 = 1; total mass enters through the coupling strength.
struct WaveField {
  Grid grid;
  Eigen::VectorXcd amplitude;
  double mass = 1;

  WaveField() = default;
  WaveField(const Grid& g, double mass_) : grid(g), amplitude(Eigen::VectorXcd::Zero(g.size())), mass(mass_) {}

  double norm() const { return std::sqrt(amplitude.squaredNorm() * grid.cell_volume()); }
  void normalize() { amplitude /= norm(); }
  Eigen::VectorXd density() const { return amplitude.cwiseAbs2(); }
};

struct Observables {
  double time = 0;
  double norm = 0;
  double energy = 0;
  double rms_width = 0;
  double peak_density = 0;
  Eigen::Vector3d center_of_mass = Eigen::Vector3d::Zero();
};

/// Center of mass per axis as a circular mean, so a lump is measured
/// correctly wherever it sits on the torus.
inline Eigen::Vector3d center_of_mass(const Grid& grid, const Eigen::VectorXd& density) {
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
  const double L = grid.length();
  const int n = grid.n;
  for (int d = 0; d < grid.dim; ++d) {
    double cs = 0, sn = 0;
    std::int64_t idx = 0;
    if (grid.dim == 1) {
      for (int i = 0; i < n; ++i) {
        double th = 2.0 * M_PI * i / n;
        cs += density[i] * std::cos(th);
        sn += density[i] * std::sin(th);
      }
    } else {
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
          for (int z = 0; z < n; ++z, ++idx) {
            int i = d == 0 ? x : (d == 1 ? y : z);
            double th = 2.0 * M_PI * i / n;
            cs += density[idx] * std::cos(th);
            sn += density[idx] * std::sin(th);
          }
    }
    double ang = std::atan2(sn, cs);
    if (ang < 0) ang += 2.0 * M_PI;
    com[d] = ang * L / (2.0 * M_PI);
  }
  return com;
}

/// sqrt of the total spatial variance about the center of mass,
/// minimum-image displacements per axis.
inline double rms_width(const Grid& grid, const Eigen::VectorXd& density) {
  Eigen::Vector3d com = center_of_mass(grid, density);
  const double L = grid.length();
  double w = 0, total = 0;
  const int n = grid.n;
  auto wrap = [&](double dx) {
    dx = std::fmod(dx + 1.5 * L, L) - 0.5 * L;
    return dx;
  };
  std::int64_t idx = 0;
  if (grid.dim == 1) {
    for (int i = 0; i < n; ++i) {
      double dx = wrap(i * grid.spacing - com[0]);
      w += density[i] * dx * dx;
      total += density[i];
    }
  } else {
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        for (int z = 0; z < n; ++z, ++idx) {
          double dx = wrap(x * grid.spacing - com[0]);
          double dy = wrap(y * grid.spacing - com[1]);
          double dz = wrap(z * grid.spacing - com[2]);
          w += density[idx] * (dx * dx + dy * dy + dz * dz);
          total += density[idx];
        }
  }
  return std::sqrt(w / total);
}

/// Normalized Gaussian packet exp(-|r-c|^2/(4 w^2) + i m v.r); |psi|^2 has
/// per-axis std w. Boost velocities should be multiples of 2 pi/(m L) so the
/// phase is single-valued on the torus.
inline WaveField gaussian_packet(const Grid& grid, double mass, const Eigen::Vector3d& center,
                                 double width, const Eigen::Vector3d& velocity = Eigen::Vector3d::Zero()) {
  WaveField psi(grid, mass);
  const double L = grid.length();
  auto wrap = [&](double dx) { return std::fmod(dx + 1.5 * L, L) - 0.5 * L; };
  const std::complex<double> I(0, 1);
  std::int64_t idx = 0;
  const int n = grid.n;
  if (grid.dim == 1) {
    for (int i = 0; i < n; ++i) {
      double x = i * grid.spacing;
      double dx = wrap(x - center[0]);
      psi.amplitude[i] = std::exp(-dx * dx / (4.0 * width * width)) *
                         std::exp(I * (mass * velocity[0] * x));
    }
  } else {
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        for (int z = 0; z < n; ++z, ++idx) {
          double dx = wrap(x * grid.spacing - center[0]);
          double dy = wrap(y * grid.spacing - center[1]);
          double dz = wrap(z * grid.spacing - center[2]);
          double r2 = dx * dx + dy * dy + dz * dz;
          double phase = mass * (velocity[0] * x + velocity[1] * y + velocity[2] * z) * grid.spacing;
          psi.amplitude[idx] = std::exp(-r2 / (4.0 * width * width)) * std::exp(I * phase);
        }
  }
  psi.normalize();
  return psi;
}

} // namespace nslab
