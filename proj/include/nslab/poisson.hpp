#pragma once

#include <Eigen/Core>
#include <complex>
#include <stdexcept>

#include "nslab/fft.hpp"
#include "nslab/grid.hpp"

namespace nslab {

enum class PoissonBC {
  Isolated,        // free-space Green function via grid doubling (3D only)
  PeriodicZeroMean // spectral inverse Laplacian, k=0 mode removed
};

/// Solves grad^2 V = 4 pi G rho on the grid. The isolated kernel and FFT
/// plans are fixed at construction; solve() keeps its scratch local, so a
/// constructed solver is safe to share across threads.
class PoissonSolver {
 public:
  PoissonSolver(const Grid& grid, PoissonBC bc) : grid_(grid), bc_(bc) {
    if (bc_ == PoissonBC::Isolated) {
      if (grid_.dim != 3)
        throw std::invalid_argument("PoissonSolver: isolated BC requires dim = 3 "
                                    "(free-space 1/r kernel); use PeriodicZeroMean in 1D");
      build_isolated_kernel();
    }
  }

  const Grid& grid() const { return grid_; }
  PoissonBC bc() const { return bc_; }

  /// V such that grad^2 V = 4 pi G rho; isolated mode returns
  /// -G sum_j rho_j / |r - r_j| * cell_volume.
  Eigen::VectorXd solve(const Eigen::VectorXd& density, double G) const {
    if (density.size() != grid_.size())
      throw std::invalid_argument("PoissonSolver: density size does not match grid");
    if (!density.allFinite())
      throw std::invalid_argument("PoissonSolver: density has non-finite entries");
    return bc_ == PoissonBC::Isolated ? solve_isolated(density, G)
                                      : solve_periodic(density, G);
  }

  /// Mean of 1/|r| over one grid cell, used for the kernel's r = 0 sample.
  static double self_cell_kernel(double spacing) {
    const int s = 16;
    double acc = 0;
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j)
        for (int k = 0; k < s; ++k) {
          double x = (i + 0.5) / s - 0.5;
          double y = (j + 0.5) / s - 0.5;
          double z = (k + 0.5) / s - 0.5;
          acc += 1.0 / std::sqrt(x * x + y * y + z * z);
        }
    return acc / (double(s) * s * s) / spacing;
  }

 private:
  Eigen::VectorXd solve_periodic(const Eigen::VectorXd& density, double G) const {
    Eigen::VectorXcd work = density.cast<std::complex<double>>();
    FourierWorkspace fft(grid_);
    fft.fwd(work);
    const int n = grid_.n;
    if (grid_.dim == 1) {
      for (int j = 0; j < n; ++j) {
        double k = grid_.wavenumber(j);
        work[j] = j == 0 ? 0.0 : work[j] * (-4.0 * M_PI * G / (k * k));
      }
    } else {
      std::int64_t idx = 0;
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
          for (int z = 0; z < n; ++z, ++idx) {
            double k2 = grid_.wavenumber(x) * grid_.wavenumber(x) +
                        grid_.wavenumber(y) * grid_.wavenumber(y) +
                        grid_.wavenumber(z) * grid_.wavenumber(z);
            work[idx] = idx == 0 ? 0.0 : work[idx] * (-4.0 * M_PI * G / k2);
          }
    }
    fft.inv(work);
    return work.real();
  }

  Eigen::VectorXd solve_isolated(const Eigen::VectorXd& density, double G) const {
    const int n = grid_.n, n2 = 2 * n;
    const std::int64_t m2 = std::int64_t(n2) * n2 * n2;
    Eigen::VectorXcd work = Eigen::VectorXcd::Zero(m2);
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        for (int z = 0; z < n; ++z)
          work[(std::int64_t(x) * n2 + y) * n2 + z] = density[(std::int64_t(x) * n + y) * n + z];
    FourierWorkspace fft(doubled_);
    fft.fwd(work);
    work.array() *= kernel_hat_.array();
    fft.inv(work);
    Eigen::VectorXd out(grid_.size());
    const double scale = -G * grid_.cell_volume();
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        for (int z = 0; z < n; ++z)
          out[(std::int64_t(x) * n + y) * n + z] =
              scale * work[(std::int64_t(x) * n2 + y) * n2 + z].real();
    return out;
  }

  void build_isolated_kernel() {
    doubled_ = Grid(3, 2 * grid_.n, grid_.spacing);
    const int n2 = doubled_.n;
    Eigen::VectorXcd kernel(doubled_.size());
    std::int64_t idx = 0;
    for (int x = 0; x < n2; ++x)
      for (int y = 0; y < n2; ++y)
        for (int z = 0; z < n2; ++z, ++idx) {
          double r2 = doubled_.coord(x) * doubled_.coord(x) +
                      doubled_.coord(y) * doubled_.coord(y) +
                      doubled_.coord(z) * doubled_.coord(z);
          kernel[idx] = r2 > 0 ? 1.0 / std::sqrt(r2) : self_cell_kernel(grid_.spacing);
        }
    FourierWorkspace fft(doubled_);
    fft.fwd(kernel);
    kernel_hat_ = kernel;
  }

  Grid grid_;
  PoissonBC bc_;
  Grid doubled_;
  Eigen::VectorXcd kernel_hat_;
};

/// One-shot convenience wrapper; builds the solver (and, for isolated BC,
/// the doubled-grid kernel) each call. Hot loops should hold a PoissonSolver.
inline Eigen::VectorXd poisson_solve(const Eigen::VectorXd& density, const Grid& grid,
                                     double G, PoissonBC bc) {
  return PoissonSolver(grid, bc).solve(density, G);
}

} // namespace nslab
