#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

#include "nslab/fft.hpp"
#include "nslab/grid.hpp"

namespace nslab {

enum class CouplingKind {
  GravityAttractive,        // pair energy -strength/r, strength = G*m^2
  CoulombRepulsive,         // pair energy +strength/r, strength = e^2/(4*pi)
  CoulombExternalAttractive // external -strength/r well, no self-energy
};

/// Sign of the pair energy: attractive couplings pull the energy down.
inline int pair_sign(CouplingKind kind) {
  return kind == CouplingKind::CoulombRepulsive ? +1 : -1;
}

/// Interaction parameters. `strength` is the non-negative coefficient of 1/r
/// (zero switches the interaction off); the sign lives in `kind` only.
struct CouplingSpec {
  CouplingKind kind = CouplingKind::GravityAttractive;
  double strength = 0; // energy*length
  double sigma = 0;    // smearing width, >= 0
  double mass = 1;

  CouplingSpec() = default;
  CouplingSpec(CouplingKind kind_, double strength_, double sigma_, double mass_)
      : kind(kind_), strength(strength_), sigma(sigma_), mass(mass_) {
    if (strength < 0) throw std::invalid_argument("CouplingSpec: strength must be non-negative");
    if (sigma < 0) throw std::invalid_argument("CouplingSpec: sigma must be non-negative");
    if (!(mass > 0)) throw std::invalid_argument("CouplingSpec: mass must be positive");
  }

  static CouplingSpec gravity(double G, double mass, double sigma) {
    return CouplingSpec(CouplingKind::GravityAttractive, G * mass * mass, sigma, mass);
  }
  static CouplingSpec coulomb(double e_sq, double mass, double sigma) {
    return CouplingSpec(CouplingKind::CoulombRepulsive, e_sq / (4.0 * M_PI), sigma, mass);
  }
};

/// Regularized Newton/Coulomb pair kernel Erf(r/2s)/r. Smooth at the origin:
/// below r/s = 1e-3 a 5-term series in x = r/2s is used,
///   Erf(x)/r = (1/(s sqrt(pi))) (1 - x^2/3 + x^4/10 - x^6/42 + x^8/216).
template <typename Scalar = double>
Scalar f_sigma(Scalar r, Scalar sigma) {
  if (!(sigma > Scalar(0))) throw std::invalid_argument("f_sigma: sigma must be positive");
  if (r < Scalar(0)) throw std::invalid_argument("f_sigma: r must be non-negative");
  const Scalar sqrt_pi = std::sqrt(M_PI);
  if (r < Scalar(1e-3) * sigma) {
    Scalar x2 = r / (Scalar(2) * sigma);
    x2 *= x2;
    Scalar s = Scalar(1) + x2 * (Scalar(-1) / 3 + x2 * (Scalar(1) / 10 + x2 * (Scalar(-1) / 42 + x2 / Scalar(216))));
    return s / (sigma * sqrt_pi);
  }
  return std::erf(r / (Scalar(2) * sigma)) / r;
}

/// Self-energy counterterm absorbed into the renormalized mass:
/// -strength/(sigma*sqrt(pi)) for gravity, +strength/(sigma*sqrt(pi)) for
/// Coulomb (i.e. e^2/(4 pi^{3/2} sigma)). Diverges as sigma -> 0.
inline double delta_m(const CouplingSpec& coupling) {
  if (coupling.kind == CouplingKind::CoulombExternalAttractive)
    throw std::invalid_argument("delta_m: external potentials carry no self-energy");
  if (!(coupling.sigma > 0))
    throw std::invalid_argument("delta_m: divergent counterterm at sigma = 0");
  return pair_sign(coupling.kind) * coupling.strength * f_sigma(0.0, coupling.sigma);
}

/// Normalized Gaussian smearing function sampled on a periodic grid,
/// centered on the origin with minimum-image distances.
struct SmearingKernel {
  double sigma = 0;
  int dim = 1;
  Grid grid;
  Eigen::VectorXd samples;
  bool under_resolved = false; // sigma < 2*spacing: kept, but flagged
};

inline SmearingKernel gaussian_smearing(double sigma, const Grid& grid) {
  if (!(sigma > 0)) throw std::invalid_argument("gaussian_smearing: sigma must be positive");
  SmearingKernel k;
  k.sigma = sigma;
  k.dim = grid.dim;
  k.grid = grid;
  k.under_resolved = sigma < 2.0 * grid.spacing;
  const double norm = std::pow(2.0 * M_PI * sigma * sigma, -0.5 * grid.dim);
  const double inv_two_s2 = 1.0 / (2.0 * sigma * sigma);
  k.samples.resize(grid.size());
  if (grid.dim == 1) {
    for (int i = 0; i < grid.n; ++i) {
      double x = grid.coord(i);
      k.samples[i] = norm * std::exp(-x * x * inv_two_s2);
    }
  } else {
    std::int64_t idx = 0;
    for (int x = 0; x < grid.n; ++x)
      for (int y = 0; y < grid.n; ++y)
        for (int z = 0; z < grid.n; ++z, ++idx) {
          double r2 = grid.coord(x) * grid.coord(x) + grid.coord(y) * grid.coord(y) +
                      grid.coord(z) * grid.coord(z);
          k.samples[idx] = norm * std::exp(-r2 * inv_two_s2);
        }
  }
  return k;
}

/// Periodic convolution (field * kernel)(r_i) = sum_j field_j k(r_i - r_j) dV.
inline Eigen::VectorXd convolve_periodic(const Eigen::VectorXd& field, const SmearingKernel& k) {
  if (field.size() != k.grid.size())
    throw std::invalid_argument("convolve_periodic: field does not match kernel grid");
  Eigen::VectorXcd f = field.cast<std::complex<double>>();
  Eigen::VectorXcd g = k.samples.cast<std::complex<double>>();
  FourierWorkspace fft(k.grid);
  fft.fwd(f);
  fft.fwd(g);
  f.array() *= g.array();
  fft.inv(f);
  return f.real() * k.grid.cell_volume();
}

} // namespace nslab
