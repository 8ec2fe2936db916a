#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nslab {

/// Uniform periodic grid in 1 or 3 dimensions, n points per axis (power of
/// two), physical box length n*spacing per axis. Index order is C row-major:
/// flat = (x*n + y)*n + z in 3D.
struct Grid {
  int dim = 1;
  int n = 0;          // points per axis
  double spacing = 0; // cell edge

  Grid() = default;
  Grid(int dim_, int points_per_axis, double spacing_)
      : dim(dim_), n(points_per_axis), spacing(spacing_) {
    if (dim != 1 && dim != 3)
      throw std::invalid_argument("Grid: dim must be 1 or 3");
    if (n <= 0 || (n & (n - 1)) != 0)
      throw std::invalid_argument("Grid: points_per_axis must be a positive power of two");
    if (!(spacing > 0))
      throw std::invalid_argument("Grid: spacing must be positive");
  }

  std::int64_t size() const {
    std::int64_t m = 1;
    for (int d = 0; d < dim; ++d) m *= n;
    return m;
  }
  double length() const { return n * spacing; }
  double cell_volume() const { return std::pow(spacing, dim); }
  double k_max() const { return M_PI / spacing; }

  /// Signed minimum-image coordinate of grid index i along one axis.
  double coord(int i) const {
    int half = n / 2;
    int j = i <= half ? i : i - n; // wrap to (-n/2, n/2]
    if (i == half) j = -half;      // convention: half-point goes negative
    return j * spacing;
  }

  /// Angular wavenumber of DFT mode index j along one axis.
  double wavenumber(int j) const {
    int half = n / 2;
    int m = j < half ? j : j - n;
    if (j == half) m = -half;
    return 2.0 * M_PI * m / length();
  }

  /// Minimum-image distance between flat indices a and b.
  double min_image_distance(std::int64_t a, std::int64_t b) const {
    double r2 = 0;
    for (int d = dim - 1; d >= 0; --d) {
      int ia = static_cast<int>(a % n), ib = static_cast<int>(b % n);
      a /= n;
      b /= n;
      int diff = std::abs(ia - ib);
      diff = std::min(diff, n - diff);
      r2 += double(diff) * diff;
    }
    return spacing * std::sqrt(r2);
  }

  bool operator==(const Grid& o) const {
    return dim == o.dim && n == o.n && spacing == o.spacing;
  }
};

/// Finite lattice for the second-quantized sectors. Unlike Grid, sites per
/// axis need not be a power of two; the site count is capped so that Fock
/// dimensions stay tractable.
struct Lattice {
  int dim = 1;
  int sites_per_axis = 0;
  double spacing = 0;

  Lattice() = default;
  Lattice(int dim_, int sites, double spacing_, std::int64_t site_cap = 64)
      : dim(dim_), sites_per_axis(sites), spacing(spacing_) {
    if (dim != 1 && dim != 3)
      throw std::invalid_argument("Lattice: dim must be 1 or 3");
    if (sites_per_axis < 2)
      throw std::invalid_argument("Lattice: need at least 2 sites per axis");
    if (!(spacing > 0))
      throw std::invalid_argument("Lattice: spacing must be positive");
    if (size() > site_cap)
      throw std::invalid_argument("Lattice: " + std::to_string(size()) +
                                  " sites exceeds cap " + std::to_string(site_cap));
  }

  std::int64_t size() const {
    std::int64_t m = 1;
    for (int d = 0; d < dim; ++d) m *= sites_per_axis;
    return m;
  }
  double cell_volume() const { return std::pow(spacing, dim); }

  /// Axis indices of flat site index (x-major, z fastest, as in Grid).
  std::array<int, 3> unpack(std::int64_t s) const {
    std::array<int, 3> c{0, 0, 0};
    for (int d = dim - 1; d >= 0; --d) {
      c[d] = static_cast<int>(s % sites_per_axis);
      s /= sites_per_axis;
    }
    return c;
  }
  std::int64_t pack(const std::array<int, 3>& c) const {
    std::int64_t s = 0;
    for (int d = 0; d < dim; ++d) {
      int w = ((c[d] % sites_per_axis) + sites_per_axis) % sites_per_axis;
      s = s * sites_per_axis + w;
    }
    return s;
  }

  double min_image_distance(std::int64_t a, std::int64_t b) const {
    auto ca = unpack(a), cb = unpack(b);
    double r2 = 0;
    for (int d = 0; d < dim; ++d) {
      int diff = std::abs(ca[d] - cb[d]);
      diff = std::min(diff, sites_per_axis - diff);
      r2 += double(diff) * diff;
    }
    return spacing * std::sqrt(r2);
  }

  bool operator==(const Lattice& o) const {
    return dim == o.dim && sites_per_axis == o.sites_per_axis && spacing == o.spacing;
  }
};

} // namespace nslab
