#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <algorithm>
#include <complex>
#include <memory>
#include <stdexcept>
#include <vector>

#include "nslab/grid.hpp"
#include "nslab/kernels.hpp"
#include "nslab/lanczos.hpp"
#include "nslab/lattice.hpp"

namespace nslab {

/// Occupation-number basis of N bosons on the sites of a lattice. States are
/// stored as non-decreasing N-tuples of site indices, in ascending
/// lexicographic order of the tuple: for M=2, N=2 that is
/// (0,0), (0,1), (1,1), i.e. occupations (2,0), (1,1), (0,2).
class FockBasis {
 public:
  FockBasis(const Lattice& lattice, int n_particles, std::int64_t dim_cap = 2'000'000)
      : lattice_(lattice), n_(n_particles) {
    if (n_ < 0) throw std::invalid_argument("FockBasis: n_particles must be >= 0");
    const std::int64_t M = lattice_.size();
    dim_ = dimension_of(M, n_);
    if (dim_ < 0 || dim_ > dim_cap)
      throw std::invalid_argument("FockBasis: dimension " + std::to_string(dim_) +
                                  " exceeds cap " + std::to_string(dim_cap));
    states_.resize(std::size_t(dim_) * std::max(n_, 1));
    if (n_ == 0) return; // vacuum: one (empty) state
    std::vector<std::int32_t> p(n_, 0);
    std::int64_t row = 0;
    for (;;) {
      std::copy(p.begin(), p.end(), states_.begin() + row * n_);
      ++row;
      int i = n_ - 1;
      while (i >= 0 && p[i] == M - 1) --i;
      if (i < 0) break;
      ++p[i];
      for (int j = i + 1; j < n_; ++j) p[j] = p[i];
    }
    if (row != dim_) throw std::logic_error("FockBasis: enumeration mismatch");
  }

  static std::int64_t dimension_of(std::int64_t sites, int n) {
    // C(n + sites - 1, n) with overflow guard
    long double acc = 1.0L;
    for (int i = 1; i <= n; ++i) acc *= (long double)(sites - 1 + i) / i;
    if (acc > 4.0e18L) return -1;
    return std::int64_t(acc + 0.5L);
  }

  const Lattice& lattice() const { return lattice_; }
  int n_particles() const { return n_; }
  std::int64_t dimension() const { return dim_; }

  /// Site indices (non-decreasing) of the k-th state.
  const std::int32_t* positions(std::int64_t k) const { return states_.data() + k * n_; }

  Eigen::VectorXi occupations(std::int64_t k) const {
    Eigen::VectorXi occ = Eigen::VectorXi::Zero(lattice_.size());
    for (int a = 0; a < n_; ++a) ++occ[positions(k)[a]];
    return occ;
  }

  /// Index of a non-decreasing tuple; the lookup is a bijection on states.
  std::int64_t index_of(const std::int32_t* tuple) const {
    if (n_ == 0) return 0;
    std::int64_t lo = 0, hi = dim_ - 1;
    while (lo < hi) {
      std::int64_t mid = (lo + hi) / 2;
      if (std::lexicographical_compare(positions(mid), positions(mid) + n_, tuple, tuple + n_))
        lo = mid + 1;
      else
        hi = mid;
    }
    if (!std::equal(tuple, tuple + n_, positions(lo)))
      throw std::logic_error("FockBasis: tuple not in basis");
    return lo;
  }

 private:
  Lattice lattice_;
  int n_;
  std::int64_t dim_ = 0;
  std::vector<std::int32_t> states_;
};

using FockBasisPtr = std::shared_ptr<const FockBasis>;

inline FockBasisPtr build_basis(const Lattice& lattice, int n_particles,
                                std::int64_t dim_cap = 2'000'000) {
  return std::make_shared<const FockBasis>(lattice, n_particles, dim_cap);
}

struct FockVector {
  FockBasisPtr basis;
  Eigen::VectorXcd amplitudes;

  FockVector() = default;
  explicit FockVector(FockBasisPtr b)
      : basis(std::move(b)), amplitudes(Eigen::VectorXcd::Zero(basis->dimension())) {}

  double norm() const { return amplitudes.norm(); }
  void normalize() { amplitudes /= norm(); }
};

/// Sparse Hermitian operator on a fixed-N basis. All Hamiltonians built here
/// are real symmetric; Hermiticity holds by construction.
struct ManyBodyOperator {
  FockBasisPtr basis;
  Eigen::SparseMatrix<double> matrix;

  void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
    Eigen::VectorXd yr = matrix * x.real().eval();
    Eigen::VectorXd yi = matrix * x.imag().eval();
    y.resize(x.size());
    y.real() = yr;
    y.imag() = yi;
  }

  std::vector<Eigen::Triplet<double>> triplets() const {
    std::vector<Eigen::Triplet<double>> out;
    out.reserve(matrix.nonZeros());
    for (int k = 0; k < matrix.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, k); it; ++it)
        out.emplace_back(int(it.row()), int(it.col()), it.value());
    return out;
  }
};

/// H = [include_rest_mass] m N + hopping + interaction, where the interaction
/// acts diagonally in the occupation basis: each unordered particle pair
/// contributes sign * strength * F_sigma(r_ij) (minimum-image distance,
/// F_sigma(0) at coincident sites) and the self-energy N * delta_m sits on
/// top, mirroring the counterterm split of the renormalized mass.
inline ManyBodyOperator build_hamiltonian(FockBasisPtr basis, const CouplingSpec& coupling,
                                          bool include_rest_mass = false,
                                          bool allow_unresolved_sigma = false) {
  const Lattice& lat = basis->lattice();
  const int N = basis->n_particles();
  const std::int64_t dim = basis->dimension();
  const double a = lat.spacing;
  if (coupling.strength > 0 && coupling.sigma < 2.0 * a && !allow_unresolved_sigma)
    throw std::invalid_argument(
        "build_hamiltonian: sigma < 2 spacings; pass allow_unresolved_sigma to override");

  const double hop = 1.0 / (2.0 * coupling.mass * a * a);
  const double dm = coupling.strength > 0 ? delta_m(coupling) : 0.0;
  const double sg = pair_sign(coupling.kind) * coupling.strength;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(std::size_t(dim) * (1 + 2 * lat.dim * std::max(N, 1)));
  std::vector<std::int32_t> moved(std::max(N, 1));

  for (std::int64_t k = 0; k < dim; ++k) {
    const std::int32_t* p = basis->positions(k);
    double diag = include_rest_mass ? coupling.mass * N : 0.0;
    diag += 2.0 * lat.dim * hop * N; // on-site part of -grad^2/2m
    if (coupling.strength > 0) {
      double pairs = 0;
      for (int x = 0; x < N; ++x)
        for (int y = x + 1; y < N; ++y)
          pairs += f_sigma(lat.min_image_distance(p[x], p[y]), coupling.sigma);
      diag += sg * pairs + N * dm;
    }
    trip.emplace_back(int(k), int(k), diag);

    // hopping: one term per (occupied site, neighbor) pair
    for (int x = 0; x < N; ++x) {
      if (x > 0 && p[x] == p[x - 1]) continue; // each occupied site once
      const std::int32_t site = p[x];
      int n_i = 0;
      for (int y = 0; y < N; ++y) n_i += p[y] == site;
      auto c = lat.unpack(site);
      for (int d = 0; d < lat.dim; ++d)
        for (int dir : {-1, +1}) {
          auto cn = c;
          cn[d] += dir;
          std::int32_t target = std::int32_t(lat.pack(cn));
          int n_j = 0;
          for (int y = 0; y < N; ++y) n_j += p[y] == target;
          std::copy(p, p + N, moved.begin());
          *std::find(moved.begin(), moved.end(), site) = target;
          std::sort(moved.begin(), moved.end());
          std::int64_t kk = basis->index_of(moved.data());
          trip.emplace_back(int(kk), int(k), -hop * std::sqrt(double(n_i) * (n_j + 1)));
        }
    }
  }

  ManyBodyOperator op;
  op.basis = std::move(basis);
  op.matrix.resize(dim, dim);
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  return op;
}

inline Eigen::MatrixXd one_particle_matrix(const ManyBodyOperator& H) {
  if (H.basis->n_particles() != 1)
    throw std::invalid_argument("one_particle_matrix: operator is not on an N=1 basis");
  return Eigen::MatrixXd(H.matrix);
}

inline Eigen::MatrixXd two_particle_matrix(const ManyBodyOperator& H) {
  if (H.basis->n_particles() != 2)
    throw std::invalid_argument("two_particle_matrix: operator is not on an N=2 basis");
  if (H.basis->dimension() > 5000)
    throw std::invalid_argument("two_particle_matrix: dense projection too large");
  return Eigen::MatrixXd(H.matrix);
}

/// exp(-i H t) v: dense eigendecomposition below dimension 2000, Lanczos
/// beyond it.
inline FockVector evolve_exact(const ManyBodyOperator& H, const FockVector& v, double t) {
  if (v.basis->dimension() != H.basis->dimension())
    throw std::invalid_argument("evolve_exact: basis dimensions do not match");
  FockVector out = v;
  if (H.basis->dimension() < 2000) {
    Eigen::MatrixXd dense(H.matrix);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
    const std::complex<double> I(0, 1);
    Eigen::VectorXcd modal = es.eigenvectors().transpose() * v.amplitudes;
    modal.array() *= (-I * t * es.eigenvalues().array()).exp();
    out.amplitudes = es.eigenvectors() * modal;
    return out;
  }
  auto apply = [&H](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) { H.apply(x, y); };
  out.amplitudes = krylov_expm_apply(apply, v.amplitudes, t, 40, 1e-12);
  return out;
}

/// <n_i> over the sites.
inline Eigen::VectorXd occupation_expectation(const FockVector& v) {
  const FockBasis& b = *v.basis;
  Eigen::VectorXd n = Eigen::VectorXd::Zero(b.lattice().size());
  for (std::int64_t k = 0; k < b.dimension(); ++k) {
    double w = std::norm(v.amplitudes[k]);
    if (w == 0) continue;
    const std::int32_t* p = b.positions(k);
    for (int a = 0; a < b.n_particles(); ++a) n[p[a]] += w;
  }
  return n;
}

/// <mu_reg(r)>: the site occupation smeared with the lattice Gaussian,
/// times the particle mass.
inline Eigen::VectorXd mass_density_expectation(const FockVector& v, double sigma, double mass) {
  const Lattice& lat = v.basis->lattice();
  Eigen::VectorXd n = occupation_expectation(v);
  // occupations are per site, not per volume: the smearing integral carries
  // the cell volume, density samples carry 1/volume, so they cancel here
  return mass * circulant_apply(lat, lattice_gaussian(lat, sigma), n);
}

inline double number_expectation(const FockVector& v) {
  return v.basis->n_particles() * v.amplitudes.squaredNorm();
}

/// || exp(-iHt)(a v1 + b v2) - a exp(-iHt) v1 - b exp(-iHt) v2 ||.
inline double linearity_check(const ManyBodyOperator& H, const FockVector& v1,
                              const FockVector& v2, std::complex<double> a,
                              std::complex<double> b, double t) {
  FockVector sum = v1;
  sum.amplitudes = a * v1.amplitudes + b * v2.amplitudes;
  FockVector lhs = evolve_exact(H, sum, t);
  FockVector r1 = evolve_exact(H, v1, t);
  FockVector r2 = evolve_exact(H, v2, t);
  return (lhs.amplitudes - a * r1.amplitudes - b * r2.amplitudes).norm();
}

} // namespace nslab
