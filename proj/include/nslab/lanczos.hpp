#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <stdexcept>

namespace nslab {

using ApplyFn = std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>;

struct LanczosBasis {
  Eigen::MatrixXcd V;    // n x m orthonormal columns
  Eigen::VectorXd alpha; // diagonal of T
  Eigen::VectorXd beta;  // beta[j] couples columns j and j+1; beta[m-1] is the exit residual
  int m = 0;
};

/// Hermitian Lanczos with full reorthogonalization. v0 must be normalized.
/// Stops early on breakdown (exact invariant subspace).
inline LanczosBasis lanczos_decompose(const ApplyFn& apply, const Eigen::VectorXcd& v0, int m) {
  const auto n = v0.size();
  LanczosBasis out;
  out.V.resize(n, m);
  out.alpha.setZero(m);
  out.beta.setZero(m);
  out.V.col(0) = v0;
  Eigen::VectorXcd w(n);
  for (int j = 0; j < m; ++j) {
    apply(out.V.col(j), w);
    if (j > 0) w -= out.beta[j - 1] * out.V.col(j - 1);
    out.alpha[j] = std::real(out.V.col(j).dot(w));
    w -= out.alpha[j] * out.V.col(j);
    // two Gram-Schmidt passes keep the basis orthogonal at double precision
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) w -= out.V.col(i).dot(w) * out.V.col(i);
    double b = w.norm();
    out.beta[j] = b;
    out.m = j + 1;
    if (j + 1 == m) break;
    if (b < 1e-14 * (std::abs(out.alpha[j]) + 1.0)) break; // invariant subspace
    out.V.col(j + 1) = w / b;
  }
  return out;
}

/// w = exp(-i t A) v for Hermitian A, by Lanczos with adaptive substepping.
/// The per-substep error estimate is beta_m |(exp(-i tau T) e1)_m|; substeps
/// shrink until the accumulated estimate stays below tol.
inline Eigen::VectorXcd krylov_expm_apply(const ApplyFn& apply, const Eigen::VectorXcd& v,
                                          double t, int m = 40, double tol = 1e-12) {
  const std::complex<double> I(0, 1);
  Eigen::VectorXcd cur = v;
  double remaining = std::abs(t);
  const double sign = t >= 0 ? 1.0 : -1.0;
  if (remaining == 0) return cur;
  double tau = remaining;
  int guard = 0;
  while (remaining > 0) {
    if (++guard > 100000)
      throw std::runtime_error("krylov_expm_apply: substep cap exceeded");
    double nrm = cur.norm();
    auto lz = lanczos_decompose(apply, cur / nrm, m);
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(lz.m, lz.m);
    for (int i = 0; i < lz.m; ++i) {
      T(i, i) = lz.alpha[i];
      if (i + 1 < lz.m) T(i, i + 1) = T(i + 1, i) = lz.beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    bool exact = lz.m < m; // breakdown: Krylov space is invariant, result exact
    double step = std::min(tau, remaining);
    for (;;) {
      Eigen::VectorXcd phases(lz.m);
      for (int i = 0; i < lz.m; ++i)
        phases[i] = std::exp(-I * (sign * step * es.eigenvalues()[i]));
      Eigen::VectorXcd small = es.eigenvectors().cast<std::complex<double>>() *
                               (phases.array() *
                                es.eigenvectors().row(0).transpose().cast<std::complex<double>>().array())
                                   .matrix();
      double err = exact ? 0.0 : lz.beta[lz.m - 1] * std::abs(small[lz.m - 1]);
      if (err <= tol * step / std::abs(t) || step <= 1e-12 * std::abs(t)) {
        cur = nrm * (lz.V.leftCols(lz.m) * small);
        remaining -= step;
        tau = step;
        break;
      }
      step *= 0.5;
    }
  }
  return cur;
}

} // namespace nslab
