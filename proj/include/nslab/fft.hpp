#pragma once

#include <unsupported/Eigen/FFT>

#include <complex>
#include <vector>

#include "nslab/grid.hpp"

namespace nslab {

/// Multidimensional complex FFT on a Grid-shaped field, built from 1D passes.
/// fwd is unscaled, inv carries the 1/N factor, so inv(fwd(x)) == x.
/// Each workspace owns its plans and scratch; share nothing across threads.
class FourierWorkspace {
 public:
  explicit FourierWorkspace(const Grid& grid)
      : grid_(grid), line_(grid.n), out_(grid.n) {}

  const Grid& grid() const { return grid_; }

  void fwd(Eigen::VectorXcd& field) { transform(field, false); }
  void inv(Eigen::VectorXcd& field) { transform(field, true); }

 private:
  using cd = std::complex<double>;

  void transform(Eigen::VectorXcd& field, bool inverse) {
    const int n = grid_.n;
    if (field.size() != grid_.size())
      throw std::invalid_argument("FourierWorkspace: field size does not match grid");
    if (grid_.dim == 1) {
      line1d(field.data(), 1, inverse);
      return;
    }
    cd* data = field.data();
    const std::int64_t n2 = std::int64_t(n) * n;
    // z: contiguous lines
    for (std::int64_t i = 0; i < n2; ++i) line1d(data + i * n, 1, inverse);
    // y: stride n within each x-slab
    for (int x = 0; x < n; ++x)
      for (int z = 0; z < n; ++z) line1d(data + std::int64_t(x) * n2 + z, n, inverse);
    // x: stride n^2
    for (int y = 0; y < n; ++y)
      for (int z = 0; z < n; ++z) line1d(data + std::int64_t(y) * n + z, n2, inverse);
  }

  void line1d(cd* p, std::int64_t stride, bool inverse) {
    const int n = grid_.n;
    if (stride == 1) {
      if (inverse)
        fft_.inv(out_.data(), p, n);
      else
        fft_.fwd(out_.data(), p, n);
      std::copy(out_.begin(), out_.end(), p);
      return;
    }
    for (int i = 0; i < n; ++i) line_[i] = p[i * stride];
    if (inverse)
      fft_.inv(out_.data(), line_.data(), n);
    else
      fft_.fwd(out_.data(), line_.data(), n);
    for (int i = 0; i < n; ++i) p[i * stride] = out_[i];
  }

  Grid grid_;
  Eigen::FFT<double> fft_;
  std::vector<cd> line_, out_;
};

} // namespace nslab
