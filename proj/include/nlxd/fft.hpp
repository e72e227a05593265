#pragma once

#include <complex>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "nlxd/grid.hpp"

namespace nlxd {

/// Real-to-complex FFT pair for one grid. Owns its FFTW plans and buffers;
/// not shareable across threads (construct one per thread instead).
class SpectralTransform {
 public:
  explicit SpectralTransform(const TorusGrid& grid) : grid_(grid) {
    const int N = grid.cells_per_dim;
    n_complex_ = (grid.dim == 1) ? static_cast<std::size_t>(N / 2 + 1)
                                 : static_cast<std::size_t>(N) * (N / 2 + 1);
    real_ = fftw_alloc_real(grid.cell_count());
    spec_ = fftw_alloc_complex(n_complex_);
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (grid.dim == 1) {
      fwd_ = fftw_plan_dft_r2c_1d(N, real_, spec_, FFTW_ESTIMATE);
      inv_ = fftw_plan_dft_c2r_1d(N, spec_, real_, FFTW_ESTIMATE);
    } else {
      fwd_ = fftw_plan_dft_r2c_2d(N, N, real_, spec_, FFTW_ESTIMATE);
      inv_ = fftw_plan_dft_c2r_2d(N, N, spec_, real_, FFTW_ESTIMATE);
    }
  }

  ~SpectralTransform() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(real_);
    fftw_free(spec_);
  }

  SpectralTransform(const SpectralTransform&) = delete;
  SpectralTransform& operator=(const SpectralTransform&) = delete;

  const TorusGrid& grid() const { return grid_; }
  std::size_t spectrum_size() const { return n_complex_; }

  /// Unnormalized forward transform.
  std::vector<std::complex<double>> forward(const Field& f) {
    for (std::size_t i = 0; i < f.size(); ++i) real_[i] = f.values[i];
    fftw_execute(fwd_);
    std::vector<std::complex<double>> out(n_complex_);
    for (std::size_t i = 0; i < n_complex_; ++i)
      out[i] = {spec_[i][0], spec_[i][1]};
    return out;
  }

  /// Inverse transform with 1/N^d normalization.
  Field inverse(const std::vector<std::complex<double>>& spec) {
    for (std::size_t i = 0; i < n_complex_; ++i) {
      spec_[i][0] = spec[i].real();
      spec_[i][1] = spec[i].imag();
    }
    fftw_execute(inv_);
    Field out(grid_);
    const double scale = 1.0 / static_cast<double>(grid_.cell_count());
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = real_[i] * scale;
    return out;
  }

  /// Signed integer frequency per axis for spectrum entry m (r2c layout).
  /// 1D: m in [0, N/2]. 2D: m = kx*(N/2+1)+ky with kx folded to (-N/2, N/2].
  void frequencies(std::size_t m, int& kx, int& ky) const {
    const int N = grid_.cells_per_dim;
    if (grid_.dim == 1) {
      kx = static_cast<int>(m);
      ky = 0;
    } else {
      const int ncy = N / 2 + 1;
      int fx = static_cast<int>(m) / ncy;
      ky = static_cast<int>(m) % ncy;
      kx = (fx <= N / 2) ? fx : fx - N;
    }
  }

  /// Apply d/dx_axis as the multiplier i*2*pi*k/L, Nyquist mode zeroed.
  std::vector<std::complex<double>> derivative_multiplier(
      const std::vector<std::complex<double>>& spec, int axis) const {
    const int N = grid_.cells_per_dim;
    const double two_pi_over_L = 2.0 * M_PI / grid_.period;
    std::vector<std::complex<double>> out(spec.size());
    for (std::size_t m = 0; m < spec.size(); ++m) {
      int kx, ky;
      frequencies(m, kx, ky);
      int k = (axis == 0) ? kx : ky;
      if (std::abs(k) == N / 2) k = 0;
      out[m] = spec[m] * std::complex<double>(0.0, two_pi_over_L * k);
    }
    return out;
  }

  /// Apply the Laplacian multiplier -(2*pi*|k|/L)^2.
  std::vector<std::complex<double>> laplacian_multiplier(
      const std::vector<std::complex<double>>& spec) const {
    const double two_pi_over_L = 2.0 * M_PI / grid_.period;
    std::vector<std::complex<double>> out(spec.size());
    for (std::size_t m = 0; m < spec.size(); ++m) {
      int kx, ky;
      frequencies(m, kx, ky);
      const double k2 = two_pi_over_L * two_pi_over_L *
                        (static_cast<double>(kx) * kx + static_cast<double>(ky) * ky);
      out[m] = -k2 * spec[m];
    }
    return out;
  }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  TorusGrid grid_;
  std::size_t n_complex_ = 0;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan fwd_{};
  fftw_plan inv_{};
};

}  // namespace nlxd
