#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include "nlxd/fft.hpp"
#include "nlxd/grid.hpp"
#include "nlxd/kernels.hpp"

namespace nlxd {

/// Discrete circular convolution scaled by h^d, computed in Fourier space:
/// out(x) = h^d * sum_y K(x - y) u(y).
inline Field convolve(const Field& K_pair, const Field& u) {
  require_same_grid(K_pair, u);
  SpectralTransform fft(u.grid);
  auto ks = fft.forward(K_pair);
  auto us = fft.forward(u);
  const double hd = u.grid.cell_measure();
  for (std::size_t m = 0; m < ks.size(); ++m) ks[m] *= hd * us[m];
  return fft.inverse(ks);
}

/// Direct-sum oracle for convolve; O(N^2d). Guarded against accidental use at
/// large sizes.
inline Field convolve_direct(const Field& K_pair, const Field& u, bool override_guard = false) {
  require_same_grid(K_pair, u);
  const int N = u.n();
  if (!override_guard) {
    if (u.grid.dim == 1 && N > 128)
      throw std::invalid_argument("convolve_direct size guard: N > 128 in 1D");
    if (u.grid.dim == 2 && N > 48)
      throw std::invalid_argument("convolve_direct size guard: N > 48 per dim in 2D");
  }
  const double hd = u.grid.cell_measure();
  Field out(u.grid);
  if (u.grid.dim == 1) {
    for (int i = 0; i < N; ++i) {
      double s = 0.0;
      for (int j = 0; j < N; ++j) s += K_pair[(i - j + N) % N] * u[j];
      out[i] = hd * s;
    }
  } else {
    for (int ix = 0; ix < N; ++ix)
      for (int iy = 0; iy < N; ++iy) {
        double s = 0.0;
        for (int jx = 0; jx < N; ++jx)
          for (int jy = 0; jy < N; ++jy)
            s += K_pair.at((ix - jx + N) % N, (iy - jy + N) % N) * u.at(jx, jy);
        out.at(ix, iy) = hd * s;
      }
  }
  return out;
}

struct PotentialSet {
  std::vector<Field> p;                   // p_i[u]
  std::vector<std::vector<Field>> grad_p; // per species, dim components
  std::vector<Field> lap_p;               // empty unless requested
};

/// p_i = sum_j K_ij * u_j with cached multipliers; gradients and Laplacians by
/// spectral differentiation of p (Nyquist zeroed for odd derivatives). Reuses
/// an existing transform so callers in inner loops avoid replanning.
inline PotentialSet potentials(const KernelRaster& K, const FieldSet& u,
                               SpectralTransform& fft, bool with_laplacian = false) {
  if (u.species_count() != K.n) throw std::invalid_argument("species count mismatch");
  if (!(u.grid() == K.grid)) throw std::invalid_argument("grid mismatch");
  if (with_laplacian && !K.smooth)
    throw std::invalid_argument(
        "kernel-not-smooth: Laplacian of the potential requires bounded Delta K");

  std::vector<std::vector<std::complex<double>>> u_spec;
  u_spec.reserve(K.n);
  for (int j = 0; j < K.n; ++j) u_spec.push_back(fft.forward(u[j]));

  PotentialSet out;
  for (int i = 0; i < K.n; ++i) {
    std::vector<std::complex<double>> ps(fft.spectrum_size(), {0.0, 0.0});
    for (int j = 0; j < K.n; ++j) {
      const auto& mult = K.multiplier(i, j);
      for (std::size_t m = 0; m < ps.size(); ++m) ps[m] += mult[m] * u_spec[j][m];
    }
    out.p.push_back(fft.inverse(ps));
    std::vector<Field> grads;
    for (int axis = 0; axis < u.grid().dim; ++axis)
      grads.push_back(fft.inverse(fft.derivative_multiplier(ps, axis)));
    out.grad_p.push_back(std::move(grads));
    if (with_laplacian) out.lap_p.push_back(fft.inverse(fft.laplacian_multiplier(ps)));
  }
  return out;
}

inline PotentialSet potentials(const KernelRaster& K, const FieldSet& u,
                               bool with_laplacian = false) {
  SpectralTransform fft(u.grid());
  return potentials(K, u, fft, with_laplacian);
}

/// Discrete (H4) quadratic form sum_ij pi_i iint K_ij(x-y) v_i(x) v_j(y).
inline double quadratic_form(const KernelRaster& K, const ReversibleMeasure& pi,
                             const FieldSet& v) {
  if (v.species_count() != K.n || pi.n() != K.n)
    throw std::invalid_argument("species count mismatch");
  if (!(v.grid() == K.grid)) throw std::invalid_argument("grid mismatch");
  PotentialSet P = potentials(K, v);
  double total = 0.0;
  for (int i = 0; i < K.n; ++i) {
    Field prod(v.grid());
    for (std::size_t c = 0; c < prod.size(); ++c)
      prod.values[c] = v[i][c] * P.p[i][c];
    total += pi[i] * integrate(prod);
  }
  return total;
}

}  // namespace nlxd
