#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "nlxd/grid.hpp"

namespace nlxd {
namespace init {

inline FieldSet constant(const TorusGrid& grid, const std::vector<double>& values) {
  FieldSet u(static_cast<int>(values.size()), grid);
  for (int i = 0; i < u.species_count(); ++i)
    for (std::size_t c = 0; c < u[i].size(); ++c) u[i][c] = values[static_cast<std::size_t>(i)];
  return u;
}

/// base + amp * cos(2 pi x / L) (independent of y in 2D).
inline FieldSet cosine_mode(const TorusGrid& grid, int n_species, double base, double amp) {
  FieldSet u(n_species, grid);
  const int N = grid.cells_per_dim;
  for (int i = 0; i < n_species; ++i) {
    if (grid.dim == 1) {
      for (int c = 0; c < N; ++c)
        u[i][c] = base + amp * std::cos(2.0 * M_PI * grid.center(c) / grid.period);
    } else {
      for (int x = 0; x < N; ++x)
        for (int y = 0; y < N; ++y)
          u[i].at(x, y) = base + amp * std::cos(2.0 * M_PI * grid.center(x) / grid.period);
    }
  }
  return u;
}

/// Strictly positive random state: base + amp * uniform(0,1) per cell.
inline FieldSet random_positive(const TorusGrid& grid, int n_species, std::uint64_t seed,
                                double base = 0.5, double amp = 1.0) {
  if (!(base > 0.0) || amp < 0.0)
    throw std::invalid_argument("random_positive: base must be > 0, amp >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  FieldSet u(n_species, grid);
  for (int i = 0; i < n_species; ++i)
    for (std::size_t c = 0; c < u[i].size(); ++c) u[i][c] = base + amp * dist(rng);
  return u;
}

/// Periodized Gaussian bumps centered mid-domain, one per species, on a floor.
inline FieldSet gaussian_bumps(const TorusGrid& grid, int n_species, double width,
                               double amplitude, double floor_value = 1e-3) {
  FieldSet u(n_species, grid);
  const int N = grid.cells_per_dim;
  const double L = grid.period;
  auto bump1d = [&](double x, double cx) {
    double s = 0.0;
    for (int k = -2; k <= 2; ++k) {
      const double d = x - cx + k * L;
      s += std::exp(-d * d / (2.0 * width * width));
    }
    return s;
  };
  for (int i = 0; i < n_species; ++i) {
    const double cx = L * (i + 1.0) / (n_species + 1.0);
    if (grid.dim == 1) {
      for (int c = 0; c < N; ++c) u[i][c] = floor_value + amplitude * bump1d(grid.center(c), cx);
    } else {
      for (int x = 0; x < N; ++x)
        for (int y = 0; y < N; ++y)
          u[i].at(x, y) = floor_value +
                          amplitude * bump1d(grid.center(x), cx) * bump1d(grid.center(y), L / 2.0);
    }
  }
  return u;
}

/// Mass-neutral cosine perturbation of one mode per species.
inline FieldSet mode_perturbation(const TorusGrid& grid, int n_species, double amp, int mode = 1) {
  FieldSet d(n_species, grid);
  const int N = grid.cells_per_dim;
  for (int i = 0; i < n_species; ++i) {
    const double phase = (i % 2 == 0) ? 0.0 : M_PI / 3.0;
    if (grid.dim == 1) {
      for (int c = 0; c < N; ++c)
        d[i][c] = amp * std::cos(2.0 * M_PI * mode * grid.center(c) / grid.period + phase);
    } else {
      for (int x = 0; x < N; ++x)
        for (int y = 0; y < N; ++y)
          d[i].at(x, y) =
              amp * std::cos(2.0 * M_PI * mode * grid.center(x) / grid.period + phase);
    }
  }
  return d;
}

}  // namespace init
}  // namespace nlxd
