#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlxd {

/// Uniform cell-centered grid on the periodic d-torus, d = 1 or 2.
/// Cell k (per axis) is centered at (k + 1/2) h with h = L/N.
struct TorusGrid {
  int dim = 1;
  int cells_per_dim = 8;
  double period = 1.0;

  double cell_size() const { return period / cells_per_dim; }
  std::size_t cell_count() const {
    std::size_t c = 1;
    for (int d = 0; d < dim; ++d) c *= static_cast<std::size_t>(cells_per_dim);
    return c;
  }
  double cell_measure() const { return std::pow(cell_size(), dim); }
  double volume() const { return std::pow(period, dim); }

  double center(int k) const { return (k + 0.5) * cell_size(); }

  bool operator==(const TorusGrid& o) const {
    return dim == o.dim && cells_per_dim == o.cells_per_dim && period == o.period;
  }
};

inline TorusGrid make_grid(int dim, int cells_per_dim, double period = 1.0) {
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("invalid-dimension: dim must be 1 or 2, got " +
                                std::to_string(dim));
  if (cells_per_dim < 8 || cells_per_dim % 2 != 0)
    throw std::invalid_argument("odd-N: cells_per_dim must be even and >= 8, got " +
                                std::to_string(cells_per_dim));
  if (!(period > 0.0))
    throw std::invalid_argument("nonpositive-period");
  return TorusGrid{dim, cells_per_dim, period};
}

/// Deterministic pairwise summation; same result regardless of caller context.
inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

/// Scalar field of cell-centered samples, row-major for d = 2.
struct Field {
  TorusGrid grid;
  std::vector<double> values;

  Field() = default;
  explicit Field(const TorusGrid& g, double fill = 0.0)
      : grid(g), values(g.cell_count(), fill) {}

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  int n() const { return grid.cells_per_dim; }
  std::size_t index(int i) const { return static_cast<std::size_t>(i); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * n() + j;
  }
  double& at(int i, int j) { return values[index(i, j)]; }
  double at(int i, int j) const { return values[index(i, j)]; }

  bool all_finite() const {
    for (double x : values)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

/// n species sharing one grid.
struct FieldSet {
  std::vector<Field> fields;

  FieldSet() = default;
  FieldSet(int n_species, const TorusGrid& g, double fill = 0.0) {
    fields.reserve(n_species);
    for (int i = 0; i < n_species; ++i) fields.emplace_back(g, fill);
  }

  int species_count() const { return static_cast<int>(fields.size()); }
  const TorusGrid& grid() const { return fields.at(0).grid; }
  Field& operator[](int i) { return fields[static_cast<std::size_t>(i)]; }
  const Field& operator[](int i) const { return fields[static_cast<std::size_t>(i)]; }

  double min_value() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& f : fields)
      for (double x : f.values) m = std::min(m, x);
    return m;
  }
  double max_value() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& f : fields)
      for (double x : f.values) m = std::max(m, x);
    return m;
  }
};

inline void require_same_grid(const Field& a, const Field& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("grid mismatch");
}

/// Midpoint quadrature: h^d * sum of values, pairwise order.
inline double integrate(const Field& f) {
  return f.grid.cell_measure() * pairwise_sum(f.values);
}

inline double lp_norm(const Field& f, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : f.values) m = std::max(m, std::abs(x));
    return m;
  }
  if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
  std::vector<double> tmp(f.values.size());
  for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = std::pow(std::abs(f.values[i]), p);
  return std::pow(f.grid.cell_measure() * pairwise_sum(tmp), 1.0 / p);
}

/// Centered differences with periodic wrap, one component Field per axis.
inline std::vector<Field> gradient(const Field& f) {
  const int N = f.n();
  const double inv2h = 1.0 / (2.0 * f.grid.cell_size());
  std::vector<Field> g;
  if (f.grid.dim == 1) {
    g.emplace_back(f.grid);
    for (int i = 0; i < N; ++i) {
      const int ip = (i + 1) % N, im = (i + N - 1) % N;
      g[0][f.index(i)] = (f[f.index(ip)] - f[f.index(im)]) * inv2h;
    }
  } else {
    g.emplace_back(f.grid);
    g.emplace_back(f.grid);
    for (int i = 0; i < N; ++i) {
      const int ip = (i + 1) % N, im = (i + N - 1) % N;
      for (int j = 0; j < N; ++j) {
        const int jp = (j + 1) % N, jm = (j + N - 1) % N;
        g[0].at(i, j) = (f.at(ip, j) - f.at(im, j)) * inv2h;
        g[1].at(i, j) = (f.at(i, jp) - f.at(i, jm)) * inv2h;
      }
    }
  }
  return g;
}

/// 3-point (1D) / 5-point (2D) periodic stencil.
inline Field laplacian(const Field& f) {
  const int N = f.n();
  const double invh2 = 1.0 / (f.grid.cell_size() * f.grid.cell_size());
  Field out(f.grid);
  if (f.grid.dim == 1) {
    for (int i = 0; i < N; ++i) {
      const int ip = (i + 1) % N, im = (i + N - 1) % N;
      out[i] = (f[ip] - 2.0 * f[i] + f[im]) * invh2;
    }
  } else {
    for (int i = 0; i < N; ++i) {
      const int ip = (i + 1) % N, im = (i + N - 1) % N;
      for (int j = 0; j < N; ++j) {
        const int jp = (j + 1) % N, jm = (j + N - 1) % N;
        out.at(i, j) =
            (f.at(ip, j) + f.at(im, j) + f.at(i, jp) + f.at(i, jm) - 4.0 * f.at(i, j)) *
            invh2;
      }
    }
  }
  return out;
}

}  // namespace nlxd
