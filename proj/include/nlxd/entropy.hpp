#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nlxd/grid.hpp"
#include "nlxd/kernels.hpp"
#include "nlxd/nonlocal.hpp"

namespace nlxd {

struct EntropyReport {
  double time = 0.0;
  double h1 = 0.0;
  double h2 = 0.0;
  std::optional<double> h2_local;
  double fisher_dissipation = 0.0;
  double drift_dissipation = 0.0;
  double min_density = 0.0;
  double max_density = 0.0;
  std::vector<double> masses;
};

/// H_1(u) = sum_i pi_i int u_i (log u_i - 1), with 0 log 0 := 0.
inline double shannon_entropy(const FieldSet& u, const ReversibleMeasure& pi) {
  double total = 0.0;
  for (int i = 0; i < u.species_count(); ++i) {
    Field g(u.grid());
    for (std::size_t c = 0; c < g.size(); ++c) {
      const double x = u[i][c];
      if (x < 0.0) throw std::invalid_argument("negative density in shannon_entropy");
      g.values[c] = (x > 0.0) ? x * (std::log(x) - 1.0) : 0.0;
    }
    total += pi[i] * integrate(g);
  }
  return total;
}

/// H_2(u) = 1/2 * quadratic form of the kernel family.
inline double rao_entropy(const FieldSet& u, const KernelRaster& K,
                          const ReversibleMeasure& pi) {
  return 0.5 * quadratic_form(K, pi, u);
}

/// H_2^0(u) = 1/2 sum_ij int pi_i a_ij u_i u_j for the local system.
inline double rao_entropy_local(const FieldSet& u, const InteractionMatrix& a,
                                const ReversibleMeasure& pi) {
  const int n = u.species_count();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(pi[i] * a(i, j) - pi[j] * a(j, i)) > 1e-10 * std::max(a.max_abs(), 1.0))
        throw std::invalid_argument("rao_entropy_local: pi_i a_ij is not symmetric");
  Field g(u.grid());
  for (std::size_t c = 0; c < g.size(); ++c) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += pi[i] * a(i, j) * u[i][c] * u[j][c];
    g.values[c] = 0.5 * s;
  }
  return integrate(g);
}

/// 4 sigma sum_i pi_i int |grad sqrt(u_i)|^2 with the centered-difference
/// gradient applied after the square root.
inline double fisher_dissipation(const FieldSet& u, const ReversibleMeasure& pi,
                                 double sigma) {
  double total = 0.0;
  for (int i = 0; i < u.species_count(); ++i) {
    Field s(u.grid());
    for (std::size_t c = 0; c < s.size(); ++c) s.values[c] = std::sqrt(std::max(u[i][c], 0.0));
    auto g = gradient(s);
    Field sq(u.grid());
    for (std::size_t c = 0; c < sq.size(); ++c) {
      double v = 0.0;
      for (const auto& comp : g) v += comp[c] * comp[c];
      sq.values[c] = v;
    }
    total += pi[i] * integrate(sq);
  }
  return 4.0 * sigma * total;
}

namespace detail {

/// Face-metric drift dissipation sum_i pi_i h^d sum_faces ubar (dp/h)^2, the
/// same discrete quadratic the implicit scheme's flux term telescopes into.
inline double drift_dissipation_faces(const FieldSet& u, const std::vector<Field>& p,
                                      const ReversibleMeasure& pi) {
  const TorusGrid& grid = u.grid();
  const int N = grid.cells_per_dim;
  const double h = grid.cell_size();
  const double hd = grid.cell_measure();
  double total = 0.0;
  for (int i = 0; i < u.species_count(); ++i) {
    std::vector<double> face_terms;
    face_terms.reserve(u.grid().cell_count() * grid.dim);
    if (grid.dim == 1) {
      for (int c = 0; c < N; ++c) {
        const int cp = (c + 1) % N;
        const double ubar = 0.5 * (u[i][c] + u[i][cp]);
        const double dp = (p[i][cp] - p[i][c]) / h;
        face_terms.push_back(ubar * dp * dp);
      }
    } else {
      for (int x = 0; x < N; ++x)
        for (int y = 0; y < N; ++y) {
          const int xp = (x + 1) % N, yp = (y + 1) % N;
          const double ux = 0.5 * (u[i].at(x, y) + u[i].at(xp, y));
          const double dx = (p[i].at(xp, y) - p[i].at(x, y)) / h;
          face_terms.push_back(ux * dx * dx);
          const double uy = 0.5 * (u[i].at(x, y) + u[i].at(x, yp));
          const double dy = (p[i].at(x, yp) - p[i].at(x, y)) / h;
          face_terms.push_back(uy * dy * dy);
        }
    }
    total += pi[i] * hd * pairwise_sum(face_terms);
  }
  return total;
}

}  // namespace detail

/// sum_i pi_i int u_i |grad p_i[u]|^2 in the scheme's face metric.
inline double drift_dissipation(const FieldSet& u, const KernelRaster& K,
                                const ReversibleMeasure& pi) {
  PotentialSet P = potentials(K, u);
  return detail::drift_dissipation_faces(u, P.p, pi);
}

/// H(u|v) = sum_i pi_i int (u_i(log u_i - 1) - u_i log v_i + v_i).
inline double relative_entropy(const FieldSet& u, const FieldSet& v,
                               const ReversibleMeasure& pi) {
  if (u.species_count() != v.species_count())
    throw std::invalid_argument("species count mismatch");
  double total = 0.0;
  for (int i = 0; i < u.species_count(); ++i) {
    Field g(u.grid());
    for (std::size_t c = 0; c < g.size(); ++c) {
      const double x = u[i][c], y = v[i][c];
      if (!(y > 0.0)) throw std::invalid_argument("relative_entropy: v must be positive");
      if (x < 0.0) throw std::invalid_argument("relative_entropy: u must be nonnegative");
      g.values[c] = (x > 0.0) ? x * (std::log(x) - 1.0) - x * std::log(y) + y : y;
    }
    total += pi[i] * integrate(g);
  }
  return total;
}

/// Csiszar--Kullback--Pinsker lower bound sum_i pi_i ||u_i - v_i||_1^2 /
/// (2 mass(u_i)), valid for per-species equal masses.
inline double ckp_lower_bound(const FieldSet& u, const FieldSet& v,
                              const ReversibleMeasure& pi) {
  double total = 0.0;
  for (int i = 0; i < u.species_count(); ++i) {
    const double mu = integrate(u[i]);
    const double mv = integrate(v[i]);
    if (std::abs(mu - mv) > 1e-10 * std::max({std::abs(mu), std::abs(mv), 1e-300}))
      throw std::invalid_argument("ckp_lower_bound: per-species masses differ");
    if (mu <= 0.0) continue;
    Field d(u.grid());
    for (std::size_t c = 0; c < d.size(); ++c) d.values[c] = u[i][c] - v[i][c];
    const double l1 = lp_norm(d, 1.0);
    total += pi[i] * l1 * l1 / (2.0 * mu);
  }
  return total;
}

}  // namespace nlxd
