#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nlxd/fft.hpp"
#include "nlxd/grid.hpp"

namespace nlxd {

struct InteractionMatrix {
  int n = 1;
  std::vector<double> a;  // row-major n x n

  InteractionMatrix() : a(1, 0.0) {}
  InteractionMatrix(int n_species, std::vector<double> entries)
      : n(n_species), a(std::move(entries)) {
    if (a.size() != static_cast<std::size_t>(n) * n)
      throw std::invalid_argument("interaction matrix size mismatch");
    for (double x : a)
      if (x < 0.0) throw std::invalid_argument("interaction entries must be >= 0");
  }

  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
  double max_abs() const {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
  }
  bool symmetric(double tol = 0.0) const {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j)
        if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
    return true;
  }
};

struct ReversibleMeasure {
  std::vector<double> pi;

  ReversibleMeasure() : pi(1, 1.0) {}
  explicit ReversibleMeasure(std::vector<double> weights) : pi(std::move(weights)) {
    double sum = 0.0;
    for (double p : pi) {
      if (!(p > 0.0)) throw std::invalid_argument("reversible measure must be positive");
      sum += p;
    }
    for (double& p : pi) p /= sum;
  }

  static ReversibleMeasure uniform(int n) {
    return ReversibleMeasure(std::vector<double>(n, 1.0));
  }

  int n() const { return static_cast<int>(pi.size()); }
  double operator[](int i) const { return pi[static_cast<std::size_t>(i)]; }
};

/// Solves pi_i a_ij = pi_j a_ji by ratio propagation over a spanning tree of
/// the interaction graph, then verifies every off-tree edge (Kolmogorov cycle
/// condition). Disconnected components are solved independently.
inline ReversibleMeasure solve_reversible_measure(const InteractionMatrix& a) {
  const int n = a.n;
  const double scale = std::max(a.max_abs(), 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && a(i, j) > 0.0 && a(j, i) == 0.0)
        throw std::invalid_argument("structural-asymmetry: a[" + std::to_string(i) + "][" +
                                    std::to_string(j) + "] > 0 but reverse entry is 0");

  std::vector<double> pi(n, 0.0);
  std::vector<int> seen(n, 0);
  for (int root = 0; root < n; ++root) {
    if (seen[root]) continue;
    pi[root] = 1.0;
    seen[root] = 1;
    std::queue<int> q;
    q.push(root);
    while (!q.empty()) {
      const int i = q.front();
      q.pop();
      for (int j = 0; j < n; ++j) {
        if (i == j || seen[j] || a(i, j) == 0.0) continue;
        pi[j] = pi[i] * a(i, j) / a(j, i);
        seen[j] = 1;
        q.push(j);
      }
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double res = std::abs(pi[i] * a(i, j) - pi[j] * a(j, i));
      if (res > 1e-12 * scale)
        throw std::invalid_argument("no-reversible-measure: cycle inconsistency at edge (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
    }
  return ReversibleMeasure(pi);
}

enum class KernelFamily { IndicatorBall, Gaussian, Cauchy, Mollifier };

struct MollifierProfile {
  std::string id;
  std::function<double(double)> value;  // B(r) on [0,1), zero outside

  static MollifierProfile named(const std::string& id) {
    if (id == "cosine")
      return {id, [](double r) { return (M_PI / 4.0) * std::cos(M_PI * r / 2.0); }};
    if (id == "quartic")
      return {id, [](double r) {
                const double s = 1.0 - r * r;
                return (15.0 / 16.0) * s * s;
              }};
    if (id == "gaussian") {
      // c*(exp(-8 r^2) - exp(-8)), normalized below at construction
      return {id, [](double r) { return std::exp(-8.0 * r * r) - std::exp(-8.0); }};
    }
    throw std::invalid_argument("unknown mollifier profile: " + id);
  }
};

struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  double radius = 0.25;    // indicator_ball
  double epsilon = 0.1;    // gaussian / mollifier
  MollifierProfile profile = MollifierProfile::named("quartic");
  InteractionMatrix interaction;
};

/// Periodized kernel rasters per species pair, sampled at the lattice offsets
/// m*h used by the discrete circular convolution, plus cached real Fourier
/// multipliers hat(K)_ij and masses.
struct KernelRaster {
  TorusGrid grid;
  int n = 1;
  KernelFamily family = KernelFamily::Gaussian;
  std::vector<Field> rasters;                 // n*n Fields, index i*n+j
  std::vector<std::vector<double>> fourier;   // per pair, real multipliers (r2c layout)
  std::vector<double> mass;                   // per pair, h^d * sum of raster
  bool smooth = true;                         // bounded Laplacian of K

  const Field& raster(int i, int j) const { return rasters[static_cast<std::size_t>(i) * n + j]; }
  const std::vector<double>& multiplier(int i, int j) const {
    return fourier[static_cast<std::size_t>(i) * n + j];
  }
  double pair_mass(int i, int j) const { return mass[static_cast<std::size_t>(i) * n + j]; }
};

namespace detail {

/// Principal offset coordinate of lattice index m: m*h folded to [-L/2, L/2).
inline double offset_coord(int m, int /*N*/, double h, double L) {
  double z = m * h;
  if (z >= L / 2.0) z -= L;
  return z;
}

inline double periodized_gaussian_1d(double z, double eps, double L) {
  double sum = 0.0;
  const double c = 1.0 / std::sqrt(2.0 * M_PI * eps * eps);
  for (int k = 0;; ++k) {
    double term = c * std::exp(-(z + k * L) * (z + k * L) / (2.0 * eps * eps));
    if (k > 0) term += c * std::exp(-(z - k * L) * (z - k * L) / (2.0 * eps * eps));
    sum += term;
    if (k > 1 && term < 1e-18 * (sum + 1e-300)) break;
    if (k > 10000) break;
  }
  return sum;
}

/// Closed-form lattice sum of 1/(1+z^2) over shifts kL.
inline double periodized_cauchy_1d(double z, double L) {
  const double t = 2.0 * M_PI / L;
  return (M_PI / L) * std::sinh(t) / (std::cosh(t) - std::cos(2.0 * M_PI * z / L));
}

/// Overlap length of [lo, hi] with [-r, r].
inline double interval_overlap(double lo, double hi, double r) {
  const double a = std::max(lo, -r), b = std::min(hi, r);
  return std::max(0.0, b - a);
}

/// Fraction of the square [cx-h/2,cx+h/2] x [cy-h/2,cy+h/2] inside the disc of
/// radius r; boundary cells are supersampled.
inline double disc_cell_fraction(double cx, double cy, double h, double r) {
  const double x0 = cx - h / 2, x1 = cx + h / 2, y0 = cy - h / 2, y1 = cy + h / 2;
  const double qx = std::max({x0, std::min(0.0, x1)});
  const double qy = std::max({y0, std::min(0.0, y1)});
  const double dmin = std::hypot(qx, qy);
  double dmax = 0.0;
  for (double x : {x0, x1})
    for (double y : {y0, y1}) dmax = std::max(dmax, std::hypot(x, y));
  if (dmax <= r) return 1.0;
  if (dmin >= r) return 0.0;
  const int S = 32;
  int inside = 0;
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < S; ++j) {
      const double x = x0 + (i + 0.5) * h / S;
      const double y = y0 + (j + 0.5) * h / S;
      if (x * x + y * y <= r * r) ++inside;
    }
  return static_cast<double>(inside) / (S * S);
}

inline double profile_normalization(const MollifierProfile& profile) {
  // Simpson quadrature of int_{-1}^{1} B(|z|) dz = 2 int_0^1 B(r) dr
  const int n = 4000;
  const double h = 1.0 / n;
  double s = profile.value(0.0) + profile.value(1.0);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * profile.value(i * h);
  return 2.0 * s * h / 3.0;
}

/// Shape raster for one kernel family (interaction coefficient 1).
inline Field base_raster(const KernelSpec& spec, const TorusGrid& grid) {
  const int N = grid.cells_per_dim;
  const double h = grid.cell_size(), L = grid.period;
  Field out(grid);
  switch (spec.family) {
    case KernelFamily::Gaussian: {
      if (!(spec.epsilon > 0.0)) throw std::invalid_argument("gaussian epsilon must be > 0");
      std::vector<double> g1(N);
      for (int m = 0; m < N; ++m)
        g1[m] = periodized_gaussian_1d(offset_coord(m, N, h, L), spec.epsilon, L);
      if (grid.dim == 1) {
        out.values = g1;
      } else {
        for (int i = 0; i < N; ++i)
          for (int j = 0; j < N; ++j) out.at(i, j) = g1[i] * g1[j];
      }
      break;
    }
    case KernelFamily::Cauchy: {
      if (grid.dim != 1)
        throw std::invalid_argument(
            "cauchy kernel is only available in 1D (periodization diverges in 2D)");
      for (int m = 0; m < N; ++m)
        out[m] = periodized_cauchy_1d(offset_coord(m, N, h, L), L);
      break;
    }
    case KernelFamily::IndicatorBall: {
      const double r = spec.radius;
      if (!(r > 0.0 && r < L / 2.0))
        throw std::invalid_argument("indicator radius must lie in (0, L/2)");
      if (grid.dim == 1) {
        for (int m = 0; m < N; ++m) {
          const double z = offset_coord(m, N, h, L);
          double frac = 0.0;
          for (int k = -1; k <= 1; ++k)
            frac += interval_overlap(z - h / 2 + k * L, z + h / 2 + k * L, r);
          out[m] = frac / h;
        }
      } else {
        for (int i = 0; i < N; ++i)
          for (int j = 0; j < N; ++j) {
            const double zx = offset_coord(i, N, h, L);
            const double zy = offset_coord(j, N, h, L);
            out.at(i, j) = disc_cell_fraction(zx, zy, h, r);
          }
      }
      break;
    }
    case KernelFamily::Mollifier: {
      const double eps = spec.epsilon;
      if (!(eps > 0.0)) throw std::invalid_argument("mollifier epsilon must be > 0");
      const double norm = profile_normalization(spec.profile);
      if (std::abs(norm) < 1e-12)
        throw std::invalid_argument("profile-normalization-failure: integral vanishes");
      if (std::abs(norm - 1.0) > 1e-8 && spec.profile.id != "gaussian") {
        // named profiles other than "gaussian" carry their own normalization
        throw std::invalid_argument("profile-normalization-failure: integral " +
                                    std::to_string(norm));
      }
      const double scale = 1.0 / (norm * std::pow(eps, grid.dim));
      const int kmax = static_cast<int>(std::ceil(eps / L)) + 1;
      auto eval1d = [&](double z) {
        double s = 0.0;
        for (int k = -kmax; k <= kmax; ++k) {
          const double r = std::abs(z + k * L) / eps;
          if (r < 1.0) s += spec.profile.value(r);
        }
        return s;
      };
      if (grid.dim == 1) {
        for (int m = 0; m < N; ++m) out[m] = scale * eval1d(offset_coord(m, N, h, L));
      } else {
        for (int i = 0; i < N; ++i)
          for (int j = 0; j < N; ++j) {
            const double zx = offset_coord(i, N, h, L);
            const double zy = offset_coord(j, N, h, L);
            double s = 0.0;
            for (int kx = -kmax; kx <= kmax; ++kx)
              for (int ky = -kmax; ky <= kmax; ++ky) {
                const double r = std::hypot(zx + kx * L, zy + ky * L) / eps;
                if (r < 1.0) s += spec.profile.value(r);
              }
            out.at(i, j) = scale * s;
          }
      }
      break;
    }
  }
  return out;
}

}  // namespace detail

inline KernelRaster build_kernel(const KernelSpec& spec, const TorusGrid& grid) {
  KernelRaster K;
  K.grid = grid;
  K.n = spec.interaction.n;
  K.family = spec.family;
  K.smooth = (spec.family != KernelFamily::IndicatorBall);

  Field base = detail::base_raster(spec, grid);
  // Enforce exact even symmetry base(m) = base(-m) at index level; the analytic
  // kernels are radial but floating-point evaluation at folded offsets is not
  // bitwise symmetric in general.
  {
    const int N = grid.cells_per_dim;
    if (grid.dim == 1) {
      for (int m = 1; m < N - m; ++m) base[N - m] = base[m];
    } else {
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          const int ri = (N - i) % N, rj = (N - j) % N;
          if (std::make_pair(ri, rj) < std::make_pair(i, j))
            base.at(i, j) = base.at(ri, rj);
        }
    }
  }
  SpectralTransform fft(grid);
  const auto base_spec = fft.forward(base);
  const double hd = grid.cell_measure();

  K.rasters.reserve(static_cast<std::size_t>(K.n) * K.n);
  for (int i = 0; i < K.n; ++i)
    for (int j = 0; j < K.n; ++j) {
      const double aij = spec.interaction(i, j);
      Field r(grid);
      for (std::size_t c = 0; c < r.size(); ++c) r.values[c] = aij * base.values[c];
      K.rasters.push_back(std::move(r));
      std::vector<double> mult(base_spec.size());
      for (std::size_t m = 0; m < mult.size(); ++m)
        mult[m] = aij * hd * base_spec[m].real();
      K.mass.push_back(mult.empty() ? 0.0 : mult[0]);
      K.fourier.push_back(std::move(mult));
    }
  return K;
}

/// Max over pairs and offsets of |pi_i K_ij(z) - pi_j K_ji(-z)|.
inline double check_detailed_balance(const KernelRaster& K, const ReversibleMeasure& pi) {
  if (pi.n() != K.n) throw std::invalid_argument("species count mismatch");
  const int N = K.grid.cells_per_dim;
  double worst = 0.0;
  auto neg = [N](int m) { return (N - m) % N; };
  for (int i = 0; i < K.n; ++i)
    for (int j = 0; j < K.n; ++j) {
      const Field& Kij = K.raster(i, j);
      const Field& Kji = K.raster(j, i);
      if (K.grid.dim == 1) {
        for (int m = 0; m < N; ++m)
          worst = std::max(worst, std::abs(pi[i] * Kij[m] - pi[j] * Kji[neg(m)]));
      } else {
        for (int mi = 0; mi < N; ++mi)
          for (int mj = 0; mj < N; ++mj)
            worst = std::max(worst, std::abs(pi[i] * Kij.at(mi, mj) -
                                             pi[j] * Kji.at(neg(mi), neg(mj))));
      }
    }
  return worst;
}

enum class PDVerdict { PositiveDefinite, NotPositiveDefinite, Inconclusive };

struct PDCertificate {
  PDVerdict verdict = PDVerdict::Inconclusive;
  double min_multiplier_eig = 0.0;
  double min_normalized = 0.0;  // min eigenvalue / largest zero-mode eigenvalue
  std::size_t witness_mode = 0;
  std::vector<double> witness_vector;
};

/// Per-mode eigen-analysis of M(xi)_ij = pi_i hat(K)_ij(xi). With detailed
/// balance these matrices are real symmetric; the (H4) quadratic form is a
/// nonnegative combination of their quadratic forms (Parseval), so the verdict
/// is exact at grid resolution.
inline PDCertificate certify_positive_definite(const KernelRaster& K,
                                               const ReversibleMeasure& pi,
                                               double tol = -1.0) {
  const int n = K.n;
  double max_mass = 0.0;
  for (double m : K.mass) max_mass = std::max(max_mass, std::abs(m));
  if (tol < 0.0) tol = 1e-10 * std::max(max_mass, 1.0);
  const double db = check_detailed_balance(K, pi);
  if (db > tol * 10.0 + 1e-12)
    throw std::invalid_argument("detailed-balance-violated: residual " + std::to_string(db));

  const std::size_t n_modes = K.multiplier(0, 0).size();
  PDCertificate cert;
  cert.min_multiplier_eig = std::numeric_limits<double>::infinity();
  double zero_mode_max = 0.0;
  Eigen::MatrixXd M(n, n);
  for (std::size_t m = 0; m < n_modes; ++m) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = pi[i] * K.multiplier(i, j)[m];
    Eigen::MatrixXd S = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    const double lam = es.eigenvalues()(0);
    if (m == 0) zero_mode_max = es.eigenvalues()(n - 1);
    if (lam < cert.min_multiplier_eig) {
      cert.min_multiplier_eig = lam;
      cert.witness_mode = m;
      cert.witness_vector.assign(n, 0.0);
      for (int i = 0; i < n; ++i) cert.witness_vector[i] = es.eigenvectors()(i, 0);
    }
  }
  cert.min_normalized =
      (zero_mode_max > 0.0) ? cert.min_multiplier_eig / zero_mode_max : cert.min_multiplier_eig;
  cert.verdict = (cert.min_multiplier_eig >= -tol) ? PDVerdict::PositiveDefinite
                                                   : PDVerdict::NotPositiveDefinite;
  return cert;
}

}  // namespace nlxd
