#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlxd/entropy.hpp"
#include "nlxd/fft.hpp"
#include "nlxd/grid.hpp"
#include "nlxd/kernels.hpp"
#include "nlxd/nonlocal.hpp"

namespace nlxd {

struct EntropyVariableOverflow : std::runtime_error {
  EntropyVariableOverflow() : std::runtime_error("entropy-variable-overflow") {}
};
struct NewtonDivergence : std::runtime_error {
  explicit NewtonDivergence(const std::string& what) : std::runtime_error(what) {}
};
struct CflViolation : std::runtime_error {
  explicit CflViolation(const std::string& what) : std::runtime_error(what) {}
};

enum class SystemMode { Nonlocal, Local };
enum class SchemeVariant { ImplicitEntropy, SemiImplicit };
enum class FluxAverage { Arithmetic, Upwind };

struct ModelParams {
  double sigma = 1.0;
  KernelRaster kernel;       // used in Nonlocal mode
  ReversibleMeasure pi;
  InteractionMatrix interaction;  // used in Local mode
  SystemMode mode = SystemMode::Nonlocal;

  int species_count() const { return pi.n(); }
};

struct SchemeConfig {
  double tau = 1e-3;
  double t_end = 0.1;
  SchemeVariant variant = SchemeVariant::ImplicitEntropy;
  double newton_tol = 1e-11;
  int newton_max_iter = 50;
  double delta_reg = 0.0;
  double u_floor = 1e-12;
  FluxAverage flux_average = FluxAverage::Arithmetic;
  bool cfl_fatal = false;
};

struct StepReport {
  int newton_iters = 0;
  double residual_norm = 0.0;
  std::vector<double> mass_drift;
  double h1_change = 0.0;
  double h2_change = 0.0;
  bool accepted = false;
  bool tau_halved = false;
  double clipped_mass = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<FieldSet> states;
  std::vector<EntropyReport> diagnostics;   // one per step (plus initial)
  std::vector<StepReport> step_reports;     // one per step
  bool completed = true;
  std::string abort_reason;
};

namespace detail {

inline FieldSet u_of_w(const FieldSet& w, const ReversibleMeasure& pi) {
  FieldSet u(w.species_count(), w.grid());
  for (int i = 0; i < w.species_count(); ++i)
    for (std::size_t c = 0; c < w[i].size(); ++c) {
      const double arg = w[i][c] / pi[i];
      if (arg > 700.0) throw EntropyVariableOverflow();
      u[i][c] = std::exp(arg);
    }
  return u;
}

/// Potentials p_i for either system; only the p rasters (face gradients are
/// taken by differencing, matching the conservative flux stencil).
inline std::vector<Field> system_potentials(const ModelParams& params, const FieldSet& u,
                                            SpectralTransform& fft) {
  const int n = params.species_count();
  std::vector<Field> p;
  if (params.mode == SystemMode::Local) {
    p.reserve(n);
    for (int i = 0; i < n; ++i) {
      Field pi_field(u.grid());
      for (std::size_t c = 0; c < pi_field.size(); ++c) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += params.interaction(i, j) * u[j][c];
        pi_field.values[c] = s;
      }
      p.push_back(std::move(pi_field));
    }
  } else {
    std::vector<std::vector<std::complex<double>>> us;
    us.reserve(n);
    for (int j = 0; j < n; ++j) us.push_back(fft.forward(u[j]));
    for (int i = 0; i < n; ++i) {
      std::vector<std::complex<double>> ps(fft.spectrum_size(), {0.0, 0.0});
      for (int j = 0; j < n; ++j) {
        const auto& mult = params.kernel.multiplier(i, j);
        for (std::size_t m = 0; m < ps.size(); ++m) ps[m] += mult[m] * us[j][m];
      }
      p.push_back(fft.inverse(ps));
    }
  }
  return p;
}

/// Conservative div_h(rho grad p): face flux rho_face * (p_next - p_cur)/h,
/// flux difference divided by h. rho_face from `density`, face switching (for
/// upwind) from `p_switch` (equal to p except in Jacobian products, where the
/// base-state p freezes the donor side).
inline Field flux_divergence(const Field& density, const Field& p, const Field& p_switch,
                             FluxAverage avg) {
  const TorusGrid& grid = density.grid;
  const int N = grid.cells_per_dim;
  const double h = grid.cell_size();
  Field out(grid);
  auto face_rho = [&](double rho_lo, double rho_hi, double dp_switch) {
    if (avg == FluxAverage::Arithmetic) return 0.5 * (rho_lo + rho_hi);
    // advection velocity is -grad p; donor cell sits where the flow comes from
    return (dp_switch < 0.0) ? rho_lo : rho_hi;
  };
  if (grid.dim == 1) {
    std::vector<double> flux(N);
    for (int c = 0; c < N; ++c) {
      const int cp = (c + 1) % N;
      flux[c] = face_rho(density[c], density[cp], (p_switch[cp] - p_switch[c]) / h) *
                (p[cp] - p[c]) / h;
    }
    for (int c = 0; c < N; ++c) {
      const int cm = (c + N - 1) % N;
      out[c] = (flux[c] - flux[cm]) / h;
    }
  } else {
    std::vector<double> fx(static_cast<std::size_t>(N) * N), fy(fx.size());
    for (int x = 0; x < N; ++x)
      for (int y = 0; y < N; ++y) {
        const int xp = (x + 1) % N, yp = (y + 1) % N;
        const std::size_t c = density.index(x, y);
        fx[c] = face_rho(density.at(x, y), density.at(xp, y),
                         (p_switch.at(xp, y) - p_switch.at(x, y)) / h) *
                (p.at(xp, y) - p.at(x, y)) / h;
        fy[c] = face_rho(density.at(x, y), density.at(x, yp),
                         (p_switch.at(x, yp) - p_switch.at(x, y)) / h) *
                (p.at(x, yp) - p.at(x, y)) / h;
      }
    for (int x = 0; x < N; ++x)
      for (int y = 0; y < N; ++y) {
        const int xm = (x + N - 1) % N, ym = (y + N - 1) % N;
        out.at(x, y) = (fx[density.index(x, y)] - fx[density.index(xm, y)] +
                        fy[density.index(x, y)] - fy[density.index(x, ym)]) /
                       h;
      }
  }
  return out;
}

inline std::vector<double> flatten(const FieldSet& f) {
  std::vector<double> out;
  out.reserve(f.species_count() * f.grid().cell_count());
  for (int i = 0; i < f.species_count(); ++i)
    out.insert(out.end(), f[i].values.begin(), f[i].values.end());
  return out;
}

inline FieldSet unflatten(const std::vector<double>& v, int n, const TorusGrid& grid) {
  FieldSet out(n, grid);
  const std::size_t M = grid.cell_count();
  for (int i = 0; i < n; ++i)
    for (std::size_t c = 0; c < M; ++c) out[i][c] = v[static_cast<std::size_t>(i) * M + c];
  return out;
}

inline double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Matrix-free BiCGStab with diagonal preconditioning. Deterministic, serial.
inline bool bicgstab(const std::function<std::vector<double>(const std::vector<double>&)>& apply,
                     const std::vector<double>& b, std::vector<double>& x,
                     const std::vector<double>& inv_diag, double tol, int max_iter) {
  const std::size_t n = b.size();
  auto dot = [](const std::vector<double>& a, const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * c[i];
    return s;
  };
  std::vector<double> r = b;  // x starts at 0
  std::fill(x.begin(), x.end(), 0.0);
  std::vector<double> r0 = r, p = r, v(n), s(n), t(n), ph(n), sh(n);
  double rho = dot(r0, r);
  double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) return true;
  for (int it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) ph[i] = p[i] * inv_diag[i];
    v = apply(ph);
    const double alpha = rho / dot(r0, v);
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    if (std::sqrt(dot(s, s)) <= tol * bnorm) {
      for (std::size_t i = 0; i < n; ++i) x[i] += alpha * ph[i];
      return true;
    }
    for (std::size_t i = 0; i < n; ++i) sh[i] = s[i] * inv_diag[i];
    t = apply(sh);
    const double tt = dot(t, t);
    if (tt == 0.0) return false;
    const double omega = dot(t, s) / tt;
    for (std::size_t i = 0; i < n; ++i) x[i] += alpha * ph[i] + omega * sh[i];
    for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
    if (std::sqrt(dot(r, r)) <= tol * bnorm) return true;
    const double rho_new = dot(r0, r);
    if (rho_new == 0.0 || omega == 0.0) return false;
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
  }
  return false;
}

}  // namespace detail

/// Residual of the implicit entropy-variable system, per species and cell:
/// R_i = (u_i(w) - uprev_i)/tau - sigma lap u_i(w) - div_h(u_i grad p_i) + delta w_i.
inline FieldSet residual(const FieldSet& w, const FieldSet& u_prev, const ModelParams& params,
                         const SchemeConfig& config, SpectralTransform& fft) {
  const int n = params.species_count();
  FieldSet u = detail::u_of_w(w, params.pi);
  std::vector<Field> p = detail::system_potentials(params, u, fft);
  FieldSet R(n, w.grid());
  for (int i = 0; i < n; ++i) {
    Field lap = laplacian(u[i]);
    Field drift = detail::flux_divergence(u[i], p[i], p[i], config.flux_average);
    for (std::size_t c = 0; c < R[i].size(); ++c)
      R[i][c] = (u[i][c] - u_prev[i][c]) / config.tau - params.sigma * lap.values[c] -
                drift.values[c] + config.delta_reg * w[i][c];
  }
  return R;
}

inline FieldSet residual(const FieldSet& w, const FieldSet& u_prev, const ModelParams& params,
                         const SchemeConfig& config) {
  SpectralTransform fft(w.grid());
  return residual(w, u_prev, params, config, fft);
}

namespace detail {

/// Exact directional derivative of the residual at base state (w, u, p) in the
/// direction v (entropy variables). Same operators as the residual itself.
inline FieldSet jacobian_product(const FieldSet& v, const FieldSet& u,
                                 const std::vector<Field>& p, const ModelParams& params,
                                 const SchemeConfig& config, SpectralTransform& fft) {
  const int n = params.species_count();
  FieldSet s(n, u.grid());
  for (int i = 0; i < n; ++i)
    for (std::size_t c = 0; c < s[i].size(); ++c)
      s[i][c] = u[i][c] / params.pi[i] * v[i][c];
  std::vector<Field> dp = system_potentials(params, s, fft);
  FieldSet out(n, u.grid());
  for (int i = 0; i < n; ++i) {
    Field lap = laplacian(s[i]);
    Field drift_u = flux_divergence(u[i], dp[i], p[i], config.flux_average);
    Field drift_s = flux_divergence(s[i], p[i], p[i], config.flux_average);
    for (std::size_t c = 0; c < out[i].size(); ++c)
      out[i][c] = s[i][c] / config.tau - params.sigma * lap.values[c] - drift_u.values[c] -
                  drift_s.values[c] + config.delta_reg * v[i][c];
  }
  return out;
}

inline StepReport make_report(const FieldSet& u_prev, const FieldSet& u_next, int iters,
                              double res_norm, bool accepted, bool halved) {
  StepReport rep;
  rep.newton_iters = iters;
  rep.residual_norm = res_norm;
  rep.accepted = accepted;
  rep.tau_halved = halved;
  for (int i = 0; i < u_prev.species_count(); ++i)
    rep.mass_drift.push_back(integrate(u_next[i]) - integrate(u_prev[i]));
  return rep;
}

inline std::pair<FieldSet, StepReport> newton_step(const FieldSet& u_prev,
                                                   const ModelParams& params,
                                                   const SchemeConfig& config,
                                                   SpectralTransform& fft) {
  const int n = params.species_count();
  const TorusGrid& grid = u_prev.grid();
  const double h = grid.cell_size();

  FieldSet w(n, grid);
  for (int i = 0; i < n; ++i)
    for (std::size_t c = 0; c < w[i].size(); ++c)
      w[i][c] = params.pi[i] * std::log(std::max(u_prev[i][c], config.u_floor));

  FieldSet R = residual(w, u_prev, params, config, fft);
  double norm = 0.0;
  for (int i = 0; i < n; ++i)
    for (double x : R[i].values) norm = std::max(norm, std::abs(x));

  // The residual's roundoff floor is set by the 1/tau and 1/h^2 terms; below
  // it the fixed tolerance is unreachable, so widen the target accordingly.
  auto effective_tol = [&](const FieldSet& u, const std::vector<Field>& p) {
    double umax = 0.0, pmax = 0.0;
    for (int i = 0; i < n; ++i) {
      for (double x : u[i].values) umax = std::max(umax, std::abs(x));
      for (double x : p[i].values) pmax = std::max(pmax, std::abs(x));
    }
    const double eps_mach = std::numeric_limits<double>::epsilon();
    const double floor = 64.0 * eps_mach *
                         (umax / config.tau +
                          4.0 * grid.dim / (h * h) * umax * (params.sigma + pmax));
    return std::max(config.newton_tol, floor);
  };
  double tol_eff = config.newton_tol;
  {
    FieldSet u0f = u_of_w(w, params.pi);
    tol_eff = effective_tol(u0f, system_potentials(params, u0f, fft));
  }

  int iter = 0;
  while (norm > tol_eff) {
    if (iter >= config.newton_max_iter)
      throw NewtonDivergence("newton-divergence: no convergence in " +
                             std::to_string(config.newton_max_iter) + " iterations");
    FieldSet u = u_of_w(w, params.pi);
    std::vector<Field> p = system_potentials(params, u, fft);
    tol_eff = effective_tol(u, p);
    if (norm <= tol_eff) break;

    std::vector<double> inv_diag;
    inv_diag.reserve(static_cast<std::size_t>(n) * grid.cell_count());
    const double stencil = 1.0 / config.tau + 2.0 * grid.dim * params.sigma / (h * h);
    for (int i = 0; i < n; ++i)
      for (std::size_t c = 0; c < u[i].size(); ++c)
        inv_diag.push_back(1.0 / (u[i][c] / params.pi[i] * stencil + config.delta_reg + 1e-300));

    auto apply = [&](const std::vector<double>& x) {
      FieldSet vx = unflatten(x, n, grid);
      return flatten(jacobian_product(vx, u, p, params, config, fft));
    };
    std::vector<double> rhs = flatten(R);
    for (double& x : rhs) x = -x;
    std::vector<double> d(rhs.size(), 0.0);
    const double lin_tol = std::min(1e-4, 0.1 * config.newton_tol / (norm + 1e-300));
    detail::bicgstab(apply, rhs, d, inv_diag, std::max(lin_tol, 1e-13), 2000);

    FieldSet dw = unflatten(d, n, grid);
    double step = 1.0;
    bool improved = false;
    while (step >= std::ldexp(1.0, -20)) {
      FieldSet w_try(n, grid);
      for (int i = 0; i < n; ++i)
        for (std::size_t c = 0; c < w[i].size(); ++c)
          w_try[i][c] = w[i][c] + step * dw[i][c];
      try {
        FieldSet R_try = residual(w_try, u_prev, params, config, fft);
        double norm_try = 0.0;
        for (int i = 0; i < n; ++i)
          for (double x : R_try[i].values) norm_try = std::max(norm_try, std::abs(x));
        if (norm_try < norm) {
          w = std::move(w_try);
          R = std::move(R_try);
          norm = norm_try;
          improved = true;
          break;
        }
      } catch (const EntropyVariableOverflow&) {
        // shrink into the admissible region
      }
      step *= 0.5;
    }
    if (!improved)
      throw NewtonDivergence("newton-divergence: line search stalled at residual " +
                             std::to_string(norm));
    ++iter;
  }

  FieldSet u_next = u_of_w(w, params.pi);
  StepReport rep = make_report(u_prev, u_next, iter, norm, true, false);
  return {std::move(u_next), std::move(rep)};
}

}  // namespace detail

/// One implicit Euler step in entropy variables; states stay strictly positive
/// by construction. A Newton failure triggers one automatic retry as two
/// tau/2 substeps before giving up.
inline std::pair<FieldSet, StepReport> step_implicit_entropy(const FieldSet& u_prev,
                                                             const ModelParams& params,
                                                             const SchemeConfig& config,
                                                             SpectralTransform& fft) {
  try {
    return detail::newton_step(u_prev, params, config, fft);
  } catch (const NewtonDivergence&) {
    SchemeConfig half = config;
    half.tau = config.tau / 2.0;
    auto [mid, rep1] = detail::newton_step(u_prev, params, half, fft);
    auto [fin, rep2] = detail::newton_step(mid, params, half, fft);
    StepReport rep = detail::make_report(u_prev, fin, rep1.newton_iters + rep2.newton_iters,
                                         std::max(rep1.residual_norm, rep2.residual_norm),
                                         true, true);
    return {std::move(fin), rep};
  }
}

inline std::pair<FieldSet, StepReport> step_implicit_entropy(const FieldSet& u_prev,
                                                             const ModelParams& params,
                                                             const SchemeConfig& config) {
  SpectralTransform fft(u_prev.grid());
  return step_implicit_entropy(u_prev, params, config, fft);
}

/// Local-system step (p_i = sum_j a_ij u_j pointwise). Requires pi a symmetric.
inline std::pair<FieldSet, StepReport> step_local(const FieldSet& u_prev,
                                                  const ModelParams& params,
                                                  const SchemeConfig& config,
                                                  SpectralTransform& fft) {
  const int n = params.species_count();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(params.pi[i] * params.interaction(i, j) -
                   params.pi[j] * params.interaction(j, i)) >
          1e-10 * std::max(params.interaction.max_abs(), 1.0))
        throw std::invalid_argument("step_local: pi_i a_ij must be symmetric");
  ModelParams local = params;
  local.mode = SystemMode::Local;
  return step_implicit_entropy(u_prev, local, config, fft);
}

/// Semi-implicit fallback: explicit upwind drift, spectral implicit diffusion.
inline std::pair<FieldSet, StepReport> step_semi_implicit(const FieldSet& u_prev,
                                                          const ModelParams& params,
                                                          const SchemeConfig& config,
                                                          SpectralTransform& fft) {
  const int n = params.species_count();
  const TorusGrid& grid = u_prev.grid();
  const double h = grid.cell_size();
  std::vector<Field> p = detail::system_potentials(params, u_prev, fft);

  double max_dp = 0.0;
  const int N = grid.cells_per_dim;
  for (int i = 0; i < n; ++i) {
    if (grid.dim == 1) {
      for (int c = 0; c < N; ++c)
        max_dp = std::max(max_dp, std::abs(p[i][(c + 1) % N] - p[i][c]) / h);
    } else {
      for (int x = 0; x < N; ++x)
        for (int y = 0; y < N; ++y) {
          max_dp = std::max(max_dp, std::abs(p[i].at((x + 1) % N, y) - p[i].at(x, y)) / h);
          max_dp = std::max(max_dp, std::abs(p[i].at(x, (y + 1) % N) - p[i].at(x, y)) / h);
        }
    }
  }
  if (max_dp > 0.0 && config.tau > h / (2.0 * max_dp)) {
    if (config.cfl_fatal)
      throw CflViolation("cfl-violation: tau " + std::to_string(config.tau) + " exceeds " +
                         std::to_string(h / (2.0 * max_dp)));
    StepReport rep;
    rep.accepted = false;
    rep.mass_drift.assign(n, 0.0);
    return {u_prev, rep};
  }

  FieldSet u_next(n, grid);
  double clipped = 0.0;
  for (int i = 0; i < n; ++i) {
    Field drift = detail::flux_divergence(u_prev[i], p[i], p[i], FluxAverage::Upwind);
    Field star(grid);
    for (std::size_t c = 0; c < star.size(); ++c)
      star.values[c] = u_prev[i][c] + config.tau * drift.values[c];
    auto spec = fft.forward(star);
    const double two_pi_over_L = 2.0 * M_PI / grid.period;
    for (std::size_t m = 0; m < spec.size(); ++m) {
      int kx, ky;
      fft.frequencies(m, kx, ky);
      const double k2 = two_pi_over_L * two_pi_over_L *
                        (static_cast<double>(kx) * kx + static_cast<double>(ky) * ky);
      spec[m] /= 1.0 + params.sigma * config.tau * k2;
    }
    u_next[i] = fft.inverse(spec);
    for (std::size_t c = 0; c < u_next[i].size(); ++c)
      if (u_next[i][c] < 0.0) {
        clipped += -u_next[i][c] * grid.cell_measure();
        u_next[i][c] = 0.0;
      }
  }
  StepReport rep = detail::make_report(u_prev, u_next, 0, 0.0, true, false);
  rep.clipped_mass = clipped;
  return {std::move(u_next), rep};
}

/// lambda = max_i sum_j ||Delta K_ij||_inf * mass_j(u0), the drift-growth rate
/// entering the two-sided density bounds.
inline double estimate_lambda(const KernelRaster& K, const FieldSet& u0,
                              const ReversibleMeasure& pi) {
  (void)pi;
  if (!K.smooth)
    throw std::invalid_argument("kernel-not-smooth: lambda estimate requires bounded Delta K");
  SpectralTransform fft(K.grid);
  std::vector<double> mass(K.n);
  for (int j = 0; j < K.n; ++j) mass[j] = integrate(u0[j]);
  double lambda = 0.0;
  for (int i = 0; i < K.n; ++i) {
    double row = 0.0;
    for (int j = 0; j < K.n; ++j) {
      auto spec = fft.forward(K.raster(i, j));
      Field lap = fft.inverse(fft.laplacian_multiplier(spec));
      double lmax = 0.0;
      for (double x : lap.values) lmax = std::max(lmax, std::abs(x));
      row += lmax * mass[j];
    }
    lambda = std::max(lambda, row);
  }
  return lambda;
}

struct PetrovskiiReport {
  bool pass = false;
  std::vector<std::complex<double>> eigenvalues;
  double min_real_part = 0.0;
};

/// Positive stability of diag(u) a: all eigenvalues with positive real part.
inline PetrovskiiReport check_petrovskii(const InteractionMatrix& a,
                                         const std::vector<double>& u_sample) {
  const int n = a.n;
  if (static_cast<int>(u_sample.size()) != n)
    throw std::invalid_argument("check_petrovskii: sample size mismatch");
  for (double x : u_sample)
    if (!(x > 0.0)) throw std::invalid_argument("check_petrovskii: sample must be positive");
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = u_sample[static_cast<std::size_t>(i)] * a(i, j);
  Eigen::EigenSolver<Eigen::MatrixXd> es(M);
  PetrovskiiReport rep;
  rep.min_real_part = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    rep.eigenvalues.push_back(es.eigenvalues()(i));
    rep.min_real_part = std::min(rep.min_real_part, es.eigenvalues()(i).real());
  }
  rep.pass = rep.min_real_part > -1e-12;
  return rep;
}

/// Per-state diagnostics in the scheme's own discrete metric.
inline EntropyReport diagnose(const FieldSet& u, const ModelParams& params, double time) {
  EntropyReport rep;
  rep.time = time;
  rep.h1 = shannon_entropy(u, params.pi);
  if (params.mode == SystemMode::Nonlocal) {
    rep.h2 = rao_entropy(u, params.kernel, params.pi);
  } else {
    rep.h2 = rao_entropy_local(u, params.interaction, params.pi);
    rep.h2_local = rep.h2;
  }
  rep.fisher_dissipation = fisher_dissipation(u, params.pi, params.sigma);
  SpectralTransform fft(u.grid());
  std::vector<Field> p = detail::system_potentials(params, u, fft);
  rep.drift_dissipation = detail::drift_dissipation_faces(u, p, params.pi);
  rep.min_density = u.min_value();
  rep.max_density = u.max_value();
  for (int i = 0; i < u.species_count(); ++i) rep.masses.push_back(integrate(u[i]));
  return rep;
}

/// Time marching with per-step diagnostics; snapshots at output times snapped
/// to step boundaries (empty list = snapshot every step).
inline Trajectory simulate(const FieldSet& u0, const ModelParams& params,
                           const SchemeConfig& config,
                           const std::vector<double>& output_times = {}) {
  for (int i = 0; i < u0.species_count(); ++i)
    for (double x : u0[i].values)
      if (x < 0.0) throw std::invalid_argument("simulate: initial data must be nonnegative");
  for (double t : output_times)
    if (t < 0.0 || t > config.t_end + 1e-12)
      throw std::invalid_argument("simulate: output time outside [0, t_end]");

  const long n_steps = std::lround(config.t_end / config.tau);
  std::vector<char> want(static_cast<std::size_t>(n_steps) + 1, 0);
  if (output_times.empty()) {
    std::fill(want.begin(), want.end(), 1);
  } else {
    for (double t : output_times) {
      long k = std::lround(t / config.tau);
      k = std::max(0L, std::min(n_steps, k));
      want[static_cast<std::size_t>(k)] = 1;
    }
    want[0] = 1;
  }

  Trajectory traj;
  SpectralTransform fft(u0.grid());
  FieldSet u = u0;
  traj.diagnostics.push_back(diagnose(u, params, 0.0));
  if (want[0]) {
    traj.times.push_back(0.0);
    traj.states.push_back(u);
  }

  for (long k = 1; k <= n_steps; ++k) {
    StepReport rep;
    try {
      std::pair<FieldSet, StepReport> result = [&] {
        switch (config.variant) {
          case SchemeVariant::SemiImplicit:
            return step_semi_implicit(u, params, config, fft);
          case SchemeVariant::ImplicitEntropy:
          default:
            return params.mode == SystemMode::Local ? step_local(u, params, config, fft)
                                                    : step_implicit_entropy(u, params, config, fft);
        }
      }();
      rep = result.second;
      if (!rep.accepted) {
        traj.completed = false;
        traj.abort_reason = "step rejected at t = " + std::to_string(k * config.tau);
        traj.step_reports.push_back(rep);
        return traj;
      }
      u = std::move(result.first);
    } catch (const std::exception& e) {
      traj.completed = false;
      traj.abort_reason = e.what();
      return traj;
    }
    const double t = k * config.tau;
    EntropyReport diag = diagnose(u, params, t);
    rep.h1_change = diag.h1 - traj.diagnostics.back().h1;
    rep.h2_change = diag.h2 - traj.diagnostics.back().h2;
    traj.diagnostics.push_back(std::move(diag));
    traj.step_reports.push_back(rep);
    if (want[static_cast<std::size_t>(k)]) {
      traj.times.push_back(t);
      traj.states.push_back(u);
    }
  }
  return traj;
}

}  // namespace nlxd
