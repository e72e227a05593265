#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlxd/entropy.hpp"
#include "nlxd/grid.hpp"
#include "nlxd/kernels.hpp"
#include "nlxd/scheme.hpp"

namespace nlxd {

struct LocalizationReport {
  std::vector<double> epsilons;      // strictly decreasing
  std::vector<double> distances_l1;  // space-time L1 distance to the local run
  std::vector<double> distances_l2;
  bool monotone = false;
  double loglog_slope = 0.0;
};

struct UniquenessReport {
  std::vector<double> times;
  std::vector<double> rel_entropy;
  std::vector<double> ckp_bound;
  std::vector<double> l1_distances;  // sum over species of ||u_i - v_i||_1
  double gronwall_fit_C = 0.0;
  double same_init_max_distance = 0.0;
};

struct BoundsReport {
  bool pass = true;
  double lambda = 0.0;
  double m0 = 0.0;
  double M0 = 0.0;
  std::optional<double> first_violation_time;
  double worst_lower_margin = 0.0;  // min over time of (min u - lower bound)
  double worst_upper_margin = 0.0;  // min over time of (upper bound - max u)
};

struct ConvergenceReport {
  std::vector<double> taus;
  std::vector<double> tau_errors;
  double temporal_order = 0.0;
  std::vector<int> ns;
  std::vector<double> spatial_errors;
  double spatial_order = 0.0;
};

namespace detail {

inline double snapshot_distance(const FieldSet& a, const FieldSet& b, double p) {
  double s = 0.0;
  for (int i = 0; i < a.species_count(); ++i) {
    Field d(a.grid());
    for (std::size_t c = 0; c < d.size(); ++c) d.values[c] = a[i][c] - b[i][c];
    const double norm = lp_norm(d, p);
    s += (p == 1.0) ? norm : norm * norm;
  }
  return s;
}

inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  // least-squares slope of log(y) vs log(x)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(std::max(y[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

/// Runs the nonlocal system for each mollifier width and the local system once
/// on the same grid and schedule; reports space-time distances per epsilon.
inline LocalizationReport localization_sweep(const std::vector<double>& epsilons,
                                             const InteractionMatrix& a,
                                             const ReversibleMeasure& pi, const FieldSet& u0,
                                             double sigma, const SchemeConfig& config,
                                             const MollifierProfile& profile =
                                                 MollifierProfile::named("quartic"),
                                             const std::vector<double>& output_times = {}) {
  if (epsilons.empty()) throw std::invalid_argument("localization_sweep: empty epsilon list");
  for (std::size_t k = 1; k < epsilons.size(); ++k)
    if (!(epsilons[k] < epsilons[k - 1]))
      throw std::invalid_argument("localization_sweep: epsilons must be strictly decreasing");
  const TorusGrid& grid = u0.grid();
  const double h = grid.cell_size();
  if (epsilons.back() < 4.0 * h)
    throw std::invalid_argument("localization_sweep: resolution guard requires eps >= 4h");

  ModelParams local;
  local.sigma = sigma;
  local.pi = pi;
  local.interaction = a;
  local.mode = SystemMode::Local;
  Trajectory ref = simulate(u0, local, config, output_times);
  if (!ref.completed) throw std::runtime_error("localization_sweep: local run aborted: " +
                                               ref.abort_reason);

  LocalizationReport rep;
  rep.epsilons = epsilons;
  for (double eps : epsilons) {
    KernelSpec spec;
    spec.family = KernelFamily::Mollifier;
    spec.epsilon = eps;
    spec.profile = profile;
    spec.interaction = a;
    ModelParams nonlocal;
    nonlocal.sigma = sigma;
    nonlocal.kernel = build_kernel(spec, grid);
    nonlocal.pi = pi;
    nonlocal.interaction = a;
    nonlocal.mode = SystemMode::Nonlocal;
    Trajectory run = simulate(u0, nonlocal, config, output_times);
    if (!run.completed || run.times.size() != ref.times.size())
      throw std::runtime_error("localization_sweep: nonlocal run aborted: " + run.abort_reason);
    double d1 = 0.0, d2 = 0.0;
    for (std::size_t m = 1; m < run.times.size(); ++m) {
      const double dt = run.times[m] - run.times[m - 1];
      d1 += dt * detail::snapshot_distance(run.states[m], ref.states[m], 1.0);
      d2 += dt * detail::snapshot_distance(run.states[m], ref.states[m], 2.0);
    }
    rep.distances_l1.push_back(d1);
    rep.distances_l2.push_back(std::sqrt(d2));
  }
  rep.monotone = std::is_sorted(rep.distances_l1.rbegin(), rep.distances_l1.rend());
  if (epsilons.size() >= 2) rep.loglog_slope = detail::fit_slope(epsilons, rep.distances_l1);
  return rep;
}

/// Relative-entropy probe of weak-strong uniqueness: trajectory u from
/// u0 + perturbation against trajectory v from u0 with identical
/// discretization.
inline UniquenessReport weak_strong_probe(const FieldSet& u0, const FieldSet& perturbation,
                                          const ModelParams& params, const SchemeConfig& config,
                                          const std::vector<double>& output_times = {}) {
  if (u0.min_value() <= 0.0)
    throw std::invalid_argument("weak_strong_probe: u0 must be strictly positive");
  FieldSet u_init = u0;
  for (int i = 0; i < u0.species_count(); ++i) {
    const double dm = integrate(perturbation[i]);
    const double m0 = integrate(u0[i]);
    if (std::abs(dm) > 1e-10 * std::max(1.0, std::abs(m0)))
      throw std::invalid_argument("mass-mismatch: perturbation of species " + std::to_string(i) +
                                  " changes mass by " + std::to_string(dm));
    for (std::size_t c = 0; c < u_init[i].size(); ++c) u_init[i][c] += perturbation[i][c];
    if (u_init.fields[i].values.end() !=
        std::find_if(u_init[i].values.begin(), u_init[i].values.end(),
                     [](double x) { return x < 0.0; }))
      throw std::invalid_argument("weak_strong_probe: perturbed state has negative cells");
  }

  Trajectory tu = simulate(u_init, params, config, output_times);
  Trajectory tv = simulate(u0, params, config, output_times);
  Trajectory tv2 = simulate(u0, params, config, output_times);
  if (!tu.completed || !tv.completed)
    throw std::runtime_error("weak_strong_probe: run aborted: " + tu.abort_reason +
                             tv.abort_reason);

  UniquenessReport rep;
  for (std::size_t m = 0; m < tu.times.size(); ++m) {
    rep.times.push_back(tu.times[m]);
    rep.rel_entropy.push_back(relative_entropy(tu.states[m], tv.states[m], params.pi));
    rep.ckp_bound.push_back(ckp_lower_bound(tu.states[m], tv.states[m], params.pi));
    rep.l1_distances.push_back(detail::snapshot_distance(tu.states[m], tv.states[m], 1.0));
    rep.same_init_max_distance =
        std::max(rep.same_init_max_distance,
                 detail::snapshot_distance(tv.states[m], tv2.states[m], 1.0));
  }

  // exponential fit of G(t) = sum_i ||u_i - v_i||_1^2 <= G(0) e^{Ct}
  const double g0 = rep.l1_distances.empty() ? 0.0
                                             : rep.l1_distances[0] * rep.l1_distances[0];
  if (g0 > 0.0) {
    double best = 0.0;
    for (std::size_t m = 1; m < rep.times.size(); ++m) {
      const double g = rep.l1_distances[m] * rep.l1_distances[m];
      if (g > 0.0 && rep.times[m] > 0.0)
        best = std::max(best, std::log(g / g0) / rep.times[m]);
    }
    rep.gronwall_fit_C = best;
  }
  return rep;
}

/// Two-sided density bound check m0 e^{-lambda t} <= u <= M0 e^{lambda t}.
inline BoundsReport bounds_check(const Trajectory& traj, double lambda, double m0, double M0) {
  BoundsReport rep;
  rep.lambda = lambda;
  rep.m0 = m0;
  rep.M0 = M0;
  const double slack = 1e-9 * M0;
  rep.worst_lower_margin = std::numeric_limits<double>::infinity();
  rep.worst_upper_margin = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < traj.times.size(); ++m) {
    const double t = traj.times[m];
    const double lo = m0 * std::exp(-lambda * t);
    const double hi = M0 * std::exp(lambda * t);
    const double umin = traj.states[m].min_value();
    const double umax = traj.states[m].max_value();
    rep.worst_lower_margin = std::min(rep.worst_lower_margin, umin - lo);
    rep.worst_upper_margin = std::min(rep.worst_upper_margin, hi - umax);
    if ((umin < lo - slack || umax > hi + slack) && !rep.first_violation_time) {
      rep.pass = false;
      rep.first_violation_time = t;
    }
  }
  return rep;
}

/// One convergence-study scenario: everything needed to rebuild the run at any
/// grid or time step, plus an optional exact reference.
struct ConvergenceCase {
  int dim = 1;
  double period = 1.0;
  SchemeConfig scheme;
  std::function<ModelParams(const TorusGrid&)> model;
  std::function<FieldSet(const TorusGrid&)> initial;
  std::function<FieldSet(const TorusGrid&, double)> exact;  // may be empty
  int grid_n_for_time = 128;   // spatial resolution held fixed in the tau sweep
  double tau_for_space = 1e-5; // time step held fixed in the grid sweep
};

namespace detail {

inline void check_halving(const std::vector<double>& xs) {
  if (xs.size() < 3) throw std::invalid_argument("convergence_study: need >= 3 resolutions");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (xs[i] == xs[i - 1])
      throw std::invalid_argument("convergence_study: repeated resolution entries");
    if (std::abs(xs[i - 1] / xs[i] - 2.0) > 1e-9)
      throw std::invalid_argument("convergence_study: resolutions must be nested by factor 2");
  }
}

/// Cell-average restriction from grid 2N to grid N (coarse centers sit on fine
/// faces, so the two-cell average is second order).
inline FieldSet restrict_once(const FieldSet& fine) {
  const TorusGrid& fg = fine.grid();
  TorusGrid cg = fg;
  cg.cells_per_dim = fg.cells_per_dim / 2;
  FieldSet out(fine.species_count(), cg);
  const int N = cg.cells_per_dim;
  for (int i = 0; i < fine.species_count(); ++i) {
    if (fg.dim == 1) {
      for (int c = 0; c < N; ++c) out[i][c] = 0.5 * (fine[i][2 * c] + fine[i][2 * c + 1]);
    } else {
      for (int x = 0; x < N; ++x)
        for (int y = 0; y < N; ++y)
          out[i].at(x, y) = 0.25 * (fine[i].at(2 * x, 2 * y) + fine[i].at(2 * x + 1, 2 * y) +
                                    fine[i].at(2 * x, 2 * y + 1) + fine[i].at(2 * x + 1, 2 * y + 1));
    }
  }
  return out;
}

inline FieldSet final_state(const ConvergenceCase& cs, const TorusGrid& grid, double tau) {
  SchemeConfig cfg = cs.scheme;
  cfg.tau = tau;
  Trajectory t = simulate(cs.initial(grid), cs.model(grid), cfg, {cfg.t_end});
  if (!t.completed) throw std::runtime_error("convergence_study: run aborted: " + t.abort_reason);
  return t.states.back();
}

}  // namespace detail

inline ConvergenceReport convergence_study(const std::vector<double>& tau_list,
                                           const std::vector<int>& n_list,
                                           const ConvergenceCase& cs) {
  detail::check_halving(tau_list);
  {
    std::vector<double> ns(n_list.begin(), n_list.end());
    std::reverse(ns.begin(), ns.end());
    detail::check_halving(ns);  // n_list increasing by factor 2
  }

  ConvergenceReport rep;

  // temporal sweep on a fixed grid
  const TorusGrid tgrid = make_grid(cs.dim, cs.grid_n_for_time, cs.period);
  std::vector<FieldSet> tau_states;
  for (double tau : tau_list) tau_states.push_back(detail::final_state(cs, tgrid, tau));
  std::optional<FieldSet> tau_ref;
  if (!cs.exact) {
    tau_ref = detail::final_state(cs, tgrid, tau_list.back() / 2.0);
  }
  const FieldSet tau_reference =
      cs.exact ? cs.exact(tgrid, cs.scheme.t_end) : std::move(*tau_ref);
  for (std::size_t k = 0; k < tau_list.size(); ++k) {
    rep.taus.push_back(tau_list[k]);
    rep.tau_errors.push_back(
        std::sqrt(detail::snapshot_distance(tau_states[k], tau_reference, 2.0)));
  }
  rep.temporal_order = detail::fit_slope(rep.taus, rep.tau_errors);

  // spatial sweep at a fixed small time step
  std::vector<FieldSet> n_states;
  for (int N : n_list)
    n_states.push_back(detail::final_state(cs, make_grid(cs.dim, N, cs.period), cs.tau_for_space));
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    double err;
    if (cs.exact) {
      const TorusGrid g = make_grid(cs.dim, n_list[k], cs.period);
      err = std::sqrt(detail::snapshot_distance(n_states[k], cs.exact(g, cs.scheme.t_end), 2.0));
    } else {
      if (k + 1 == n_list.size()) continue;  // finest is the reference
      FieldSet restricted = n_states.back();
      for (int nn = n_list.back(); nn > n_list[k]; nn /= 2)
        restricted = detail::restrict_once(restricted);
      err = std::sqrt(detail::snapshot_distance(n_states[k], restricted, 2.0));
    }
    rep.ns.push_back(n_list[k]);
    rep.spatial_errors.push_back(err);
  }
  {
    std::vector<double> hs;
    for (int N : rep.ns) hs.push_back(cs.period / N);
    rep.spatial_order = detail::fit_slope(hs, rep.spatial_errors);
  }
  return rep;
}

}  // namespace nlxd
