#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nlxd/initial.hpp"
#include "nlxd/scheme.hpp"

using namespace nlxd;

namespace {

ModelParams gaussian_model(const TorusGrid& g, const InteractionMatrix& a, double sigma,
                           double eps = 0.1) {
  ModelParams params;
  params.sigma = sigma;
  params.pi = solve_reversible_measure(a);
  params.interaction = a;
  params.mode = SystemMode::Nonlocal;
  KernelSpec spec;
  spec.family = KernelFamily::Gaussian;
  spec.epsilon = eps;
  spec.interaction = a;
  params.kernel = build_kernel(spec, g);
  return params;
}

}  // namespace

TEST_CASE("residual vanishes at a spatially constant steady state") {
  const TorusGrid g = make_grid(1, 64);
  InteractionMatrix a(2, {2.0, 1.0, 1.0, 2.0});
  ModelParams params = gaussian_model(g, a, 0.5);
  SchemeConfig cfg;
  cfg.tau = 1e-3;

  FieldSet u_prev(2, g);
  for (std::size_t c = 0; c < u_prev[0].size(); ++c) {
    u_prev[0][c] = 0.7;
    u_prev[1][c] = 1.3;
  }
  FieldSet w(2, g);
  for (int i = 0; i < 2; ++i)
    for (std::size_t c = 0; c < w[i].size(); ++c)
      w[i][c] = params.pi[i] * std::log(u_prev[i][c]);
  FieldSet R = residual(w, u_prev, params, cfg);
  for (int i = 0; i < 2; ++i)
    for (double x : R[i].values) CHECK(std::abs(x) <= 1e-10);
}

TEST_CASE("Jacobian-vector products match finite differences") {
  const TorusGrid g = make_grid(1, 32);
  InteractionMatrix a(2, {2.0, 1.0, 1.0, 2.0});
  ModelParams params = gaussian_model(g, a, 0.3);
  SchemeConfig cfg;
  cfg.tau = 1e-2;
  SpectralTransform fft(g);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-0.3, 0.3);
  FieldSet u_prev = init::random_positive(g, 2, 7, 0.5, 1.0);
  FieldSet w(2, g), v(2, g);
  for (int i = 0; i < 2; ++i)
    for (std::size_t c = 0; c < w[i].size(); ++c) {
      w[i][c] = params.pi[i] * std::log(u_prev[i][c]) + dist(rng) * 0.1;
      v[i][c] = dist(rng);
    }

  FieldSet u = detail::u_of_w(w, params.pi);
  std::vector<Field> p = detail::system_potentials(params, u, fft);
  FieldSet Jv = detail::jacobian_product(v, u, p, params, cfg, fft);

  const double eps = 1e-6;
  FieldSet w_eps = w;
  for (int i = 0; i < 2; ++i)
    for (std::size_t c = 0; c < w[i].size(); ++c) w_eps[i][c] += eps * v[i][c];
  FieldSet R0 = residual(w, u_prev, params, cfg, fft);
  FieldSet R1 = residual(w_eps, u_prev, params, cfg, fft);

  double num = 0.0, den = 0.0;
  for (int i = 0; i < 2; ++i)
    for (std::size_t c = 0; c < w[i].size(); ++c) {
      const double fd = (R1[i][c] - R0[i][c]) / eps;
      num = std::max(num, std::abs(fd - Jv[i][c]));
      den = std::max(den, std::abs(Jv[i][c]));
    }
  CHECK(num <= 1e-5 * std::max(den, 1.0));
}

TEST_CASE("implicit step conserves mass to roundoff and stays positive") {
  const TorusGrid g = make_grid(1, 64);
  InteractionMatrix a(2, {2.0, 1.0, 1.0, 2.0});
  ModelParams params = gaussian_model(g, a, 0.2);
  SchemeConfig cfg;
  cfg.tau = 5e-3;
  FieldSet u0 = init::random_positive(g, 2, 11, 0.3, 1.0);

  auto [u1, rep] = step_implicit_entropy(u0, params, cfg);
  CHECK(rep.accepted);
  CHECK(rep.residual_norm <= cfg.newton_tol);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(rep.mass_drift[i]) <= 1e-12 * std::max(1.0, integrate(u0[i])));
    for (double x : u1[i].values) CHECK(x > 0.0);
  }
}

TEST_CASE("implicit heat step matches the exact Fourier decay factor") {
  // zero interaction: pure heat equation; one implicit Euler step maps the
  // cosine amplitude A to A / (1 + sigma tau mu) with mu the 3-point stencil
  // symbol, and many steps approach exp(-4 pi^2 sigma t)
  const TorusGrid g = make_grid(1, 128);
  InteractionMatrix a(1, {0.0});
  ModelParams params;
  params.sigma = 1.0;
  params.pi = ReversibleMeasure::uniform(1);
  params.interaction = a;
  params.mode = SystemMode::Local;

  SchemeConfig cfg;
  cfg.tau = 1e-4;
  cfg.t_end = 1e-2;
  FieldSet u0 = init::cosine_mode(g, 1, 1.0, 0.4);
  Trajectory traj = simulate(u0, params, cfg, {cfg.t_end});
  REQUIRE(traj.completed);
  const FieldSet& uT = traj.states.back();
  double amp = 0.0;
  for (int c = 0; c < g.cells_per_dim; ++c)
    amp += uT[0][c] * 2.0 * std::cos(2.0 * M_PI * g.center(c)) / g.cells_per_dim;
  const double h = g.cell_size();
  const double mu = 4.0 / (h * h) * std::pow(std::sin(M_PI * h), 2);  // stencil symbol
  const double per_step = 1.0 / (1.0 + cfg.tau * mu);
  const double expected = 0.4 * std::pow(per_step, 100);
  CHECK(amp == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("flux divergence: conservative, reduces to laplacian for unit density") {
  const TorusGrid g = make_grid(1, 64);
  Field p(g);
  for (int c = 0; c < g.cells_per_dim; ++c) p[c] = std::cos(2.0 * M_PI * g.center(c));
  Field one(g, 1.0);
  Field div = detail::flux_divergence(one, p, p, FluxAverage::Arithmetic);
  Field lap = laplacian(p);
  for (std::size_t c = 0; c < div.size(); ++c)
    CHECK(div[c] == doctest::Approx(lap[c]).epsilon(1e-12));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(0.1, 2.0);
  Field rho(g);
  for (auto& x : rho.values) x = dist(rng);
  for (FluxAverage avg : {FluxAverage::Arithmetic, FluxAverage::Upwind}) {
    Field d = detail::flux_divergence(rho, p, p, avg);
    CHECK(std::abs(integrate(d)) <= 1e-13);  // telescoping conservation
  }
}

TEST_CASE("semi-implicit step: CFL guard and mass behavior") {
  const TorusGrid g = make_grid(1, 64);
  InteractionMatrix a(1, {5.0});
  ModelParams params = gaussian_model(g, a, 0.1);
  SchemeConfig cfg;
  cfg.variant = SchemeVariant::SemiImplicit;
  FieldSet u0 = init::cosine_mode(g, 1, 1.0, 0.8);
  SpectralTransform fft(g);

  cfg.tau = 1e-4;
  auto [u1, rep] = step_semi_implicit(u0, params, cfg, fft);
  CHECK(rep.accepted);
  CHECK(std::abs(integrate(u1[0]) - integrate(u0[0]) + rep.clipped_mass) <= 1e-11);

  cfg.tau = 10.0;  // grossly violates the CFL bound
  auto [u2, rep2] = step_semi_implicit(u0, params, cfg, fft);
  CHECK_FALSE(rep2.accepted);
  cfg.cfl_fatal = true;
  CHECK_THROWS_AS(step_semi_implicit(u0, params, cfg, fft), CflViolation);
}

TEST_CASE("lambda estimate: zero data, gaussian closed form, smoothness guard") {
  const TorusGrid g = make_grid(1, 256);
  InteractionMatrix a(1, {1.0});
  KernelSpec spec;
  spec.family = KernelFamily::Gaussian;
  spec.epsilon = 0.5;
  spec.interaction = a;
  // eps = 0.5 has non-negligible periodization on the unit torus; use L = 8
  const TorusGrid gw = make_grid(1, 1024, 8.0);
  KernelRaster K = build_kernel(spec, gw);

  FieldSet zero(1, gw, 0.0);
  CHECK(estimate_lambda(K, zero, ReversibleMeasure::uniform(1)) == 0.0);

  FieldSet one(1, gw, 1.0);  // mass L = 8
  // ||K''||_inf = 1/(eps^2 sqrt(2 pi eps^2)) at the origin for the gaussian
  const double kpp = 1.0 / (0.25 * std::sqrt(2.0 * M_PI * 0.25));
  CHECK(estimate_lambda(K, one, ReversibleMeasure::uniform(1)) ==
        doctest::Approx(kpp * 8.0).epsilon(1e-3));

  KernelSpec ind;
  ind.family = KernelFamily::IndicatorBall;
  ind.radius = 0.2;
  ind.interaction = a;
  KernelRaster Ki = build_kernel(ind, g);
  CHECK_THROWS_WITH_AS(estimate_lambda(Ki, FieldSet(1, g, 1.0), ReversibleMeasure::uniform(1)),
                       doctest::Contains("kernel-not-smooth"), std::invalid_argument);
}

TEST_CASE("positive stability check on small matrices") {
  InteractionMatrix a(2, {2.0, 1.0, 1.0, 2.0});
  PetrovskiiReport rep = check_petrovskii(a, {1.0, 1.0});
  CHECK(rep.pass);
  CHECK(rep.min_real_part == doctest::Approx(1.0).epsilon(1e-12));

  InteractionMatrix b(2, {0.0, 2.0, 2.0, 0.0});
  PetrovskiiReport rep2 = check_petrovskii(b, {1.0, 1.0});
  CHECK_FALSE(rep2.pass);
  CHECK(rep2.min_real_part == doctest::Approx(-2.0).epsilon(1e-12));

  CHECK_THROWS_AS(check_petrovskii(a, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(check_petrovskii(a, {1.0, -1.0}), std::invalid_argument);
}

TEST_CASE("simulate: snapshot schedule, diagnostics, and validation") {
  const TorusGrid g = make_grid(1, 32);
  InteractionMatrix a(1, {1.0});
  ModelParams params = gaussian_model(g, a, 0.5);
  SchemeConfig cfg;
  cfg.tau = 1e-3;
  cfg.t_end = 1e-2;
  FieldSet u0 = init::cosine_mode(g, 1, 1.0, 0.3);

  Trajectory traj = simulate(u0, params, cfg, {0.0, 5e-3, 1e-2});
  REQUIRE(traj.completed);
  REQUIRE(traj.times.size() == 3);
  CHECK(traj.times[0] == 0.0);
  CHECK(traj.times[1] == doctest::Approx(5e-3));
  CHECK(traj.times[2] == doctest::Approx(1e-2));
  CHECK(traj.step_reports.size() == 10);
  CHECK(traj.diagnostics.size() == 11);
  // entropy monotonicity along this PD-kernel run
  for (std::size_t k = 1; k < traj.diagnostics.size(); ++k) {
    CHECK(traj.diagnostics[k].h1 <= traj.diagnostics[k - 1].h1 + 1e-10);
    CHECK(traj.diagnostics[k].h2 <= traj.diagnostics[k - 1].h2 + 1e-10);
  }

  Trajectory all = simulate(u0, params, cfg);
  CHECK(all.times.size() == 11);  // every step plus the initial state

  FieldSet neg(1, g, -1.0);
  CHECK_THROWS_AS(simulate(neg, params, cfg), std::invalid_argument);
  CHECK_THROWS_AS(simulate(u0, params, cfg, {2.0}), std::invalid_argument);
}

TEST_CASE("local stepper requires symmetrizable interaction weights") {
  const TorusGrid g = make_grid(1, 32);
  InteractionMatrix a(2, {0.0, 1.0, 4.0, 0.0});
  ModelParams params;
  params.sigma = 0.5;
  params.pi = ReversibleMeasure::uniform(2);  // wrong measure for this a
  params.interaction = a;
  params.mode = SystemMode::Local;
  SchemeConfig cfg;
  cfg.tau = 1e-3;
  SpectralTransform fft(g);
  FieldSet u0(2, g, 1.0);
  CHECK_THROWS_AS(step_local(u0, params, cfg, fft), std::invalid_argument);
  params.pi = solve_reversible_measure(a);
  CHECK_NOTHROW(step_local(u0, params, cfg, fft));
}

TEST_CASE("entropy-variable map guards against overflow") {
  const TorusGrid g = make_grid(1, 32);
  FieldSet w(1, g, 800.0);
  CHECK_THROWS_AS(detail::u_of_w(w, ReversibleMeasure::uniform(1)), EntropyVariableOverflow);
}
