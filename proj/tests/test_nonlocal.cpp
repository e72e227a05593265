#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nlxd/kernels.hpp"
#include "nlxd/nonlocal.hpp"

using namespace nlxd;

namespace {

Field random_field(const TorusGrid& g, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Field f(g);
  for (auto& x : f.values) x = dist(rng);
  return f;
}

KernelRaster gaussian_kernel(const TorusGrid& g, double eps = 0.1) {
  KernelSpec spec;
  spec.family = KernelFamily::Gaussian;
  spec.epsilon = eps;
  spec.interaction = InteractionMatrix(1, {1.0});
  return build_kernel(spec, g);
}

Field shift_field(const Field& f, int sx, int sy = 0) {
  const int N = f.n();
  Field out(f.grid);
  if (f.grid.dim == 1) {
    for (int i = 0; i < N; ++i) out[(i + sx) % N] = f[i];
  } else {
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) out.at((i + sx) % N, (j + sy) % N) = f.at(i, j);
  }
  return out;
}

double rel_diff(const Field& a, const Field& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    num = std::max(num, std::abs(a[c] - b[c]));
    den = std::max(den, std::abs(b[c]));
  }
  return num / std::max(den, 1e-300);
}

}  // namespace

TEST_CASE("convolution with a unit impulse reproduces the kernel raster") {
  const TorusGrid g = make_grid(1, 64);
  KernelRaster K = gaussian_kernel(g);
  Field delta(g);
  delta[0] = 1.0 / g.cell_measure();  // discrete delta: integrates to 1
  Field out = convolve(K.raster(0, 0), delta);
  for (int m = 0; m < g.cells_per_dim; ++m)
    CHECK(out[m] == doctest::Approx(K.raster(0, 0)[m]).epsilon(1e-12));
}

TEST_CASE("FFT convolution matches the direct-sum oracle in 1d and 2d") {
  for (int dim : {1, 2}) {
    const TorusGrid g = make_grid(dim, dim == 1 ? 64 : 32);
    KernelRaster K = gaussian_kernel(g, 0.15);
    for (std::uint64_t s = 0; s < 5; ++s) {
      Field u = random_field(g, 100 * dim + s);
      Field fftv = convolve(K.raster(0, 0), u);
      Field direct = convolve_direct(K.raster(0, 0), u);
      CHECK(rel_diff(fftv, direct) <= 1e-10);
    }
  }
}

TEST_CASE("direct-sum oracle refuses large grids unless overridden") {
  const TorusGrid g = make_grid(1, 256);
  Field u = random_field(g, 1);
  CHECK_THROWS_AS(convolve_direct(u, u), std::invalid_argument);
  CHECK_NOTHROW(convolve_direct(u, u, true));
  const TorusGrid g2 = make_grid(2, 64);
  Field v = random_field(g2, 2);
  CHECK_THROWS_AS(convolve_direct(v, v), std::invalid_argument);
}

TEST_CASE("convolution is linear, commutative, and translation equivariant") {
  const TorusGrid g = make_grid(1, 64);
  KernelRaster K = gaussian_kernel(g);
  const Field& ker = K.raster(0, 0);
  Field u = random_field(g, 3), v = random_field(g, 4);

  Field lin(g);
  for (std::size_t c = 0; c < lin.size(); ++c) lin[c] = 2.0 * u[c] - 3.0 * v[c];
  Field conv_lin = convolve(ker, lin);
  Field cu = convolve(ker, u), cv = convolve(ker, v);
  for (std::size_t c = 0; c < lin.size(); ++c)
    CHECK(conv_lin[c] == doctest::Approx(2.0 * cu[c] - 3.0 * cv[c]).epsilon(1e-12));

  // commutativity of the circular convolution
  Field uv = convolve(u, v), vu = convolve(v, u);
  for (std::size_t c = 0; c < uv.size(); ++c)
    CHECK(uv[c] == doctest::Approx(vu[c]).epsilon(1e-12));

  // shifting the input shifts the output
  Field cs = convolve(ker, shift_field(u, 13));
  Field sc = shift_field(cu, 13);
  CHECK(rel_diff(cs, sc) <= 1e-12);
}

TEST_CASE("Young's convolution inequality holds for built kernels") {
  const TorusGrid g = make_grid(1, 128);
  std::vector<KernelRaster> kernels;
  kernels.push_back(gaussian_kernel(g));
  {
    KernelSpec spec;
    spec.family = KernelFamily::IndicatorBall;
    spec.radius = 0.2;
    spec.interaction = InteractionMatrix(1, {1.0});
    kernels.push_back(build_kernel(spec, g));
  }
  struct Triple {
    double p, r, q;
  };
  for (const auto& K : kernels)
    for (Triple t : {Triple{1, 1, 1}, Triple{2, 1, 2}, Triple{1, 2, 2}})
      for (std::uint64_t s = 0; s < 5; ++s) {
        Field u = random_field(g, 50 + s);
        Field conv = convolve(K.raster(0, 0), u);
        const double lhs = lp_norm(conv, t.q);
        const double rhs = lp_norm(K.raster(0, 0), t.r) * lp_norm(u, t.p);
        CHECK(lhs <= rhs * (1.0 + 1e-10) + 1e-14);
      }
}

TEST_CASE("potentials: gradients match direct-convolution differentiation") {
  const TorusGrid g = make_grid(1, 64);
  InteractionMatrix a(2, {2.0, 1.0, 1.0, 2.0});
  KernelSpec spec;
  spec.family = KernelFamily::Gaussian;
  spec.epsilon = 0.12;
  spec.interaction = a;
  KernelRaster K = build_kernel(spec, g);

  FieldSet u(2, g);
  for (int i = 0; i < 2; ++i)
    for (int c = 0; c < g.cells_per_dim; ++c)
      u[i][c] = 1.0 + 0.4 * std::cos(2.0 * M_PI * (i + 1) * g.center(c));

  PotentialSet P = potentials(K, u, true);
  REQUIRE(P.p.size() == 2);
  REQUIRE(P.lap_p.size() == 2);

  for (int i = 0; i < 2; ++i) {
    // oracle: p from direct sums
    Field p_direct(g);
    for (int j = 0; j < 2; ++j) {
      Field conv = convolve_direct(K.raster(i, j), u[j]);
      for (std::size_t c = 0; c < conv.size(); ++c) p_direct[c] += conv[c];
    }
    CHECK(rel_diff(P.p[i], p_direct) <= 1e-12);
    // spectral gradient vs centered differences of the direct-sum potential
    auto gc = gradient(p_direct);
    double worst = 0.0, scale = 0.0;
    for (std::size_t c = 0; c < gc[0].size(); ++c) {
      worst = std::max(worst, std::abs(P.grad_p[i][0][c] - gc[0][c]));
      scale = std::max(scale, std::abs(gc[0][c]));
    }
    // centered differences are O(h^2); spectral is exact for resolved modes
    CHECK(worst <= 1e-2 * std::max(scale, 1.0));
  }
}

TEST_CASE("potentials refuse Laplacians for non-smooth kernels") {
  const TorusGrid g = make_grid(1, 64);
  KernelSpec spec;
  spec.family = KernelFamily::IndicatorBall;
  spec.radius = 0.2;
  spec.interaction = InteractionMatrix(1, {1.0});
  KernelRaster K = build_kernel(spec, g);
  FieldSet u(1, g, 1.0);
  CHECK_NOTHROW(potentials(K, u, false));
  CHECK_THROWS_WITH_AS(potentials(K, u, true), doctest::Contains("kernel-not-smooth"),
                       std::invalid_argument);
}

TEST_CASE("quadratic form is nonnegative for positive definite kernels") {
  const TorusGrid g = make_grid(1, 64);
  InteractionMatrix a(2, {2.0, 1.0, 1.0, 2.0});
  KernelSpec spec;
  spec.family = KernelFamily::Gaussian;
  spec.epsilon = 0.1;
  spec.interaction = a;
  KernelRaster K = build_kernel(spec, g);
  ReversibleMeasure pi = ReversibleMeasure::uniform(2);
  for (std::uint64_t s = 0; s < 10; ++s) {
    FieldSet v(2, g);
    v[0] = random_field(g, 2 * s);
    v[1] = random_field(g, 2 * s + 1);
    CHECK(quadratic_form(K, pi, v) >= -1e-12);
  }
}

TEST_CASE("quadratic form of constants reduces to the interaction masses") {
  const TorusGrid g = make_grid(1, 64);
  InteractionMatrix a(2, {2.0, 1.0, 1.0, 2.0});
  KernelSpec spec;
  spec.family = KernelFamily::Gaussian;
  spec.epsilon = 0.1;
  spec.interaction = a;
  KernelRaster K = build_kernel(spec, g);
  ReversibleMeasure pi(std::vector<double>{0.5, 0.5});
  FieldSet v(2, g);
  for (std::size_t c = 0; c < v[0].size(); ++c) {
    v[0][c] = 2.0;
    v[1][c] = 3.0;
  }
  // sum_ij pi_i c_i c_j mass_ij on the unit torus
  double expected = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      expected += pi[i] * (i == 0 ? 2.0 : 3.0) * (j == 0 ? 2.0 : 3.0) * K.pair_mass(i, j);
  CHECK(quadratic_form(K, pi, v) == doctest::Approx(expected).epsilon(1e-10));
}
