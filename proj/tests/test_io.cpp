#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "nlxd/initial.hpp"
#include "nlxd/io.hpp"
#include "nlxd/scheme.hpp"

using namespace nlxd;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

FieldSet random_state(const TorusGrid& g, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(1e-9, 3.0);
  FieldSet u(n, g);
  for (int i = 0; i < n; ++i)
    for (auto& x : u[i].values) x = dist(rng);
  return u;
}

}  // namespace

TEST_CASE("snapshot round trip is bitwise exact") {
  for (int dim : {1, 2}) {
    const TorusGrid g = make_grid(dim, 16, 2.5);
    FieldSet u = random_state(g, 3, 42 + dim);
    const std::string path = temp_path("nlxd_rt.bin");
    write_snapshot(u, 0.125, path);
    auto [v, t] = read_snapshot(path);
    CHECK(t == 0.125);
    CHECK(v.grid() == g);
    REQUIRE(v.species_count() == 3);
    for (int i = 0; i < 3; ++i)
      for (std::size_t c = 0; c < u[i].size(); ++c) CHECK(v[i][c] == u[i][c]);
    std::filesystem::remove(path);
  }
}

TEST_CASE("snapshot reader rejects corrupt files") {
  const std::string path = temp_path("nlxd_bad.bin");
  {
    std::ofstream out(path, std::ios::binary);
    out << "JUNKDATA";
  }
  CHECK_THROWS_WITH_AS(read_snapshot(path), doctest::Contains("bad-magic"),
                       std::runtime_error);

  const TorusGrid g = make_grid(1, 16);
  FieldSet u = random_state(g, 2, 1);
  write_snapshot(u, 0.0, path);
  const auto full = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, full - 17);
  CHECK_THROWS_WITH_AS(read_snapshot(path), doctest::Contains("truncated-payload"),
                       std::runtime_error);
  std::filesystem::remove(path);

  CHECK_THROWS_WITH_AS(read_snapshot(temp_path("nlxd_missing_file.bin")),
                       doctest::Contains("io-error"), std::runtime_error);
}

TEST_CASE("snapshot writer refuses non-finite values") {
  const TorusGrid g = make_grid(1, 16);
  FieldSet u(1, g, 1.0);
  u[0][5] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(write_snapshot(u, 0.0, temp_path("nlxd_nan.bin")),
                       doctest::Contains("non-finite-value"), std::runtime_error);
}

TEST_CASE("diagnostics CSV re-parses to full precision") {
  const TorusGrid g = make_grid(1, 32);
  ModelParams params;
  params.sigma = 0.5;
  params.pi = ReversibleMeasure::uniform(2);
  params.interaction = InteractionMatrix(2, {2.0, 1.0, 1.0, 2.0});
  params.mode = SystemMode::Local;
  SchemeConfig cfg;
  cfg.tau = 1e-3;
  cfg.t_end = 3e-3;
  Trajectory traj = simulate(random_state(g, 2, 9), params, cfg);
  REQUIRE(traj.completed);

  const std::string path = temp_path("nlxd_diag.csv");
  write_diagnostics_csv(traj, path);
  CsvTable table = read_csv(path);
  REQUIRE(table.rows.size() == traj.diagnostics.size());
  REQUIRE(table.header.size() == 12);  // time, 2 masses, 9 diagnostics columns
  CHECK(table.header[0] == "time");
  for (std::size_t k = 0; k < traj.diagnostics.size(); ++k) {
    const EntropyReport& d = traj.diagnostics[k];
    CHECK(table.rows[k][0] == d.time);
    CHECK(table.rows[k][1] == d.masses[0]);
    CHECK(table.rows[k][2] == d.masses[1]);
    CHECK(table.rows[k][5] == d.h1);
    CHECK(table.rows[k][6] == d.h2);
    CHECK(table.rows[k][8] == d.fisher_dissipation);
    CHECK(table.rows[k][9] == d.drift_dissipation);
  }
  std::filesystem::remove(path);
}

TEST_CASE("config parser: sections, arrays, matrices, comments") {
  const char* text = R"(
# run description
[grid]
dim = 1
cells = 64
period = 2.0

[model]
sigma = 0.25
mode = nonlocal
kernel = gaussian
epsilon = 0.1
interaction = [[2, 1], [1, 2]]

[scheme]
tau = 1e-3
t_end = 0.01
variant = implicit_entropy

[initial]
generator = cosine_mode
species = 2
base = 1.0
amp = 0.25

[output]
directory = "out"
times = [0.0, 0.005, 0.01]
emit_snapshots = true
)";
  RunConfig run = load_run_config(ConfigFile::parse_string(text));
  CHECK(run.grid.cells_per_dim == 64);
  CHECK(run.grid.period == 2.0);
  CHECK(run.sigma == 0.25);
  CHECK(run.kernel.interaction.n == 2);
  CHECK(run.kernel.interaction(0, 1) == 1.0);
  CHECK(run.scheme.tau == 1e-3);
  CHECK(run.initial.generator == "cosine_mode");
  CHECK(run.output.directory == "out");
  REQUIRE(run.output.times.size() == 3);
  CHECK(run.output.emit_snapshots);
}

TEST_CASE("config parser aggregates every validation error") {
  const char* text = R"(
[grid]
dim = 5
cells = 13
period = -1
[model]
sigma = 0
mode = sideways
)";
  try {
    load_run_config(ConfigFile::parse_string(text));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.errors.size() >= 4);
    bool found_sigma = false, found_mode = false;
    for (const auto& msg : e.errors) {
      if (msg.find("model.sigma") != std::string::npos) found_sigma = true;
      if (msg.find("model.mode") != std::string::npos) found_mode = true;
    }
    CHECK(found_sigma);
    CHECK(found_mode);
  }
}

TEST_CASE("config parser reports malformed lines with line numbers") {
  try {
    ConfigFile::parse_string("[grid]\ndim 1\nvalue = [1, 2\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(e.errors.size() == 2);
    CHECK(e.errors[0].find("line 2") != std::string::npos);
    CHECK(e.errors[1].find("line 3") != std::string::npos);
  }
}

TEST_CASE("initial-state generators via config dispatch") {
  RunConfig run;
  run.grid = make_grid(1, 32);
  run.kernel.interaction = InteractionMatrix(2, {1, 1, 1, 1});

  run.initial.generator = "constant";
  run.initial.species = 2;
  run.initial.values = {0.5, 1.5};
  FieldSet u = build_initial(run, run.grid);
  CHECK(u[0][0] == 0.5);
  CHECK(u[1][7] == 1.5);

  run.initial.values = {0.5};  // broadcast a single value
  u = build_initial(run, run.grid);
  CHECK(u[1][0] == 0.5);

  run.initial.values = {0.5, 1.0, 2.0};
  CHECK_THROWS_AS(build_initial(run, run.grid), std::invalid_argument);

  run.initial.generator = "random_positive";
  run.initial.seed = 77;
  run.initial.base = 0.25;
  FieldSet r1 = build_initial(run, run.grid);
  FieldSet r2 = build_initial(run, run.grid);
  CHECK(r1.min_value() >= 0.25);
  for (std::size_t c = 0; c < r1[0].size(); ++c) CHECK(r1[0][c] == r2[0][c]);  // seeded

  run.initial.generator = "mystery";
  CHECK_THROWS_AS(build_initial(run, run.grid), std::invalid_argument);
}

TEST_CASE("snapshot-based initial state validates grid and species") {
  const TorusGrid g = make_grid(1, 32);
  FieldSet u = random_state(g, 2, 55);
  const std::string path = temp_path("nlxd_init.bin");
  write_snapshot(u, 0.5, path);

  RunConfig run;
  run.grid = g;
  run.kernel.interaction = InteractionMatrix(2, {1, 1, 1, 1});
  run.initial.generator = "snapshot";
  run.initial.species = 2;
  run.initial.snapshot_path = path;
  FieldSet v = build_initial(run, run.grid);
  for (std::size_t c = 0; c < u[0].size(); ++c) CHECK(v[0][c] == u[0][c]);

  run.grid = make_grid(1, 64);
  CHECK_THROWS_AS(build_initial(run, run.grid), std::invalid_argument);
  std::filesystem::remove(path);
}

TEST_CASE("explicit reversible measure is validated against the interaction") {
  RunConfig run;
  run.grid = make_grid(1, 32);
  run.kernel.interaction = InteractionMatrix(2, {0.0, 1.0, 4.0, 0.0});

  ReversibleMeasure solved = resolve_pi(run);
  CHECK(solved[0] == doctest::Approx(0.8));

  run.explicit_pi = std::vector<double>{0.8, 0.2};
  CHECK_NOTHROW(resolve_pi(run));
  run.explicit_pi = std::vector<double>{0.5, 0.5};
  CHECK_THROWS_AS(resolve_pi(run), std::invalid_argument);
}
