#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "nlxd/config.hpp"
#include "nlxd/grid.hpp"
#include "nlxd/scheme.hpp"

namespace nlxd {

namespace detail {

// Fixed little-endian layout; byte-swap on big-endian hosts would go here, but
// every supported target is little-endian.
template <typename T>
void write_raw(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("truncated-payload");
  return value;
}

}  // namespace detail

/// Binary state snapshot: magic "NLXD", version 1, grid header, then one f64
/// raster per species, row-major little-endian. Bit-exact round trip.
inline void write_snapshot(const FieldSet& state, double time, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("io-error: cannot open " + path);
  out.write("NLXD", 4);
  detail::write_raw<std::uint8_t>(out, 1);
  detail::write_raw<std::uint8_t>(out, static_cast<std::uint8_t>(state.grid().dim));
  detail::write_raw<std::uint16_t>(out, static_cast<std::uint16_t>(state.species_count()));
  for (int d = 0; d < state.grid().dim; ++d)
    detail::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(state.grid().cells_per_dim));
  for (int d = 0; d < state.grid().dim; ++d)
    detail::write_raw<double>(out, state.grid().period);
  detail::write_raw<double>(out, time);
  for (int i = 0; i < state.species_count(); ++i) {
    for (double x : state[i].values) {
      if (!std::isfinite(x)) throw std::runtime_error("non-finite-value in snapshot state");
      detail::write_raw<double>(out, x);
    }
  }
  if (!out) throw std::runtime_error("io-error: write failed for " + path);
}

inline std::pair<FieldSet, double> read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("io-error: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "NLXD", 4) != 0) throw std::runtime_error("bad-magic");
  const auto version = detail::read_raw<std::uint8_t>(in);
  if (version != 1) throw std::runtime_error("bad-magic: unsupported version");
  const int dim = detail::read_raw<std::uint8_t>(in);
  const int n_species = detail::read_raw<std::uint16_t>(in);
  if (dim != 1 && dim != 2) throw std::runtime_error("bad-magic: invalid dimension");
  int N = 0;
  for (int d = 0; d < dim; ++d) {
    const int nd = static_cast<int>(detail::read_raw<std::uint32_t>(in));
    if (d == 0)
      N = nd;
    else if (nd != N)
      throw std::runtime_error("bad-magic: anisotropic grids unsupported");
  }
  double L = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double ld = detail::read_raw<double>(in);
    if (d == 0)
      L = ld;
    else if (ld != L)
      throw std::runtime_error("bad-magic: anisotropic periods unsupported");
  }
  const double time = detail::read_raw<double>(in);
  TorusGrid grid = make_grid(dim, N, L);
  FieldSet state(n_species, grid);
  for (int i = 0; i < n_species; ++i)
    for (std::size_t c = 0; c < state[i].size(); ++c) {
      const double x = detail::read_raw<double>(in);
      if (!std::isfinite(x)) throw std::runtime_error("non-finite-value in snapshot payload");
      state[i][c] = x;
    }
  return {std::move(state), time};
}

/// Diagnostics CSV: one row per recorded state, floats at 17 significant
/// digits so a re-parse reproduces every f64 exactly.
inline void write_diagnostics_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("io-error: cannot open " + path);
  const int n = traj.diagnostics.empty() ? 0
                                         : static_cast<int>(traj.diagnostics[0].masses.size());
  out << "time";
  for (int i = 0; i < n; ++i) out << ",mass_" << i;
  out << ",min,max,h1,h2,h2_local,fisher_dissipation,drift_dissipation,newton_iters,"
         "residual_norm\n";
  char buf[64];
  auto fmt = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
  };
  for (std::size_t k = 0; k < traj.diagnostics.size(); ++k) {
    const EntropyReport& d = traj.diagnostics[k];
    out << fmt(d.time);
    for (double m : d.masses) out << ',' << fmt(m);
    out << ',' << fmt(d.min_density) << ',' << fmt(d.max_density) << ',' << fmt(d.h1) << ','
        << fmt(d.h2) << ',';
    if (d.h2_local) out << fmt(*d.h2_local);
    out << ',' << fmt(d.fisher_dissipation) << ',' << fmt(d.drift_dissipation);
    // diagnostics[0] is the initial state; step k corresponds to report k-1
    if (k == 0 || traj.step_reports.size() < k) {
      out << ",0,0";
    } else {
      const StepReport& s = traj.step_reports[k - 1];
      out << ',' << s.newton_iters << ',' << fmt(s.residual_norm);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("io-error: write failed for " + path);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // NaN for empty cells
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("io-error: cannot open " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    if (first) {
      table.header = cells;
      first = false;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells)
      row.push_back(c.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(c));
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline FieldSet build_initial(const RunConfig& run, const TorusGrid& grid) {
  const InitialSpec& spec = run.initial;
  if (spec.generator == "constant") {
    std::vector<double> vals = spec.values;
    if (static_cast<int>(vals.size()) == 1 && spec.species > 1)
      vals.assign(spec.species, vals[0]);
    if (static_cast<int>(vals.size()) != spec.species)
      throw std::invalid_argument("initial.values length must match species count");
    return init::constant(grid, vals);
  }
  if (spec.generator == "cosine_mode")
    return init::cosine_mode(grid, spec.species, spec.base, spec.amp);
  if (spec.generator == "random_positive")
    return init::random_positive(grid, spec.species, spec.seed, spec.base, spec.amp);
  if (spec.generator == "gaussian_bumps")
    return init::gaussian_bumps(grid, spec.species, spec.width, spec.amp);
  if (spec.generator == "snapshot") {
    auto [state, time] = read_snapshot(spec.snapshot_path);
    (void)time;
    if (!(state.grid() == grid))
      throw std::invalid_argument("snapshot grid does not match configured grid");
    if (state.species_count() != spec.species)
      throw std::invalid_argument("snapshot species count does not match configuration");
    return state;
  }
  throw std::invalid_argument("unknown initial.generator: " + spec.generator);
}

}  // namespace nlxd
