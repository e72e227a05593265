// Command-line front end: simulation runs, kernel certification, and the
// experiment probes, all driven by a sectioned text config.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlxd/config.hpp"
#include "nlxd/entropy.hpp"
#include "nlxd/experiments.hpp"
#include "nlxd/grid.hpp"
#include "nlxd/initial.hpp"
#include "nlxd/io.hpp"
#include "nlxd/kernels.hpp"
#include "nlxd/nonlocal.hpp"
#include "nlxd/scheme.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string output_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

nlxd::RunConfig load(const CommonOptions& opts) {
  nlxd::RunConfig run = nlxd::parse_config(opts.config_path);
  if (!opts.output_dir.empty()) run.output.directory = opts.output_dir;
  if (opts.seed_set) run.initial.seed = opts.seed;
  std::filesystem::create_directories(run.output.directory);
  return run;
}

nlxd::ModelParams build_model(const nlxd::RunConfig& run, nlxd::SystemMode mode) {
  nlxd::ModelParams params;
  params.sigma = run.sigma;
  params.pi = nlxd::resolve_pi(run);
  params.interaction = run.kernel.interaction;
  params.mode = mode;
  if (mode == nlxd::SystemMode::Nonlocal)
    params.kernel = nlxd::build_kernel(run.kernel, run.grid);
  return params;
}

int run_simulation(const CommonOptions& opts, bool force_local) {
  nlxd::RunConfig run = load(opts);
  const nlxd::SystemMode mode = force_local ? nlxd::SystemMode::Local : run.mode;
  if (run.kernel.family == nlxd::KernelFamily::IndicatorBall &&
      mode == nlxd::SystemMode::Nonlocal)
    std::cerr << "warning: indicator kernel has unbounded Delta K; "
                 "density-bound estimates are unavailable\n";
  nlxd::ModelParams params = build_model(run, mode);
  nlxd::FieldSet u0 = nlxd::build_initial(run, run.grid);
  nlxd::Trajectory traj = nlxd::simulate(u0, params, run.scheme, run.output.times);
  const std::string dir = run.output.directory;
  nlxd::write_diagnostics_csv(traj, dir + "/diagnostics.csv");
  if (run.output.emit_snapshots) {
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      char name[64];
      std::snprintf(name, sizeof(name), "/state_%05zu.nlxd", k);
      nlxd::write_snapshot(traj.states[k], traj.times[k], dir + name);
    }
  }
  if (!traj.completed) {
    std::cerr << "run aborted: " << traj.abort_reason << "\n";
    return 1;
  }
  std::cout << "completed " << traj.step_reports.size() << " steps; diagnostics in " << dir
            << "/diagnostics.csv\n";
  return 0;
}

int run_check_kernel(const CommonOptions& opts) {
  nlxd::RunConfig run = load(opts);
  nlxd::KernelRaster K = nlxd::build_kernel(run.kernel, run.grid);
  nlxd::ReversibleMeasure pi = nlxd::resolve_pi(run);
  const double db = nlxd::check_detailed_balance(K, pi);
  nlxd::PDCertificate cert = nlxd::certify_positive_definite(K, pi);
  std::cout << "detailed balance residual: " << db << "\n";
  std::cout << "verdict: "
            << (cert.verdict == nlxd::PDVerdict::PositiveDefinite ? "positive_definite"
                                                                  : "not_positive_definite")
            << "\n";
  std::cout << "min multiplier eigenvalue: " << cert.min_multiplier_eig << " (normalized "
            << cert.min_normalized << ", witness mode " << cert.witness_mode << ")\n";
  return 0;
}

int run_localization(const CommonOptions& opts) {
  nlxd::RunConfig run = load(opts);
  if (run.experiment.epsilons.empty())
    throw std::invalid_argument("experiment.epsilons is required for localization-sweep");
  nlxd::ReversibleMeasure pi = nlxd::resolve_pi(run);
  nlxd::FieldSet u0 = nlxd::build_initial(run, run.grid);
  nlxd::LocalizationReport rep = nlxd::localization_sweep(
      run.experiment.epsilons, run.kernel.interaction, pi, u0, run.sigma, run.scheme,
      run.kernel.profile, run.output.times);
  std::ofstream out(run.output.directory + "/localization.csv");
  out << "epsilon,distance_l1,distance_l2\n";
  for (std::size_t k = 0; k < rep.epsilons.size(); ++k) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", rep.epsilons[k],
                  rep.distances_l1[k], rep.distances_l2[k]);
    out << buf;
  }
  std::cout << "distances " << (rep.monotone ? "strictly decreasing" : "NOT monotone")
            << "; log-log slope " << rep.loglog_slope << "\n";
  return 0;
}

int run_uniqueness(const CommonOptions& opts) {
  nlxd::RunConfig run = load(opts);
  nlxd::ModelParams params = build_model(run, run.mode);
  nlxd::FieldSet u0 = nlxd::build_initial(run, run.grid);
  nlxd::FieldSet pert = nlxd::init::mode_perturbation(run.grid, u0.species_count(),
                                                      run.experiment.perturbation_amp);
  nlxd::UniquenessReport rep =
      nlxd::weak_strong_probe(u0, pert, params, run.scheme, run.output.times);
  std::ofstream out(run.output.directory + "/uniqueness.csv");
  out << "time,rel_entropy,ckp_bound,l1_distance\n";
  for (std::size_t k = 0; k < rep.times.size(); ++k) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", rep.times[k],
                  rep.rel_entropy[k], rep.ckp_bound[k], rep.l1_distances[k]);
    out << buf;
  }
  std::cout << "gronwall fit C = " << rep.gronwall_fit_C << ", identical-run distance "
            << rep.same_init_max_distance << "\n";
  return 0;
}

int run_bounds(const CommonOptions& opts) {
  nlxd::RunConfig run = load(opts);
  nlxd::ModelParams params = build_model(run, nlxd::SystemMode::Nonlocal);
  nlxd::FieldSet u0 = nlxd::build_initial(run, run.grid);
  const double lambda = nlxd::estimate_lambda(params.kernel, u0, params.pi);
  nlxd::Trajectory traj = nlxd::simulate(u0, params, run.scheme, run.output.times);
  if (!traj.completed) {
    std::cerr << "run aborted: " << traj.abort_reason << "\n";
    return 1;
  }
  nlxd::BoundsReport rep =
      nlxd::bounds_check(traj, lambda, u0.min_value(), u0.max_value());
  std::cout << "lambda = " << lambda << "; bounds " << (rep.pass ? "PASS" : "FAIL");
  if (rep.first_violation_time)
    std::cout << " (first violation at t = " << *rep.first_violation_time << ")";
  std::cout << "\n";
  return rep.pass ? 0 : 1;
}

int run_convergence(const CommonOptions& opts) {
  nlxd::RunConfig run = load(opts);
  if (run.experiment.tau_list.empty() || run.experiment.n_list.empty())
    throw std::invalid_argument("experiment.tau_list and experiment.n_list are required");
  std::vector<int> n_list;
  for (double n : run.experiment.n_list) n_list.push_back(static_cast<int>(n));

  nlxd::ConvergenceCase cs;
  cs.dim = run.grid.dim;
  cs.period = run.grid.period;
  cs.scheme = run.scheme;
  cs.grid_n_for_time = run.grid.cells_per_dim;
  cs.tau_for_space = run.experiment.tau_list.back() / 4.0;
  const nlxd::RunConfig run_copy = run;
  cs.model = [run_copy](const nlxd::TorusGrid& g) {
    nlxd::ModelParams p;
    p.sigma = run_copy.sigma;
    p.pi = nlxd::resolve_pi(run_copy);
    p.interaction = run_copy.kernel.interaction;
    p.mode = run_copy.mode;
    if (p.mode == nlxd::SystemMode::Nonlocal) p.kernel = nlxd::build_kernel(run_copy.kernel, g);
    return p;
  };
  cs.initial = [run_copy](const nlxd::TorusGrid& g) { return nlxd::build_initial(run_copy, g); };
  if (run.kernel.interaction.max_abs() == 0.0 && run.initial.generator == "cosine_mode") {
    const double sigma = run.sigma, base = run.initial.base, amp = run.initial.amp;
    const int ns = run.initial.species;
    cs.exact = [sigma, base, amp, ns](const nlxd::TorusGrid& g, double t) {
      const double decay = std::exp(-sigma * 4.0 * M_PI * M_PI * t / (g.period * g.period));
      return nlxd::init::cosine_mode(g, ns, base, amp * decay);
    };
  }
  nlxd::ConvergenceReport rep = nlxd::convergence_study(run.experiment.tau_list, n_list, cs);
  std::cout << "temporal order " << rep.temporal_order << ", spatial order " << rep.spatial_order
            << "\n";
  std::ofstream out(run.output.directory + "/convergence.csv");
  out << "kind,resolution,error\n";
  for (std::size_t k = 0; k < rep.taus.size(); ++k)
    out << "tau," << rep.taus[k] << ',' << rep.tau_errors[k] << '\n';
  for (std::size_t k = 0; k < rep.ns.size(); ++k)
    out << "n," << rep.ns[k] << ',' << rep.spatial_errors[k] << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal cross-diffusion simulator on the periodic torus"};
  app.require_subcommand(1);

  CommonOptions opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "run configuration file")->required();
    sub->add_option("--output", opts.output_dir, "output directory override");
    sub->add_option("--seed", opts.seed, "seed override")->each([&](const std::string&) {
      opts.seed_set = true;
    });
    sub->add_option("--threads", opts.threads, "advisory thread count");
  };

  CLI::App* c_sim = app.add_subcommand("simulate", "run the configured system");
  CLI::App* c_loc = app.add_subcommand("local-simulate", "run the local system");
  CLI::App* c_ker = app.add_subcommand("check-kernel", "certify the configured kernel");
  CLI::App* c_swp = app.add_subcommand("localization-sweep", "mollifier localization sweep");
  CLI::App* c_uni = app.add_subcommand("uniqueness-probe", "relative-entropy probe");
  CLI::App* c_bnd = app.add_subcommand("bounds-check", "density-bound check");
  CLI::App* c_cnv = app.add_subcommand("convergence", "convergence-order study");
  for (CLI::App* sub : {c_sim, c_loc, c_ker, c_swp, c_uni, c_bnd, c_cnv}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_sim->parsed()) return run_simulation(opts, false);
    if (c_loc->parsed()) return run_simulation(opts, true);
    if (c_ker->parsed()) return run_check_kernel(opts);
    if (c_swp->parsed()) return run_localization(opts);
    if (c_uni->parsed()) return run_uniqueness(opts);
    if (c_bnd->parsed()) return run_bounds(opts);
    if (c_cnv->parsed()) return run_convergence(opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
