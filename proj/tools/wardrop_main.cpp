// wardrop: analyze congestion networks, simulate learning dynamics, and run
// the stochastic experiments from the command line. JSON configs in, JSON
// summaries / CSV trajectories out.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "wardrop/io.hpp"

using nlohmann::json;
using namespace wardrop;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string example_name;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double tol = 1e-9;
  bool quiet = false;
  double lambda_override = 0.0;  // 0 = keep config
  double sigma_override = -1.0;  // <0 = keep config
  double dt_override = 0.0;
  double T_override = 0.0;
};

void add_input_options(CLI::App* cmd, GlobalArgs& g) {
  auto* cfg = cmd->add_option("-c,--config", g.config_path, "JSON network config");
  auto* ex = cmd->add_option("-e,--example", g.example_name, "builtin example name");
  cfg->excludes(ex);
}

void add_sim_overrides(CLI::App* cmd, GlobalArgs& g) {
  cmd->add_option("--lambda", g.lambda_override, "uniform learning rate override");
  cmd->add_option("--sigma", g.sigma_override, "uniform per-edge noise intensity override");
  cmd->add_option("--dt", g.dt_override, "step size override");
  cmd->add_option("--T", g.T_override, "horizon override");
}

ParsedConfig load(const GlobalArgs& g) {
  ParsedConfig pc;
  if (!g.example_name.empty())
    pc = parse_config_json(builtin_example(g.example_name), g.example_name);
  else if (!g.config_path.empty())
    pc = parse_config(g.config_path);
  else
    throw CLI::ValidationError("input", "one of --config or --example is required");
  if (g.seed_set) pc.sim.seed = g.seed;
  if (g.lambda_override > 0.0)
    pc.sim.lambda.assign(pc.net.user_count(), g.lambda_override);
  if (g.sigma_override >= 0.0)
    pc.noise.sigma.assign(pc.net.edge_count(), g.sigma_override);
  if (g.dt_override > 0.0) pc.sim.dt = g.dt_override;
  if (g.T_override > 0.0) pc.sim.T = g.T_override;
  if (!g.quiet)
    for (const auto& w : pc.warnings) std::cerr << "warning: " << w << "\n";
  return pc;
}

void emit(const GlobalArgs& g, json j, const std::string& command, const std::string& digest,
          std::uint64_t seed, double wall_seconds) {
  j["manifest"] = manifest_json(make_manifest(command, digest, seed, wall_seconds));
  if (g.out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(g.out_path);
    if (!out) throw std::runtime_error("cannot write '" + g.out_path + "'");
    out << j.dump(2) << "\n";
  }
}

Flow parse_x0(const Network& net, const std::string& s) {
  if (s.empty() || s == "uniform") return net.uniform_flow();
  Flow x = net.zero_flow();
  std::stringstream ss(s);
  std::string tok;
  std::size_t k = 0;
  while (std::getline(ss, tok, ',')) {
    if (k >= x.size()) throw validation_error("--x0 has too many coordinates");
    x[k++] = std::stod(tok);
  }
  if (k != x.size()) throw validation_error("--x0 has too few coordinates");
  net.validate_flow(x, 1e-6);
  return x;
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> g;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) g.push_back(std::stod(tok));
  return g;
}

int run_trajectory_command(const GlobalArgs& g, const std::string& kind,
                           const std::string& rhs_name, bool no_reference) {
  const auto t0 = std::chrono::steady_clock::now();
  ParsedConfig pc = load(g);
  SimConfig cfg = pc.sim;
  if (!no_reference) {
    SolveOptions opts;
    opts.tol = std::min(g.tol, 1e-8);
    cfg.reference = solve_wardrop(pc.net, opts).flow;
  }
  Flow x0 = pc.net.uniform_flow();

  Trajectory traj;
  if (kind == "ode") {
    traj = integrate_ode(pc.net, x0, cfg,
                         rhs_name == "bnn" ? RhsKind::bnn : RhsKind::replicator);
  } else if (kind == "sde") {
    if (!sde_step_size_ok(pc.net, cfg, pc.noise) && !g.quiet)
      std::cerr << "warning: lambda * max path variance * dt exceeds " << kSdeStepGuard
                << "; consider a smaller --dt\n";
    traj = simulate_sde(pc.net, x0, cfg, pc.noise);
  } else {
    traj = simulate_exponential_learning(pc.net, x0, cfg, pc.noise);
  }

  const std::string out = g.out_path.empty() ? "trajectory.csv" : g.out_path;
  write_trajectory_csv(traj, pc.net, out);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(make_manifest("simulate-" + kind, pc.digest, cfg.seed, wall), out);
  if (!g.quiet) {
    std::cerr << "wrote " << out << " (" << traj.samples() << " samples";
    if (traj.meta.truncated) std::cerr << ", truncated: " << traj.meta.error;
    std::cerr << ")\n";
  }
  return traj.meta.truncated ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wardrop equilibria, replicator learning, and stochastic experiments on "
               "congestion networks"};
  app.require_subcommand(1);
  GlobalArgs g;
  app.add_option("--seed", g.seed, "master seed override")->each([&](const std::string&) {
    g.seed_set = true;
  });
  app.add_option("-o,--out", g.out_path, "output file (default: stdout / trajectory.csv)");
  app.add_option("--tol", g.tol, "solver gap tolerance");
  app.add_flag("-q,--quiet", g.quiet, "suppress warnings and progress");
  app.fallthrough();

  auto* analyze = app.add_subcommand("analyze", "redundancy, equilibrium, classification");
  add_input_options(analyze, g);
  bool social = false;
  analyze->add_flag("--social", social, "also solve the social optimum (marginal latencies)");

  auto* sim_ode = app.add_subcommand("simulate-ode", "deterministic learning dynamics");
  add_input_options(sim_ode, g);
  add_sim_overrides(sim_ode, g);
  std::string rhs_name = "replicator";
  sim_ode->add_option("--rhs", rhs_name, "replicator or bnn")
      ->check(CLI::IsMember({"replicator", "bnn"}));
  bool no_reference = false;
  sim_ode->add_flag("--no-reference", no_reference, "skip the equilibrium solve for diagnostics");

  auto* sim_sde = app.add_subcommand("simulate-sde", "stochastic replicator dynamics");
  add_input_options(sim_sde, g);
  add_sim_overrides(sim_sde, g);
  sim_sde->add_flag("--no-reference", no_reference);

  auto* sim_exp = app.add_subcommand("simulate-exp", "stochastic exponential learning");
  add_input_options(sim_exp, g);
  add_sim_overrides(sim_exp, g);
  sim_exp->add_flag("--no-reference", no_reference);

  auto* hit = app.add_subcommand("hitting-time", "mean hitting time vs the theoretical bound");
  add_input_options(hit, g);
  add_sim_overrides(hit, g);
  double delta = 0.2, t_max = 0.0;
  int replicates = 500;
  std::string x0_spec = "uniform";
  hit->add_option("--delta", delta, "L1 target radius");
  hit->add_option("--replicates", replicates);
  hit->add_option("--t-max", t_max, "cap per replicate (default 20x bound)");
  hit->add_option("--x0", x0_spec, "start flow: 'uniform' or comma-separated");
  std::string raw_out;
  hit->add_option("--raw-out", raw_out, "write per-replicate hitting times as CSV");

  auto* stab = app.add_subcommand("stability", "stochastic stability around a strict equilibrium");
  add_input_options(stab, g);
  add_sim_overrides(stab, g);
  double radius = 0.05, stab_T = 200.0, min_fraction = -1.0;
  int stab_replicates = 200;
  stab->add_option("--radius", radius, "starting L1 radius");
  stab->add_option("--replicates", stab_replicates);
  stab->add_option("--horizon", stab_T, "simulation horizon T");
  stab->add_option("--min-fraction", min_fraction,
                   "FAIL (exit 4) when the stayed+converged fraction is below this");
  std::string radius_grid;
  stab->add_option("--radius-grid", radius_grid,
                   "comma-separated start radii; reports whether the fractions are "
                   "non-decreasing as the radius shrinks");

  auto* inv = app.add_subcommand("invariant-measure",
                                 "occupancy of projective balls around an interior equilibrium");
  add_input_options(inv, g);
  add_sim_overrides(inv, g);
  double inv_T = 5000.0, burn_in = 500.0;
  std::string grid_spec = "0.1,0.2,0.3,0.4,0.5,0.75,1.0";
  inv->add_option("--horizon", inv_T);
  inv->add_option("--burn-in", burn_in);
  inv->add_option("--theta-grid", grid_spec, "comma-separated thetas");

  auto* lem = app.add_subcommand("check-lemmas", "adjoint-potential inequalities by sampling");
  add_input_options(lem, g);
  long samples = 10000;
  lem->add_option("--samples", samples);

  auto* ex = app.add_subcommand("example", "print a builtin config");
  std::string ex_name;
  ex->add_option("name", ex_name, "one of: braess, fig1a, fig1b, parallel2, pigou")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const auto t0 = std::chrono::steady_clock::now();
    auto wall = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    if (ex->parsed()) {
      std::cout << builtin_example(ex_name).dump(2) << "\n";
      return 0;
    }
    if (analyze->parsed()) {
      ParsedConfig pc = load(g);
      SolveOptions opts;
      opts.tol = g.tol;
      EquilibriumReport rep = solve_wardrop(pc.net, opts);
      json j;
      j["redundancy"] = redundancy_json(pc.net);
      j["equilibrium"] = equilibrium_report_json(pc.net, rep);
      j["verify"] = verify_json(pc.net, verify_wardrop(pc.net, rep.flow, std::max(g.tol, 1e-6)));
      if (social) {
        EquilibriumReport so = solve_social_optimum(pc.net, opts);
        j["social_optimum"] = equilibrium_report_json(pc.net, so);
        j["social_optimum"]["aggregate_delay_original"] = so.aggregate_delay_original;
      }
      emit(g, j, "analyze", pc.digest, pc.sim.seed, wall());
      return rep.converged ? 0 : 3;
    }
    if (sim_ode->parsed()) return run_trajectory_command(g, "ode", rhs_name, no_reference);
    if (sim_sde->parsed()) return run_trajectory_command(g, "sde", "", no_reference);
    if (sim_exp->parsed()) return run_trajectory_command(g, "exp", "", no_reference);

    if (hit->parsed()) {
      ParsedConfig pc = load(g);
      EquilibriumReport q = solve_wardrop(pc.net, SolveOptions{});
      HittingTimeReport rep = estimate_hitting_time(pc.net, q, delta, parse_x0(pc.net, x0_spec),
                                                    pc.sim, pc.noise, replicates, t_max);
      if (!raw_out.empty()) {
        std::ofstream raw(raw_out, std::ios::binary);
        if (!raw) throw std::runtime_error("cannot write '" + raw_out + "'");
        raw << "replicate,time,capped\n";
        for (std::size_t k = 0; k < rep.times.size(); ++k)
          raw << k << "," << format_double(rep.times[k]) << ","
              << (rep.times[k] >= rep.t_max ? 1 : 0) << "\n";
        write_manifest(make_manifest("hitting-time", pc.digest, pc.sim.seed, wall()), raw_out);
      }
      emit(g, hitting_time_json(rep), "hitting-time", pc.digest, pc.sim.seed, wall());
      return rep.verdict == Verdict::fail ? 4 : 0;
    }
    if (stab->parsed()) {
      ParsedConfig pc = load(g);
      EquilibriumReport q = solve_wardrop(pc.net, SolveOptions{});
      if (!radius_grid.empty()) {
        json runs = json::array();
        bool monotone = true;
        double prev = -1.0, prev_se = 0.0;
        for (double r : parse_grid(radius_grid)) {  // given large-to-small
          StabilityReport rep =
              stability_probability(pc.net, q, r, pc.sim, pc.noise, stab_replicates, stab_T);
          const double se =
              std::sqrt(std::max(rep.fraction_both * (1.0 - rep.fraction_both), 1e-12) /
                        rep.replicates);
          if (rep.fraction_both < prev - 2.0 * (se + prev_se)) monotone = false;
          prev = rep.fraction_both;
          prev_se = se;
          runs.push_back(stability_json(rep));
        }
        json j{{"grid", runs}, {"non_decreasing_within_2se", monotone}};
        emit(g, j, "stability", pc.digest, pc.sim.seed, wall());
        return (min_fraction >= 0.0 && prev < min_fraction) ? 4 : 0;
      }
      StabilityReport rep =
          stability_probability(pc.net, q, radius, pc.sim, pc.noise, stab_replicates, stab_T);
      emit(g, stability_json(rep), "stability", pc.digest, pc.sim.seed, wall());
      return (min_fraction >= 0.0 && rep.fraction_both < min_fraction) ? 4 : 0;
    }
    if (inv->parsed()) {
      ParsedConfig pc = load(g);
      EquilibriumReport q = solve_wardrop(pc.net, SolveOptions{});
      InvariantMeasureReport rep = estimate_invariant_measure(pc.net, q, pc.sim, pc.noise, inv_T,
                                                              burn_in, parse_grid(grid_spec));
      emit(g, invariant_measure_json(rep), "invariant-measure", pc.digest, pc.sim.seed, wall());
      return rep.pass ? 0 : 4;
    }
    if (lem->parsed()) {
      ParsedConfig pc = load(g);
      EquilibriumReport q = solve_wardrop(pc.net, SolveOptions{});
      AdjointLemmaReport rep = check_adjoint_lemmas(pc.net, q, samples, pc.sim.seed);
      emit(g, adjoint_lemma_json(rep), "check-lemmas", pc.digest, pc.sim.seed, wall());
      return rep.pass ? 0 : 4;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const infeasible_load& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
