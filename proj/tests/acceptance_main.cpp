// Acceptance suite: the quantitative checks the artifact must satisfy, one
// line per criterion. Exit code = number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "support/random_networks.hpp"
#include "wardrop/experiments.hpp"
#include "wardrop/io.hpp"

using namespace wardrop;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s  criterion %2d  %-28s %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

Network builtin(const std::string& name) {
  return parse_config_json(builtin_example(name), name).net;
}

NoiseSpec uniform_noise(const Network& net, double s) {
  NoiseSpec n;
  n.sigma.assign(net.edge_count(), s);
  return n;
}

Flow flow3(double a, double b, double c) {
  Flow x;
  x.x = {a, b, c};
  return x;
}

// single user, two disjoint symmetric affine links (interior equilibrium)
Network sym2() {
  NetworkSpec s;
  s.nodes = {"A", "B"};
  s.edges = {EdgeSpec{"e1", "A", "B", LatencySpec::affine_fn(1, 1), 0.0},
             EdgeSpec{"e2", "A", "B", LatencySpec::affine_fn(1, 1), 0.0}};
  UserSpec u;
  u.id = "u1";
  u.origin = "A";
  u.destination = "B";
  u.rate = 1.0;
  u.paths = {{"a", {"e1"}}, {"b", {"e2"}}};
  s.users = {u};
  return build_network(s);
}

// ---------------------------------------------------------------- criteria

void criterion1_braess_equilibrium() {
  Network net = builtin("braess");
  SolveOptions opts;
  opts.tol = 1e-9;
  EquilibriumReport rep = solve_wardrop(net, opts);
  bool pass = rep.converged && rep.gap_rel < 1e-6 && rep.seconds < 1.0;
  for (int a = 0; a < 3; ++a) {
    pass = pass && std::abs(rep.flow[a] - 2.0) <= 1e-4;
    pass = pass && std::abs(rep.delays[a] - 92.0) <= 1e-3;
  }
  report(1, "braess equilibrium", pass,
         fmt("flow=(%.6f,%.6f,%.6f) delays=(%.5f,%.5f,%.5f) rel_gap=%.2e in %.3fs",
             rep.flow[0], rep.flow[1], rep.flow[2], rep.delays[0], rep.delays[1], rep.delays[2],
             rep.gap_rel, rep.seconds));
}

void criterion2_braess_disparity() {
  Network net = builtin("braess");
  const Flow split = flow3(3, 3, 0);
  DelayProfile d = path_delays(net, split);
  bool pass = std::abs(d.path[0] - 83.0) <= 1e-9 && std::abs(d.path[1] - 83.0) <= 1e-9 &&
              std::abs(d.path[2] - 70.0) <= 1e-9;

  VerifyResult v = verify_wardrop(net, split, 1e-6);
  pass = pass && !v.pass && !v.violations.empty() &&
         std::abs(v.violations[0].margin - 13.0) <= 1e-9;

  Ne2Result keep = verify_worst_delay_equilibrium(net, split, 60);
  Ne2Result move = verify_worst_delay_equilibrium(net, flow3(2, 2, 2), 60);
  pass = pass && keep.pass && !move.pass;

  report(2, "braess disparity", pass,
         fmt("delays=(%.10f,%.10f,%.10f) wardrop_margin=%.6f ne2(3,3,0)=%s ne2(2,2,2)=%s",
             d.path[0], d.path[1], d.path[2],
             v.violations.empty() ? 0.0 : v.violations[0].margin, keep.pass ? "pass" : "fail",
             move.pass ? "pass" : "fail"));
}

void criterion3_redundancy() {
  const int ra = redundancy(builtin("fig1a")).red;
  const int rb = redundancy(builtin("fig1b")).red;
  const int rc = redundancy(builtin("braess")).red;
  const int oa = oracles::exact_redundancy(builtin("fig1a"));
  const int ob = oracles::exact_redundancy(builtin("fig1b"));
  const int oc = oracles::exact_redundancy(builtin("braess"));
  bool pass = ra == 0 && rb == 1 && rc == 0 && ra == oa && rb == ob && rc == oc;

  Philox rng(30001, 0);
  int mismatches = 0, bound_violations = 0;
  for (int k = 0; k < 1000; ++k) {
    Network net = testnets::random_network(rng);
    RedundancyInfo info = redundancy(net);
    if (info.red != oracles::exact_redundancy(net)) ++mismatches;
    if (info.red < redundancy_lower_bound(net)) ++bound_violations;
  }
  pass = pass && mismatches == 0 && bound_violations == 0;
  report(3, "redundancy", pass,
         fmt("fig1a=%d fig1b=%d braess=%d; 1000 random nets: %d oracle mismatches, %d bound "
             "violations",
             ra, rb, rc, mismatches, bound_violations));
}

void criterion4_deterministic_convergence() {
  bool pass = true;
  std::string note;
  Philox rng(40001, 0);

  for (const std::string& name : {std::string("braess"), std::string("fig1b")}) {
    Network net = builtin(name);
    EquilibriumReport eq = solve_wardrop(net, SolveOptions{.tol = 1e-10});
    int converged = 0, monotone = 0;
    std::vector<double> y_ref;
    double worst_load_dev = 0.0;

    for (int run = 0; run < 100; ++run) {
      SimConfig cfg;
      cfg.dt = name == "braess" ? 0.004 : 0.01;
      cfg.record_stride = 25;
      cfg.reference = eq.flow;
      Flow x = testnets::random_flow(net, rng);

      bool mono = true, reached = false;
      double t_done = 0.0;
      for (int chunk = 0; chunk < 20 && !reached; ++chunk) {  // 20 x 25 = up to T=500
        cfg.T = 25.0;
        Trajectory traj = integrate_ode(net, x, cfg, RhsKind::replicator);
        if (traj.meta.truncated) break;
        for (std::size_t s = 1; s < traj.samples(); ++s) {
          if (traj.entropy[s] > traj.entropy[s - 1] + 1e-9) mono = false;
          if (traj.potential[s] > traj.potential[s - 1] + 1e-9) mono = false;
        }
        x = traj.final_flow();
        t_done += 25.0;
        if (traj.gap.back() < 1e-6) reached = true;
      }
      converged += reached;
      monotone += mono;

      std::vector<double> y;
      net.loads_into(x, y);
      if (y_ref.empty()) {
        y_ref = y;
      } else {
        for (int r = 0; r < net.edge_count(); ++r)
          worst_load_dev = std::max(worst_load_dev, std::abs(y[r] - y_ref[r]));
      }
      (void)t_done;
    }
    const bool net_ok = converged == 100 && monotone == 100 && worst_load_dev <= 1e-4;
    pass = pass && net_ok;
    note += fmt("%s: %d/100 gap<1e-6 by T=500, %d/100 monotone, max y* dev %.2e; ", name.c_str(),
                converged, monotone, worst_load_dev);
  }
  report(4, "deterministic convergence", pass, note);
}

void criterion5_gradient_identity() {
  Philox rng(50001, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Network net = testnets::random_network(rng);
    Flow x = testnets::random_flow(net, rng);
    const auto grad = potential_gradient(net, x);
    for (int a = 0; a < net.path_count(); ++a) {
      const double fd = oracles::fd_potential_gradient(net, x, a);
      worst = std::max(worst, std::abs(grad[a] - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  report(5, "gradient identity", worst <= 1e-5, fmt("max relative error %.2e over 100 flows",
                                                    worst));
}

void criterion6_noise_model() {
  Network net = builtin("fig1b");
  NoiseSpec noise = uniform_noise(net, 0.5);
  const double dt = 0.01;
  const int n = 100000;
  const int A = net.path_count();

  Philox rng(60001, 0);
  std::vector<std::vector<double>> draws(n);
  std::vector<double> mean(A, 0.0);
  for (int k = 0; k < n; ++k) {
    draws[k] = noise_increments(net, noise, dt, rng);
    for (int a = 0; a < A; ++a) mean[a] += draws[k][a];
  }
  for (auto& m : mean) m /= n;

  int entries = 0, failures = 0, disjoint = 0, overlap = 0;
  double worst_sigmas = 0.0;
  for (int a = 0; a < A; ++a) {
    for (int b = a; b < A; ++b) {
      double c = 0.0;
      for (int k = 0; k < n; ++k) c += (draws[k][a] - mean[a]) * (draws[k][b] - mean[b]);
      c /= n - 1;
      double caa = 0.0, cbb = 0.0;
      for (int k = 0; k < n; ++k) {
        caa += (draws[k][a] - mean[a]) * (draws[k][a] - mean[a]);
        cbb += (draws[k][b] - mean[b]) * (draws[k][b] - mean[b]);
      }
      caa /= n - 1;
      cbb /= n - 1;
      double theory = 0.0;
      int shared = 0;
      for (int r : net.path_edges(a))
        if (net.edge_on_path(r, b)) {
          theory += noise.sigma[r] * noise.sigma[r];
          ++shared;
        }
      theory *= dt;
      const double se = std::sqrt((caa * cbb + theory * theory) / n);
      const double dev = std::abs(c - theory);
      ++entries;
      if (dev > 3.0 * se) ++failures;
      worst_sigmas = std::max(worst_sigmas, dev / se);
      if (a != b && shared == 0) ++disjoint;
      if (a != b && shared > 0) ++overlap;
    }
  }
  report(6, "noise covariance", failures == 0 && disjoint > 0 && overlap > 0,
         fmt("%d entries, worst deviation %.2f SE, %d disjoint / %d overlapping pairs", entries,
             worst_sigmas, disjoint, overlap));
}

void criterion7_generator_check() {
  // (a) empirical one-step entropy drift vs the generator on parallel2
  Network net = builtin("parallel2");
  EquilibriumReport q = solve_wardrop(net);
  const std::vector<double> lam{0.1};
  NoiseSpec noise = uniform_noise(net, 0.5);
  const double h = 1e-3;
  const int reps = 10000;

  bool pass = true;
  std::string note;
  int point = 0;
  for (double x1 : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    Flow x;
    x.x = {x1, 1.0 - x1};
    const double predicted = entropy_generator(net, q.flow, x, lam, noise);
    const double h0 = relative_entropy(net, q.flow, x, lam);

    SimConfig cfg;
    cfg.dt = h;
    cfg.seed = 70001 + point;
    cfg.lambda = lam;
    std::vector<double> drift(reps);
    parallel_replicates(reps, [&](int k) {
      SdeStepper stepper(net, cfg, noise, static_cast<std::uint64_t>(k));
      Flow xk = x;
      stepper.step(xk);
      drift[k] = (relative_entropy(net, q.flow, xk, lam) - h0) / h;
    });
    double m = 0.0;
    for (double d : drift) m += d;
    m /= reps;
    double var = 0.0;
    for (double d : drift) var += (d - m) * (d - m);
    const double se = std::sqrt(var / (reps - 1) / reps);
    const bool ok = std::abs(m - predicted) <= 3.0 * se;
    pass = pass && ok;
    if (!ok || x1 == 0.5)
      note += fmt("x1=%.1f: drift %.4f vs %.4f (3SE %.4f); ", x1, m, predicted, 3 * se);
    ++point;
  }

  // (b) the closed-form value at the interior equilibrium of the symmetric pair
  Network sym = sym2();
  Flow qi;
  qi.x = {0.5, 0.5};
  const double g = entropy_generator(sym, qi, qi, {1.0}, uniform_noise(sym, 1.0));
  pass = pass && std::abs(g - 0.25) <= 1e-12;
  note += fmt("interior value %.12f", g);
  report(7, "entropy generator", pass, note);
}

void criterion8_stochastic_stability() {
  Network net = builtin("parallel2");
  EquilibriumReport q = solve_wardrop(net);
  SimConfig cfg;
  cfg.dt = 0.01;
  cfg.seed = 80001;
  cfg.lambda = {0.1};
  StabilityReport rep =
      stability_probability(net, q, 0.05, cfg, uniform_noise(net, 0.5), 200, 200.0);
  const bool pass = rep.fraction_both >= 0.95;
  report(8, "stochastic stability", pass,
         fmt("stayed-in-tube and converged: %.3f (stayed %.3f, ended close %.3f) of %d runs",
             rep.fraction_both, rep.fraction_stayed, rep.fraction_converged, rep.replicates));
}

void criterion9_hitting_time() {
  Network net = builtin("parallel2");
  EquilibriumReport q = solve_wardrop(net);
  SimConfig cfg;
  cfg.dt = 0.01;
  cfg.seed = 90001;
  cfg.lambda = {0.1};
  Flow x0;
  x0.x = {0.5, 0.5};
  HittingTimeReport rep =
      estimate_hitting_time(net, q, 0.2, x0, cfg, uniform_noise(net, 0.5), 500);
  const bool pass = rep.verdict == Verdict::pass && rep.cap_fraction < 0.05;
  report(9, "hitting-time bound", pass,
         fmt("mean %.3f - 2SE %.3f <= bound %.3f, capped %.1f%% of %d runs", rep.mean,
             2 * rep.std_error, rep.bound, 100 * rep.cap_fraction, rep.replicates));
}

void criterion10_invariant_measure() {
  Network net = sym2();
  EquilibriumReport q = solve_wardrop(net);
  SimConfig cfg;
  cfg.dt = 0.005;
  cfg.seed = 100001;
  cfg.lambda = {0.2};  // m rho kappa^2/(lambda sigma^2) = 5 -> theta_lambda = 1/4
  NoiseSpec noise = uniform_noise(net, 0.5);
  InvariantMeasureReport rep = estimate_invariant_measure(
      net, q, cfg, noise, 20000.0, 1000.0, {0.1, 0.2, 0.3, 0.4, 0.5, 0.75, 1.0});

  bool monotone = true;
  for (std::size_t g = 1; g < rep.occupancy.size(); ++g)
    monotone = monotone && rep.occupancy[g].occupancy >= rep.occupancy[g - 1].occupancy;

  const OccupancyPoint* b05 = nullptr;
  for (const auto& p : rep.occupancy)
    if (p.theta == 0.5) b05 = &p;

  bool pass = std::abs(rep.theta_lambda - 0.25) < 1e-9 && monotone && b05 != nullptr;
  if (pass) {
    pass = rep.mean_theta2 <= 1.0 / 16.0 + 3.0 * rep.theta2_std_error &&
           b05->occupancy >= 0.75 - 3.0 * b05->std_error;
  }
  report(10, "invariant measure", pass,
         fmt("time-avg theta^2 %.4f <= 1/16+3SE (SE %.4f); occ(B_0.5) %.3f >= 0.75-3SE (SE "
             "%.3f); monotone=%d",
             rep.mean_theta2, rep.theta2_std_error, b05 ? b05->occupancy : -1.0,
             b05 ? b05->std_error : 0.0, monotone ? 1 : 0));
}

void criterion11_adjoint_lemmas() {
  AdjointLemmaReport s = check_adjoint_lemmas(builtin("parallel2"),
                                              solve_wardrop(builtin("parallel2")), 10000, 111);
  EquilibriumReport iq = solve_wardrop(builtin("braess"), SolveOptions{.tol = 1e-12});
  AdjointLemmaReport i = check_adjoint_lemmas(builtin("braess"), iq, 10000, 112);

  Philox rng(110001, 0);
  long nets = 0, violations = s.violations + i.violations;
  double worst = std::min(s.worst_margin, i.worst_margin);
  while (nets < 1000) {
    Network net = testnets::random_network(rng);
    SolveOptions opts;
    opts.tol = 1e-12;
    opts.max_iters = 200000;
    EquilibriumReport rep = solve_wardrop(net, opts);
    if (!rep.converged) continue;
    if (rep.cls != EquilibriumClass::strict && rep.cls != EquilibriumClass::interior) continue;
    AdjointLemmaReport lem = check_adjoint_lemmas(net, rep, 30, 113000 + nets);
    violations += lem.violations;
    worst = std::min(worst, lem.worst_margin);
    ++nets;
  }
  report(11, "adjoint inequalities", violations == 0,
         fmt("0 expected: %ld violations over 2x10^4 rays + %ld nets, worst margin %.2e",
             violations, nets, worst));
}

void criterion12_social_optimum() {
  Network pigou = builtin("pigou");
  EquilibriumReport so = solve_social_optimum(pigou);
  bool pass = std::abs(so.flow[0] - 0.5) <= 1e-6 && std::abs(so.flow[1] - 0.5) <= 1e-6 &&
              std::abs(so.aggregate_delay_original - 0.75) <= 1e-6;

  Philox rng(120001, 0);
  int done = 0, ordered = 0;
  while (done < 100) {
    Network net = testnets::random_network(rng);
    SolveOptions opts;
    opts.tol = 1e-9;
    EquilibriumReport weq = solve_wardrop(net, opts);
    EquilibriumReport soc = solve_social_optimum(net, opts);
    if (!weq.converged || !soc.converged) continue;
    ++done;
    if (soc.aggregate_delay_original <= weq.aggregate_delay + 1e-9) ++ordered;
  }
  pass = pass && ordered == done;
  report(12, "social optimum", pass,
         fmt("pigou flow (%.6f,%.6f) aggregate %.6f; ordering held on %d/%d random networks",
             so.flow[0], so.flow[1], so.aggregate_delay_original, ordered, done));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  criterion1_braess_equilibrium();
  criterion2_braess_disparity();
  criterion3_redundancy();
  criterion4_deterministic_convergence();
  criterion5_gradient_identity();
  criterion6_noise_model();
  criterion7_generator_check();
  criterion8_stochastic_stability();
  criterion9_hitting_time();
  criterion10_invariant_measure();
  criterion11_adjoint_lemmas();
  criterion12_social_optimum();
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%d/12 criteria passed in %.1fs\n", 12 - g_failures, wall);
  return g_failures;
}
