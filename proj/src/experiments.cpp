#include "wardrop/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

#include "wardrop/geometry.hpp"

namespace wardrop {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "PASS";
    case Verdict::fail:
      return "FAIL";
    case Verdict::inconclusive:
      return "INCONCLUSIVE";
  }
  return "?";
}

void parallel_replicates(int n, const std::function<void(int)>& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(n)));
  if (workers <= 1) {
    for (int k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int k = next.fetch_add(1); k < n; k = next.fetch_add(1)) fn(k);
    });
  }
  for (auto& t : pool) t.join();
}

double min_latency_slope(const Network& net) {
  double m = std::numeric_limits<double>::infinity();
  for (int r : net.used_edges()) {
    const auto& e = net.edges()[r];
    double ymax = net.background()[r];
    for (int i = 0; i < net.user_count(); ++i) {
      bool usable = false;
      for (int a = 0; a < net.path_count(i) && !usable; ++a)
        usable = net.edge_on_path(r, net.path_offset(i) + a);
      if (usable) ymax += net.users()[i].rate;
    }
    ymax = std::min(ymax, e.latency.max_load() - LatencySpec::kDomainGuard);
    m = std::min(m, e.latency.min_derivative_on(ymax));
  }
  return m;
}

namespace {

double rate_weighted_lambda(const Network& net, const std::vector<double>& lambda) {
  double s = 0.0;
  for (int i = 0; i < net.user_count(); ++i) s += net.users()[i].rate * lambda[i];
  return s / net.total_rate();
}

double l1_distance(const Flow& a, const Flow& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d += std::abs(a[k] - b[k]);
  return d;
}

// sample mean / standard error of the mean
std::pair<double, double> mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= std::max(1.0, n - 1.0);
  return {mean, std::sqrt(var / n)};
}

constexpr std::uint64_t kAuxStreamBit = 1ull << 63;  // off-path draws (x0 sampling)

}  // namespace

SlowLearningReport slow_learning_check(const Network& net, const EquilibriumReport& q,
                                       const std::vector<double>& lambda,
                                       const NoiseSpec& noise) {
  SlowLearningReport rep;
  rep.rho = net.total_rate();
  rep.sigma2 = noise.total_variance();
  rep.lambda_bar = rate_weighted_lambda(net, lambda);
  if (q.cls == EquilibriumClass::strict) {
    rep.strict_case = true;
    rep.delta_omega = q.aggregate_margin;
    rep.lhs = rep.lambda_bar * rep.sigma2;
    rep.rhs = rep.delta_omega;
  } else if (q.cls == EquilibriumClass::interior) {
    rep.strict_case = false;
    rep.m = min_latency_slope(net);
    rep.kappa = q.kappa;
    rep.lhs = rep.lambda_bar;
    rep.rhs = 0.8 * rep.m * rep.rho * rep.kappa * rep.kappa / rep.sigma2;
  } else {
    throw std::invalid_argument("slow_learning_check: equilibrium is neither strict nor interior");
  }
  rep.margin = rep.rhs - rep.lhs;
  rep.pass = rep.lhs < rep.rhs;
  return rep;
}

double hitting_time_bound(double entropy, double delta_omega, double rho, double delta) {
  if (!(delta > 0.0) || !(delta < 2.0 * rho))
    throw std::invalid_argument("hitting_time_bound: delta must lie in (0, 2 rho)");
  if (entropy == 0.0) return 0.0;
  const double denom = delta * (2.0 * rho - delta);
  const double b = (2.0 * entropy / delta_omega) * (2.0 * rho / denom);
  return std::isfinite(b) ? b : std::numeric_limits<double>::infinity();
}

double theta_lambda(double m, double rho, double kappa, double lambda_bar, double sigma2) {
  const double ratio = m * rho * kappa * kappa / (lambda_bar * sigma2);
  if (!(ratio > 1.0))
    throw std::invalid_argument(
        "theta_lambda: recurrence condition m rho kappa^2 > lambda sigma^2 unmet");
  return 0.5 / std::sqrt(ratio - 1.0);
}

HittingTimeReport estimate_hitting_time(const Network& net, const EquilibriumReport& q,
                                        double delta, const Flow& x0, const SimConfig& cfg,
                                        const NoiseSpec& noise, int replicates, double t_max) {
  if (q.cls != EquilibriumClass::strict)
    throw std::invalid_argument("estimate_hitting_time: q must be a strict equilibrium");
  const SlowLearningReport cond = slow_learning_check(net, q, cfg.rates_for(net), noise);
  if (!cond.pass)
    throw std::invalid_argument("estimate_hitting_time: slow-learning condition unmet");

  HittingTimeReport rep;
  rep.replicates = replicates;
  rep.delta = delta;
  rep.seed = cfg.seed;
  rep.entropy0 = relative_entropy(net, q.flow, x0, cfg.rates_for(net));
  if (!std::isfinite(rep.entropy0))
    throw std::invalid_argument("estimate_hitting_time: x0 has infinite relative entropy");
  rep.bound = hitting_time_bound(rep.entropy0, cond.delta_omega, cond.rho, delta);
  rep.t_max = t_max > 0.0 ? t_max : 20.0 * rep.bound;

  rep.times.assign(replicates, rep.t_max);
  std::vector<char> capped(replicates, 1);
  const long max_steps = std::lround(rep.t_max / cfg.dt);

  parallel_replicates(replicates, [&](int k) {
    SdeStepper stepper(net, cfg, noise, static_cast<std::uint64_t>(k));
    Flow x = x0;
    if (l1_distance(x, q.flow) <= delta) {
      rep.times[k] = 0.0;
      capped[k] = 0;
      return;
    }
    for (long s = 1; s <= max_steps; ++s) {
      stepper.step(x);
      if (l1_distance(x, q.flow) <= delta) {
        rep.times[k] = s * cfg.dt;
        capped[k] = 0;
        return;
      }
    }
  });

  int ncap = 0;
  for (char c : capped) ncap += c;
  rep.cap_fraction = static_cast<double>(ncap) / replicates;
  const auto [mean, se] = mean_se(rep.times);
  rep.mean = mean;
  rep.std_error = se;
  if (rep.cap_fraction > 0.05)
    rep.verdict = Verdict::inconclusive;
  else
    rep.verdict = (rep.mean - 2.0 * rep.std_error <= rep.bound) ? Verdict::pass : Verdict::fail;
  return rep;
}

StabilityReport stability_probability(const Network& net, const EquilibriumReport& q,
                                      double start_radius, const SimConfig& cfg,
                                      const NoiseSpec& noise, int replicates, double T) {
  if (q.cls != EquilibriumClass::strict)
    throw std::invalid_argument("stability_probability: q must be a strict equilibrium");

  StabilityReport rep;
  rep.replicates = replicates;
  rep.start_radius = start_radius;
  rep.tube_radius = 10.0 * start_radius;
  rep.target_radius = start_radius / 10.0;
  rep.T = T;
  rep.seed = cfg.seed;

  // equilibrium path of each user
  std::vector<int> chosen(net.user_count());
  for (int i = 0; i < net.user_count(); ++i) {
    const int off = net.path_offset(i);
    int arg = off;
    for (int a = 1; a < net.path_count(i); ++a)
      if (q.flow[off + a] > q.flow[arg]) arg = off + a;
    chosen[i] = arg;
  }

  const long steps = std::lround(T / cfg.dt);
  std::vector<char> stayed(replicates, 0), converged(replicates, 0), both(replicates, 0);

  parallel_replicates(replicates, [&](int k) {
    // start on the L1 sphere: user i moves rho_i/(2 rho) of the radius off
    // its equilibrium path, spread randomly over the alternatives
    Philox aux(cfg.seed, static_cast<std::uint64_t>(k) | kAuxStreamBit);
    Flow x = q.flow;
    for (int i = 0; i < net.user_count(); ++i) {
      const int off = net.path_offset(i);
      const double eps = start_radius * net.users()[i].rate / (2.0 * net.total_rate());
      std::vector<double> w(net.path_count(i), 0.0);
      double wsum = 0.0;
      for (int a = 0; a < net.path_count(i); ++a) {
        if (off + a == chosen[i]) continue;
        w[a] = aux.uniform() + 1e-12;
        wsum += w[a];
      }
      x[chosen[i]] = net.users()[i].rate - eps;
      for (int a = 0; a < net.path_count(i); ++a)
        if (off + a != chosen[i]) x[off + a] = eps * w[a] / wsum;
    }

    SdeStepper stepper(net, cfg, noise, static_cast<std::uint64_t>(k));
    bool left_tube = false;
    for (long s = 1; s <= steps; ++s) {
      stepper.step(x);
      if (l1_distance(x, q.flow) > rep.tube_radius) left_tube = true;
    }
    const bool ended_close = l1_distance(x, q.flow) <= rep.target_radius;
    stayed[k] = !left_tube;
    converged[k] = ended_close;
    both[k] = (!left_tube && ended_close);
  });

  auto frac = [&](const std::vector<char>& v) {
    int n = 0;
    for (char c : v) n += c;
    return static_cast<double>(n) / replicates;
  };
  rep.fraction_stayed = frac(stayed);
  rep.fraction_converged = frac(converged);
  rep.fraction_both = frac(both);
  return rep;
}

InvariantMeasureReport estimate_invariant_measure(const Network& net,
                                                  const EquilibriumReport& q,
                                                  const SimConfig& cfg, const NoiseSpec& noise,
                                                  double T, double burn_in,
                                                  const std::vector<double>& theta_grid,
                                                  double se_slack) {
  if (q.redundancy > 0)
    throw validation_error(
        "estimate_invariant_measure refuses reducible networks (red(Q) > 0): the recurrence "
        "theorem needs an irreducible network");
  if (q.cls != EquilibriumClass::interior)
    throw std::invalid_argument("estimate_invariant_measure: q must be an interior equilibrium");

  InvariantMeasureReport rep;
  rep.T = T;
  rep.burn_in = burn_in;
  rep.seed = cfg.seed;
  rep.condition = slow_learning_check(net, q, cfg.rates_for(net), noise);
  if (!rep.condition.pass)
    throw std::invalid_argument("estimate_invariant_measure: slow-learning condition unmet");
  rep.theta_lambda = theta_lambda(rep.condition.m, rep.condition.rho, rep.condition.kappa,
                                  rep.condition.lambda_bar, rep.condition.sigma2);
  rep.theta2_bound = rep.theta_lambda * rep.theta_lambda;

  const long burn_steps = std::lround(burn_in / cfg.dt);
  const long total_steps = std::lround(T / cfg.dt);
  const long measured = total_steps - burn_steps;
  if (measured <= 0) throw std::invalid_argument("estimate_invariant_measure: T <= burn_in");

  // batch means over contiguous chunks absorb the autocorrelation
  const int batches = 32;
  const long batch_len = std::max<long>(1, measured / batches);

  SdeStepper stepper(net, cfg, noise, 0);
  Flow x = q.flow;
  for (long s = 0; s < burn_steps; ++s) stepper.step(x);

  const std::size_t G = theta_grid.size();
  std::vector<std::vector<double>> occ_means(G);
  std::vector<double> theta2_means;
  std::vector<double> occ_acc(G, 0.0);
  double theta2_acc = 0.0;
  long in_batch = 0;

  auto flush = [&]() {
    if (in_batch == 0) return;
    for (std::size_t g = 0; g < G; ++g) occ_means[g].push_back(occ_acc[g] / in_batch);
    theta2_means.push_back(theta2_acc / in_batch);
    std::fill(occ_acc.begin(), occ_acc.end(), 0.0);
    theta2_acc = 0.0;
    in_batch = 0;
  };

  for (long s = 0; s < measured; ++s) {
    stepper.step(x);
    const double th = projective_distance(net, q.flow, x);
    theta2_acc += th * th;
    for (std::size_t g = 0; g < G; ++g)
      if (th <= theta_grid[g]) occ_acc[g] += 1.0;
    ++in_batch;
    if (in_batch == batch_len) flush();
  }
  flush();

  const auto [t2_mean, t2_se] = mean_se(theta2_means);
  rep.mean_theta2 = t2_mean;
  rep.theta2_std_error = t2_se;
  rep.theta2_verdict =
      (rep.mean_theta2 <= rep.theta2_bound + se_slack * rep.theta2_std_error) ? Verdict::pass
                                                                              : Verdict::fail;

  rep.pass = rep.theta2_verdict == Verdict::pass;
  for (std::size_t g = 0; g < G; ++g) {
    OccupancyPoint p;
    p.theta = theta_grid[g];
    const auto [om, ose] = mean_se(occ_means[g]);
    p.occupancy = om;
    p.std_error = ose;
    p.required = 1.0 - rep.theta2_bound / (p.theta * p.theta);
    if (p.theta > rep.theta_lambda) {
      p.verdict =
          (p.occupancy >= p.required - se_slack * p.std_error) ? Verdict::pass : Verdict::fail;
      if (p.verdict == Verdict::fail) rep.pass = false;
    } else {
      p.verdict = Verdict::pass;  // the bound is vacuous at or below theta_lambda
    }
    rep.occupancy.push_back(p);
  }
  return rep;
}

namespace {

// largest s >= 0 with q + s z >= 0
double ray_extent_flow(const Flow& q, const std::vector<double>& z) {
  double t = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < z.size(); ++a)
    if (z[a] < 0.0) t = std::min(t, q[a] / (-z[a]));
  return t;
}

}  // namespace

AdjointLemmaReport check_adjoint_lemmas(const Network& net, const EquilibriumReport& q,
                                        long samples, std::uint64_t seed) {
  AdjointLemmaReport rep;
  rep.samples = samples;
  rep.seed = seed;
  rep.worst_margin = std::numeric_limits<double>::infinity();

  const bool strict = q.cls == EquilibriumClass::strict;
  if (!strict && q.cls != EquilibriumClass::interior)
    throw std::invalid_argument("check_adjoint_lemmas: q must be strict or interior");
  rep.strict_case = strict;

  const double m = strict ? 0.0 : min_latency_slope(net);
  std::vector<double> yq;
  net.loads_into(q.flow, yq);

  std::vector<int> chosen(net.user_count(), -1);
  if (strict) {
    for (int i = 0; i < net.user_count(); ++i) {
      const int off = net.path_offset(i);
      int arg = off;
      for (int a = 1; a < net.path_count(i); ++a)
        if (q.flow[off + a] > q.flow[arg]) arg = off + a;
      chosen[i] = arg;
    }
  }

  Philox rng(seed, 0x616c656d6d61u);
  std::vector<double> z(net.path_count());
  std::vector<double> y(net.edge_count());
  Flow x = q.flow;

  for (long s = 0; s < samples; ++s) {
    // tangent direction: inward for strict q, any zero-sum for interior q
    for (int i = 0; i < net.user_count(); ++i) {
      const int off = net.path_offset(i);
      if (strict) {
        double sum = 0.0;
        for (int a = 0; a < net.path_count(i); ++a) {
          const int p = off + a;
          if (p == chosen[i]) continue;
          z[p] = rng.uniform();
          sum += z[p];
        }
        z[chosen[i]] = -sum;
      } else {
        double mean = 0.0;
        for (int a = 0; a < net.path_count(i); ++a) mean += (z[off + a] = rng.gaussian());
        mean /= net.path_count(i);
        for (int a = 0; a < net.path_count(i); ++a) z[off + a] -= mean;
      }
    }
    const double extent = ray_extent_flow(q.flow, z);
    if (!std::isfinite(extent) || extent <= 0.0) continue;
    for (auto& v : z) v *= extent;  // now q + z sits on the boundary of Delta
    const double t = rng.uniform();

    for (int a = 0; a < net.path_count(); ++a) x[a] = q.flow[a] + t * z[a];

    double lhs;
    try {
      net.loads_into(x, y);
      lhs = adjoint_potential_loads(net, yq, y);
    } catch (const infeasible_load&) {
      continue;  // latency is +infinity there; the bound holds trivially
    }

    double rhs;
    if (strict) {
      double sum = 0.0;
      for (int i = 0; i < net.user_count(); ++i) {
        const int off = net.path_offset(i);
        double l1 = 0.0;
        for (int a = 0; a < net.path_count(i); ++a) l1 += std::abs(z[off + a]);
        sum += q.strict_margins[i] * l1;
      }
      rhs = 0.5 * sum * t;
    } else {
      double pz2 = 0.0;
      std::fill(y.begin(), y.end(), 0.0);
      for (int a = 0; a < net.path_count(); ++a)
        for (int r : net.path_edges(a)) y[r] += z[a];
      for (double v : y) pz2 += v * v;
      rhs = 0.5 * m * pz2 * t * t;
    }

    const double margin = lhs - rhs;
    rep.worst_margin = std::min(rep.worst_margin, margin);
    if (margin < -1e-9) ++rep.violations;
  }
  rep.pass = rep.violations == 0;
  return rep;
}

}  // namespace wardrop
