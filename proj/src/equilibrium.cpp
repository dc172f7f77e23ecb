#include "wardrop/equilibrium.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>

#include "wardrop/rng.hpp"

namespace wardrop {

std::string to_string(EquilibriumClass c) {
  switch (c) {
    case EquilibriumClass::interior:
      return "interior";
    case EquilibriumClass::strict:
      return "strict";
    case EquilibriumClass::pure_nonstrict:
      return "pure-nonstrict";
    case EquilibriumClass::boundary_mixed:
      return "boundary-mixed";
  }
  return "?";
}

GapResult wardrop_gap_from_delays(const Network& net, const Flow& x,
                                  const std::vector<double>& omega) {
  GapResult g;
  g.fastest.assign(net.user_count(), -1);
  double total = 0.0;
  for (int i = 0; i < net.user_count(); ++i) {
    const int off = net.path_offset(i);
    int arg = off;
    for (int a = 1; a < net.path_count(i); ++a)
      if (omega[off + a] < omega[arg]) arg = off + a;
    g.fastest[i] = arg;
    for (int a = 0; a < net.path_count(i); ++a) {
      g.absolute += x[off + a] * (omega[off + a] - omega[arg]);
      total += x[off + a] * omega[off + a];
    }
  }
  g.relative = total > 0.0 ? g.absolute / total : (g.absolute > 0.0 ? 1.0 : 0.0);
  return g;
}

GapResult wardrop_gap(const Network& net, const Flow& x) {
  net.validate_flow(x, 1e-6);
  const DelayProfile d = path_delays(net, x);
  return wardrop_gap_from_delays(net, x, d.path);
}

VerifyResult verify_wardrop(const Network& net, const Flow& x, double tol) {
  const DelayProfile d = path_delays(net, x);
  VerifyResult res;
  for (int i = 0; i < net.user_count(); ++i) {
    const int off = net.path_offset(i);
    const double thr = kSupportScale * net.users()[i].rate;
    int arg = off;
    for (int a = 1; a < net.path_count(i); ++a)
      if (d.path[off + a] < d.path[arg]) arg = off + a;
    for (int a = 0; a < net.path_count(i); ++a) {
      const int p = off + a;
      if (x[p] <= thr || p == arg) continue;
      const double margin = d.path[p] - d.path[arg];
      if (margin > tol) {
        res.pass = false;
        res.violations.push_back({i, p, arg, margin});
      }
    }
  }
  return res;
}

namespace {

Classification classify_with_delays(const Network& net, const Flow& q,
                                    const std::vector<double>& omega, double tol) {
  Classification c;
  if (net.user_count() == 0) {  // background-only network: one trivial flow
    c.cls = EquilibriumClass::interior;
    return c;
  }
  bool interior = true, pure = true;
  for (int i = 0; i < net.user_count() && (interior || pure); ++i) {
    const int off = net.path_offset(i);
    const double thr = kSupportScale * net.users()[i].rate;
    int supported = 0;
    for (int a = 0; a < net.path_count(i); ++a) {
      if (q[off + a] > thr)
        ++supported;
      else
        interior = false;
    }
    if (supported != 1) pure = false;
  }
  if (interior) {
    c.cls = EquilibriumClass::interior;
    c.kappa = net.path_count() > 0 ? essence(net, q).kappa : 0.0;
    return c;
  }
  if (pure) {
    bool strict = true;
    c.strict_margins.assign(net.user_count(), 0.0);
    double agg = 0.0;
    for (int i = 0; i < net.user_count(); ++i) {
      const int off = net.path_offset(i);
      const double thr = kSupportScale * net.users()[i].rate;
      int chosen = -1;
      for (int a = 0; a < net.path_count(i); ++a)
        if (q[off + a] > thr) chosen = off + a;
      double margin = std::numeric_limits<double>::infinity();
      for (int a = 0; a < net.path_count(i); ++a)
        if (off + a != chosen) margin = std::min(margin, omega[off + a] - omega[chosen]);
      c.strict_margins[i] = margin;
      agg += net.users()[i].rate * margin;
      if (!(margin > tol)) strict = false;
    }
    if (strict) {
      c.cls = EquilibriumClass::strict;
      c.aggregate_margin = agg / net.total_rate();
      return c;
    }
    c.strict_margins.clear();
    c.cls = EquilibriumClass::pure_nonstrict;
    return c;
  }
  c.cls = EquilibriumClass::boundary_mixed;
  return c;
}

}  // namespace

Classification classify_equilibrium(const Network& net, const Flow& q, double tol) {
  const VerifyResult v = verify_wardrop(net, q, tol);
  if (!v.pass)
    throw std::invalid_argument("classify_equilibrium: flow is not a Wardrop equilibrium (" +
                                std::to_string(v.violations.size()) + " violations)");
  const DelayProfile d = path_delays(net, q);
  return classify_with_delays(net, q, d.path, tol);
}

namespace {

// max over t >= 0 of q + t z staying nonnegative
double ray_extent(const Flow& q, const std::vector<double>& z) {
  double t = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < z.size(); ++a)
    if (z[a] < 0.0) t = std::min(t, q[a] / (-z[a]));
  return t;
}

int wardrop_set_dimension(const Network& net, const Flow& q, const RedundancyInfo& red,
                          bool interior) {
  if (red.red == 0) return 0;
  if (interior) return red.red;
  // per-direction feasibility: keep the signed kernel directions along which
  // q can move inside Delta, then take their rank
  const double tol_t = 1e-9 * net.total_rate();
  std::vector<std::vector<double>> dirs;
  for (int k = 0; k < red.red; ++k) {
    std::vector<double> z = red.kernel_flow_direction(k, net);
    if (ray_extent(q, z) > tol_t) dirs.push_back(z);
    for (auto& v : z) v = -v;
    if (ray_extent(q, z) > tol_t) dirs.push_back(z);
  }
  if (dirs.empty()) return 0;
  Eigen::MatrixXd M(net.path_count(), static_cast<int>(dirs.size()));
  for (std::size_t k = 0; k < dirs.size(); ++k)
    for (int a = 0; a < net.path_count(); ++a) M(a, static_cast<int>(k)) = dirs[k][a];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  const double cut = 1e-10 * (sv.size() ? sv(0) : 0.0);
  int rank = 0;
  for (int k = 0; k < sv.size(); ++k)
    if (sv(k) > cut) ++rank;
  return rank;
}

constexpr double kMm1Band = 1.000001e-9;  // line search stays this far below capacity

// Pairwise equilibration: repeatedly shift mass from each user's slowest
// supported path to its fastest one (exact line search per shift). Finishing
// step after the all-or-nothing phase; removes the dust mass plain FW leaves
// on abandoned paths and sharpens vertex solutions to exact vertices.
void pairwise_polish(const Network& net, Flow& x, double target_excess, long max_shifts) {
  std::vector<double> y, omega;
  long shifts = 0;
  while (shifts < max_shifts) {
    net.loads_into(x, y);
    path_delays_from_loads(net, y, omega);
    bool changed = false;
    for (int i = 0; i < net.user_count(); ++i) {
      const int off = net.path_offset(i);
      int fast = off, worst = -1;
      for (int a = 0; a < net.path_count(i); ++a) {
        const int p = off + a;
        if (omega[p] < omega[fast]) fast = p;
        if (x[p] > 0.0 && (worst < 0 || omega[p] > omega[worst])) worst = p;
      }
      if (worst < 0 || worst == fast) continue;
      if (omega[worst] - omega[fast] <= target_excess) continue;

      // edges where the shift actually changes the load
      std::vector<int> up, down;
      for (int r : net.path_edges(fast))
        if (!net.edge_on_path(r, worst)) up.push_back(r);
      for (int r : net.path_edges(worst))
        if (!net.edge_on_path(r, fast)) down.push_back(r);

      double s_max = x[worst];
      for (int r : up) {
        const double cap = net.edges()[r].latency.max_load();
        if (std::isfinite(cap)) s_max = std::min(s_max, cap - kMm1Band - y[r]);
      }
      if (!(s_max > 0.0)) continue;

      auto slope = [&](double s) {
        double g = 0.0;
        for (int r : up) g += net.edges()[r].latency.value(y[r] + s);
        for (int r : down) g -= net.edges()[r].latency.value(y[r] - s);
        return g;
      };
      double s;
      if (slope(s_max) <= 0.0) {
        s = s_max;
      } else if (slope(0.0) >= 0.0) {
        continue;
      } else {
        double lo = 0.0, hi = s_max;
        for (int b = 0; b < 100 && hi - lo > 1e-17 * (1.0 + hi); ++b) {
          const double mid = 0.5 * (lo + hi);
          (slope(mid) <= 0.0 ? lo : hi) = mid;
        }
        s = 0.5 * (lo + hi);
      }
      if (!(s > 0.0)) continue;
      x.x[worst] -= s;
      x.x[fast] += s;
      if (x[worst] < 0.0) {
        x.x[fast] += x[worst];
        x.x[worst] = 0.0;
      }
      for (int r : up) y[r] += s;
      for (int r : down) y[r] -= s;
      changed = true;
      ++shifts;
    }
    if (!changed) break;
  }
}

}  // namespace

Flow feasible_start(const Network& net) {
  std::vector<double> y = net.background();
  check_loads_feasible(net, y);  // background alone must fit

  const int N = net.user_count();
  std::vector<int> choice(N, -1);
  long budget = 200000;

  std::function<bool(int)> assign = [&](int i) -> bool {
    if (i == N) return true;
    if (--budget < 0) return false;
    const int off = net.path_offset(i);
    const double rate = net.users()[i].rate;
    // candidate paths ordered by delay at the current partial loads
    std::vector<std::pair<double, int>> order;
    for (int a = 0; a < net.path_count(i); ++a) {
      bool ok = true;
      double delay = 0.0;
      for (int r : net.path_edges(off + a)) {
        const auto& lat = net.edges()[r].latency;
        if (!lat.feasible(y[r] + rate)) {
          ok = false;
          break;
        }
        delay += lat.value(y[r]);
      }
      if (ok) order.emplace_back(delay, a);
    }
    std::sort(order.begin(), order.end());
    for (const auto& [delay, a] : order) {
      (void)delay;
      for (int r : net.path_edges(off + a)) y[r] += rate;
      choice[i] = a;
      if (assign(i + 1)) return true;
      for (int r : net.path_edges(off + a)) y[r] -= rate;
      choice[i] = -1;
    }
    return false;
  };

  if (assign(0)) {
    Flow x = net.zero_flow();
    for (int i = 0; i < N; ++i) x[net.path_offset(i) + choice[i]] = net.users()[i].rate;
    return x;
  }
  // no all-or-nothing assignment found; a split flow may still fit
  Flow u = net.uniform_flow();
  net.loads_into(u, y);
  check_loads_feasible(net, y);
  return u;
}

EquilibriumReport solve_wardrop(const Network& net, const SolveOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  EquilibriumReport rep;

  Flow x = opts.start ? *opts.start : feasible_start(net);
  net.validate_flow(x, 1e-6);

  std::vector<double> y, omega;
  net.loads_into(x, y);
  check_loads_feasible(net, y);

  Philox tie_rng(opts.tie_seed, 0x74696562u);  // dedicated tie-break stream

  Flow best = x;
  double best_rel = std::numeric_limits<double>::infinity();
  double best_abs = best_rel;
  long it = 0;

  std::vector<double> dy(net.edge_count());
  // all-or-nothing phases interleaved with pairwise equilibration; the
  // incumbent (smallest-gap iterate seen) is what the solver returns
  for (int cycle = 0; cycle < 6 && !rep.converged; ++cycle) {
    double stall_ref = best_rel;
    long stall_it = it;
    for (; it < opts.max_iters; ++it) {
    net.loads_into(x, y);
    path_delays_from_loads(net, y, omega);
    GapResult gap = wardrop_gap_from_delays(net, x, omega);

    if (opts.tie_break == TieBreak::seeded) {
      // re-pick the fastest path uniformly among near-ties
      for (int i = 0; i < net.user_count(); ++i) {
        const int off = net.path_offset(i);
        const double wmin = omega[gap.fastest[i]];
        const double eps = 1e-12 * (1.0 + std::abs(wmin));
        std::vector<int> ties;
        for (int a = 0; a < net.path_count(i); ++a)
          if (omega[off + a] <= wmin + eps) ties.push_back(off + a);
        if (ties.size() > 1)
          gap.fastest[i] = ties[static_cast<std::size_t>(tie_rng.uniform() * ties.size()) %
                                ties.size()];
      }
    }

    if (gap.relative < best_rel) {
      best_rel = gap.relative;
      best_abs = gap.absolute;
      best = x;
    }
    // the incumbent's gap: the certificate for what the solver would return
    if (opts.record_gap_history) rep.gap_history.push_back(best_rel);
    if (best_rel <= opts.tol) {
      rep.converged = true;
      break;
    }
    if (best_rel < 0.5 * stall_ref) {
      stall_ref = best_rel;
      stall_it = it;
    } else if (it - stall_it > 20000) {
      break;  // zigzag plateau; hand over to the equilibration phase
    }

    // all-or-nothing direction
    std::fill(dy.begin(), dy.end(), 0.0);
    for (int i = 0; i < net.user_count(); ++i) {
      const int off = net.path_offset(i);
      const double rate = net.users()[i].rate;
      for (int a = 0; a < net.path_count(i); ++a) {
        const int p = off + a;
        const double delta = (p == gap.fastest[i] ? rate : 0.0) - x[p];
        if (delta == 0.0) continue;
        for (int r : net.path_edges(p)) dy[r] += delta;
      }
    }

    double t_hi = 1.0;
    for (int r = 0; r < net.edge_count(); ++r) {
      if (dy[r] <= 0.0) continue;
      const double cap = net.edges()[r].latency.max_load();
      if (std::isfinite(cap)) t_hi = std::min(t_hi, (cap - kMm1Band - y[r]) / dy[r]);
    }
    if (!(t_hi > 0.0)) break;  // wedged against a capacity; return best iterate

    auto slope = [&](double t) {
      double s = 0.0;
      for (int r = 0; r < net.edge_count(); ++r)
        if (dy[r] != 0.0) s += dy[r] * net.edges()[r].latency.value(y[r] + t * dy[r]);
      return s;
    };

    double t;
    if (slope(t_hi) <= 0.0) {
      t = t_hi;
    } else if (slope(0.0) >= 0.0) {
      break;  // no descent available
    } else {
      double lo = 0.0, hi = t_hi;
      for (int b = 0; b < 200 && hi - lo > 1e-17 * (1.0 + hi); ++b) {
        const double mid = 0.5 * (lo + hi);
        (slope(mid) <= 0.0 ? lo : hi) = mid;
      }
      t = 0.5 * (lo + hi);
    }
    if (!(t > 0.0)) break;

    // convex combination keeps each user exactly on its simplex
    for (int i = 0; i < net.user_count(); ++i) {
      const int off = net.path_offset(i);
      const double rate = net.users()[i].rate;
      for (int a = 0; a < net.path_count(i); ++a) {
        const int p = off + a;
        const double target = (p == gap.fastest[i] ? rate : 0.0);
        x[p] = (1.0 - t) * x[p] + t * target;
      }
    }
    }  // FW phase

    if (rep.converged) break;

    // equilibration phase on the incumbent
    Flow px = best;
    net.loads_into(px, y);
    path_delays_from_loads(net, y, omega);
    double total = 0.0;
    for (int a = 0; a < net.path_count(); ++a) total += px[a] * omega[a];
    const double mean_delay = total / std::max(net.total_rate(), 1e-300);
    pairwise_polish(net, px, 0.5 * opts.tol * std::max(mean_delay, 1e-12), 100000);
    net.loads_into(px, y);
    path_delays_from_loads(net, y, omega);
    const GapResult pgap = wardrop_gap_from_delays(net, px, omega);
    if (pgap.relative < best_rel) {
      best_rel = pgap.relative;
      best_abs = pgap.absolute;
      best = px;
      if (opts.record_gap_history) rep.gap_history.push_back(best_rel);
    }
    if (best_rel <= opts.tol) rep.converged = true;
    if (it >= opts.max_iters) break;
    x = best;  // resume the all-or-nothing phase from the polished point
  }

  rep.flow = best;
  rep.gap_rel = best_rel;
  rep.gap_abs = best_abs;
  rep.iterations = it;
  net.loads_into(best, y);
  rep.loads = y;
  path_delays_from_loads(net, y, omega);
  rep.delays = omega;
  rep.aggregate_delay = aggregate_delay(net, best);

  if (opts.with_classification) {
    const RedundancyInfo red = redundancy(net);
    rep.redundancy = red.red;
    double mean_delay = 0.0;
    for (int i = 0; i < net.user_count(); ++i) mean_delay += net.users()[i].rate;
    mean_delay = mean_delay > 0 ? rep.aggregate_delay / mean_delay : 0.0;
    double ctol = std::max(1e-9, 1e-6 * (1.0 + std::abs(mean_delay)));
    Classification c;
    bool classified = false;
    for (int attempt = 0; attempt < 5 && !classified; ++attempt, ctol *= 100.0) {
      if (verify_wardrop(net, best, ctol).pass) {
        c = classify_with_delays(net, best, omega, ctol);
        classified = true;
      }
    }
    if (!classified) c.cls = EquilibriumClass::boundary_mixed;
    rep.cls = c.cls;
    rep.strict_margins = c.strict_margins;
    rep.aggregate_margin = c.aggregate_margin;
    rep.kappa = c.kappa;
    rep.wardrop_set_dimension =
        wardrop_set_dimension(net, best, red, c.cls == EquilibriumClass::interior);
  }

  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

EquilibriumReport solve_social_optimum(const Network& net, const SolveOptions& opts) {
  for (int r : net.used_edges()) {
    const auto& lat = net.edges()[r].latency;
    if (!lat.marginal_nondecreasing())
      throw validation_error("social optimum refused: marginal latency of edge '" +
                             net.edges()[r].id + "' (" + lat.describe() +
                             ") is decreasing on the feasible range");
  }
  const Network marginal = net.with_marginal_latencies();
  EquilibriumReport rep = solve_wardrop(marginal, opts);
  rep.aggregate_delay_original = aggregate_delay(net, rep.flow);
  return rep;
}

namespace {

// enumerate nonnegative integer k-tuples summing to total
void compositions(int total, int parts, std::vector<int>& cur,
                  const std::function<void(const std::vector<int>&)>& emit) {
  if (parts == 1) {
    cur.push_back(total);
    emit(cur);
    cur.pop_back();
    return;
  }
  for (int v = 0; v <= total; ++v) {
    cur.push_back(v);
    compositions(total - v, parts - 1, cur, emit);
    cur.pop_back();
  }
}

}  // namespace

Ne2Result verify_worst_delay_equilibrium(const Network& net, const Flow& x, int grid,
                                         double tol) {
  Ne2Result res;
  res.grid = grid;
  res.tol = tol;
  res.best_improvement = -std::numeric_limits<double>::infinity();

  const DelayProfile base = path_delays(net, x);
  std::vector<double> y0;
  net.loads_into(x, y0);

  std::vector<double> y(net.edge_count());
  for (int i = 0; i < net.user_count(); ++i) {
    const int off = net.path_offset(i);
    const int k = net.path_count(i);
    const double rate = net.users()[i].rate;
    const double step = rate / grid;
    const double thr = kSupportScale * rate;

    std::vector<int> cur;
    compositions(grid, k, cur, [&](const std::vector<int>& comp) {
      ++res.probes;
      y = y0;
      for (int a = 0; a < k; ++a) {
        const double delta = comp[a] * step - x[off + a];
        if (delta == 0.0) continue;
        for (int r : net.path_edges(off + a)) y[r] += delta;
      }
      double worst = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < k; ++a) {
        if (comp[a] * step <= thr) continue;
        double w = 0.0;
        for (int r : net.path_edges(off + a)) {
          const auto& lat = net.edges()[r].latency;
          if (!lat.feasible(y[r])) {
            ++res.skipped;
            return;
          }
          w += lat.value(y[r]);
        }
        worst = std::max(worst, w);
      }
      const double improvement = base.user_worst[i] - worst;
      if (improvement > res.best_improvement) {
        res.best_improvement = improvement;
        res.best_user = i;
        res.best_deviation = x;
        for (int a = 0; a < k; ++a) res.best_deviation[off + a] = comp[a] * step;
      }
    });
  }
  res.pass = !(res.best_improvement > tol);
  return res;
}

}  // namespace wardrop
