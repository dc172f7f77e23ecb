#include "wardrop/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "wardrop/equilibrium.hpp"
#include "wardrop/geometry.hpp"

namespace wardrop {

std::vector<double> SimConfig::rates_for(const Network& net) const {
  if (lambda.empty()) return std::vector<double>(net.user_count(), 1.0);
  return lambda;
}

void SimConfig::validate(const Network& net) const {
  std::vector<std::string> issues;
  if (!(dt > 0.0)) issues.push_back("sim.dt must be positive");
  // T = 0 is the degenerate single-sample run; anything else needs T >= dt
  if (!(T >= dt) && T != 0.0) issues.push_back("sim.T must be 0 or at least dt");
  if (!(eps_floor > 0.0) || eps_floor > 1e-6)
    issues.push_back("sim.eps_floor must lie in (0, 1e-6]");
  if (record_stride < 1) issues.push_back("sim.record_stride must be >= 1");
  if (!lambda.empty()) {
    if (static_cast<int>(lambda.size()) != net.user_count())
      issues.push_back("sim.lambda has " + std::to_string(lambda.size()) + " entries for " +
                       std::to_string(net.user_count()) + " users");
    for (double l : lambda)
      if (!(l > 0.0)) issues.push_back("sim.lambda entries must be positive");
  }
  if (!issues.empty()) throw validation_error(issues);
}

std::vector<double> replicator_rhs(const Network& net, const Flow& x,
                                   const std::vector<double>& lambda) {
  std::vector<double> y, omega;
  net.loads_into(x, y);
  check_loads_feasible(net, y);
  path_delays_from_loads(net, y, omega);

  std::vector<double> v(net.path_count(), 0.0);
  for (int i = 0; i < net.user_count(); ++i) {
    const int off = net.path_offset(i);
    double avg = 0.0, mass = 0.0;
    for (int a = 0; a < net.path_count(i); ++a) {
      avg += x[off + a] * omega[off + a];
      mass += x[off + a];
    }
    // normalize by the actual mass: on the simplex this is rho_i, and off it
    // (integrator round-off) the sum direction stays neutral instead of
    // feeding back into the drift
    avg /= mass > 0.0 ? mass : net.users()[i].rate;
    for (int a = 0; a < net.path_count(i); ++a)
      v[off + a] = lambda[i] * x[off + a] * (avg - omega[off + a]);
  }
  return v;
}

std::vector<double> bnn_rhs(const Network& net, const Flow& x) {
  std::vector<double> y, omega;
  net.loads_into(x, y);
  check_loads_feasible(net, y);
  path_delays_from_loads(net, y, omega);

  std::vector<double> v(net.path_count(), 0.0);
  for (int i = 0; i < net.user_count(); ++i) {
    const int off = net.path_offset(i);
    const double rho = net.users()[i].rate;
    double avg = 0.0;
    for (int a = 0; a < net.path_count(i); ++a) avg += x[off + a] * omega[off + a];
    avg /= rho;
    double psi_sum = 0.0;
    for (int a = 0; a < net.path_count(i); ++a)
      psi_sum += std::max(avg - omega[off + a], 0.0);
    for (int a = 0; a < net.path_count(i); ++a) {
      const double psi = std::max(avg - omega[off + a], 0.0);
      v[off + a] = rho * psi - x[off + a] * psi_sum;
    }
  }
  return v;
}

namespace {

class DiagnosticRecorder {
 public:
  DiagnosticRecorder(const Network& net, const SimConfig& cfg)
      : net_(net), lambda_(cfg.rates_for(net)), ref_(cfg.reference) {
    if (ref_) {
      net_.loads_into(*ref_, y_ref_);
      ref_interior_ = true;
      for (int a = 0; a < net_.path_count(); ++a)
        if ((*ref_)[a] <= 0.0) ref_interior_ = false;
    }
  }

  void record(Trajectory& traj, double t, const Flow& x) {
    traj.t.push_back(t);
    traj.x.push_back(x);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    double phi = nan, gap = nan;
    std::vector<double> y;
    net_.loads_into(x, y);
    check_loads_feasible(net_, y);
    phi = potential_of_loads(net_, y);
    std::vector<double> omega;
    path_delays_from_loads(net_, y, omega);
    gap = wardrop_gap_from_delays(net_, x, omega).relative;
    traj.potential.push_back(phi);
    traj.gap.push_back(gap);
    if (ref_) {
      traj.entropy.push_back(relative_entropy(net_, *ref_, x, lambda_));
      traj.adjoint.push_back(adjoint_potential_loads(net_, y_ref_, y));
      traj.theta.push_back(ref_interior_ ? projective_distance(net_, *ref_, x) : nan);
    } else {
      traj.entropy.push_back(nan);
      traj.adjoint.push_back(nan);
      traj.theta.push_back(nan);
    }
  }

 private:
  const Network& net_;
  std::vector<double> lambda_;
  std::optional<Flow> ref_;
  std::vector<double> y_ref_;
  bool ref_interior_ = false;
};

constexpr double kNegativeTol = 1e-12;

// clamp tiny negatives to zero and rescale the touched users back to rho_i
void clamp_and_renormalize(const Network& net, Flow& x) {
  for (int i = 0; i < net.user_count(); ++i) {
    const int off = net.path_offset(i);
    bool touched = false;
    for (int a = 0; a < net.path_count(i); ++a) {
      if (x[off + a] < 0.0) {
        x[off + a] = 0.0;
        touched = true;
      }
    }
    if (!touched) continue;
    double sum = 0.0;
    for (int a = 0; a < net.path_count(i); ++a) sum += x[off + a];
    if (sum <= 0.0) continue;
    const double scale = net.users()[i].rate / sum;
    for (int a = 0; a < net.path_count(i); ++a) x[off + a] *= scale;
  }
}

double min_coordinate(const Flow& x) {
  double m = std::numeric_limits<double>::infinity();
  for (double v : x.x) m = std::min(m, v);
  return m;
}

using RhsFn = std::vector<double> (*)(const Network&, const Flow&, const std::vector<double>&);

std::vector<double> bnn_rhs_adapter(const Network& net, const Flow& x,
                                    const std::vector<double>&) {
  return bnn_rhs(net, x);
}

Flow ode_trial_step(const Network& net, const Flow& x, double h, OdeScheme scheme, RhsFn rhs,
                    const std::vector<double>& lambda) {
  const int A = net.path_count();
  Flow out = x;
  if (scheme == OdeScheme::euler) {
    const auto k1 = rhs(net, x, lambda);
    for (int a = 0; a < A; ++a) out[a] = x[a] + h * k1[a];
    return out;
  }
  const auto k1 = rhs(net, x, lambda);
  Flow tmp = x;
  for (int a = 0; a < A; ++a) tmp[a] = x[a] + 0.5 * h * k1[a];
  const auto k2 = rhs(net, tmp, lambda);
  for (int a = 0; a < A; ++a) tmp[a] = x[a] + 0.5 * h * k2[a];
  const auto k3 = rhs(net, tmp, lambda);
  for (int a = 0; a < A; ++a) tmp[a] = x[a] + h * k3[a];
  const auto k4 = rhs(net, tmp, lambda);
  for (int a = 0; a < A; ++a)
    out[a] = x[a] + h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
  return out;
}

// one dt advance with recursive step-halving on negative overshoots
void ode_advance(const Network& net, Flow& x, double h, OdeScheme scheme, RhsFn rhs,
                 const std::vector<double>& lambda, int depth) {
  Flow trial = ode_trial_step(net, x, h, scheme, rhs, lambda);
  if (min_coordinate(trial) < -kNegativeTol && depth < 24) {
    ode_advance(net, x, 0.5 * h, scheme, rhs, lambda, depth + 1);
    ode_advance(net, x, 0.5 * h, scheme, rhs, lambda, depth + 1);
    return;
  }
  clamp_and_renormalize(net, trial);
  x = std::move(trial);
}

}  // namespace

Trajectory integrate_ode(const Network& net, const Flow& x0, const SimConfig& cfg, RhsKind kind) {
  cfg.validate(net);
  net.validate_flow(x0);
  const std::vector<double> lambda = cfg.rates_for(net);
  RhsFn rhs = kind == RhsKind::replicator ? &replicator_rhs : &bnn_rhs_adapter;

  Trajectory traj;
  traj.meta.seed = cfg.seed;
  traj.meta.scheme = cfg.scheme == OdeScheme::rk4 ? "rk4" : "euler";
  traj.meta.rng_algorithm = Philox::kAlgorithm;
  traj.meta.dt = cfg.dt;
  traj.meta.sigma.assign(net.edge_count(), 0.0);

  DiagnosticRecorder rec(net, cfg);
  Flow x = x0;
  const long steps = std::lround(cfg.T / cfg.dt);
  rec.record(traj, 0.0, x);
  for (long s = 1; s <= steps; ++s) {
    try {
      ode_advance(net, x, cfg.dt, cfg.scheme, rhs, lambda, 0);
      if (s % cfg.record_stride == 0 || s == steps) rec.record(traj, s * cfg.dt, x);
    } catch (const infeasible_load& e) {
      traj.meta.truncated = true;
      traj.meta.error = e.what();
      return traj;
    }
  }
  return traj;
}

namespace {

void check_noise(const Network& net, const NoiseSpec& noise) {
  if (static_cast<int>(noise.sigma.size()) != net.edge_count())
    throw validation_error("noise spec has " + std::to_string(noise.sigma.size()) +
                           " intensities for " + std::to_string(net.edge_count()) + " edges");
  for (double s : noise.sigma)
    if (!(s >= 0.0) || !std::isfinite(s))
      throw validation_error("noise intensities must be finite and nonnegative");
}

}  // namespace

std::vector<double> noise_increments(const Network& net, const NoiseSpec& noise, double dt,
                                     Philox& rng) {
  check_noise(net, noise);
  const double sqdt = std::sqrt(dt);
  std::vector<double> dW(net.edge_count());
  for (int r = 0; r < net.edge_count(); ++r) dW[r] = rng.gaussian() * sqdt;
  std::vector<double> dU(net.path_count(), 0.0);
  for (int r = 0; r < net.edge_count(); ++r) {
    const double s = noise.sigma[r];
    if (s == 0.0) continue;
    for (int a : net.paths_on_edge(r)) dU[a] += s * dW[r];
  }
  return dU;
}

bool sde_step_size_ok(const Network& net, const SimConfig& cfg, const NoiseSpec& noise) {
  const std::vector<double> lambda = cfg.rates_for(net);
  double lbar = 0.0;
  for (int i = 0; i < net.user_count(); ++i) lbar += net.users()[i].rate * lambda[i];
  lbar /= net.total_rate();
  double max_path_var = 0.0;
  for (int a = 0; a < net.path_count(); ++a) {
    double v = 0.0;
    for (int r : net.path_edges(a)) v += noise.sigma[r] * noise.sigma[r];
    max_path_var = std::max(max_path_var, v);
  }
  return lbar * max_path_var * cfg.dt <= kSdeStepGuard;
}

SdeStepper::SdeStepper(const Network& net, const SimConfig& cfg, const NoiseSpec& noise,
                       std::uint64_t stream)
    : net_(net),
      noise_(noise),
      lambda_(cfg.rates_for(net)),
      dt_(cfg.dt),
      eps_floor_(cfg.eps_floor),
      rng_(cfg.seed, stream) {
  check_noise(net, noise);
}

void SdeStepper::step(Flow& x) {
  net_.loads_into(x, y_);
  check_loads_feasible(net_, y_);
  path_delays_from_loads(net_, y_, omega_);

  // path noise dU = P^T (sigma dW)
  const double sqdt = std::sqrt(dt_);
  dW_.resize(net_.edge_count());
  for (int r = 0; r < net_.edge_count(); ++r) dW_[r] = rng_.gaussian() * sqdt;
  dU_.assign(net_.path_count(), 0.0);
  for (int r = 0; r < net_.edge_count(); ++r) {
    const double s = noise_.sigma[r];
    if (s == 0.0) continue;
    for (int a : net_.paths_on_edge(r)) dU_[a] += s * dW_[r];
  }

  for (int i = 0; i < net_.user_count(); ++i) {
    const int off = net_.path_offset(i);
    const double rho = net_.users()[i].rate;
    double avg_delay = 0.0, avg_noise = 0.0;
    for (int a = 0; a < net_.path_count(i); ++a) {
      avg_delay += x[off + a] * omega_[off + a];
      avg_noise += x[off + a] * dU_[off + a];
    }
    avg_delay /= rho;
    avg_noise /= rho;
    for (int a = 0; a < net_.path_count(i); ++a) {
      const int p = off + a;
      x[p] += lambda_[i] * x[p] * ((avg_delay - omega_[p]) * dt_ + (dU_[p] - avg_noise));
    }
    // simplex floor, then rescale the user back onto rho_i
    const double floor = eps_floor_ * rho;
    double sum = 0.0;
    for (int a = 0; a < net_.path_count(i); ++a) {
      if (x[off + a] < floor) x[off + a] = floor;
      sum += x[off + a];
    }
    const double scale = rho / sum;
    for (int a = 0; a < net_.path_count(i); ++a) x[off + a] *= scale;
  }
}

Trajectory simulate_sde(const Network& net, const Flow& x0, const SimConfig& cfg,
                        const NoiseSpec& noise) {
  cfg.validate(net);
  net.validate_flow(x0);

  Trajectory traj;
  traj.meta.seed = cfg.seed;
  traj.meta.scheme = "euler-maruyama";
  traj.meta.rng_algorithm = Philox::kAlgorithm;
  traj.meta.dt = cfg.dt;
  traj.meta.sigma = noise.sigma;

  DiagnosticRecorder rec(net, cfg);
  SdeStepper stepper(net, cfg, noise, 0);
  Flow x = x0;
  const long steps = std::lround(cfg.T / cfg.dt);
  rec.record(traj, 0.0, x);
  for (long s = 1; s <= steps; ++s) {
    try {
      stepper.step(x);
      if (s % cfg.record_stride == 0 || s == steps) rec.record(traj, s * cfg.dt, x);
    } catch (const infeasible_load& e) {
      traj.meta.truncated = true;
      traj.meta.error = e.what();
      return traj;
    }
  }
  return traj;
}

Trajectory simulate_exponential_learning(const Network& net, const Flow& x0,
                                         const SimConfig& cfg, const NoiseSpec& noise) {
  cfg.validate(net);
  check_noise(net, noise);
  net.validate_flow(x0);
  for (int a = 0; a < net.path_count(); ++a)
    if (x0[a] <= 0.0)
      throw std::invalid_argument(
          "exponential learning needs a strictly interior starting flow");

  const std::vector<double> lambda = cfg.rates_for(net);

  Trajectory traj;
  traj.meta.seed = cfg.seed;
  traj.meta.scheme = "exponential-learning";
  traj.meta.rng_algorithm = Philox::kAlgorithm;
  traj.meta.dt = cfg.dt;
  traj.meta.sigma = noise.sigma;

  // scores reproducing x0 through the Boltzmann map
  std::vector<double> V(net.path_count());
  for (int i = 0; i < net.user_count(); ++i) {
    const int off = net.path_offset(i);
    for (int a = 0; a < net.path_count(i); ++a)
      V[off + a] = std::log(x0[off + a] / net.users()[i].rate) / lambda[i];
  }

  auto boltzmann = [&](Flow& x) {
    for (int i = 0; i < net.user_count(); ++i) {
      const int off = net.path_offset(i);
      double vmax = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < net.path_count(i); ++a)
        vmax = std::max(vmax, lambda[i] * V[off + a]);
      double z = 0.0;
      for (int a = 0; a < net.path_count(i); ++a) {
        x[off + a] = std::exp(lambda[i] * V[off + a] - vmax);
        z += x[off + a];
      }
      const double scale = net.users()[i].rate / z;
      for (int a = 0; a < net.path_count(i); ++a) x[off + a] *= scale;
    }
  };

  DiagnosticRecorder rec(net, cfg);
  Philox rng(cfg.seed, 0);
  Flow x = x0;
  std::vector<double> y, omega;
  const double sqdt = std::sqrt(cfg.dt);
  std::vector<double> dW(net.edge_count());
  const long steps = std::lround(cfg.T / cfg.dt);
  rec.record(traj, 0.0, x);
  for (long s = 1; s <= steps; ++s) {
    try {
      net.loads_into(x, y);
      check_loads_feasible(net, y);
      path_delays_from_loads(net, y, omega);
    } catch (const infeasible_load& e) {
      traj.meta.truncated = true;
      traj.meta.error = e.what();
      return traj;
    }
    for (int r = 0; r < net.edge_count(); ++r) dW[r] = rng.gaussian() * sqdt;
    for (int a = 0; a < net.path_count(); ++a) V[a] -= omega[a] * cfg.dt;
    for (int r = 0; r < net.edge_count(); ++r) {
      const double sg = noise.sigma[r];
      if (sg == 0.0) continue;
      for (int a : net.paths_on_edge(r)) V[a] += sg * dW[r];
    }
    boltzmann(x);
    if (s % cfg.record_stride == 0 || s == steps) {
      try {
        rec.record(traj, s * cfg.dt, x);
      } catch (const infeasible_load& e) {
        traj.meta.truncated = true;
        traj.meta.error = e.what();
        return traj;
      }
    }
  }
  return traj;
}

double entropy_generator(const Network& net, const Flow& q, const Flow& x,
                         const std::vector<double>& lambda, const NoiseSpec& noise) {
  for (int i = 0; i < net.user_count(); ++i) {
    const int off = net.path_offset(i);
    const double thr = kSupportScale * net.users()[i].rate;
    for (int a = 0; a < net.path_count(i); ++a)
      if (q[off + a] > thr && x[off + a] <= 0.0)
        throw std::invalid_argument("entropy generator: supp(q) not contained in supp(x)");
  }

  const double drift = -adjoint_potential(net, q, x);

  // both quadratic noise terms reduce to per-user edge loads:
  //   sum_{bg} s2_{bg} u_b u_g = sum_r sigma_r^2 (P_i u)_r^2
  const LoadProfile lq = net.edge_loads(q);
  const LoadProfile lx = net.edge_loads(x);
  double fluct = 0.0, equil = 0.0;
  for (int i = 0; i < net.user_count(); ++i) {
    const double rho = net.users()[i].rate;
    double a = 0.0, b = 0.0;
    for (int r = 0; r < net.edge_count(); ++r) {
      const double s2 = noise.sigma[r] * noise.sigma[r];
      if (s2 == 0.0) continue;
      const double w = lx.per_user[i][r] - lq.per_user[i][r];
      const double yq = lq.per_user[i][r];
      a += s2 * w * w;
      b += s2 * yq * (rho - yq);
    }
    fluct += 0.5 * lambda[i] / rho * a;
    equil += 0.5 * lambda[i] / rho * b;
  }
  return drift + fluct + equil;
}

}  // namespace wardrop
