#ifndef WARDROP_EXPERIMENTS_HPP
#define WARDROP_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "wardrop/dynamics.hpp"
#include "wardrop/equilibrium.hpp"

namespace wardrop {

// Every Monte Carlo report carries the bound it compares against, the
// empirical value, and the seed, so a verdict is auditable and a rerun with
// the same seed reproduces it bitwise.

enum class Verdict { pass, fail, inconclusive };
std::string to_string(Verdict v);

struct SlowLearningReport {
  bool strict_case = false;
  double rho = 0.0;         // sum of rates
  double sigma2 = 0.0;      // sum_r sigma_r^2
  double lambda_bar = 0.0;  // rate-weighted mean learning rate
  // strict case: lambda_bar * sigma2 < delta_omega
  double delta_omega = 0.0;
  // interior case: lambda_bar < (4/5) m rho kappa^2 / sigma2
  double m = 0.0;
  double kappa = 0.0;
  double lhs = 0.0, rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  bool pass = false;
};

// q must be classified strict or interior (throws otherwise).
SlowLearningReport slow_learning_check(const Network& net, const EquilibriumReport& q,
                                       const std::vector<double>& lambda,
                                       const NoiseSpec& noise);

// inf of phi_r' over the feasible load box, restricted to used edges
double min_latency_slope(const Network& net);

// (2H/delta_omega) * 2rho/(delta(2rho-delta)); +inf at the delta -> 2rho pole
double hitting_time_bound(double entropy, double delta_omega, double rho, double delta);

// theta_lambda = (1/2) (m rho kappa^2/(lambda sigma^2) - 1)^{-1/2};
// throws when the recurrence condition (ratio > 1) is unmet
double theta_lambda(double m, double rho, double kappa, double lambda_bar, double sigma2);

struct HittingTimeReport {
  int replicates = 0;
  double delta = 0.0;
  double t_max = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  double cap_fraction = 0.0;
  double bound = 0.0;
  double entropy0 = 0.0;
  Verdict verdict = Verdict::inconclusive;
  std::uint64_t seed = 0;
  std::vector<double> times;  // per replicate, capped values included
};

// First time ||X(t) - q||_1 <= delta per replicate (Euler-Maruyama, derived
// streams), compared against the theoretical mean bound. t_max <= 0 picks
// 20x the bound.
HittingTimeReport estimate_hitting_time(const Network& net, const EquilibriumReport& q,
                                        double delta, const Flow& x0, const SimConfig& cfg,
                                        const NoiseSpec& noise, int replicates,
                                        double t_max = 0.0);

struct StabilityReport {
  int replicates = 0;
  double start_radius = 0.0;
  double tube_radius = 0.0;    // 10x start
  double target_radius = 0.0;  // start/10
  double T = 0.0;
  double fraction_stayed = 0.0;
  double fraction_converged = 0.0;
  double fraction_both = 0.0;
  std::uint64_t seed = 0;
};

// Starts replicates on the L1 sphere of start_radius around strict q; counts
// trajectories that never leave the 10x tube and end within start/10.
StabilityReport stability_probability(const Network& net, const EquilibriumReport& q,
                                      double start_radius, const SimConfig& cfg,
                                      const NoiseSpec& noise, int replicates, double T);

struct OccupancyPoint {
  double theta = 0.0;
  double occupancy = 0.0;
  double required = 0.0;  // 1 - theta_lambda^2/theta^2 (when theta > theta_lambda)
  double std_error = 0.0;
  Verdict verdict = Verdict::pass;
};

struct InvariantMeasureReport {
  double theta_lambda = 0.0;
  double mean_theta2 = 0.0;
  double theta2_std_error = 0.0;
  double theta2_bound = 0.0;  // theta_lambda^2
  Verdict theta2_verdict = Verdict::pass;
  std::vector<OccupancyPoint> occupancy;
  double T = 0.0, burn_in = 0.0;
  std::uint64_t seed = 0;
  SlowLearningReport condition;
  bool pass = false;
};

// Single long trajectory; occupancy of the projective balls B_theta and the
// time average of Theta_q^2 after burn-in, with batch-means standard errors.
// Refuses reducible networks and non-interior q.
// se_slack: how many standard errors of slack the statistical verdicts get
InvariantMeasureReport estimate_invariant_measure(const Network& net,
                                                  const EquilibriumReport& q,
                                                  const SimConfig& cfg, const NoiseSpec& noise,
                                                  double T, double burn_in,
                                                  const std::vector<double>& theta_grid,
                                                  double se_slack = 3.0);

struct AdjointLemmaReport {
  bool strict_case = false;
  long samples = 0;
  long violations = 0;
  double worst_margin = 0.0;  // min over samples of lhs - rhs (>= -1e-9 passes)
  std::uint64_t seed = 0;
  bool pass = false;
};

// Samples rays q + t z and checks the adjoint-potential lower bounds:
// strict q:   L_q >= (1/2) sum_i dOmega_i ||z_i||_1 t
// interior q: L_q >= (1/2) m ||P(z)||^2 t^2
AdjointLemmaReport check_adjoint_lemmas(const Network& net, const EquilibriumReport& q,
                                        long samples, std::uint64_t seed = 0);

// Runs fn(k) for k in [0, n) across threads; fn must only touch state owned
// by replicate k, so results are order-independent.
void parallel_replicates(int n, const std::function<void(int)>& fn);

}  // namespace wardrop

#endif
