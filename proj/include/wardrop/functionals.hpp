#ifndef WARDROP_FUNCTIONALS_HPP
#define WARDROP_FUNCTIONALS_HPP

#include <vector>

#include "wardrop/network.hpp"

namespace wardrop {

// support threshold: x_{ia} > kSupportScale * rho_i counts as a used path
constexpr double kSupportScale = 1e-8;

struct DelayProfile {
  std::vector<double> path;       // omega_{ia}, flat
  std::vector<double> user_avg;   // omega_i
  std::vector<double> user_worst; // max over supported paths
};

// All path delays, user averages and worst delays from one load evaluation.
// Throws infeasible_load when an mm1 edge is at or beyond capacity.
DelayProfile path_delays(const Network& net, const Flow& x);

// Path delays only, given precomputed loads (hot path for solvers/sims).
void path_delays_from_loads(const Network& net, const std::vector<double>& y,
                            std::vector<double>& omega);
void check_loads_feasible(const Network& net, const std::vector<double>& y);

// Rosenthal potential: sum_r of the latency antiderivative at y_r.
double rosenthal_potential(const Network& net, const Flow& x);
double potential_of_loads(const Network& net, const std::vector<double>& y);

// dF/dx_{ia}; equals the path delays.
std::vector<double> potential_gradient(const Network& net, const Flow& x);

// L_q(x) = sum (x-q) omega(x), evaluated edge-wise as sum (y_r - y*_r) phi_r(y_r)
double adjoint_potential(const Network& net, const Flow& q, const Flow& x);
double adjoint_potential_loads(const Network& net, const std::vector<double>& y_ref,
                               const std::vector<double>& y);

// Rate-adjusted relative entropy H_q(x; lambda); +infinity when supp(q) is
// not contained in supp(x).
double relative_entropy(const Network& net, const Flow& q, const Flow& x,
                        const std::vector<double>& lambda);

// omega(x) = sum_i rho_i omega_i(x)
double aggregate_delay(const Network& net, const Flow& x);

std::vector<double> uniform_rates(const Network& net, double value = 1.0);

}  // namespace wardrop

#endif
