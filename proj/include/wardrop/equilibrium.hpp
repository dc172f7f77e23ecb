#ifndef WARDROP_EQUILIBRIUM_HPP
#define WARDROP_EQUILIBRIUM_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wardrop/functionals.hpp"
#include "wardrop/geometry.hpp"
#include "wardrop/network.hpp"

namespace wardrop {

enum class EquilibriumClass { interior, strict, pure_nonstrict, boundary_mixed };
std::string to_string(EquilibriumClass c);

struct GapResult {
  double absolute = 0.0;
  double relative = 0.0;
  std::vector<int> fastest;  // per user, flat path index of a minimum-delay path
};

// Certificate for the minimum of the Rosenthal potential: zero iff Wardrop.
GapResult wardrop_gap(const Network& net, const Flow& x);
GapResult wardrop_gap_from_delays(const Network& net, const Flow& x,
                                  const std::vector<double>& omega);

struct WardropViolation {
  int user = -1;
  int supported_path = -1;  // flat
  int faster_path = -1;     // flat
  double margin = 0.0;      // how much faster the alternative is
};

struct VerifyResult {
  bool pass = true;
  std::vector<WardropViolation> violations;
};

// Checks omega_{ia}(x) <= omega_{ib}(x) + tol on every supported path.
VerifyResult verify_wardrop(const Network& net, const Flow& x, double tol);

struct Classification {
  EquilibriumClass cls = EquilibriumClass::boundary_mixed;
  std::vector<double> strict_margins;  // per-user Delta omega_i (strict only)
  double aggregate_margin = 0.0;       // Delta omega
  double kappa = 0.0;                  // essence (interior only)
};

// Precondition: q passes verify_wardrop at tol (throws otherwise).
Classification classify_equilibrium(const Network& net, const Flow& q, double tol);

enum class TieBreak { lowest_index, seeded };

struct SolveOptions {
  double tol = 1e-9;  // relative Wardrop gap at termination
  long max_iters = 2000000;
  TieBreak tie_break = TieBreak::lowest_index;
  std::uint64_t tie_seed = 0;
  std::optional<Flow> start;
  bool record_gap_history = false;
  bool with_classification = true;
};

struct EquilibriumReport {
  Flow flow;
  std::vector<double> loads;   // y*, unique even when the flow is not
  std::vector<double> delays;  // per path at the solution
  double gap_abs = 0.0;
  double gap_rel = 0.0;
  bool converged = false;
  long iterations = 0;
  double seconds = 0.0;

  EquilibriumClass cls = EquilibriumClass::boundary_mixed;
  std::vector<double> strict_margins;
  double aggregate_margin = 0.0;
  double kappa = 0.0;
  int redundancy = 0;
  int wardrop_set_dimension = 0;

  double aggregate_delay = 0.0;           // under the solved model's latencies
  double aggregate_delay_original = 0.0;  // social optimum: original latencies
  std::vector<double> gap_history;        // per-iteration relative gap
};

// Frank-Wolfe on the Rosenthal potential: the linear subproblem is an
// all-or-nothing assignment to each user's fastest path, the step is an
// exact line search (bisection on the monotone scalar derivative).
EquilibriumReport solve_wardrop(const Network& net, const SolveOptions& opts = {});

// Wardrop solve with marginal latencies; refuses when a used edge's marginal
// cost is decreasing. aggregate_delay_original is evaluated with the
// network's own latencies.
EquilibriumReport solve_social_optimum(const Network& net, const SolveOptions& opts = {});

struct Ne2Result {
  bool pass = true;
  int grid = 60;
  double tol = 0.0;
  long probes = 0;
  long skipped = 0;  // probes that hit an infeasible load
  double best_improvement = 0.0;
  int best_user = -1;
  Flow best_deviation;
};

// Brute-force check of the worst-delay Nash condition over each user's
// discretized unilateral deviations (grid subdivisions of rho_i).
Ne2Result verify_worst_delay_equilibrium(const Network& net, const Flow& x, int grid = 60,
                                         double tol = 1e-9);

// Feasible starting flow: all-or-nothing assignment found by backtracking
// (paths tried fastest-first), falling back to the uniform flow. Throws
// infeasible_load when none exists.
Flow feasible_start(const Network& net);

}  // namespace wardrop

#endif
