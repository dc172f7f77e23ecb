#ifndef WARDROP_DYNAMICS_HPP
#define WARDROP_DYNAMICS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wardrop/functionals.hpp"
#include "wardrop/latency.hpp"
#include "wardrop/network.hpp"
#include "wardrop/rng.hpp"

namespace wardrop {

enum class OdeScheme { rk4, euler };
enum class RhsKind { replicator, bnn };

struct SimConfig {
  std::vector<double> lambda;  // per-user learning rates; empty = all 1
  double dt = 1e-2;
  double T = 100.0;
  OdeScheme scheme = OdeScheme::rk4;
  std::uint64_t seed = 0;
  double eps_floor = 1e-12;  // SDE simplex floor, as a fraction of rho_i
  int record_stride = 1;
  std::optional<Flow> reference;  // q for the entropy/adjoint/theta diagnostics

  std::vector<double> rates_for(const Network& net) const;
  void validate(const Network& net) const;
};

struct TrajectoryMeta {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::string scheme;
  std::string rng_algorithm;
  double dt = 0.0;
  std::vector<double> sigma;
  bool truncated = false;  // stopped early on an infeasible load
  std::string error;
};

// Time-indexed flows with Lyapunov diagnostics. Columns without a reference
// flow (entropy, adjoint, theta) record NaN.
struct Trajectory {
  std::vector<double> t;
  std::vector<Flow> x;
  std::vector<double> entropy;    // H_q(X; lambda)
  std::vector<double> potential;  // Phi(P(X))
  std::vector<double> adjoint;    // L_q(X)
  std::vector<double> theta;      // Theta_q(X), interior q only
  std::vector<double> gap;        // relative Wardrop gap
  TrajectoryMeta meta;

  std::size_t samples() const { return t.size(); }
  const Flow& final_flow() const { return x.back(); }
};

// xdot_{ia} = lambda_i x_{ia} (omega_i - omega_{ia}); per-user sums are 0.
std::vector<double> replicator_rhs(const Network& net, const Flow& x,
                                   const std::vector<double>& lambda);

// Mass-preserving excess-delay dynamics:
// xdot_{ia} = rho_i psi_{ia} - x_{ia} sum_b psi_{ib}, psi = [omega_i - omega_{ia}]^+.
// Rest points are exactly the Wardrop flows.
std::vector<double> bnn_rhs(const Network& net, const Flow& x);

Trajectory integrate_ode(const Network& net, const Flow& x0, const SimConfig& cfg, RhsKind rhs);

// One vector of path noise dU_{ia} = sum_{r in a} sigma_r dW_r with
// dW_r ~ N(0, dt) independent per edge.
std::vector<double> noise_increments(const Network& net, const NoiseSpec& noise, double dt,
                                     Philox& rng);

// Euler-Maruyama stepper for the stochastic replicator flow; exposed so the
// experiment drivers can run step-by-step without building a Trajectory.
class SdeStepper {
 public:
  SdeStepper(const Network& net, const SimConfig& cfg, const NoiseSpec& noise,
             std::uint64_t stream);

  // advances x by one dt in place; throws infeasible_load
  void step(Flow& x);
  double dt() const { return dt_; }
  Philox& rng() { return rng_; }

 private:
  const Network& net_;
  const NoiseSpec& noise_;
  std::vector<double> lambda_;
  double dt_;
  double eps_floor_;
  Philox rng_;
  std::vector<double> y_, omega_, dW_, dU_;
};

Trajectory simulate_sde(const Network& net, const Flow& x0, const SimConfig& cfg,
                        const NoiseSpec& noise);

// Score-driven exponential learning: dV = -omega dt + dU, flow recovered
// through the scaled Boltzmann map (exactly on the simplex by construction).
Trajectory simulate_exponential_learning(const Network& net, const Flow& x0,
                                         const SimConfig& cfg, const NoiseSpec& noise);

// Generator of the rate-adjusted relative entropy along the stochastic
// replicator flow, evaluated at x.
double entropy_generator(const Network& net, const Flow& q, const Flow& x,
                         const std::vector<double>& lambda, const NoiseSpec& noise);

// lambda_bar * max_a sigma_a^2 * dt above this triggers a step-size warning
constexpr double kSdeStepGuard = 0.01;
bool sde_step_size_ok(const Network& net, const SimConfig& cfg, const NoiseSpec& noise);

}  // namespace wardrop

#endif
