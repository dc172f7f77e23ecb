#ifndef WARDROP_LATENCY_HPP
#define WARDROP_LATENCY_HPP

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace wardrop {

// Load at or beyond an edge's feasible domain (an M/M/1 edge at capacity).
class infeasible_load : public std::runtime_error {
 public:
  infeasible_load(const std::string& edge_id, double load, double capacity)
      : std::runtime_error("infeasible load " + std::to_string(load) +
                           " on edge '" + edge_id + "' (capacity " +
                           std::to_string(capacity) + ")"),
        edge_id_(edge_id) {}
  const std::string& edge_id() const { return edge_id_; }

 private:
  std::string edge_id_;
};

enum class LatencyFamily { constant, affine, mm1, monomial };

// One edge's delay function. All families are increasing and C^1 on their
// domain (constants are the flagged degenerate case used for background
// links), with closed-form derivative and antiderivative.
//
// `marginalized` switches the spec to the marginal cost phi(y) + y*phi'(y)
// of the same base parameters; the social-optimum solver runs on those.
struct LatencySpec {
  LatencyFamily family = LatencyFamily::constant;
  double slope = 0.0;      // affine: slope*y + intercept
  double intercept = 0.0;  // affine intercept / constant value
  double capacity = 0.0;   // mm1: 1/(capacity - y)
  double coef = 0.0;       // monomial: coef * y^exponent
  double exponent = 1.0;   // monomial, >= 1
  bool marginalized = false;

  static LatencySpec constant_fn(double c);
  static LatencySpec affine_fn(double slope, double intercept);
  static LatencySpec mm1_fn(double capacity);
  static LatencySpec monomial_fn(double coef, double exponent);

  double value(double y) const;
  double derivative(double y) const;
  // integral of value() from 0 to y
  double primitive(double y) const;
  // phi(y) + y*phi'(y) of the base function (independent of `marginalized`)
  double marginal(double y) const;

  // mm1 domain ends at capacity; loads within kDomainGuard of it are rejected
  double max_load() const;
  bool feasible(double y) const;
  void check_feasible(double y, const std::string& edge_id) const;

  // inf of the derivative over [0, ymax] (closed form per family)
  double min_derivative_on(double ymax) const;

  bool strictly_increasing() const;
  // validity flag for the social optimum: the marginal cost never decreases
  bool marginal_nondecreasing() const;

  LatencySpec marginalized_copy() const;

  std::string describe() const;

  static constexpr double kDomainGuard = 1e-9;

  bool operator==(const LatencySpec&) const = default;
};

// Per-edge diffusion intensities sigma_r of the delay noise.
struct NoiseSpec {
  std::vector<double> sigma;

  static NoiseSpec zero(std::size_t edge_count) {
    return NoiseSpec{std::vector<double>(edge_count, 0.0)};
  }
  double total_variance() const {  // sigma^2 = sum_r sigma_r^2
    double s = 0.0;
    for (double v : sigma) s += v * v;
    return s;
  }
  bool is_zero() const {
    for (double v : sigma)
      if (v != 0.0) return false;
    return true;
  }
};

double marginal_latency(const LatencySpec& spec, double y);

}  // namespace wardrop

#endif
