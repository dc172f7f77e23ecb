#ifndef WARDROP_GEOMETRY_HPP
#define WARDROP_GEOMETRY_HPP

#include <Eigen/Dense>

#include "wardrop/network.hpp"

namespace wardrop {

// Redundancy matrix Q (edges x non-base path directions) and its kernel.
// Column (i, mu) is P(e_{i,mu}) - P(e_{i,0}) for mu = 1.. within user i.
struct RedundancyInfo {
  Eigen::MatrixXd Q;
  int rank = 0;
  int red = 0;  // dim ker Q = cols - rank
  Eigen::MatrixXd kernel;  // orthonormal basis, cols = red, reduced coords
  double rank_tolerance = 0.0;

  // a kernel column expanded to flat path coordinates (z_{i,0} = -sum_mu z_{i,mu})
  std::vector<double> kernel_flow_direction(int k, const Network& net) const;
};

RedundancyInfo redundancy(const Network& net);

// |N| - |E'|, always <= red(Q)
int redundancy_lower_bound(const Network& net);

// Unique theta in [0,1] with x = q + theta*z, z in S_q; q strictly interior.
double projective_distance(const Network& net, const Flow& q, const Flow& x);

struct EssenceResult {
  double kappa = 0.0;          // rho^{-1} * min ||P(z)|| over S_q
  double min_norm_Pz = 0.0;
  int facet_path = -1;         // flat index of the minimizing facet
  std::vector<double> minimizer;  // z achieving the minimum (flat coords)
};

// Per-facet convex quadratic minimization of ||P(z)||^2 over the boundary
// sphere S_q (projected gradient, 5 restarts per facet). q must be interior.
EssenceResult essence(const Network& net, const Flow& q);

}  // namespace wardrop

#endif
