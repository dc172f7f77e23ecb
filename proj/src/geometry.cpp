#include "wardrop/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "wardrop/rng.hpp"

namespace wardrop {

std::vector<double> RedundancyInfo::kernel_flow_direction(int k, const Network& net) const {
  std::vector<double> z(net.path_count(), 0.0);
  int col = 0;
  for (int i = 0; i < net.user_count(); ++i) {
    const int off = net.path_offset(i);
    for (int mu = 1; mu < net.path_count(i); ++mu, ++col) {
      const double c = kernel(col, k);
      z[off + mu] += c;
      z[off] -= c;
    }
  }
  return z;
}

RedundancyInfo redundancy(const Network& net) {
  const int E = net.edge_count();
  int cols = 0;
  for (int i = 0; i < net.user_count(); ++i) cols += net.path_count(i) - 1;

  RedundancyInfo info;
  info.Q = Eigen::MatrixXd::Zero(E, cols);
  int col = 0;
  for (int i = 0; i < net.user_count(); ++i) {
    const int off = net.path_offset(i);
    for (int mu = 1; mu < net.path_count(i); ++mu, ++col) {
      for (int r : net.path_edges(off + mu)) info.Q(r, col) += 1.0;
      for (int r : net.path_edges(off)) info.Q(r, col) -= 1.0;
    }
  }

  if (cols == 0) {
    info.rank = 0;
    info.red = 0;
    info.kernel = Eigen::MatrixXd::Zero(0, 0);
    return info;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(info.Q, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  info.rank_tolerance = 1e-10 * smax;
  info.rank = 0;
  for (int k = 0; k < sv.size(); ++k)
    if (sv(k) > info.rank_tolerance) ++info.rank;
  info.red = cols - info.rank;
  info.kernel = svd.matrixV().rightCols(info.red);
  return info;
}

int redundancy_lower_bound(const Network& net) {
  return net.user_count() - static_cast<int>(net.used_edges().size());
}

double projective_distance(const Network& net, const Flow& q, const Flow& x) {
  net.validate_flow(q, 1e-6);
  double theta = 0.0;
  for (int a = 0; a < net.path_count(); ++a) {
    if (q[a] <= 0.0)
      throw std::invalid_argument("projective distance needs a strictly interior reference flow");
    theta = std::max(theta, 1.0 - x[a] / q[a]);
  }
  return std::clamp(theta, 0.0, 1.0);
}

namespace {

// Euclidean projection of v onto the scaled simplex {w >= 0, sum w = mass}
void project_simplex(std::vector<double>& v, double mass) {
  const int n = static_cast<int>(v.size());
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, tau = 0.0;
  int k = 0;
  for (int j = 0; j < n; ++j) {
    css += u[j];
    const double t = (css - mass) / (j + 1);
    if (u[j] - t > 0.0) {
      tau = t;
      k = j + 1;
    }
  }
  (void)k;
  for (auto& w : v) w = std::max(0.0, w - tau);
}

}  // namespace

EssenceResult essence(const Network& net, const Flow& q) {
  for (int a = 0; a < net.path_count(); ++a)
    if (q[a] <= 0.0)
      throw std::invalid_argument("essence needs a strictly interior reference flow");

  const int A = net.path_count();
  const int N = net.user_count();

  // Lipschitz constant of the gradient 2 P^T P z
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(net.edge_count(), A);
  for (int a = 0; a < A; ++a)
    for (int r : net.path_edges(a)) P(r, a) = 1.0;
  const Eigen::MatrixXd G = P.transpose() * P;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  const double L = std::max(2.0 * es.eigenvalues().maxCoeff(), 1e-12);

  std::vector<double> y(net.edge_count());
  auto objective = [&](const std::vector<double>& z) {
    double s = 0.0;
    std::fill(y.begin(), y.end(), 0.0);
    for (int a = 0; a < A; ++a)
      for (int r : net.path_edges(a)) y[r] += z[a];
    for (double v : y) s += v * v;
    return s;
  };
  auto gradient = [&](const std::vector<double>& z, std::vector<double>& g) {
    std::fill(y.begin(), y.end(), 0.0);
    for (int a = 0; a < A; ++a)
      for (int r : net.path_edges(a)) y[r] += z[a];
    std::fill(g.begin(), g.end(), 0.0);
    for (int a = 0; a < A; ++a)
      for (int r : net.path_edges(a)) g[a] += 2.0 * y[r];
  };

  // project z (in w = z + q coordinates) onto one facet of S_q:
  // w_fixed = 0, other users on their whole simplex, the fixed path's user
  // on the simplex of its remaining coordinates
  auto project_facet = [&](std::vector<double>& z, int fixed) {
    for (int i = 0; i < N; ++i) {
      const int off = net.path_offset(i);
      const int cnt = net.path_count(i);
      std::vector<double> w;
      w.reserve(cnt);
      for (int a = 0; a < cnt; ++a)
        if (off + a != fixed) w.push_back(z[off + a] + q[off + a]);
      project_simplex(w, net.users()[i].rate);
      int k = 0;
      for (int a = 0; a < cnt; ++a) {
        if (off + a == fixed)
          z[off + a] = -q[off + a];
        else
          z[off + a] = w[k++] - q[off + a];
      }
    }
  };

  EssenceResult best;
  best.min_norm_Pz = std::numeric_limits<double>::infinity();
  Philox rng(0x657373656e636500ull);  // fixed internal seed: results deterministic

  std::vector<double> z(A), g(A), znew(A);
  for (int fixed = 0; fixed < A; ++fixed) {
    double facet_best = std::numeric_limits<double>::infinity();
    std::vector<double> facet_arg;
    for (int restart = 0; restart < 5; ++restart) {
      if (restart == 0) {
        std::fill(z.begin(), z.end(), 0.0);
      } else {
        for (auto& v : z) v = rng.gaussian();
      }
      project_facet(z, fixed);
      for (int it = 0; it < 20000; ++it) {
        gradient(z, g);
        znew = z;
        for (int a = 0; a < A; ++a) znew[a] -= g[a] / L;
        project_facet(znew, fixed);
        double move = 0.0;
        for (int a = 0; a < A; ++a) move = std::max(move, std::abs(znew[a] - z[a]));
        z.swap(znew);
        // projected-gradient stationarity: ||z_{k+1} - z_k|| * L below 1e-10
        if (move * L <= 1e-10) break;
      }
      const double f = objective(z);
      if (f < facet_best) {
        facet_best = f;
        facet_arg = z;
      }
    }
    const double norm = std::sqrt(std::max(facet_best, 0.0));
    if (best.facet_path < 0 || norm < best.min_norm_Pz) {
      best.min_norm_Pz = norm;
      best.facet_path = fixed;
      best.minimizer = facet_arg;
    }
  }
  best.kappa = best.min_norm_Pz / net.total_rate();
  return best;
}

}  // namespace wardrop
