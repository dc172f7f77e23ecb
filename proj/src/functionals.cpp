#include "wardrop/functionals.hpp"

#include <cmath>
#include <limits>

namespace wardrop {

void check_loads_feasible(const Network& net, const std::vector<double>& y) {
  for (int r = 0; r < net.edge_count(); ++r)
    net.edges()[r].latency.check_feasible(y[r], net.edges()[r].id);
}

void path_delays_from_loads(const Network& net, const std::vector<double>& y,
                            std::vector<double>& omega) {
  omega.assign(net.path_count(), 0.0);
  for (int r = 0; r < net.edge_count(); ++r) {
    const auto& on = net.paths_on_edge(r);
    if (on.empty()) continue;
    const double phi = net.edges()[r].latency.value(y[r]);
    for (int a : on) omega[a] += phi;
  }
}

DelayProfile path_delays(const Network& net, const Flow& x) {
  std::vector<double> y;
  net.loads_into(x, y);
  check_loads_feasible(net, y);

  DelayProfile d;
  path_delays_from_loads(net, y, d.path);
  d.user_avg.assign(net.user_count(), 0.0);
  d.user_worst.assign(net.user_count(), 0.0);
  for (int i = 0; i < net.user_count(); ++i) {
    const int off = net.path_offset(i);
    const double rho = net.users()[i].rate;
    const double thr = kSupportScale * rho;
    double acc = 0.0, worst = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < net.path_count(i); ++a) {
      acc += x[off + a] * d.path[off + a];
      if (x[off + a] > thr) worst = std::max(worst, d.path[off + a]);
    }
    d.user_avg[i] = acc / rho;
    d.user_worst[i] = worst;
  }
  return d;
}

double potential_of_loads(const Network& net, const std::vector<double>& y) {
  check_loads_feasible(net, y);
  double phi = 0.0;
  for (int r = 0; r < net.edge_count(); ++r) phi += net.edges()[r].latency.primitive(y[r]);
  return phi;
}

double rosenthal_potential(const Network& net, const Flow& x) {
  std::vector<double> y;
  net.loads_into(x, y);
  return potential_of_loads(net, y);
}

std::vector<double> potential_gradient(const Network& net, const Flow& x) {
  std::vector<double> y, omega;
  net.loads_into(x, y);
  check_loads_feasible(net, y);
  path_delays_from_loads(net, y, omega);
  return omega;
}

double adjoint_potential_loads(const Network& net, const std::vector<double>& y_ref,
                               const std::vector<double>& y) {
  check_loads_feasible(net, y);
  double L = 0.0;
  for (int r = 0; r < net.edge_count(); ++r)
    L += (y[r] - y_ref[r]) * net.edges()[r].latency.value(y[r]);
  return L;
}

double adjoint_potential(const Network& net, const Flow& q, const Flow& x) {
  std::vector<double> yq, y;
  net.loads_into(q, yq);
  net.loads_into(x, y);
  return adjoint_potential_loads(net, yq, y);
}

double relative_entropy(const Network& net, const Flow& q, const Flow& x,
                        const std::vector<double>& lambda) {
  double H = 0.0;
  for (int i = 0; i < net.user_count(); ++i) {
    const int off = net.path_offset(i);
    const double thr = kSupportScale * net.users()[i].rate;
    double h = 0.0;
    for (int a = 0; a < net.path_count(i); ++a) {
      const double qa = q[off + a];
      if (qa <= thr) continue;
      const double xa = x[off + a];
      if (xa <= 0.0) return std::numeric_limits<double>::infinity();
      h += qa * std::log(qa / xa);
    }
    H += h / lambda[i];
  }
  return H;
}

double aggregate_delay(const Network& net, const Flow& x) {
  const DelayProfile d = path_delays(net, x);
  double w = 0.0;
  for (int i = 0; i < net.user_count(); ++i) w += net.users()[i].rate * d.user_avg[i];
  return w;
}

std::vector<double> uniform_rates(const Network& net, double value) {
  return std::vector<double>(static_cast<std::size_t>(net.user_count()), value);
}

}  // namespace wardrop
