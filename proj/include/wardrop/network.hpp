#ifndef WARDROP_NETWORK_HPP
#define WARDROP_NETWORK_HPP

#include <string>
#include <vector>

#include "wardrop/latency.hpp"

namespace wardrop {

class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
  explicit validation_error(const std::vector<std::string>& issues)
      : std::runtime_error(join(issues)), issues_(issues) {}
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& v);
  std::vector<std::string> issues_;
};

// ---- plain input description (what configs deserialize into) ----

struct EdgeSpec {
  std::string id, tail, head;
  LatencySpec latency;
  double sigma = 0.0;
};

struct PathSpec {
  std::string label;
  std::vector<std::string> edges;
};

struct UserSpec {
  std::string id, origin, destination;
  double rate = 0.0;
  std::vector<PathSpec> paths;   // ignored when enumerate_paths is set
  bool enumerate_paths = false;  // all simple paths, lexicographic, capped
  int max_paths = 64;
};

struct NetworkSpec {
  std::string name;
  std::vector<std::string> nodes;
  std::vector<EdgeSpec> edges;
  std::vector<UserSpec> users;
};

// ---- built network ----

struct Edge {
  std::string id;
  int tail = -1, head = -1;
  LatencySpec latency;
  double sigma = 0.0;

  bool operator==(const Edge&) const = default;
};

struct User {
  std::string id;
  int origin = -1, destination = -1;
  double rate = 0.0;
  std::vector<std::string> path_labels;
  std::vector<std::vector<int>> paths;  // edge indices, path 0 is the Q base

  bool operator==(const User&) const = default;
};

// A flow: per-user path traffic, stored flat in user-then-path order.
struct Flow {
  std::vector<double> x;

  double& operator[](std::size_t k) { return x[k]; }
  double operator[](std::size_t k) const { return x[k]; }
  std::size_t size() const { return x.size(); }
  bool operator==(const Flow&) const = default;
};

struct LoadProfile {
  std::vector<double> total;                 // includes background
  std::vector<std::vector<double>> per_user; // y_ir, background excluded
};

// Immutable after construction; shared freely across threads.
class Network {
 public:
  friend Network build_network(const NetworkSpec&, std::vector<std::string>*);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<User>& users() const { return users_; }
  const std::vector<double>& background() const { return background_; }

  int edge_count() const { return static_cast<int>(edges_.size()); }
  int user_count() const { return static_cast<int>(users_.size()); }
  int path_count() const { return total_paths_; }
  int path_offset(int user) const { return path_offset_[user]; }
  int path_count(int user) const { return static_cast<int>(users_[user].paths.size()); }
  int user_of_path(int flat) const { return path_user_[flat]; }
  const std::vector<int>& path_edges(int flat) const { return flat_paths_[flat]; }
  // flat path indices crossing edge r (the nonzero rows of P^T)
  const std::vector<int>& paths_on_edge(int r) const { return edge_paths_[r]; }
  bool edge_on_path(int r, int flat) const;

  double total_rate() const { return total_rate_; }  // rho = sum_i rho_i
  // edges used by at least one path (the set E')
  const std::vector<int>& used_edges() const { return used_edges_; }

  // y = P(x) + background
  LoadProfile edge_loads(const Flow& x) const;
  // total loads only, written into y (size edge_count); the sim hot path
  void loads_into(const Flow& x, std::vector<double>& y) const;

  Flow uniform_flow() const;
  Flow zero_flow() const;  // valid only as an algebraic vector, not a Flow
  void validate_flow(const Flow& x, double tol = 1e-9) const;

  // same topology with every latency replaced by its marginal cost
  Network with_marginal_latencies() const;

  bool operator==(const Network&) const = default;

  std::string path_column_name(int flat) const;  // "u<i>.<label>" CSV header

 private:
  std::string name_;
  std::vector<std::string> nodes_;
  std::vector<Edge> edges_;
  std::vector<User> users_;
  std::vector<double> background_;
  std::vector<int> path_offset_;
  std::vector<int> path_user_;
  std::vector<std::vector<int>> flat_paths_;
  std::vector<std::vector<int>> edge_paths_;
  std::vector<int> used_edges_;
  int total_paths_ = 0;
  double total_rate_ = 0.0;
};

// Validates the description, merges duplicate origin-destination pairs
// (summed rates, union of path sets), folds single-path users into constant
// background loads, and precomputes the path/edge incidence. Warnings (merges,
// folds) are appended to *warnings when given.
Network build_network(const NetworkSpec& spec, std::vector<std::string>* warnings = nullptr);

// All simple paths from origin to destination in lexicographic edge-index
// order; throws validation_error when more than max_paths exist.
std::vector<std::vector<int>> enumerate_simple_paths(const NetworkSpec& spec, int origin,
                                                     int destination, int max_paths);

}  // namespace wardrop

#endif
