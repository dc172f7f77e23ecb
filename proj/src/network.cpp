#include "wardrop/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace wardrop {

std::string validation_error::join(const std::vector<std::string>& v) {
  std::ostringstream os;
  os << v.size() << " validation error(s):";
  for (const auto& s : v) os << "\n  - " << s;
  return os.str();
}

bool Network::edge_on_path(int r, int flat) const {
  const auto& es = flat_paths_[flat];
  return std::find(es.begin(), es.end(), r) != es.end();
}

LoadProfile Network::edge_loads(const Flow& x) const {
  if (static_cast<int>(x.size()) != total_paths_)
    throw validation_error("flow has " + std::to_string(x.size()) + " coordinates, network has " +
                           std::to_string(total_paths_) + " paths");
  LoadProfile lp;
  lp.total = background_;
  lp.per_user.assign(users_.size(), std::vector<double>(edges_.size(), 0.0));
  for (int a = 0; a < total_paths_; ++a) {
    const int i = path_user_[a];
    for (int r : flat_paths_[a]) {
      lp.total[r] += x[a];
      lp.per_user[i][r] += x[a];
    }
  }
  return lp;
}

void Network::loads_into(const Flow& x, std::vector<double>& y) const {
  y = background_;
  for (int a = 0; a < total_paths_; ++a) {
    const double xa = x[a];
    for (int r : flat_paths_[a]) y[r] += xa;
  }
}

Flow Network::uniform_flow() const {
  Flow f;
  f.x.resize(total_paths_);
  for (int i = 0; i < user_count(); ++i) {
    const double v = users_[i].rate / static_cast<double>(users_[i].paths.size());
    for (int a = 0; a < path_count(i); ++a) f.x[path_offset_[i] + a] = v;
  }
  return f;
}

Flow Network::zero_flow() const {
  Flow f;
  f.x.assign(total_paths_, 0.0);
  return f;
}

void Network::validate_flow(const Flow& x, double tol) const {
  if (static_cast<int>(x.size()) != total_paths_)
    throw validation_error("flow dimension mismatch");
  for (int i = 0; i < user_count(); ++i) {
    double sum = 0.0;
    for (int a = 0; a < path_count(i); ++a) {
      const double v = x[path_offset_[i] + a];
      if (v < 0.0) throw validation_error("negative flow coordinate for user " + users_[i].id);
      sum += v;
    }
    if (std::abs(sum - users_[i].rate) > tol)
      throw validation_error("user " + users_[i].id + " flow sums to " + std::to_string(sum) +
                             ", rate is " + std::to_string(users_[i].rate));
  }
}

Network Network::with_marginal_latencies() const {
  Network m = *this;
  for (auto& e : m.edges_) e.latency = e.latency.marginalized_copy();
  return m;
}

std::string Network::path_column_name(int flat) const {
  const int i = path_user_[flat];
  return "u" + std::to_string(i + 1) + "." + users_[i].path_labels[flat - path_offset_[i]];
}

namespace {

// directed walk check: consecutive edges chain tail->head, no repeated edge
bool walk_ok(const std::vector<Edge>& edges, const std::vector<int>& path, int origin,
             int destination, std::string* why) {
  if (path.empty()) {
    *why = "path is empty";
    return false;
  }
  std::set<int> seen;
  int at = origin;
  for (int r : path) {
    if (!seen.insert(r).second) {
      *why = "edge '" + edges[r].id + "' repeated";
      return false;
    }
    if (edges[r].tail != at) {
      *why = "edge '" + edges[r].id + "' does not continue the walk";
      return false;
    }
    at = edges[r].head;
  }
  if (at != destination) {
    *why = "walk ends at the wrong node";
    return false;
  }
  return true;
}

}  // namespace

std::vector<std::vector<int>> enumerate_simple_paths(const NetworkSpec& spec, int origin,
                                                     int destination, int max_paths) {
  // adjacency by edge index, kept sorted so DFS emits lexicographic order
  std::map<std::string, int> node_idx;
  for (std::size_t n = 0; n < spec.nodes.size(); ++n) node_idx[spec.nodes[n]] = static_cast<int>(n);
  std::vector<std::vector<int>> out_edges(spec.nodes.size());
  std::vector<std::pair<int, int>> ends(spec.edges.size());
  for (std::size_t r = 0; r < spec.edges.size(); ++r) {
    ends[r] = {node_idx.at(spec.edges[r].tail), node_idx.at(spec.edges[r].head)};
    out_edges[ends[r].first].push_back(static_cast<int>(r));
  }

  std::vector<std::vector<int>> found;
  std::vector<int> stack;
  std::vector<bool> node_used(spec.nodes.size(), false);
  node_used[origin] = true;

  // iterative DFS over out-edges in index order
  struct Frame {
    int node;
    std::size_t next = 0;
  };
  std::vector<Frame> frames{{origin, 0}};
  while (!frames.empty()) {
    Frame& f = frames.back();
    if (f.node == destination && !stack.empty()) {
      found.push_back(stack);
      if (static_cast<int>(found.size()) > max_paths)
        throw validation_error("more than " + std::to_string(max_paths) +
                               " simple paths between the requested nodes");
      node_used[f.node] = false;
      frames.pop_back();
      if (!stack.empty()) stack.pop_back();
      continue;
    }
    bool advanced = false;
    while (f.next < out_edges[f.node].size()) {
      const int r = out_edges[f.node][f.next++];
      const int head = ends[r].second;
      if (node_used[head]) continue;
      node_used[head] = true;
      stack.push_back(r);
      frames.push_back({head, 0});
      advanced = true;
      break;
    }
    if (!advanced) {
      node_used[f.node] = false;
      frames.pop_back();
      if (!stack.empty()) stack.pop_back();
    }
  }
  std::sort(found.begin(), found.end());
  return found;
}

Network build_network(const NetworkSpec& spec, std::vector<std::string>* warnings) {
  std::vector<std::string> issues;
  Network net;
  net.name_ = spec.name;
  net.nodes_ = spec.nodes;

  std::map<std::string, int> node_idx;
  for (std::size_t n = 0; n < spec.nodes.size(); ++n) {
    if (!node_idx.emplace(spec.nodes[n], static_cast<int>(n)).second)
      issues.push_back("duplicate node id '" + spec.nodes[n] + "'");
  }

  std::map<std::string, int> edge_idx;
  for (const auto& es : spec.edges) {
    Edge e;
    e.id = es.id;
    e.latency = es.latency;
    e.sigma = es.sigma;
    auto t = node_idx.find(es.tail);
    auto h = node_idx.find(es.head);
    if (t == node_idx.end())
      issues.push_back("edge '" + es.id + "': unknown tail node '" + es.tail + "'");
    else
      e.tail = t->second;
    if (h == node_idx.end())
      issues.push_back("edge '" + es.id + "': unknown head node '" + es.head + "'");
    else
      e.head = h->second;
    if (es.sigma < 0.0) issues.push_back("edge '" + es.id + "': negative noise intensity");
    if (es.latency.family == LatencyFamily::mm1 && es.latency.capacity <= 0.0)
      issues.push_back("edge '" + es.id + "': mm1 capacity must be positive");
    if (es.latency.family == LatencyFamily::affine && es.latency.slope <= 0.0)
      issues.push_back("edge '" + es.id + "': affine slope must be positive (use constant)");
    if (es.latency.family == LatencyFamily::monomial &&
        (es.latency.coef <= 0.0 || es.latency.exponent < 1.0))
      issues.push_back("edge '" + es.id + "': monomial needs coef > 0 and exponent >= 1");
    if (!edge_idx.emplace(es.id, static_cast<int>(net.edges_.size())).second)
      issues.push_back("duplicate edge id '" + es.id + "'");
    net.edges_.push_back(e);
  }
  if (!issues.empty()) throw validation_error(issues);

  // resolve user paths
  struct RawUser {
    std::string id;
    int origin, destination;
    double rate;
    std::vector<std::string> labels;
    std::vector<std::vector<int>> paths;
  };
  std::vector<RawUser> raw;
  for (const auto& us : spec.users) {
    RawUser u;
    u.id = us.id;
    u.rate = us.rate;
    auto o = node_idx.find(us.origin);
    auto d = node_idx.find(us.destination);
    if (o == node_idx.end()) {
      issues.push_back("user '" + us.id + "': unknown origin '" + us.origin + "'");
      continue;
    }
    if (d == node_idx.end()) {
      issues.push_back("user '" + us.id + "': unknown destination '" + us.destination + "'");
      continue;
    }
    u.origin = o->second;
    u.destination = d->second;
    if (us.rate <= 0.0) issues.push_back("user '" + us.id + "': rate must be positive");

    if (us.enumerate_paths) {
      std::vector<std::vector<int>> ps;
      try {
        ps = enumerate_simple_paths(spec, u.origin, u.destination, us.max_paths);
      } catch (const validation_error& e) {
        issues.push_back("user '" + us.id + "': " + e.what());
      }
      if (ps.empty()) issues.push_back("user '" + us.id + "': no path from origin to destination");
      for (std::size_t k = 0; k < ps.size(); ++k) {
        u.labels.push_back("p" + std::to_string(k));
        u.paths.push_back(ps[k]);
      }
    } else {
      if (us.paths.empty()) issues.push_back("user '" + us.id + "': no paths given");
      for (const auto& p : us.paths) {
        std::vector<int> path;
        bool ok = true;
        for (const auto& eid : p.edges) {
          auto it = edge_idx.find(eid);
          if (it == edge_idx.end()) {
            issues.push_back("user '" + us.id + "', path '" + p.label + "': unknown edge '" + eid +
                             "'");
            ok = false;
            break;
          }
          path.push_back(it->second);
        }
        if (!ok) continue;
        std::string why;
        if (!walk_ok(net.edges_, path, u.origin, u.destination, &why)) {
          issues.push_back("user '" + us.id + "', path '" + p.label + "': " + why);
          continue;
        }
        u.labels.push_back(p.label.empty() ? "p" + std::to_string(u.paths.size()) : p.label);
        u.paths.push_back(path);
      }
    }
    raw.push_back(std::move(u));
  }
  if (!issues.empty()) throw validation_error(issues);

  // merge duplicate origin-destination pairs: summed rate, union of path sets
  std::vector<RawUser> merged;
  std::map<std::pair<int, int>, int> od_seen;
  for (auto& u : raw) {
    auto key = std::make_pair(u.origin, u.destination);
    auto it = od_seen.find(key);
    if (it == od_seen.end()) {
      od_seen[key] = static_cast<int>(merged.size());
      merged.push_back(std::move(u));
      continue;
    }
    RawUser& m = merged[it->second];
    if (warnings)
      warnings->push_back("users '" + m.id + "' and '" + u.id +
                          "' share an origin-destination pair; merged with rate " +
                          std::to_string(m.rate + u.rate));
    m.rate += u.rate;
    for (std::size_t k = 0; k < u.paths.size(); ++k) {
      if (std::find(m.paths.begin(), m.paths.end(), u.paths[k]) == m.paths.end()) {
        m.paths.push_back(u.paths[k]);
        m.labels.push_back(u.labels[k]);
      }
    }
  }

  // fold single-path users into constant background loads
  net.background_.assign(net.edges_.size(), 0.0);
  for (auto& u : merged) {
    if (u.paths.size() == 1) {
      if (warnings)
        warnings->push_back("user '" + u.id +
                            "' has a single path; folded into background load");
      for (int r : u.paths[0]) net.background_[r] += u.rate;
      continue;
    }
    User user;
    user.id = u.id;
    user.origin = u.origin;
    user.destination = u.destination;
    user.rate = u.rate;
    user.path_labels = std::move(u.labels);
    user.paths = std::move(u.paths);
    net.users_.push_back(std::move(user));
  }

  // incidence tables
  net.path_offset_.resize(net.users_.size());
  net.edge_paths_.assign(net.edges_.size(), {});
  int flat = 0;
  for (std::size_t i = 0; i < net.users_.size(); ++i) {
    net.path_offset_[i] = flat;
    net.total_rate_ += net.users_[i].rate;
    for (const auto& p : net.users_[i].paths) {
      net.path_user_.push_back(static_cast<int>(i));
      net.flat_paths_.push_back(p);
      for (int r : p) net.edge_paths_[r].push_back(flat);
      ++flat;
    }
  }
  net.total_paths_ = flat;
  std::set<int> used;
  for (const auto& p : net.flat_paths_)
    for (int r : p) used.insert(r);
  for (int r : used) net.used_edges_.push_back(r);
  return net;
}

}  // namespace wardrop
