#include "wardrop/io.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace wardrop {

using nlohmann::json;

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

struct Issues {
  std::vector<std::string> list;
  void add(const std::string& path, const std::string& what) { list.push_back(path + ": " + what); }
  void raise_if_any() const {
    if (!list.empty()) throw validation_error(list);
  }
};

double get_num(const json& j, const std::string& key, const std::string& path, Issues& issues,
               bool required, double fallback = 0.0) {
  if (!j.contains(key)) {
    if (required) issues.add(path + "." + key, "missing");
    return fallback;
  }
  if (!j.at(key).is_number()) {
    issues.add(path + "." + key, "must be a number");
    return fallback;
  }
  return j.at(key).get<double>();
}

std::string get_str(const json& j, const std::string& key, const std::string& path, Issues& issues,
                    bool required, const std::string& fallback = "") {
  if (!j.contains(key)) {
    if (required) issues.add(path + "." + key, "missing");
    return fallback;
  }
  if (!j.at(key).is_string()) {
    issues.add(path + "." + key, "must be a string");
    return fallback;
  }
  return j.at(key).get<std::string>();
}

LatencySpec parse_latency(const json& j, const std::string& path, Issues& issues) {
  LatencySpec spec;
  if (!j.is_object()) {
    issues.add(path, "latency must be an object");
    return spec;
  }
  const std::string type = get_str(j, "type", path, issues, true);
  if (type == "constant") {
    spec = LatencySpec::constant_fn(get_num(j, "value", path, issues, true));
  } else if (type == "affine") {
    spec = LatencySpec::affine_fn(get_num(j, "slope", path, issues, true),
                                  get_num(j, "intercept", path, issues, false, 0.0));
  } else if (type == "mm1") {
    spec = LatencySpec::mm1_fn(get_num(j, "capacity", path, issues, true));
  } else if (type == "monomial") {
    spec = LatencySpec::monomial_fn(get_num(j, "coef", path, issues, true),
                                    get_num(j, "exponent", path, issues, false, 1.0));
  } else if (!type.empty()) {
    issues.add(path + ".type", "unknown latency type '" + type +
                                   "' (constant, affine, mm1, monomial)");
  }
  return spec;
}

json latency_json(const LatencySpec& s) {
  switch (s.family) {
    case LatencyFamily::constant:
      return {{"type", "constant"}, {"value", s.intercept}};
    case LatencyFamily::affine:
      return {{"type", "affine"}, {"slope", s.slope}, {"intercept", s.intercept}};
    case LatencyFamily::mm1:
      return {{"type", "mm1"}, {"capacity", s.capacity}};
    case LatencyFamily::monomial:
      return {{"type", "monomial"}, {"coef", s.coef}, {"exponent", s.exponent}};
  }
  return {};
}

}  // namespace

ParsedConfig parse_config_json(const json& j, const std::string& origin) {
  Issues issues;
  if (!j.is_object()) {
    issues.add(origin, "top level must be an object");
    issues.raise_if_any();
  }
  if (!j.contains("version"))
    issues.add(origin + ".version", "missing");
  else if (!j.at("version").is_number_integer() || j.at("version").get<int>() != kConfigVersion)
    issues.add(origin + ".version", "unsupported config version");

  ParsedConfig out;
  out.spec.name = get_str(j, "name", origin, issues, false, "");

  if (!j.contains("nodes") || !j.at("nodes").is_array())
    issues.add(origin + ".nodes", "must be an array of node ids");
  else
    for (const auto& n : j.at("nodes")) {
      if (!n.is_string())
        issues.add(origin + ".nodes", "entries must be strings");
      else
        out.spec.nodes.push_back(n.get<std::string>());
    }

  if (!j.contains("edges") || !j.at("edges").is_array())
    issues.add(origin + ".edges", "must be an array");
  else {
    int k = 0;
    for (const auto& e : j.at("edges")) {
      const std::string path = origin + ".edges[" + std::to_string(k++) + "]";
      EdgeSpec es;
      es.id = get_str(e, "id", path, issues, true);
      es.tail = get_str(e, "from", path, issues, true);
      es.head = get_str(e, "to", path, issues, true);
      if (e.contains("latency"))
        es.latency = parse_latency(e.at("latency"), path + ".latency", issues);
      else
        issues.add(path + ".latency", "missing");
      es.sigma = get_num(e, "sigma", path, issues, false, 0.0);
      out.spec.edges.push_back(es);
    }
  }

  if (!j.contains("users") || !j.at("users").is_array())
    issues.add(origin + ".users", "must be an array");
  else {
    int k = 0;
    for (const auto& u : j.at("users")) {
      const std::string path = origin + ".users[" + std::to_string(k++) + "]";
      UserSpec us;
      us.id = get_str(u, "id", path, issues, false, "u" + std::to_string(k));
      us.origin = get_str(u, "from", path, issues, true);
      us.destination = get_str(u, "to", path, issues, true);
      us.rate = get_num(u, "rate", path, issues, true);
      if (u.contains("max_paths")) {
        if (!u.at("max_paths").is_number_integer())
          issues.add(path + ".max_paths", "must be an integer");
        else
          us.max_paths = u.at("max_paths").get<int>();
      }
      if (!u.contains("paths")) {
        issues.add(path + ".paths", "missing (list of paths or \"enumerate\")");
      } else if (u.at("paths").is_string()) {
        if (u.at("paths").get<std::string>() == "enumerate")
          us.enumerate_paths = true;
        else
          issues.add(path + ".paths", "string form must be \"enumerate\"");
      } else if (u.at("paths").is_array()) {
        int pk = 0;
        for (const auto& p : u.at("paths")) {
          const std::string ppath = path + ".paths[" + std::to_string(pk++) + "]";
          PathSpec ps;
          ps.label = get_str(p, "label", ppath, issues, false, "p" + std::to_string(pk - 1));
          if (!p.contains("edges") || !p.at("edges").is_array())
            issues.add(ppath + ".edges", "must be an array of edge ids");
          else
            for (const auto& eid : p.at("edges")) {
              if (!eid.is_string())
                issues.add(ppath + ".edges", "entries must be strings");
              else
                ps.edges.push_back(eid.get<std::string>());
            }
          us.paths.push_back(ps);
        }
      } else {
        issues.add(path + ".paths", "must be an array or \"enumerate\"");
      }
      out.spec.users.push_back(us);
    }
  }
  issues.raise_if_any();

  out.net = build_network(out.spec, &out.warnings);

  // sim block (all optional; lambda defaults to the standard rate 1)
  out.sim = SimConfig{};
  if (j.contains("sim")) {
    const json& s = j.at("sim");
    const std::string path = origin + ".sim";
    if (!s.is_object()) issues.add(path, "must be an object");
    issues.raise_if_any();
    out.sim.dt = get_num(s, "dt", path, issues, false, out.sim.dt);
    out.sim.T = get_num(s, "T", path, issues, false, out.sim.T);
    if (s.contains("seed")) {
      if (!s.at("seed").is_number_integer())
        issues.add(path + ".seed", "must be an integer");
      else
        out.sim.seed = s.at("seed").get<std::uint64_t>();
    }
    out.sim.eps_floor = get_num(s, "eps_floor", path, issues, false, out.sim.eps_floor);
    if (s.contains("record_stride")) {
      if (!s.at("record_stride").is_number_integer())
        issues.add(path + ".record_stride", "must be an integer");
      else
        out.sim.record_stride = s.at("record_stride").get<int>();
    }
    const std::string scheme = get_str(s, "scheme", path, issues, false, "rk4");
    if (scheme == "rk4")
      out.sim.scheme = OdeScheme::rk4;
    else if (scheme == "euler")
      out.sim.scheme = OdeScheme::euler;
    else
      issues.add(path + ".scheme", "must be rk4 or euler");
    if (s.contains("lambda")) {
      const json& l = s.at("lambda");
      out.sim.lambda.assign(out.net.user_count(), 1.0);
      if (l.is_number()) {
        for (auto& v : out.sim.lambda) v = l.get<double>();
      } else if (l.is_object()) {
        for (auto it = l.begin(); it != l.end(); ++it) {
          bool found = false;
          for (int i = 0; i < out.net.user_count(); ++i)
            if (out.net.users()[i].id == it.key()) {
              if (!it.value().is_number())
                issues.add(path + ".lambda." + it.key(), "must be a number");
              else
                out.sim.lambda[i] = it.value().get<double>();
              found = true;
            }
          if (!found) issues.add(path + ".lambda." + it.key(), "unknown user id");
        }
      } else {
        issues.add(path + ".lambda", "must be a number or a map of user ids");
      }
    }
  }
  issues.raise_if_any();
  out.sim.validate(out.net);

  out.noise.sigma.resize(out.net.edge_count());
  for (int r = 0; r < out.net.edge_count(); ++r)
    out.noise.sigma[r] = out.net.edges()[r].sigma;

  out.digest = fnv1a_hex(j.dump());
  return out;
}

ParsedConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw validation_error("config parse failure in '" + path + "': " + e.what());
  }
  return parse_config_json(j, path);
}

json config_json(const NetworkSpec& spec, const SimConfig& sim) {
  json j;
  j["version"] = kConfigVersion;
  if (!spec.name.empty()) j["name"] = spec.name;
  j["nodes"] = spec.nodes;
  j["edges"] = json::array();
  for (const auto& e : spec.edges) {
    json je{{"id", e.id}, {"from", e.tail}, {"to", e.head}, {"latency", latency_json(e.latency)}};
    if (e.sigma != 0.0) je["sigma"] = e.sigma;
    j["edges"].push_back(je);
  }
  j["users"] = json::array();
  for (const auto& u : spec.users) {
    json ju{{"id", u.id}, {"from", u.origin}, {"to", u.destination}, {"rate", u.rate}};
    if (u.enumerate_paths) {
      ju["paths"] = "enumerate";
      ju["max_paths"] = u.max_paths;
    } else {
      ju["paths"] = json::array();
      for (const auto& p : u.paths)
        ju["paths"].push_back(json{{"label", p.label}, {"edges", p.edges}});
    }
    j["users"].push_back(ju);
  }
  json s;
  s["dt"] = sim.dt;
  s["T"] = sim.T;
  s["scheme"] = sim.scheme == OdeScheme::rk4 ? "rk4" : "euler";
  s["seed"] = sim.seed;
  s["eps_floor"] = sim.eps_floor;
  s["record_stride"] = sim.record_stride;
  if (!sim.lambda.empty()) s["lambda"] = sim.lambda.front();
  j["sim"] = s;
  return j;
}

std::vector<std::string> builtin_example_names() {
  return {"braess", "fig1a", "fig1b", "parallel2", "pigou"};
}

json builtin_example(const std::string& name) {
  auto edge = [](const std::string& id, const std::string& a, const std::string& b,
                 json latency) {
    return json{{"id", id}, {"from", a}, {"to", b}, {"latency", std::move(latency)}};
  };
  auto affine = [](double slope, double intercept) {
    return json{{"type", "affine"}, {"slope", slope}, {"intercept", intercept}};
  };
  auto mm1 = [](double cap) { return json{{"type", "mm1"}, {"capacity", cap}}; };

  if (name == "braess") {
    // the classic four-node diamond with the shortcut B->C
    return json{
        {"version", 1},
        {"name", "braess"},
        {"nodes", {"A", "B", "C", "D"}},
        {"edges",
         {edge("AB", "A", "B", affine(10, 0)), edge("AC", "A", "C", affine(1, 50)),
          edge("BD", "B", "D", affine(1, 50)), edge("CD", "C", "D", affine(10, 0)),
          edge("BC", "B", "C", affine(1, 10))}},
        {"users",
         {{{"id", "u1"},
           {"from", "A"},
           {"to", "D"},
           {"rate", 6},
           {"paths",
            {{{"label", "blue"}, {"edges", {"AB", "BD"}}},
             {{"label", "red"}, {"edges", {"AC", "CD"}}},
             {{"label", "green"}, {"edges", {"AB", "BC", "CD"}}}}}}}}};
  }
  if (name == "fig1a") {
    // two users with one shared edge; red(Q) = 0
    return json{
        {"version", 1},
        {"name", "fig1a"},
        {"nodes", {"A", "B", "C", "D"}},
        {"edges",
         {edge("AB", "A", "B", mm1(2.0)), edge("AC", "A", "C", mm1(3.0)),
          edge("CB", "C", "B", mm1(3.0)), edge("BD", "B", "D", mm1(3.0)),
          edge("CD", "C", "D", mm1(2.0))}},
        {"users",
         {{{"id", "u1"},
           {"from", "A"},
           {"to", "B"},
           {"rate", 1},
           {"paths",
            {{{"label", "direct"}, {"edges", {"AB"}}},
             {{"label", "viaC"}, {"edges", {"AC", "CB"}}}}}},
          {{"id", "u2"},
           {"from", "C"},
           {"to", "D"},
           {"rate", 1},
           {"paths",
            {{{"label", "direct"}, {"edges", {"CD"}}},
             {{"label", "viaB"}, {"edges", {"CB", "BD"}}}}}}}}};
  }
  if (name == "fig1b") {
    // fig1a plus a third user A->D; red(Q) = 1
    return json{
        {"version", 1},
        {"name", "fig1b"},
        {"nodes", {"A", "B", "C", "D"}},
        {"edges",
         {edge("AB", "A", "B", mm1(2.5)), edge("AC", "A", "C", mm1(2.5)),
          edge("CB", "C", "B", mm1(2.5)), edge("BD", "B", "D", mm1(2.5)),
          edge("CD", "C", "D", mm1(2.5))}},
        {"users",
         {{{"id", "u1"},
           {"from", "A"},
           {"to", "B"},
           {"rate", 1},
           {"paths",
            {{{"label", "direct"}, {"edges", {"AB"}}},
             {{"label", "viaC"}, {"edges", {"AC", "CB"}}}}}},
          {{"id", "u2"},
           {"from", "C"},
           {"to", "D"},
           {"rate", 1},
           {"paths",
            {{{"label", "direct"}, {"edges", {"CD"}}},
             {{"label", "viaB"}, {"edges", {"CB", "BD"}}}}}},
          {{"id", "u3"},
           {"from", "A"},
           {"to", "D"},
           {"rate", 1},
           {"paths",
            {{{"label", "upper"}, {"edges", {"AB", "BD"}}},
             {{"label", "lower"}, {"edges", {"AC", "CD"}}}}}}}}};
  }
  if (name == "parallel2") {
    // strict equilibrium on the first link, margin 8
    return json{{"version", 1},
                {"name", "parallel2"},
                {"nodes", {"A", "B"}},
                {"edges",
                 {edge("fast", "A", "B", affine(1, 1)), edge("slow", "A", "B", affine(1, 10))}},
                {"users",
                 {{{"id", "u1"},
                   {"from", "A"},
                   {"to", "B"},
                   {"rate", 1},
                   {"paths",
                    {{{"label", "fast"}, {"edges", {"fast"}}},
                     {{"label", "slow"}, {"edges", {"slow"}}}}}}}}};
  }
  if (name == "pigou") {
    return json{{"version", 1},
                {"name", "pigou"},
                {"nodes", {"A", "B"}},
                {"edges",
                 {edge("top", "A", "B", json{{"type", "constant"}, {"value", 1}}),
                  edge("bottom", "A", "B", affine(1, 0))}},
                {"users",
                 {{{"id", "u1"},
                   {"from", "A"},
                   {"to", "B"},
                   {"rate", 1},
                   {"paths",
                    {{{"label", "top"}, {"edges", {"top"}}},
                     {{"label", "bottom"}, {"edges", {"bottom"}}}}}}}}};
  }
  std::string names;
  for (const auto& n : builtin_example_names()) names += (names.empty() ? "" : ", ") + n;
  throw validation_error("unknown example '" + name + "'; available: " + names);
}

RunManifest make_manifest(const std::string& command, const std::string& digest,
                          std::uint64_t seed, double wall_seconds) {
  RunManifest m;
  m.command = command;
  m.config_digest = digest;
  m.seed = seed;
  m.rng_algorithm = Philox::kAlgorithm;
  m.wall_seconds = wall_seconds;
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  m.timestamp = buf;
  return m;
}

json manifest_json(const RunManifest& m) {
  return json{{"command", m.command},
              {"config_digest", m.config_digest},
              {"seed", m.seed},
              {"rng", m.rng_algorithm},
              {"artifact_version", m.artifact_version},
              {"timestamp", m.timestamp},
              {"wall_seconds", m.wall_seconds}};
}

void write_trajectory_csv(const Trajectory& traj, const Network& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "t";
  for (int a = 0; a < net.path_count(); ++a) out << "," << net.path_column_name(a);
  out << ",H_q,phi,L_q,theta,gap\n";
  for (std::size_t s = 0; s < traj.samples(); ++s) {
    out << format_double(traj.t[s]);
    for (int a = 0; a < net.path_count(); ++a) out << "," << format_double(traj.x[s][a]);
    out << "," << format_double(traj.entropy[s]) << "," << format_double(traj.potential[s]) << ","
        << format_double(traj.adjoint[s]) << "," << format_double(traj.theta[s]) << ","
        << format_double(traj.gap[s]) << "\n";
  }
}

void write_manifest(const RunManifest& m, const std::string& csv_path) {
  std::ofstream out(csv_path + ".manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest for '" + csv_path + "'");
  out << manifest_json(m).dump(2) << "\n";
}

namespace {

json flow_json(const Network& net, const Flow& x) {
  json jf = json::object();
  for (int i = 0; i < net.user_count(); ++i) {
    json ju = json::object();
    for (int a = 0; a < net.path_count(i); ++a)
      ju[net.users()[i].path_labels[a]] = x[net.path_offset(i) + a];
    jf[net.users()[i].id] = ju;
  }
  return jf;
}

json per_path_json(const Network& net, const std::vector<double>& v) {
  json jf = json::object();
  for (int i = 0; i < net.user_count(); ++i) {
    json ju = json::object();
    for (int a = 0; a < net.path_count(i); ++a)
      ju[net.users()[i].path_labels[a]] = v[net.path_offset(i) + a];
    jf[net.users()[i].id] = ju;
  }
  return jf;
}

}  // namespace

json redundancy_json(const Network& net) {
  const RedundancyInfo info = redundancy(net);
  json j;
  j["redundancy"] = info.red;
  j["rank"] = info.rank;
  j["lower_bound"] = redundancy_lower_bound(net);
  j["irreducible"] = info.red == 0;
  if (info.red > 0) {
    json kb = json::array();
    for (int k = 0; k < info.red; ++k) kb.push_back(info.kernel_flow_direction(k, net));
    j["kernel_flow_directions"] = kb;
  }
  return j;
}

json equilibrium_report_json(const Network& net, const EquilibriumReport& rep) {
  json j;
  j["network"] = net.name();
  j["flow"] = flow_json(net, rep.flow);
  json loads = json::object();
  for (int r = 0; r < net.edge_count(); ++r) loads[net.edges()[r].id] = rep.loads[r];
  j["loads"] = loads;
  j["delays"] = per_path_json(net, rep.delays);
  j["gap"] = {{"absolute", rep.gap_abs}, {"relative", rep.gap_rel}};
  j["converged"] = rep.converged;
  j["iterations"] = rep.iterations;
  j["seconds"] = rep.seconds;
  j["classification"] = to_string(rep.cls);
  j["redundancy"] = rep.redundancy;
  j["wardrop_set_dimension"] = rep.wardrop_set_dimension;
  j["aggregate_delay"] = rep.aggregate_delay;
  if (rep.cls == EquilibriumClass::strict) {
    json m = json::object();
    for (int i = 0; i < net.user_count(); ++i) m[net.users()[i].id] = rep.strict_margins[i];
    j["strict_margins"] = m;
    j["aggregate_margin"] = rep.aggregate_margin;
  }
  if (rep.cls == EquilibriumClass::interior) j["essence"] = rep.kappa;
  if (rep.aggregate_delay_original != 0.0)
    j["aggregate_delay_original"] = rep.aggregate_delay_original;
  return j;
}

json gap_json(const GapResult& gap) {
  return json{{"absolute", gap.absolute}, {"relative", gap.relative}};
}

json verify_json(const Network& net, const VerifyResult& v) {
  json j;
  j["pass"] = v.pass;
  json list = json::array();
  for (const auto& viol : v.violations) {
    list.push_back(json{{"user", net.users()[viol.user].id},
                        {"supported_path", net.path_column_name(viol.supported_path)},
                        {"faster_path", net.path_column_name(viol.faster_path)},
                        {"margin", viol.margin}});
  }
  j["violations"] = list;
  return j;
}

json ne2_json(const Network& net, const Ne2Result& r) {
  json j;
  j["pass"] = r.pass;
  j["grid"] = r.grid;
  j["probes"] = r.probes;
  j["skipped"] = r.skipped;
  j["best_improvement"] = r.best_improvement;
  if (r.best_user >= 0) {
    j["best_user"] = net.users()[r.best_user].id;
    j["best_deviation"] = flow_json(net, r.best_deviation);
  }
  return j;
}

json slow_learning_json(const SlowLearningReport& r) {
  json j;
  j["case"] = r.strict_case ? "strict" : "interior";
  j["rho"] = r.rho;
  j["sigma2"] = r.sigma2;
  j["lambda_bar"] = r.lambda_bar;
  if (r.strict_case)
    j["delta_omega"] = r.delta_omega;
  else {
    j["m"] = r.m;
    j["kappa"] = r.kappa;
  }
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["margin"] = r.margin;
  j["pass"] = r.pass;
  return j;
}

json hitting_time_json(const HittingTimeReport& r) {
  return json{{"replicates", r.replicates},
              {"delta", r.delta},
              {"t_max", r.t_max},
              {"empirical_mean", r.mean},
              {"std_error", r.std_error},
              {"cap_fraction", r.cap_fraction},
              {"bound", r.bound},
              {"entropy0", r.entropy0},
              {"seed", r.seed},
              {"verdict", to_string(r.verdict)},
              {"comparison", "empirical_mean - 2 SE <= bound"}};
}

json stability_json(const StabilityReport& r) {
  return json{{"replicates", r.replicates},
              {"start_radius", r.start_radius},
              {"tube_radius", r.tube_radius},
              {"target_radius", r.target_radius},
              {"T", r.T},
              {"fraction_stayed", r.fraction_stayed},
              {"fraction_converged", r.fraction_converged},
              {"fraction_both", r.fraction_both},
              {"seed", r.seed}};
}

json invariant_measure_json(const InvariantMeasureReport& r) {
  json occ = json::array();
  for (const auto& p : r.occupancy) {
    occ.push_back(json{{"theta", p.theta},
                       {"occupancy", p.occupancy},
                       {"required", p.required},
                       {"std_error", p.std_error},
                       {"verdict", to_string(p.verdict)}});
  }
  return json{{"theta_lambda", r.theta_lambda},
              {"mean_theta2", r.mean_theta2},
              {"theta2_std_error", r.theta2_std_error},
              {"theta2_bound", r.theta2_bound},
              {"theta2_verdict", to_string(r.theta2_verdict)},
              {"occupancy", occ},
              {"T", r.T},
              {"burn_in", r.burn_in},
              {"seed", r.seed},
              {"condition", slow_learning_json(r.condition)},
              {"pass", r.pass}};
}

json adjoint_lemma_json(const AdjointLemmaReport& r) {
  return json{{"case", r.strict_case ? "strict" : "interior"},
              {"samples", r.samples},
              {"violations", r.violations},
              {"worst_margin", r.worst_margin},
              {"seed", r.seed},
              {"pass", r.pass}};
}

}  // namespace wardrop
