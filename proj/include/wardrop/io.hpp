#ifndef WARDROP_IO_HPP
#define WARDROP_IO_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "wardrop/dynamics.hpp"
#include "wardrop/equilibrium.hpp"
#include "wardrop/experiments.hpp"
#include "wardrop/network.hpp"

namespace wardrop {

constexpr const char* kArtifactVersion = "0.1.0";
constexpr int kConfigVersion = 1;

struct ParsedConfig {
  NetworkSpec spec;
  Network net;
  SimConfig sim;
  NoiseSpec noise;
  std::string digest;  // fnv1a-64 of the canonical serialized config
  std::vector<std::string> warnings;
};

// Structured JSON config -> validated objects. All schema violations are
// reported together with their field paths in one validation_error.
ParsedConfig parse_config(const std::string& path);
ParsedConfig parse_config_json(const nlohmann::json& j, const std::string& origin);

// Inverse of parse_config_json; parse(config_json(parse(x))) is structurally
// equal to parse(x).
nlohmann::json config_json(const NetworkSpec& spec, const SimConfig& sim);

// Canonical configs: braess, fig1a, fig1b, parallel2, pigou. Unknown names
// raise a validation_error listing what exists.
nlohmann::json builtin_example(const std::string& name);
std::vector<std::string> builtin_example_names();

struct RunManifest {
  std::string command;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string rng_algorithm;
  std::string artifact_version = kArtifactVersion;
  std::string timestamp;  // wall clock, ISO-8601
  double wall_seconds = 0.0;
};

nlohmann::json manifest_json(const RunManifest& m);
RunManifest make_manifest(const std::string& command, const std::string& digest,
                          std::uint64_t seed, double wall_seconds);

// CSV: header t, one column per (user,path) coordinate, then the diagnostics
// H_q, phi, L_q, theta, gap. Full double precision, byte-stable for a fixed
// seed and config. The manifest goes to <path>.manifest.json.
void write_trajectory_csv(const Trajectory& traj, const Network& net, const std::string& path);
void write_manifest(const RunManifest& m, const std::string& csv_path);

std::string fnv1a_hex(const std::string& bytes);
std::string format_double(double v);  // %.17g

// report serializers (summary documents)
nlohmann::json equilibrium_report_json(const Network& net, const EquilibriumReport& rep);
nlohmann::json gap_json(const GapResult& gap);
nlohmann::json verify_json(const Network& net, const VerifyResult& v);
nlohmann::json ne2_json(const Network& net, const Ne2Result& r);
nlohmann::json slow_learning_json(const SlowLearningReport& r);
nlohmann::json hitting_time_json(const HittingTimeReport& r);
nlohmann::json stability_json(const StabilityReport& r);
nlohmann::json invariant_measure_json(const InvariantMeasureReport& r);
nlohmann::json adjoint_lemma_json(const AdjointLemmaReport& r);
nlohmann::json redundancy_json(const Network& net);

}  // namespace wardrop

#endif
