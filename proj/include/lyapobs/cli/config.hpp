#pragma once

// Experiment configs: JSON documents naming a system, a cocycle, an
// operation and its numeric parameters. See docs/CONFIG.md.

#include "lyapobs/cocycle.hpp"
#include "lyapobs/expansion.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace lyapobs::cli {

using json = nlohmann::ordered_json;

// Malformed or out-of-range configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

extern const std::vector<std::string> kOperations;

struct ExperimentConfig {
  std::string operation;
  std::uint64_t seed = 0;
  json system;
  json cocycle;  // may be null: derivative cocycle
  json bundle;   // theorem-a only
  json params = json::object();
  json expect = json::object();
  std::string source;  // file name, for reports
};

ExperimentConfig parse_config(const json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
// The config as it would be written back: every field, seed included.
json echo(const ExperimentConfig& cfg);

// Reads params with range checks and remembers which keys were used, so
// unknown keys can be rejected.
class Params {
 public:
  explicit Params(const json& params);

  std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t lo, std::int64_t hi);
  double real(const std::string& key, double fallback, double lo, double hi);
  bool flag(const std::string& key, bool fallback);
  bool has(const std::string& key) const;
  const json& raw(const std::string& key);
  // ConfigError naming any key not read so far.
  void finish() const;

 private:
  const json& params_;
  std::set<std::string> used_;
};

std::shared_ptr<const System> build_system(const json& spec);
// Null spec means the derivative cocycle of a toral system.
Cocycle build_cocycle(const json& spec, std::shared_ptr<const System> system);
// Explicit points: {"coords": [...]} on a torus, {"cycle": "0110"} on a shift.
std::vector<Point> build_points(const json& spec, const System& system);
ExpansionContext build_bundle(const json& spec, Cocycle c, std::uint64_t seed);

// The isometric example: a rotation cocycle over an irrational circle
// rotation, whole fiber.
bool is_isometric_example(const json& system_spec);

}  // namespace lyapobs::cli
