#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hisd/landscape.hpp"

namespace hisd {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A validated configuration: the raw input with every missing parameter
// filled with its documented default, plus the log of what was applied.
struct ResolvedConfig {
  nlohmann::ordered_json json;
  std::vector<std::string> defaults_applied;
  std::vector<std::string> warnings;
};

// Validates types and ranges, fills defaults, auto-adjusts dim from
// initial_point, and rejects contradictory settings. Unknown keys warn.
// Idempotent: validating a resolved config applies nothing new.
ResolvedConfig validate_config(const nlohmann::json& raw);

struct Assembled {
  SystemPtr system;
  SearchConfig search;
  LandscapeConfig landscape;
  Eigen::VectorXd initial_point;
  int saddle_index = 0;  // target for single searches
};

// Builds the runtime objects a resolved configuration describes.
Assembled assemble(const ResolvedConfig& config);

struct RestartStep {
  enum class Kind { Point, Saddle } kind = Kind::Point;
  Eigen::VectorXd point;         // Point
  int saddle_id = -1;            // Saddle
  Eigen::VectorXd perturbation;  // Saddle
  int max_index = 0;
};

// Scripted restarts listed under the "restarts" config key.
std::vector<RestartStep> restart_steps(const ResolvedConfig& config);

std::uint64_t fnv1a_hash(const std::string& text);

// Reproducibility envelope: resolved config, seed, system hash, tool version,
// duration and the determinism flag.
nlohmann::ordered_json build_manifest(const ResolvedConfig& config,
                                      const std::string& system_description,
                                      double duration_seconds, bool deterministic);

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace hisd
