#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "biclab/json_io.hpp"

namespace biclab {

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
  std::string kind;
  std::string instance;  // optional JSON file merged under `params`
  std::size_t replications = 1000;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  std::string out = "out";
  json params = json::object();

  json to_json() const;
  static ExperimentConfig from_json(const json& j);
  static ExperimentConfig load(const std::string& path);
  /// Hash of the fields that determine results (jobs and out excluded).
  std::string hash() const;
};

const std::vector<std::string>& experiment_kinds();
bool known_kind(const std::string& kind);

/// Canonical kind for CLI spellings such as {"game", "solve"}; empty if unknown.
std::string resolve_kind(const std::string& word, const std::string& variant = "");

/// BICLAB_SEED, when set to a valid unsigned integer.
std::optional<std::uint64_t> seed_from_env();

struct RunOutcome {
  int exit_code = 0;
  std::vector<std::string> failures;
  std::vector<std::string> files;
  json results;
};

/// Runs the experiment and writes results plus manifest.json into config.out.
/// Throws Error for invalid configurations.
RunOutcome run(const ExperimentConfig& config);

/// run() with errors mapped to exit codes: invalid input is 2, any other
/// failure 1. Diagnostics go to `err`.
int run_and_report(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

}  // namespace biclab
