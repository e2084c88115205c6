#pragma once

#include "parley/backends.hpp"
#include "parley/core.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace parley {

// One debate/experiment cell.  Serialized verbatim into every transcript's
// config_snapshot, so a persisted run can be re-derived from its outputs.
struct ExperimentConfig {
  Strategy strategy = Strategy::kFixed;
  backends::BackendDescriptor backend;
  int n_agents = 3;
  int n_rounds = 2;  // total rounds including the independent round 1
  int repeats = 1;
  std::uint64_t master_seed = 0;
  Aggregation aggregation = Aggregation::kMajorityVote;
  std::string dataset_path;
  std::string output_path;

  // Throws ConfigError on out-of-range fields (n_agents/n_rounds/repeats
  // must be >= 1) or an invalid backend descriptor.
  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

// Applies "dotted.path=value" overrides onto a JSON config document.
// Values parse as JSON scalars when possible ("5", "true", "1.5") and fall
// back to strings ("madc").  Later overrides win.
void apply_overrides(nlohmann::json& config, const std::vector<std::string>& overrides);

// Reads a JSON config file; throws ConfigError with the path on failure.
nlohmann::json load_config_json(const std::string& path);

}  // namespace parley
