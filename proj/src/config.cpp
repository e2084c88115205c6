#include "parley/config.hpp"

#include <fstream>

namespace parley {

void ExperimentConfig::validate() const {
  if (n_agents < 1) throw ConfigError("n_agents: must be >= 1");
  if (n_rounds < 1) throw ConfigError("n_rounds: must be >= 1");
  if (repeats < 1) throw ConfigError("repeats: must be >= 1");
  backend.validate();
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"strategy", to_string(c.strategy)},
                     {"backend", c.backend},
                     {"n_agents", c.n_agents},
                     {"n_rounds", c.n_rounds},
                     {"repeats", c.repeats},
                     {"master_seed", c.master_seed},
                     {"aggregation", to_string(c.aggregation)},
                     {"dataset_path", c.dataset_path},
                     {"output_path", c.output_path}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  if (j.contains("strategy")) c.strategy = strategy_from_string(j.at("strategy").get<std::string>());
  if (j.contains("backend")) j.at("backend").get_to(c.backend);
  c.n_agents = j.value("n_agents", c.n_agents);
  c.n_rounds = j.value("n_rounds", c.n_rounds);
  c.repeats = j.value("repeats", c.repeats);
  c.master_seed = j.value("master_seed", c.master_seed);
  if (j.contains("aggregation")) {
    c.aggregation = aggregation_from_string(j.at("aggregation").get<std::string>());
  }
  c.dataset_path = j.value("dataset_path", c.dataset_path);
  c.output_path = j.value("output_path", c.output_path);
}

void apply_overrides(nlohmann::json& config, const std::vector<std::string>& overrides) {
  for (const std::string& entry : overrides) {
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("overrides: expected key=value, got \"" + entry + "\"");
    }
    std::string key = entry.substr(0, eq);
    const std::string raw = entry.substr(eq + 1);

    // Dotted path -> JSON pointer.
    std::string pointer = "/";
    for (char ch : key) pointer += ch == '.' ? '/' : ch;

    nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;  // plain string value

    try {
      config[nlohmann::json::json_pointer(pointer)] = std::move(value);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("overrides: cannot set \"" + key + "\": " + e.what());
    }
  }
}

nlohmann::json load_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open file \"" + path + "\"");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: parse error in \"" + path + "\": " + e.what());
  }
}

}  // namespace parley
