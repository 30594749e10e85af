#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "advaug/data.hpp"
#include "advaug/ensemble.hpp"
#include "advaug/net.hpp"
#include "advaug/trainer.hpp"

namespace advaug {

// JSON forms of the run configuration (documented in docs/config.md). Parsing
// rejects unknown keys; omitted keys keep their defaults.

struct NamedDomain {
  std::string name;
  DomainSpec spec;
};

struct GenConfig {
  std::vector<NamedDomain> domains;
};

struct RunConfig {
  Architecture architecture;
  TrainConfig train;
  std::vector<double> gamma_grid;  // ensemble runs only
  Selection selection = Selection::MaxLogit;
};

nlohmann::json to_json(const DomainSpec& spec);
DomainSpec domain_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GenConfig& cfg);
GenConfig gen_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Architecture& arch);
Architecture architecture_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

// Built-in presets, addressable by name wherever a config path is accepted.
// gen: "identity-shift", "toy-default"; train/ensemble: "toy-default", "defaults".
bool is_gen_preset(const std::string& name);
GenConfig gen_preset(const std::string& name);
bool is_run_preset(const std::string& name);
RunConfig run_preset(const std::string& name);

// 10^{-i}, i = 0..6.
std::vector<double> default_gamma_grid();

}  // namespace advaug
