#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "csn/actor_critic.hpp"
#include "csn/contact_graph.hpp"
#include "csn/meta_learning.hpp"
#include "csn/request_model.hpp"

namespace csn {

// Full experiment description. Seeds are supplied at run time, not here, so
// one config can drive many seeded runs.
struct ExperimentConfig {
  std::string preset_name;  // "" for fully custom configs
  ConstellationSpec constellation;
  int files = 15;
  std::vector<RequestDistribution> distributions;  // [0] is the primary
  int capacity = 5;
  EvictionRule eviction = EvictionRule::kCapacityBound;
  std::vector<int> hidden_dims{100, 100};
  TrainConfig train;
  MetaConfig meta;

  EncodingDims encoding_dims() const {
    return EncodingDims{constellation.gateways, constellation.satellites,
                        constellation.horizon};
  }
  void check() const;  // throws naming the violated key

  friend bool operator==(const ExperimentConfig&,
                         const ExperimentConfig&) = default;
};

std::vector<std::string> preset_names();
ExperimentConfig preset_config(const std::string& name);

// Flat 'key = value' text with [section] headers; '#' comments. Unknown
// sections or keys are rejected with their line number; constraint
// violations name the offending key.
ExperimentConfig load_config(std::istream& in, const ExperimentConfig& base);
ExperimentConfig load_config_text(const std::string& text,
                                  const ExperimentConfig& base);
std::string serialize_config(const ExperimentConfig& config);

// FNV-1a hash of the canonical serialization, as fixed-width hex.
std::string config_hash(const ExperimentConfig& config);

}  // namespace csn
