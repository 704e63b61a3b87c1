#pragma once

// Internal JSON (de)serialization helpers shared by checkpoint and trainer
// code. Not installed.

#include <nlohmann/json.hpp>

#include "cmf/losses.hpp"
#include "cmf/network.hpp"

namespace cmf::detail {

nlohmann::json network_config_to_json(const NetworkConfig& cfg);
NetworkConfig network_config_from_json(const nlohmann::json& j);

nlohmann::json loss_weights_to_json(const LossWeights& w);
LossWeights loss_weights_from_json(const nlohmann::json& j, LossWeights base = {});

nlohmann::json crf_config_to_json(const CrfConfig& cfg);
CrfConfig crf_config_from_json(const nlohmann::json& j, CrfConfig base = {});

}  // namespace cmf::detail
