#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "motioncast/model.hpp"

namespace motioncast {

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Versioned binary container: JSON header (config + caller metadata +
/// tensor directory) followed by raw little-endian doubles. Round-trips
/// reproduce every parameter bit-exactly.
void save_checkpoint(const std::string& path, const ModelState& state,
                     const nlohmann::json& meta = nlohmann::json::object(),
                     const std::vector<std::pair<std::string, Tensor>>& extra = {});

ModelState load_checkpoint(const std::string& path,
                           nlohmann::json* meta = nullptr,
                           std::vector<std::pair<std::string, Tensor>>* extra = nullptr);

}  // namespace motioncast
