#pragma once

// Checkpoint container: an 8-byte little-endian manifest length, the JSON manifest
// {"meta": ..., "params": [{"name", "shape": [rows, cols], "offset"}]}, then every
// parameter as little-endian float64 in row-major order. Offsets count doubles.

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "medrec/model.hpp"

namespace medrec {

struct Checkpoint {
    nlohmann::json meta;
    std::vector<std::pair<std::string, Eigen::MatrixXd>> params;
};

nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// `meta` is stored next to the model configuration under "meta".
std::string encode_checkpoint(const MedRecModel& model, const nlohmann::json& meta = nlohmann::json::object());
Checkpoint decode_checkpoint(const std::string& bytes, const std::string& source = "<checkpoint>");

void save_checkpoint(const MedRecModel& model, const std::string& path, const nlohmann::json& meta = nlohmann::json::object());
Checkpoint load_checkpoint(const std::string& path);

/// Copies checkpoint values into the model. Names and shapes must match exactly.
void restore_parameters(MedRecModel& model, const Checkpoint& checkpoint);

}  // namespace medrec
