#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "medrec/model.hpp"
#include "medrec/synthetic.hpp"
#include "medrec/training.hpp"
#include "medrec/unseen.hpp"

namespace medrec {

struct RunPaths {
    std::string ontology = "ontology.json";
    std::string corpus = "corpus.jsonl";
    std::string checkpoint = "model.ckpt";
    std::string unseen;  ///< UnseenSpec JSON; empty means none
    std::string out_dir = ".";
};

/// Settings of the unseen-medication setting and its planted generator scenario.
struct UnseenSettings {
    bool plant = false;
    int visible = 2;
    int held_out = 2;
    UnseenThresholds thresholds;
};

/// Everything one CLI invocation needs. Relative paths resolve against `out_dir`.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string variant = "full";
    std::string target_med;
    RunPaths paths;
    TrainConfig train;
    ModelConfig model;
    GeneratorSpec generator;
    UnseenSettings unseen;
    double strong_prior = 0.5;

    std::string resolve(const std::string& path) const;
};

/// The default configuration as a JSON document; it also defines the set of valid keys.
nlohmann::json default_config_json();

/// Recursively merges `patch` into `base`. Keys absent from `base` throw ConfigError.
void merge_config(nlohmann::json& base, const nlohmann::json& patch, const std::string& where = "");

/// Sets the field at a dotted path ("train.learning_rate") from command-line text, parsed
/// as JSON when possible and as a string otherwise. Throws ConfigError on an unknown key or a type mismatch.
void set_dotted(nlohmann::json& doc, const std::string& dotted, const std::string& text);

RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const RunConfig& config);

/// Defaults, then the optional file, then the overrides in order.
RunConfig load_run_config(const std::string& file, const std::vector<std::pair<std::string, std::string>>& overrides);

}  // namespace medrec
