#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "medrec/corpus.hpp"
#include "medrec/ontology.hpp"

namespace medrec {

/// Condition ancestor => medication with a per-visit propensity.
struct MedicationRule {
    std::string ancestor;
    std::string medication;
    double propensity = 1.0;
};

/// Target medication whose only route from unseen codes runs through the ontology.
///
/// Existing leaves of `anchor` ("anchors") prescribe the target unless the `blocker`
/// procedure is present, so no anchor is strongly tied to it. New sibling leaves under
/// the same ancestor always come with the target: visible ones in training and
/// validation visits, and visible or held-out ones in test visits.
struct PlantedScenario {
    std::string target;
    std::string anchor;
    std::string blocker;
    std::vector<std::string> visible_sources;
    std::vector<std::string> held_out_sources;
    double blocker_rate = 0.55;
    double source_rate = 0.05;      ///< anchor-condition visits that use a source, train/validation
    double test_source_rate = 0.5;  ///< same, test patients
    double visit_rate = 0.5;        ///< chance the acute anchor condition appears in a visit

    std::vector<std::string> sources() const;
};

struct GeneratorSpec {
    std::uint64_t seed = 7;
    /// Children per level for the diagnosis, procedure and medication trees.
    std::array<std::vector<int>, 3> branching{{{3, 4, 5}, {2, 3, 5}, {2, 2, 5}}};
    std::size_t patients = 200;
    int min_visits = 2;
    int max_visits = 5;
    /// Persistent conditions are diagnosis ancestors at this depth.
    int condition_depth = 2;
    int min_conditions = 1;
    int max_conditions = 3;
    double condition_active = 0.7;  ///< chance a condition shows up in a given visit
    int min_codes_per_condition = 1;
    int max_codes_per_condition = 2;
    double procedure_rate = 0.7;
    /// Propensities of the medications each condition prescribes when `rules` is empty.
    std::vector<double> rule_propensities{0.9, 0.6};
    /// Explicit rules; when empty they are drawn from the seed.
    std::vector<MedicationRule> rules;
    double noise_rate = 0.1;  ///< chance of one uniformly drawn extra medication per visit
    std::optional<PlantedScenario> planted;
    int max_planting_attempts = 32;

    void validate() const;
};

struct GeneratedData {
    OntologyForest forest;
    VisitCorpus corpus;
    std::vector<MedicationRule> rules;  ///< resolved rule set
    int attempts = 1;                   ///< corpus draws needed to satisfy the planted scenario
};

GeneratedData generate(const GeneratorSpec& spec);

/// Returns a copy of `spec` with the scenario for `target` planted. Throws ConfigError
/// when the diagnosis tree is too shallow or the target is not a medication leaf.
GeneratorSpec plant_unseen_scenario(const GeneratorSpec& spec, const std::string& target, int visible = 2,
                                    int held_out = 2);

/// Larger, cleaner corpus with the unseen scenario for `target` planted; the generator
/// settings the unseen-setting comparison runs on.
GeneratorSpec unseen_benchmark_spec(const std::string& target, std::uint64_t seed = 7);

/// Code of the i-th child (1-based) under `parent`, e.g. D1.2 -> D1.2.3.
std::string child_code(const std::string& parent, int i);

nlohmann::json generator_to_json(const GeneratorSpec& spec);
GeneratorSpec generator_from_json(const nlohmann::json& j);

}  // namespace medrec
