#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "medrec/corpus.hpp"
#include "medrec/ontology.hpp"

namespace medrec {

struct UnseenThresholds {
    double source = 0.5;    ///< a(s -> target) must exceed this
    double reverse = 0.01;  ///< a(target -> s) must exceed this
};

struct UnseenSpec {
    std::string target;
    std::vector<std::string> sources;  ///< diagnosis and procedure codes
    UnseenThresholds thresholds;
};

/// Diagnosis and procedure leaves strongly tied to `target` in the prior built from the
/// training split, in graph node order. Throws LookupError for an unknown target and
/// ValidationError if the target never occurs in training.
std::vector<std::string> select_sources(const OntologyForest& forest, const VisitCorpus& corpus,
                                        const CorpusSplit& split, const std::string& target,
                                        const UnseenThresholds& thresholds = {});

/// Removes every source code from training and validation visits; test visits are copied unchanged.
VisitCorpus apply_unseen(const OntologyForest& forest, const VisitCorpus& corpus, const CorpusSplit& split,
                         const UnseenSpec& spec);

struct UnseenResult {
    UnseenSpec spec;
    VisitCorpus masked;
};

UnseenResult build_unseen(const OntologyForest& forest, const VisitCorpus& corpus, const CorpusSplit& split,
                          const std::string& target, const UnseenThresholds& thresholds = {});

nlohmann::json unseen_to_json(const UnseenSpec& spec);
UnseenSpec unseen_from_json(const nlohmann::json& j);

}  // namespace medrec
