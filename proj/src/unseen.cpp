#include "medrec/unseen.hpp"

#include <algorithm>
#include <set>

#include "medrec/cooccurrence.hpp"
#include "medrec/errors.hpp"

namespace medrec {

namespace {

std::size_t target_node(const OntologyForest& forest, const CooccurrenceGraph& graph, const std::string& target) {
    const auto& tree = forest.tree(EntityType::Medication);
    if (!tree.contains(target)) throw LookupError("unknown target medication '" + target + "'");
    const long ord = tree.leaf_ordinal(tree.node(target));
    if (ord < 0) throw LookupError("target medication '" + target + "' is not a leaf");
    return graph.node_of(EntityType::Medication, static_cast<std::size_t>(ord));
}

}  // namespace

std::vector<std::string> select_sources(const OntologyForest& forest, const VisitCorpus& corpus,
                                        const CorpusSplit& split, const std::string& target,
                                        const UnseenThresholds& thresholds) {
    const CooccurrenceGraph graph = build_prior(forest, corpus, split.train);
    const std::size_t m = target_node(forest, graph, target);
    if (graph.occurrences(m) == 0) throw ValidationError("target medication '" + target + "' never occurs in training");
    std::vector<double> reverse(graph.node_count(), 0.0);
    for (const auto& e : graph.neighborhood(m)) reverse[e.target] = e.prior;
    std::vector<std::string> out;
    for (const auto& e : graph.edges()) {
        if (e.target != m || e.is_self_loop()) continue;
        if (graph.type_of(e.source) == EntityType::Medication) continue;
        if (e.prior > thresholds.source && reverse[e.source] > thresholds.reverse) out.push_back(graph.code(e.source));
    }
    return out;
}

VisitCorpus apply_unseen(const OntologyForest& forest, const VisitCorpus& corpus, const CorpusSplit& split,
                         const UnseenSpec& spec) {
    std::array<std::set<std::size_t>, 3> drop;
    for (const auto& code : spec.sources) {
        bool found = false;
        for (EntityType t : {EntityType::Diagnosis, EntityType::Procedure}) {
            if (forest.tree(t).contains(code)) {
                drop[type_index(t)].insert(forest.tree(t).node(code));
                found = true;
            }
        }
        if (!found) throw LookupError("unseen source '" + code + "' is not a diagnosis or procedure code");
    }
    VisitCorpus out = corpus;
    auto mask = [&](const std::vector<std::size_t>& patients) {
        for (std::size_t p : patients) {
            for (auto& visit : out.patients.at(p).visits) {
                for (EntityType t : kEntityTypes) {
                    auto& codes = visit.of(t);
                    const auto& d = drop[type_index(t)];
                    codes.erase(std::remove_if(codes.begin(), codes.end(), [&](std::size_t c) { return d.count(c) != 0; }),
                                codes.end());
                }
            }
        }
    };
    mask(split.train);
    mask(split.validation);
    return out;
}

UnseenResult build_unseen(const OntologyForest& forest, const VisitCorpus& corpus, const CorpusSplit& split,
                          const std::string& target, const UnseenThresholds& thresholds) {
    UnseenResult r;
    r.spec.target = target;
    r.spec.thresholds = thresholds;
    r.spec.sources = select_sources(forest, corpus, split, target, thresholds);
    r.masked = apply_unseen(forest, corpus, split, r.spec);
    return r;
}

nlohmann::json unseen_to_json(const UnseenSpec& spec) {
    return {{"target", spec.target},
            {"sources", spec.sources},
            {"thresholds", {{"source", spec.thresholds.source}, {"reverse", spec.thresholds.reverse}}}};
}

UnseenSpec unseen_from_json(const nlohmann::json& j) {
    try {
        UnseenSpec s;
        s.target = j.at("target").get<std::string>();
        s.sources = j.at("sources").get<std::vector<std::string>>();
        s.thresholds.source = j.at("thresholds").at("source").get<double>();
        s.thresholds.reverse = j.at("thresholds").at("reverse").get<double>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("unseen specification: ") + e.what());
    }
}

}  // namespace medrec
