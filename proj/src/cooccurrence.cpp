#include "medrec/cooccurrence.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "medrec/errors.hpp"

namespace medrec {

std::span<const PriorEdge> CooccurrenceGraph::neighborhood(std::size_t i) const {
    if (i >= node_count()) throw LookupError("graph node " + std::to_string(i) + " out of range");
    return std::span<const PriorEdge>(edges_).subspan(row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]);
}

EntityType CooccurrenceGraph::type_of(std::size_t node) const {
    for (EntityType t : kEntityTypes) {
        if (node >= offset(t) && node < offset(t) + count(t)) return t;
    }
    throw LookupError("graph node " + std::to_string(node) + " out of range");
}

std::vector<double> CooccurrenceGraph::log_priors() const {
    std::vector<double> out;
    out.reserve(edges_.size());
    for (const auto& e : edges_) out.push_back(std::log(std::max(e.prior, kPriorFloor)));
    return out;
}

namespace {

std::size_t node_id(const OntologyForest& forest, const std::array<std::size_t, 3>& offsets, EntityType t,
                    std::size_t tree_node) {
    const long ord = forest.tree(t).leaf_ordinal(tree_node);
    if (ord < 0) throw ValidationError(std::string(type_name(t)) + " code '" + forest.tree(t).code(tree_node) + "' is not a leaf");
    return offsets[type_index(t)] + static_cast<std::size_t>(ord);
}

}  // namespace

std::vector<std::size_t> visit_nodes(const OntologyForest& forest, const CooccurrenceGraph& graph, const Visit& visit) {
    std::array<std::size_t, 3> offsets{graph.offset(EntityType::Diagnosis), graph.offset(EntityType::Procedure),
                                       graph.offset(EntityType::Medication)};
    std::vector<std::size_t> nodes;
    for (EntityType t : kEntityTypes) {
        for (std::size_t c : visit.of(t)) {
            if (c >= forest.tree(t).size()) throw ValidationError("visit code outside the ontology");
            nodes.push_back(node_id(forest, offsets, t, c));
        }
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    return nodes;
}

CooccurrenceGraph build_prior(const OntologyForest& forest, const VisitCorpus& corpus,
                              std::span<const std::size_t> patients) {
    CooccurrenceGraph g;
    std::size_t n = 0;
    for (EntityType t : kEntityTypes) {
        const auto& tree = forest.tree(t);
        g.offsets_[type_index(t)] = n;
        g.counts_[type_index(t)] = tree.leaves().size();
        n += tree.leaves().size();
        for (std::size_t leaf : tree.leaves()) g.codes_.push_back(tree.code(leaf));
    }
    g.occurrences_.assign(n, 0);

    // Pair counts per source, ordered so that edge emission is deterministic.
    std::vector<std::map<std::size_t, std::size_t>> pair_counts(n);
    std::size_t visits = 0;
    for (std::size_t p : patients) {
        if (p >= corpus.patients.size()) throw LookupError("patient index out of range");
        for (const auto& visit : corpus.patients[p].visits) {
            ++visits;
            const auto nodes = visit_nodes(forest, g, visit);
            for (std::size_t i : nodes) {
                ++g.occurrences_[i];
                for (std::size_t j : nodes) {
                    if (i != j) ++pair_counts[i][j];
                }
            }
        }
    }
    if (visits == 0) throw ConfigError("cannot build a co-occurrence prior from an empty corpus");

    g.row_ptr_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        g.row_ptr_[i] = g.edges_.size();
        bool self_done = false;
        auto emit_self = [&] {
            g.edges_.push_back(PriorEdge{i, i, 1.0, -1});
            self_done = true;
        };
        for (const auto& [j, c] : pair_counts[i]) {
            if (!self_done && j > i) emit_self();
            const double a = static_cast<double>(c) / static_cast<double>(g.occurrences_[i]);
            g.edges_.push_back(PriorEdge{i, j, a, static_cast<long>(g.gate_count_++)});
        }
        if (!self_done) emit_self();
    }
    g.row_ptr_[n] = g.edges_.size();
    return g;
}

CooccurrenceGraph build_prior(const OntologyForest& forest, const VisitCorpus& corpus) {
    std::vector<std::size_t> all(corpus.patients.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return build_prior(forest, corpus, all);
}

std::string prior_to_csv(const CooccurrenceGraph& graph) {
    std::ostringstream os;
    os.precision(17);
    os << "source_code,target_code,prior_weight\n";
    for (const auto& e : graph.edges()) {
        os << graph.code(e.source) << ',' << graph.code(e.target) << ',' << e.prior << '\n';
    }
    return os.str();
}

}  // namespace medrec
