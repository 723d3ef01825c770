#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "medrec/corpus.hpp"
#include "medrec/ontology.hpp"

namespace medrec {

/// Directed edge i -> j carrying the prior a_ij = |occ(i) & occ(j)| / |occ(i)|.
struct PriorEdge {
    std::size_t source = 0;
    std::size_t target = 0;
    double prior = 0.0;
    /// Index of the learnable gate, or -1 for the structural self-loop.
    long gate = -1;

    bool is_self_loop() const noexcept { return gate < 0; }
};

/// Priors below this floor are clamped before any logarithm.
inline constexpr double kPriorFloor = 1e-6;

/// Directed co-occurrence graph over the ontology leaves of all three entity types.
/// Global node ids place diagnosis leaves first, then procedures, then medications.
class CooccurrenceGraph {
public:
    CooccurrenceGraph() = default;

    std::size_t node_count() const noexcept { return codes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    /// Number of non-self-loop edges, i.e. learnable gates.
    std::size_t gate_count() const noexcept { return gate_count_; }

    /// Edges sorted by (source, target).
    const std::vector<PriorEdge>& edges() const noexcept { return edges_; }
    /// Out-edges of node i, ascending target; always contains the self-loop.
    std::span<const PriorEdge> neighborhood(std::size_t i) const;
    std::size_t row_begin(std::size_t i) const { return row_ptr_.at(i); }

    std::size_t occurrences(std::size_t i) const { return occurrences_.at(i); }
    /// Non-self-loop out-degree.
    std::size_t out_degree(std::size_t i) const { return neighborhood(i).size() - 1; }

    std::size_t offset(EntityType t) const { return offsets_[type_index(t)]; }
    std::size_t count(EntityType t) const { return counts_[type_index(t)]; }
    std::size_t node_of(EntityType t, std::size_t leaf_ordinal) const { return offset(t) + leaf_ordinal; }
    EntityType type_of(std::size_t node) const;
    const std::string& code(std::size_t node) const { return codes_.at(node); }

    /// log(max(prior, kPriorFloor)) per edge, in edge order.
    std::vector<double> log_priors() const;

    friend CooccurrenceGraph build_prior(const OntologyForest&, const VisitCorpus&, std::span<const std::size_t>);

private:
    std::vector<std::string> codes_;
    std::array<std::size_t, 3> offsets_{};
    std::array<std::size_t, 3> counts_{};
    std::vector<PriorEdge> edges_;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> occurrences_;
    std::size_t gate_count_ = 0;
};

/// Global node ids of every code in a visit, ascending.
std::vector<std::size_t> visit_nodes(const OntologyForest& forest, const CooccurrenceGraph& graph, const Visit& visit);

/// Builds the prior from the visits of the given patients (normally the training split).
CooccurrenceGraph build_prior(const OntologyForest& forest, const VisitCorpus& corpus,
                              std::span<const std::size_t> patients);
/// Builds the prior from every patient of the corpus.
CooccurrenceGraph build_prior(const OntologyForest& forest, const VisitCorpus& corpus);

/// CSV "source_code,target_code,prior_weight", one row per edge including self-loops.
std::string prior_to_csv(const CooccurrenceGraph& graph);

}  // namespace medrec
