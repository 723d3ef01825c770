#pragma once

#include <array>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "medrec/autodiff.hpp"
#include "medrec/corpus.hpp"
#include "medrec/ontology.hpp"

namespace medrec {

/// One GRU layer. Gate blocks are stacked column-wise as [reset | update | candidate].
struct GruLayer {
    Eigen::MatrixXd w_x;  ///< input x 3 hidden
    Eigen::MatrixXd w_h;  ///< hidden x 3 hidden
    Eigen::RowVectorXd b_x;
    Eigen::RowVectorXd b_h;

    Eigen::Index hidden() const { return w_h.rows(); }
};

using GruStack = std::vector<GruLayer>;

/// Entries uniform in [-1/sqrt(hidden), 1/sqrt(hidden)].
GruLayer init_gru_layer(Eigen::Index input, Eigen::Index hidden, std::mt19937_64& rng);
GruStack init_gru_stack(Eigen::Index dim, int layers, std::mt19937_64& rng);

struct VisitRepresentation {
    Eigen::VectorXd h_d;
    Eigen::VectorXd h_p;
    Eigen::VectorXd h_m;
    Eigen::VectorXd z;  ///< [h_d ; h_p ; h_m]
};

/// Sum of the leaf rows of `table` for the given tree nodes; zero for an empty set.
Eigen::VectorXd visit_embed(const OntologyTree& tree, std::span<const std::size_t> codes, const Eigen::MatrixXd& leaf_table);

/// Top-layer final hidden state after feeding the sequence; zeros for an empty sequence.
Eigen::VectorXd gru_forward(const std::vector<Eigen::VectorXd>& sequence, const GruStack& stack);

/// Representation of visit t (1-based). Diagnoses and procedures use visits 1..t,
/// medications only 1..t-1. `leaf_tables` holds one row per leaf per type.
VisitRepresentation encode_patient(const OntologyForest& forest, const Patient& patient,
                                   const std::array<Eigen::MatrixXd, 3>& leaf_tables,
                                   const std::array<GruStack, 3>& grus, std::size_t t);

namespace ad {

struct GruLayerVars {
    Var w_x, w_h, b_x, b_h;
};

Var gru_cell(const Var& x, const Var& h, const GruLayerVars& layer);

/// Multi-hot selector (rows x leaves) for one entity type.
SparseMatrix multi_hot(const OntologyTree& tree, const std::vector<const std::vector<std::size_t>*>& code_sets);

struct VisitRow {
    std::size_t patient;  ///< index into the corpus
    std::size_t visit;    ///< 0-based
};

struct EncodedVisits {
    Var z;                      ///< one row per visit, 3 dim columns
    std::vector<VisitRow> rows;
};

/// Encodes every visit of the given patients in one batched pass. Patients advance
/// through time together; those with fewer visits drop out as the sequence ends.
EncodedVisits encode_visits(const OntologyForest& forest, const VisitCorpus& corpus,
                            std::span<const std::size_t> patients, const std::array<Var, 3>& leaf_tables,
                            const std::array<std::vector<GruLayerVars>, 3>& grus);

}  // namespace ad

}  // namespace medrec
