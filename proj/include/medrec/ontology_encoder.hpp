#pragma once

#include <array>
#include <cstdint>
#include <random>

#include <Eigen/Core>

#include "medrec/autodiff.hpp"
#include "medrec/ontology.hpp"

namespace medrec {

/// Base embedding tables, one row per ontology node (leaves and ancestors).
struct EmbeddingTables {
    std::array<Eigen::MatrixXd, 3> rows;

    const Eigen::MatrixXd& of(EntityType t) const { return rows[type_index(t)]; }
    Eigen::MatrixXd& of(EntityType t) { return rows[type_index(t)]; }
};

/// Entries drawn uniformly from [-0.01, 0.01].
EmbeddingTables init_tables(const OntologyForest& forest, Eigen::Index dim, std::mt19937_64& rng);

// ---- value-level operations -------------------------------------------------

/// exp_project applied to every row.
Eigen::MatrixXd project_table(const Eigen::MatrixXd& table);

/// Sum over the three trees of the Poincare distance of every (descendant, ancestor) pair.
double ancestry_loss(const OntologyForest& forest, const EmbeddingTables& tables);

/// Row i becomes ball(a_1) (+) ... (+) ball(a_l) (+) ball(i), folded left to right from the root.
Eigen::MatrixXd aggregate_ancestors(const OntologyTree& tree, const Eigen::MatrixXd& ball_points);

/// log_origin of the aggregated ball point of every node, per entity type.
std::array<Eigen::MatrixXd, 3> export_hierarchical(const OntologyForest& forest, const EmbeddingTables& tables);

// ---- differentiable counterparts --------------------------------------------

namespace ad {

Var project_rows(const Var& table);
Var log_origin_rows(const Var& ball);
Var ancestor_fold(const Var& ball, const OntologyTree& tree);
/// Sum of pair distances for the tree's ancestor pairs; 1x1.
Var ancestry_distance_sum(const Var& ball, const OntologyTree& tree);

}  // namespace ad

}  // namespace medrec
