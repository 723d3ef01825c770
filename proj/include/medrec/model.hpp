#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "medrec/autodiff.hpp"
#include "medrec/cooccurrence.hpp"
#include "medrec/corpus.hpp"
#include "medrec/fusion.hpp"
#include "medrec/objective.hpp"
#include "medrec/ontology.hpp"
#include "medrec/parameters.hpp"
#include "medrec/patient_encoder.hpp"
#include "medrec/sparse_attention.hpp"

namespace medrec {

struct ModelConfig {
    Eigen::Index dim = 64;
    int gru_layers = 2;
    AttentionConfig attention;
    Variant variant = Variant::Full;

    void validate() const;
};

/// Per-type leaf embeddings of every pathway, evaluated in eval mode.
struct EmbeddingSnapshot {
    std::array<Eigen::MatrixXd, 3> hie;
    std::array<Eigen::MatrixXd, 3> co;
    std::array<Eigen::MatrixXd, 3> fused;
    std::array<Eigen::VectorXd, 3> beta;
};

/// Probabilities and labels, one row per visit.
struct VisitPredictions {
    Eigen::MatrixXd prob;
    Eigen::MatrixXd truth;
    std::vector<ad::VisitRow> rows;
};

/// Scalar parts of one evaluation of the objective.
struct LossParts {
    ad::Var total;
    double bce = 0.0;     ///< mean over visits
    double margin = 0.0;  ///< mean over visits
    double hyp = 0.0;
    double sparse = 0.0;
    std::size_t visits = 0;
};

/// The complete recommender: ontology tables, gated co-occurrence attention, fusion,
/// the three visit GRUs and the prediction head, all stored in one ParameterStore.
class MedRecModel {
public:
    MedRecModel(OntologyForest forest, CooccurrenceGraph graph, ModelConfig config, std::uint64_t seed);

    const ModelConfig& config() const noexcept { return config_; }
    void set_variant(Variant v) { config_.variant = v; }
    const OntologyForest& forest() const noexcept { return *forest_; }
    const CooccurrenceGraph& graph() const noexcept { return *graph_; }
    ParameterStore& params() noexcept { return params_; }
    const ParameterStore& params() const noexcept { return params_; }
    std::size_t medication_count() const { return forest_->tree(EntityType::Medication).leaves().size(); }

    struct Embedded {
        std::array<ad::Var, 3> fused;
        std::array<ad::Var, 3> beta;
        std::array<ad::Var, 3> hie;  ///< invalid when the pathway is off
        std::array<ad::Var, 3> co;   ///< invalid when the pathway is off
        ad::Var gates;
        ad::Var hyp;     ///< invalid when the hierarchical pathway is off
        ad::Var sparse;  ///< invalid when the co-occurrence pathway is off
    };

    /// Builds the fused leaf tables on `tape`. With `track` false every parameter is a
    /// constant. `all_pathways` computes both pathways even if the variant ignores one.
    Embedded embed(ad::Tape& tape, GateMode mode, const GateNoise* noise, bool track, bool all_pathways = false) const;

    /// Probabilities for every visit of the given patients.
    ad::Var predict(ad::Tape& tape, const Embedded& e, const VisitCorpus& corpus, std::span<const std::size_t> patients,
                    bool track, std::vector<ad::VisitRow>* rows) const;

    /// Weighted objective over the visits of the given patients. Terms of a disabled
    /// pathway are dropped.
    LossParts loss(ad::Tape& tape, const VisitCorpus& corpus, std::span<const std::size_t> patients,
                   const LossWeights& weights, GateMode mode, const GateNoise* noise) const;

    /// Eval-mode predictions.
    VisitPredictions predict(const VisitCorpus& corpus, std::span<const std::size_t> patients) const;

    EmbeddingSnapshot embeddings() const;
    std::size_t retained_edges() const;
    Eigen::VectorXd log_kappa() const;

private:
    ad::Var bind(ad::Tape& tape, const std::string& name, bool track) const;

    std::shared_ptr<const OntologyForest> forest_;
    std::shared_ptr<const CooccurrenceGraph> graph_;
    std::shared_ptr<const std::vector<double>> log_priors_;
    ModelConfig config_;
    ParameterStore params_;
};

/// Binary label matrix (rows x |M|) for the given visit rows.
Eigen::MatrixXd medication_labels(const OntologyForest& forest, const VisitCorpus& corpus,
                                  const std::vector<ad::VisitRow>& rows);

}  // namespace medrec
