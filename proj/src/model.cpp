#include "medrec/model.hpp"

#include <cmath>

#include "medrec/errors.hpp"
#include "medrec/ontology_encoder.hpp"

namespace medrec {

void ModelConfig::validate() const {
    if (dim < 1) throw ConfigError("embedding dim must be positive");
    if (gru_layers < 1) throw ConfigError("GRU needs at least one layer");
    attention.validate();
}

namespace {

Eigen::MatrixXd uniform(Eigen::Index r, Eigen::Index c, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-bound, bound);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
    return m;
}

std::string tag(EntityType t) { return type_tag(t); }

std::string gru_name(EntityType t, int layer, const char* part) {
    return "gru." + tag(t) + ".layer" + std::to_string(layer) + "." + part;
}

std::vector<Eigen::Index> leaf_rows(const OntologyTree& tree) {
    return std::vector<Eigen::Index>(tree.leaves().begin(), tree.leaves().end());
}

}  // namespace

MedRecModel::MedRecModel(OntologyForest forest, CooccurrenceGraph graph, ModelConfig config, std::uint64_t seed)
    : forest_(std::make_shared<const OntologyForest>(std::move(forest))),
      graph_(std::make_shared<const CooccurrenceGraph>(std::move(graph))),
      log_priors_(std::make_shared<const std::vector<double>>(graph_->log_priors())),
      config_(config) {
    config_.validate();
    for (EntityType t : kEntityTypes) {
        if (graph_->count(t) != forest_->tree(t).leaves().size()) {
            throw StructuralError("co-occurrence graph does not match the ontology leaves");
        }
    }
    std::mt19937_64 rng(seed);
    const Eigen::Index d = config_.dim;
    const auto tables = init_tables(*forest_, d, rng);
    for (EntityType t : kEntityTypes) params_.add("ontology.table." + tag(t), tables.of(t));
    params_.add("graph.log_kappa",
                Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(graph_->gate_count()), 1, config_.attention.log_kappa_init));
    for (int l = 0; l < config_.attention.layers; ++l) {
        params_.add("graph.layer" + std::to_string(l) + ".W", uniform(d, d, 1.0 / std::sqrt(double(d)), rng));
        params_.add("graph.layer" + std::to_string(l) + ".a", uniform(2 * d, 1, 1.0 / std::sqrt(double(2 * d)), rng));
    }
    params_.add("fusion.w", Eigen::MatrixXd::Zero(2 * d, 1));
    params_.add("fusion.b", Eigen::MatrixXd::Zero(1, 1));
    for (EntityType t : kEntityTypes) {
        const GruStack stack = init_gru_stack(d, config_.gru_layers, rng);
        for (int l = 0; l < config_.gru_layers; ++l) {
            params_.add(gru_name(t, l, "w_x"), stack[l].w_x);
            params_.add(gru_name(t, l, "w_h"), stack[l].w_h);
            params_.add(gru_name(t, l, "b_x"), stack[l].b_x);
            params_.add(gru_name(t, l, "b_h"), stack[l].b_h);
        }
    }
    const auto m = static_cast<Eigen::Index>(medication_count());
    params_.add("head.W", uniform(m, 3 * d, 1.0 / std::sqrt(double(3 * d)), rng));
    params_.add("head.b", Eigen::MatrixXd::Zero(1, m));
}

ad::Var MedRecModel::bind(ad::Tape& tape, const std::string& name, bool track) const {
    const std::size_t i = params_.index_of(name);
    return track ? tape.param(params_, i) : tape.constant(params_.value(i));
}

MedRecModel::Embedded MedRecModel::embed(ad::Tape& tape, GateMode mode, const GateNoise* noise, bool track,
                                         bool all_pathways) const {
    const Variant v = config_.variant;
    const bool need_hie = all_pathways || v != Variant::NoHie;
    const bool need_co = all_pathways || v != Variant::NoCo;
    Embedded e;
    std::array<ad::Var, 3> tables;
    for (EntityType t : kEntityTypes) tables[type_index(t)] = bind(tape, "ontology.table." + tag(t), track);

    if (need_hie) {
        std::vector<ad::Var> hyp_terms;
        for (EntityType t : kEntityTypes) {
            const auto& tree = forest_->tree(t);
            const ad::Var ball = ad::project_rows(tables[type_index(t)]);
            hyp_terms.push_back(ad::ancestry_distance_sum(ball, tree));
            const ad::Var agg = ad::ancestor_fold(ball, tree);
            e.hie[type_index(t)] = ad::log_origin_rows(ad::gather_rows(agg, leaf_rows(tree)));
        }
        e.hyp = hyp_terms[0] + hyp_terms[1] + hyp_terms[2];
    }
    if (need_co) {
        std::vector<ad::Var> h0;
        for (EntityType t : kEntityTypes) h0.push_back(ad::gather_rows(tables[type_index(t)], leaf_rows(forest_->tree(t))));
        const ad::Var lk = bind(tape, "graph.log_kappa", track);
        e.gates = ad::gate_values(lk, *graph_, *log_priors_, config_.attention, mode, noise);
        std::vector<ad::AttentionLayer> layers;
        for (int l = 0; l < config_.attention.layers; ++l) {
            layers.push_back({bind(tape, "graph.layer" + std::to_string(l) + ".W", track),
                              bind(tape, "graph.layer" + std::to_string(l) + ".a", track)});
        }
        const ad::Var co = ad::encode_cooccurrence(ad::vstack(h0), layers, e.gates, *graph_, *log_priors_, config_.attention);
        for (EntityType t : kEntityTypes) {
            e.co[type_index(t)] = ad::slice_rows(co, static_cast<Eigen::Index>(graph_->offset(t)),
                                                 static_cast<Eigen::Index>(graph_->count(t)));
        }
        e.sparse = ad::sparsity_penalty(lk, *graph_, *log_priors_, config_.attention.gamma);
    }

    const ad::Var w = bind(tape, "fusion.w", track);
    const ad::Var b = bind(tape, "fusion.b", track);
    for (EntityType t : kEntityTypes) {
        const std::size_t k = type_index(t);
        const ad::Var zero = tape.constant(ad::Matrix::Zero(static_cast<Eigen::Index>(graph_->count(t)), config_.dim));
        const ad::Var hie = e.hie[k].valid() ? e.hie[k] : zero;
        const ad::Var co = e.co[k].valid() ? e.co[k] : zero;
        const auto f = ad::combine(v, hie, co, w, b);
        e.fused[k] = f.table;
        e.beta[k] = f.beta;
    }
    return e;
}

ad::Var MedRecModel::predict(ad::Tape& tape, const Embedded& e, const VisitCorpus& corpus,
                             std::span<const std::size_t> patients, bool track, std::vector<ad::VisitRow>* rows) const {
    std::array<std::vector<ad::GruLayerVars>, 3> grus;
    for (EntityType t : kEntityTypes) {
        for (int l = 0; l < config_.gru_layers; ++l) {
            grus[type_index(t)].push_back({bind(tape, gru_name(t, l, "w_x"), track), bind(tape, gru_name(t, l, "w_h"), track),
                                           bind(tape, gru_name(t, l, "b_x"), track), bind(tape, gru_name(t, l, "b_h"), track)});
        }
    }
    auto enc = ad::encode_visits(*forest_, corpus, patients, e.fused, grus);
    if (rows != nullptr) *rows = std::move(enc.rows);
    return ad::predict(enc.z, bind(tape, "head.W", track), bind(tape, "head.b", track));
}

LossParts MedRecModel::loss(ad::Tape& tape, const VisitCorpus& corpus, std::span<const std::size_t> patients,
                            const LossWeights& weights, GateMode mode, const GateNoise* noise) const {
    weights.validate();
    const Embedded e = embed(tape, mode, noise, true);
    std::vector<ad::VisitRow> rows;
    const ad::Var prob = predict(tape, e, corpus, patients, true, &rows);
    const ad::Matrix truth = medication_labels(*forest_, corpus, rows);
    const double inv = 1.0 / static_cast<double>(rows.size());
    const ad::Var bce = inv * ad::bce_sum(prob, truth);
    const ad::Var margin = inv * ad::margin_sum(prob, truth);

    LossParts out;
    out.visits = rows.size();
    out.bce = bce.scalar();
    out.margin = margin.scalar();
    ad::Var total = weights.bce * bce + weights.margin * margin;
    if (e.hyp.valid()) {
        out.hyp = e.hyp.scalar();
        total = total + weights.hyp * e.hyp;
    }
    if (e.sparse.valid()) {
        out.sparse = e.sparse.scalar();
        total = total + weights.sparse * e.sparse;
    }
    out.total = total;
    return out;
}

VisitPredictions MedRecModel::predict(const VisitCorpus& corpus, std::span<const std::size_t> patients) const {
    ad::Tape tape;
    const Embedded e = embed(tape, GateMode::Eval, nullptr, false);
    VisitPredictions out;
    out.prob = predict(tape, e, corpus, patients, false, &out.rows).value();
    out.truth = medication_labels(*forest_, corpus, out.rows);
    return out;
}

EmbeddingSnapshot MedRecModel::embeddings() const {
    ad::Tape tape;
    const Embedded e = embed(tape, GateMode::Eval, nullptr, false, true);
    EmbeddingSnapshot s;
    for (std::size_t k = 0; k < 3; ++k) {
        s.hie[k] = e.hie[k].value();
        s.co[k] = e.co[k].value();
        s.fused[k] = e.fused[k].value();
        s.beta[k] = e.beta[k].value().col(0);
    }
    return s;
}

Eigen::VectorXd MedRecModel::log_kappa() const { return params_.value("graph.log_kappa").col(0); }

std::size_t MedRecModel::retained_edges() const {
    return retained_count(log_kappa(), *graph_, config_.attention.gamma);
}

Eigen::MatrixXd medication_labels(const OntologyForest& forest, const VisitCorpus& corpus,
                                  const std::vector<ad::VisitRow>& rows) {
    const auto& tree = forest.tree(EntityType::Medication);
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                              static_cast<Eigen::Index>(tree.leaves().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c : corpus.patients.at(rows[r].patient).visits.at(rows[r].visit).of(EntityType::Medication)) {
            const long ord = tree.leaf_ordinal(c);
            if (ord < 0) throw LookupError("medication '" + tree.code(c) + "' is not a leaf");
            y(static_cast<Eigen::Index>(r), ord) = 1.0;
        }
    }
    return y;
}

}  // namespace medrec
