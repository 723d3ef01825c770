#include "medrec/patient_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "medrec/errors.hpp"

namespace medrec {

GruLayer init_gru_layer(Eigen::Index input, Eigen::Index hidden, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    std::uniform_real_distribution<double> u(-bound, bound);
    auto fill = [&](Eigen::Index r, Eigen::Index c) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
        return m;
    };
    GruLayer l;
    l.w_x = fill(input, 3 * hidden);
    l.w_h = fill(hidden, 3 * hidden);
    l.b_x = fill(1, 3 * hidden);
    l.b_h = fill(1, 3 * hidden);
    return l;
}

GruStack init_gru_stack(Eigen::Index dim, int layers, std::mt19937_64& rng) {
    GruStack s;
    for (int l = 0; l < layers; ++l) s.push_back(init_gru_layer(dim, dim, rng));
    return s;
}

Eigen::VectorXd visit_embed(const OntologyTree& tree, std::span<const std::size_t> codes, const Eigen::MatrixXd& leaf_table) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(leaf_table.cols());
    for (std::size_t c : codes) {
        if (c >= tree.size()) throw LookupError("code index " + std::to_string(c) + " is outside the ontology");
        const long ord = tree.leaf_ordinal(c);
        if (ord < 0 || ord >= leaf_table.rows()) throw LookupError("code '" + tree.code(c) + "' has no embedding row");
        out += leaf_table.row(ord).transpose();
    }
    return out;
}

namespace {

std::vector<ad::GruLayerVars> bind_stack(ad::Tape& tape, const GruStack& stack) {
    std::vector<ad::GruLayerVars> out;
    for (const auto& l : stack) {
        out.push_back({tape.constant(l.w_x), tape.constant(l.w_h), tape.constant(l.b_x), tape.constant(l.b_h)});
    }
    return out;
}

}  // namespace

Eigen::VectorXd gru_forward(const std::vector<Eigen::VectorXd>& sequence, const GruStack& stack) {
    if (stack.empty()) throw StructuralError("gru_forward: empty layer stack");
    const Eigen::Index d = stack.back().hidden();
    if (sequence.empty()) return Eigen::VectorXd::Zero(d);
    ad::Tape tape;
    const auto layers = bind_stack(tape, stack);
    std::vector<ad::Var> h;
    for (const auto& l : stack) h.push_back(tape.constant(Eigen::MatrixXd::Zero(1, l.hidden())));
    for (const auto& x_t : sequence) {
        ad::Var x = tape.constant(x_t.transpose());
        for (std::size_t l = 0; l < layers.size(); ++l) {
            h[l] = ad::gru_cell(x, h[l], layers[l]);
            x = h[l];
        }
    }
    return h.back().value().row(0).transpose();
}

VisitRepresentation encode_patient(const OntologyForest& forest, const Patient& patient,
                                   const std::array<Eigen::MatrixXd, 3>& leaf_tables,
                                   const std::array<GruStack, 3>& grus, std::size_t t) {
    if (t < 1 || t > patient.visits.size()) {
        throw LookupError("visit index " + std::to_string(t) + " outside 1.." + std::to_string(patient.visits.size()));
    }
    std::array<Eigen::VectorXd, 3> h;
    for (EntityType type : kEntityTypes) {
        const std::size_t k = type_index(type);
        const std::size_t len = type == EntityType::Medication ? t - 1 : t;
        std::vector<Eigen::VectorXd> seq;
        for (std::size_t v = 0; v < len; ++v) seq.push_back(visit_embed(forest.tree(type), patient.visits[v].of(type), leaf_tables[k]));
        h[k] = gru_forward(seq, grus[k]);
    }
    VisitRepresentation r{h[0], h[1], h[2], Eigen::VectorXd(h[0].size() + h[1].size() + h[2].size())};
    r.z << h[0], h[1], h[2];
    return r;
}

namespace ad {

Var gru_cell(const Var& x, const Var& h, const GruLayerVars& layer) {
    const Eigen::Index d = layer.w_h.rows();
    if (layer.w_h.cols() != 3 * d || layer.w_x.cols() != 3 * d) throw StructuralError("gru_cell: gate blocks");
    const Var gx = add_row(matmul(x, layer.w_x), layer.b_x);
    const Var gh = add_row(matmul(h, layer.w_h), layer.b_h);
    const Var r = sigmoid(slice_cols(gx, 0, d) + slice_cols(gh, 0, d));
    const Var u = sigmoid(slice_cols(gx, d, d) + slice_cols(gh, d, d));
    const Var n = tanh(slice_cols(gx, 2 * d, d) + hadamard(r, slice_cols(gh, 2 * d, d)));
    return n + hadamard(u, h - n);
}

SparseMatrix multi_hot(const OntologyTree& tree, const std::vector<const std::vector<std::size_t>*>& code_sets) {
    std::vector<Eigen::Triplet<double>> entries;
    for (std::size_t r = 0; r < code_sets.size(); ++r) {
        for (std::size_t c : *code_sets[r]) {
            if (c >= tree.size()) throw LookupError("code index " + std::to_string(c) + " is outside the ontology");
            const long ord = tree.leaf_ordinal(c);
            if (ord < 0) throw LookupError("code '" + tree.code(c) + "' is not a leaf");
            entries.emplace_back(static_cast<Eigen::Index>(r), ord, 1.0);
        }
    }
    SparseMatrix s(static_cast<Eigen::Index>(code_sets.size()), static_cast<Eigen::Index>(tree.leaves().size()));
    s.setFromTriplets(entries.begin(), entries.end());
    return s;
}

EncodedVisits encode_visits(const OntologyForest& forest, const VisitCorpus& corpus,
                            std::span<const std::size_t> patients, const std::array<Var, 3>& leaf_tables,
                            const std::array<std::vector<GruLayerVars>, 3>& grus) {
    if (patients.empty()) throw ConfigError("encode_visits: no patients");
    std::vector<std::size_t> order(patients.begin(), patients.end());
    for (std::size_t p : order) {
        if (p >= corpus.patients.size()) throw LookupError("patient index out of range");
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return corpus.patients[a].visits.size() > corpus.patients[b].visits.size();
    });
    const std::size_t t_max = corpus.patients[order.front()].visits.size();
    Tape& tape = leaf_tables[0].tape();
    const Eigen::Index d = leaf_tables[0].cols();

    auto active = [&](std::size_t t) {  // patients with more than t visits
        std::size_t n = 0;
        while (n < order.size() && corpus.patients[order[n]].visits.size() > t) ++n;
        return n;
    };
    auto inputs = [&](EntityType type, std::size_t visit, std::size_t n) {
        std::vector<const std::vector<std::size_t>*> sets;
        for (std::size_t k = 0; k < n; ++k) sets.push_back(&corpus.patients[order[k]].visits[visit].of(type));
        return spmm(multi_hot(forest.tree(type), sets), leaf_tables[type_index(type)]);
    };

    std::array<std::vector<Var>, 3> state;
    for (std::size_t k = 0; k < 3; ++k) {
        if (grus[k].empty()) throw StructuralError("encode_visits: empty GRU stack");
        for (std::size_t l = 0; l < grus[k].size(); ++l) {
            state[k].push_back(tape.constant(Matrix::Zero(static_cast<Eigen::Index>(order.size()), d)));
        }
    }
    auto step = [&](std::size_t k, Var x, std::size_t n) {
        for (std::size_t l = 0; l < grus[k].size(); ++l) {
            Var h = state[k][l];
            if (h.rows() != static_cast<Eigen::Index>(n)) h = slice_rows(h, 0, static_cast<Eigen::Index>(n));
            state[k][l] = gru_cell(x, h, grus[k][l]);
            x = state[k][l];
        }
    };

    EncodedVisits out;
    std::vector<Var> blocks;
    for (std::size_t t = 0; t < t_max; ++t) {
        const std::size_t n = active(t);
        step(0, inputs(EntityType::Diagnosis, t, n), n);
        step(1, inputs(EntityType::Procedure, t, n), n);
        if (t > 0) step(2, inputs(EntityType::Medication, t - 1, n), n);
        Var hm = state[2].back();
        if (hm.rows() != static_cast<Eigen::Index>(n)) hm = slice_rows(hm, 0, static_cast<Eigen::Index>(n));
        blocks.push_back(concat_cols(concat_cols(state[0].back(), state[1].back()), hm));
        for (std::size_t k = 0; k < n; ++k) out.rows.push_back(VisitRow{order[k], t});
    }
    out.z = blocks.size() == 1 ? blocks.front() : vstack(blocks);
    return out;
}

}  // namespace ad

}  // namespace medrec
