#include "medrec/sparse_attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "medrec/errors.hpp"

namespace medrec {

void AttentionConfig::validate() const {
    if (layers < 1) throw ConfigError("attention needs at least one layer");
    if (!(tau > 0)) throw ConfigError("attention temperature tau must be positive");
    if (!(beta > 0)) throw ConfigError("hard-concrete temperature beta must be positive");
    if (!(eta >= 0)) throw ConfigError("prior strength eta must be non-negative");
    if (!(gamma >= 0)) throw ConfigError("prior strength gamma must be non-negative");
    if (!(leaky_slope >= 0)) throw ConfigError("leaky slope must be non-negative");
}

GateNoise GateNoise::sample(std::size_t gates, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    GateNoise n;
    n.u.resize(static_cast<Eigen::Index>(gates));
    for (Eigen::Index g = 0; g < n.u.size(); ++g) {
        double u = dist(rng);
        while (u <= 0.0) u = dist(rng);
        n.u(g) = u;
    }
    return n;
}

namespace {

double logistic(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double leaky(double x, double slope) { return x > 0 ? x : slope * x; }

void require_gate_vector(const Eigen::Index n, const CooccurrenceGraph& graph) {
    if (static_cast<std::size_t>(n) != graph.gate_count()) {
        throw StructuralError("gate parameter vector does not match the graph's edge set");
    }
}

// Softmax quantities of one neighborhood: alpha, shifted exponentials and normalizer.
struct RowSoftmax {
    double normalizer = 0.0;
};

RowSoftmax row_softmax(const CooccurrenceGraph& graph, std::size_t i, const Eigen::MatrixXd& s,
                       const Eigen::MatrixXd& z, double tau, Eigen::VectorXd& alpha, Eigen::VectorXd& ex) {
    const std::size_t b = graph.row_begin(i), e = graph.row_begin(i + 1);
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = b; k < e; ++k) {
        if (z(k, 0) > 0) m = std::max(m, s(k, 0) / tau);
    }
    if (!std::isfinite(m)) {
        throw InvariantError("node '" + graph.code(i) + "' has no open gate in its neighborhood");
    }
    RowSoftmax r;
    for (std::size_t k = b; k < e; ++k) {
        ex(k) = std::exp(std::min(s(k, 0) / tau - m, 700.0));
        r.normalizer += z(k, 0) > 0 ? z(k, 0) * ex(k) : 0.0;
    }
    if (!(r.normalizer > 0)) throw InvariantError("node '" + graph.code(i) + "' has an all-zero attention row");
    for (std::size_t k = b; k < e; ++k) alpha(k) = z(k, 0) > 0 ? z(k, 0) * ex(k) / r.normalizer : 0.0;
    return r;
}

}  // namespace

double inclusion_probability(double log_kappa_bar) { return logistic(log_kappa_bar); }

Eigen::VectorXd effective_log_kappa(const Eigen::VectorXd& log_kappa, const CooccurrenceGraph& graph, double gamma) {
    require_gate_vector(log_kappa.size(), graph);
    Eigen::VectorXd out(log_kappa.size());
    for (const auto& e : graph.edges()) {
        if (e.is_self_loop()) continue;
        out(e.gate) = log_kappa(e.gate) + gamma * std::log(std::max(e.prior, kPriorFloor));
    }
    return out;
}

std::vector<bool> retained_gates(const Eigen::VectorXd& log_kappa, const CooccurrenceGraph& graph, double gamma) {
    const Eigen::VectorXd bar = effective_log_kappa(log_kappa, graph, gamma);
    std::vector<bool> keep(static_cast<std::size_t>(bar.size()));
    for (Eigen::Index g = 0; g < bar.size(); ++g) keep[g] = inclusion_probability(bar(g)) >= 0.5;
    return keep;
}

std::size_t retained_count(const Eigen::VectorXd& log_kappa, const CooccurrenceGraph& graph, double gamma) {
    const auto keep = retained_gates(log_kappa, graph, gamma);
    return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
}

namespace ad {

Var edge_scores(const Var& hw, const Var& a, const CooccurrenceGraph& graph, const std::vector<double>& log_priors,
                const AttentionConfig& config) {
    const Eigen::Index d = hw.cols();
    if (a.rows() != 2 * d || a.cols() != 1) throw StructuralError("edge_scores: scorer must be 2*dim x 1");
    if (static_cast<std::size_t>(hw.rows()) != graph.node_count()) throw StructuralError("edge_scores: feature rows");
    const Eigen::VectorXd p1 = hw.value() * a.value().topRows(d);
    const Eigen::VectorXd p2 = hw.value() * a.value().bottomRows(d);
    const auto& edges = graph.edges();
    Matrix s(static_cast<Eigen::Index>(edges.size()), 1);
    for (std::size_t k = 0; k < edges.size(); ++k) {
        s(k, 0) = leaky(p1(edges[k].source) + p2(edges[k].target), config.leaky_slope) + config.eta * log_priors[k];
    }
    const std::size_t ih = hw.id(), ia = a.id();
    const double slope = config.leaky_slope;
    return hw.tape().record(std::move(s), hw.requires_grad() || a.requires_grad(),
                            [ih, ia, &graph, slope, p1, p2](Tape& t, const Matrix& g) {
                                const Matrix& hwv = t.value(ih);
                                const Matrix& av = t.value(ia);
                                const Eigen::Index d = hwv.cols();
                                Eigen::VectorXd g1 = Eigen::VectorXd::Zero(hwv.rows());
                                Eigen::VectorXd g2 = Eigen::VectorXd::Zero(hwv.rows());
                                const auto& edges = graph.edges();
                                for (std::size_t k = 0; k < edges.size(); ++k) {
                                    const double pre = p1(edges[k].source) + p2(edges[k].target);
                                    const double ge = g(k, 0) * (pre > 0 ? 1.0 : slope);
                                    g1(edges[k].source) += ge;
                                    g2(edges[k].target) += ge;
                                }
                                if (t.requires_grad(ih)) {
                                    t.accumulate_expr(ih, g1 * av.topRows(d).transpose() + g2 * av.bottomRows(d).transpose());
                                }
                                if (t.requires_grad(ia)) {
                                    Matrix ga(2 * d, 1);
                                    ga.topRows(d) = hwv.transpose() * g1;
                                    ga.bottomRows(d) = hwv.transpose() * g2;
                                    t.accumulate(ia, ga);
                                }
                            });
}

Var gate_values(const Var& log_kappa, const CooccurrenceGraph& graph, const std::vector<double>& log_priors,
                const AttentionConfig& config, GateMode mode, const GateNoise* noise) {
    if (!(config.beta > 0)) throw ConfigError("hard-concrete temperature beta must be positive");
    require_gate_vector(log_kappa.rows(), graph);
    const auto& edges = graph.edges();
    const Matrix& lk = log_kappa.value();
    Matrix z(static_cast<Eigen::Index>(edges.size()), 1);
    if (mode == GateMode::Eval) {
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const auto& e = edges[k];
            z(k, 0) = e.is_self_loop()
                          ? 1.0
                          : (inclusion_probability(lk(e.gate, 0) + config.gamma * log_priors[k]) >= 0.5 ? 1.0 : 0.0);
        }
        return log_kappa.tape().constant(std::move(z));
    }
    if (noise == nullptr || static_cast<std::size_t>(noise->u.size()) != graph.gate_count()) {
        throw StructuralError("train-mode gates need one uniform draw per learnable gate");
    }
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto& e = edges[k];
        if (e.is_self_loop()) {
            z(k, 0) = 1.0;
            continue;
        }
        const double u = noise->u(e.gate);
        const double logit_u = std::log(u) - std::log1p(-u);
        z(k, 0) = logistic((logit_u + lk(e.gate, 0) + config.gamma * log_priors[k]) / config.beta);
    }
    const std::size_t il = log_kappa.id();
    const std::size_t io = log_kappa.tape().size();
    const double beta = config.beta;
    return log_kappa.tape().record(std::move(z), log_kappa.requires_grad(), [il, io, &graph, beta](Tape& t, const Matrix& g) {
        const Matrix& zv = t.value(io);
        Matrix gl = Matrix::Zero(static_cast<Eigen::Index>(graph.gate_count()), 1);
        const auto& edges = graph.edges();
        for (std::size_t k = 0; k < edges.size(); ++k) {
            if (edges[k].is_self_loop()) continue;
            gl(edges[k].gate, 0) += g(k, 0) * zv(k, 0) * (1.0 - zv(k, 0)) / beta;
        }
        t.accumulate(il, gl);
    });
}

Var masked_softmax_aggregate(const Var& scores, const Var& gates, const Var& hw, const CooccurrenceGraph& graph,
                             double tau) {
    if (!(tau > 0)) throw ConfigError("attention temperature tau must be positive");
    const auto ne = static_cast<Eigen::Index>(graph.edge_count());
    if (scores.rows() != ne || gates.rows() != ne) throw StructuralError("masked_softmax_aggregate: per-edge inputs");
    if (static_cast<std::size_t>(hw.rows()) != graph.node_count()) throw StructuralError("masked_softmax_aggregate: rows");
    const auto& edges = graph.edges();
    Eigen::VectorXd alpha(ne), ex(ne);
    Matrix out = Matrix::Zero(hw.rows(), hw.cols());
    for (std::size_t i = 0; i < graph.node_count(); ++i) {
        row_softmax(graph, i, scores.value(), gates.value(), tau, alpha, ex);
        for (std::size_t k = graph.row_begin(i); k < graph.row_begin(i + 1); ++k) {
            if (alpha(k) != 0.0) out.row(i) += alpha(k) * hw.value().row(edges[k].target);
        }
    }
    const std::size_t is = scores.id(), iz = gates.id(), ih = hw.id();
    const bool rg = scores.requires_grad() || gates.requires_grad() || hw.requires_grad();
    return hw.tape().record(std::move(out), rg, [is, iz, ih, &graph, tau](Tape& t, const Matrix& g) {
        const Matrix& s = t.value(is);
        const Matrix& z = t.value(iz);
        const Matrix& hwv = t.value(ih);
        const auto& edges = graph.edges();
        const auto ne = static_cast<Eigen::Index>(edges.size());
        Eigen::VectorXd alpha(ne), ex(ne), q(ne);
        Matrix gs = Matrix::Zero(ne, 1), gz = Matrix::Zero(ne, 1), gh = Matrix::Zero(hwv.rows(), hwv.cols());
        for (std::size_t i = 0; i < graph.node_count(); ++i) {
            const RowSoftmax r = row_softmax(graph, i, s, z, tau, alpha, ex);
            const std::size_t b = graph.row_begin(i), e = graph.row_begin(i + 1);
            double qbar = 0.0;
            for (std::size_t k = b; k < e; ++k) {
                q(k) = g.row(i).dot(hwv.row(edges[k].target));
                qbar += alpha(k) * q(k);
            }
            for (std::size_t k = b; k < e; ++k) {
                gh.row(edges[k].target) += alpha(k) * g.row(i);
                gs(k, 0) = alpha(k) * (q(k) - qbar) / tau;
                gz(k, 0) = ex(k) * (q(k) - qbar) / r.normalizer;
            }
        }
        if (t.requires_grad(is)) t.accumulate(is, gs);
        if (t.requires_grad(iz)) t.accumulate(iz, gz);
        if (t.requires_grad(ih)) t.accumulate(ih, gh);
    });
}

Var attention_layer(const Var& h, const AttentionLayer& layer, const Var& gates, const CooccurrenceGraph& graph,
                    const std::vector<double>& log_priors, const AttentionConfig& config) {
    const Var hw = matmul(h, layer.w);
    const Var s = edge_scores(hw, layer.a, graph, log_priors, config);
    return elu(masked_softmax_aggregate(s, gates, hw, graph, config.tau));
}

Var encode_cooccurrence(const Var& h0, const std::vector<AttentionLayer>& layers, const Var& gates,
                        const CooccurrenceGraph& graph, const std::vector<double>& log_priors,
                        const AttentionConfig& config) {
    Var h = h0;
    for (const auto& layer : layers) h = attention_layer(h, layer, gates, graph, log_priors, config);
    return h;
}

Var sparsity_penalty(const Var& log_kappa, const CooccurrenceGraph& graph, const std::vector<double>& log_priors,
                     double gamma) {
    require_gate_vector(log_kappa.rows(), graph);
    Matrix shift(static_cast<Eigen::Index>(graph.gate_count()), 1);
    for (std::size_t k = 0; k < graph.edges().size(); ++k) {
        const auto& e = graph.edges()[k];
        if (!e.is_self_loop()) shift(e.gate, 0) = gamma * log_priors[k];
    }
    return sum(sigmoid(log_kappa + log_kappa.tape().constant(std::move(shift))));
}

}  // namespace ad

Eigen::VectorXd raw_scores(const Eigen::MatrixXd& h, const Eigen::MatrixXd& w, const Eigen::VectorXd& a,
                           const CooccurrenceGraph& graph, const AttentionConfig& config) {
    ad::Tape tape;
    const auto hw = ad::matmul(tape.constant(h), tape.constant(w));
    return ad::edge_scores(hw, tape.constant(a), graph, graph.log_priors(), config).value().col(0);
}

Eigen::VectorXd sample_gates(const Eigen::VectorXd& log_kappa, const CooccurrenceGraph& graph,
                             const AttentionConfig& config, GateMode mode, const GateNoise* noise) {
    ad::Tape tape;
    return ad::gate_values(tape.constant(log_kappa), graph, graph.log_priors(), config, mode, noise).value().col(0);
}

Eigen::VectorXd attention_weights(const Eigen::VectorXd& scores, const Eigen::VectorXd& gates,
                                  const CooccurrenceGraph& graph, double tau) {
    if (!(tau > 0)) throw ConfigError("attention temperature tau must be positive");
    const auto ne = static_cast<Eigen::Index>(graph.edge_count());
    if (scores.size() != ne || gates.size() != ne) throw StructuralError("attention_weights: per-edge inputs");
    Eigen::VectorXd alpha(ne), ex(ne);
    const Eigen::MatrixXd s = scores, z = gates;
    for (std::size_t i = 0; i < graph.node_count(); ++i) row_softmax(graph, i, s, z, tau, alpha, ex);
    return alpha;
}

Eigen::MatrixXd masked_softmax_layer(const Eigen::MatrixXd& h, const Eigen::MatrixXd& w, const Eigen::VectorXd& a,
                                     const Eigen::VectorXd& gates, const CooccurrenceGraph& graph,
                                     const AttentionConfig& config) {
    ad::Tape tape;
    const ad::AttentionLayer layer{tape.constant(w), tape.constant(a)};
    return ad::attention_layer(tape.constant(h), layer, tape.constant(gates), graph, graph.log_priors(), config).value();
}

double sparsity_penalty(const Eigen::VectorXd& log_kappa, const CooccurrenceGraph& graph, double gamma) {
    ad::Tape tape;
    return ad::sparsity_penalty(tape.constant(log_kappa), graph, graph.log_priors(), gamma).scalar();
}

}  // namespace medrec
