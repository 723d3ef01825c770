#include "medrec/ontology_encoder.hpp"

#include "medrec/errors.hpp"
#include "medrec/geometry.hpp"

namespace medrec {

namespace geo = geometry;

EmbeddingTables init_tables(const OntologyForest& forest, Eigen::Index dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.01, 0.01);
    EmbeddingTables t;
    for (EntityType type : kEntityTypes) {
        auto& m = t.of(type);
        m.resize(static_cast<Eigen::Index>(forest.tree(type).size()), dim);
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = u(rng);
    }
    return t;
}

Eigen::MatrixXd project_table(const Eigen::MatrixXd& table) {
    Eigen::MatrixXd out(table.rows(), table.cols());
    for (Eigen::Index i = 0; i < table.rows(); ++i) out.row(i) = geo::exp_project(table.row(i).transpose()).transpose();
    return out;
}

namespace {

double pair_sum(const OntologyTree& tree, const Eigen::MatrixXd& ball) {
    double total = 0.0;
    for (const auto& [i, j] : tree.ancestor_pairs()) {
        if (static_cast<Eigen::Index>(std::max(i, j)) >= ball.rows()) {
            throw StructuralError("ancestor pair references a node without an embedding row");
        }
        total += geo::poincare_distance(ball.row(i).transpose(), ball.row(j).transpose());
    }
    return total;
}

void require_rows(const OntologyTree& tree, const Eigen::MatrixXd& m, const char* what) {
    if (static_cast<std::size_t>(m.rows()) != tree.size()) {
        throw StructuralError(std::string(what) + ": table rows do not match the ontology tree");
    }
}

}  // namespace

double ancestry_loss(const OntologyForest& forest, const EmbeddingTables& tables) {
    double total = 0.0;
    for (EntityType t : kEntityTypes) {
        require_rows(forest.tree(t), tables.of(t), "ancestry_loss");
        total += pair_sum(forest.tree(t), project_table(tables.of(t)));
    }
    return total;
}

Eigen::MatrixXd aggregate_ancestors(const OntologyTree& tree, const Eigen::MatrixXd& ball_points) {
    require_rows(tree, ball_points, "aggregate_ancestors");
    Eigen::MatrixXd agg(ball_points.rows(), ball_points.cols());
    for (std::size_t i : tree.topological_order()) {
        const long p = tree.parent(i);
        if (p < 0) {
            agg.row(i) = ball_points.row(i);
        } else {
            agg.row(i) = geo::mobius_add(agg.row(p).transpose(), ball_points.row(i).transpose()).transpose();
        }
    }
    return agg;
}

std::array<Eigen::MatrixXd, 3> export_hierarchical(const OntologyForest& forest, const EmbeddingTables& tables) {
    std::array<Eigen::MatrixXd, 3> out;
    for (EntityType t : kEntityTypes) {
        const auto agg = aggregate_ancestors(forest.tree(t), project_table(tables.of(t)));
        auto& e = out[type_index(t)];
        e.resize(agg.rows(), agg.cols());
        for (Eigen::Index i = 0; i < agg.rows(); ++i) e.row(i) = geo::log_origin(agg.row(i).transpose()).transpose();
    }
    return out;
}

namespace ad {

Var project_rows(const Var& table) {
    const std::size_t in = table.id();
    return table.tape().record(project_table(table.value()), table.requires_grad(), [in](Tape& t, const Matrix& g) {
        const Matrix& v = t.value(in);
        Matrix gi(v.rows(), v.cols());
        for (Eigen::Index i = 0; i < v.rows(); ++i)
            gi.row(i) = geo::exp_project_vjp(v.row(i).transpose(), g.row(i).transpose()).transpose();
        t.accumulate(in, gi);
    });
}

Var log_origin_rows(const Var& ball) {
    const std::size_t in = ball.id();
    const Matrix& y = ball.value();
    Matrix out(y.rows(), y.cols());
    for (Eigen::Index i = 0; i < y.rows(); ++i) out.row(i) = geo::log_origin(y.row(i).transpose()).transpose();
    return ball.tape().record(std::move(out), ball.requires_grad(), [in](Tape& t, const Matrix& g) {
        const Matrix& y = t.value(in);
        Matrix gi(y.rows(), y.cols());
        for (Eigen::Index i = 0; i < y.rows(); ++i)
            gi.row(i) = geo::log_origin_vjp(y.row(i).transpose(), g.row(i).transpose()).transpose();
        t.accumulate(in, gi);
    });
}

Var ancestor_fold(const Var& ball, const OntologyTree& tree) {
    require_rows(tree, ball.value(), "ancestor_fold");
    const std::size_t in = ball.id();
    const std::size_t out_id = ball.tape().size();
    std::vector<long> parent(tree.size());
    for (std::size_t i = 0; i < tree.size(); ++i) parent[i] = tree.parent(i);
    return ball.tape().record(
        aggregate_ancestors(tree, ball.value()), ball.requires_grad(),
        [in, out_id, parent, order = tree.topological_order()](Tape& t, const Matrix& g) {
            const Matrix& e = t.value(in);
            const Matrix& agg = t.value(out_id);
            Matrix g_agg = g;
            Matrix g_e = Matrix::Zero(e.rows(), e.cols());
            for (auto it = order.rbegin(); it != order.rend(); ++it) {
                const std::size_t i = *it;
                const long p = parent[i];
                if (p < 0) {
                    g_e.row(i) += g_agg.row(i);
                    continue;
                }
                auto [dx, dy] = geo::mobius_add_vjp(agg.row(p).transpose(), e.row(i).transpose(), g_agg.row(i).transpose());
                g_agg.row(p) += dx.transpose();
                g_e.row(i) += dy.transpose();
            }
            t.accumulate(in, g_e);
        });
}

Var ancestry_distance_sum(const Var& ball, const OntologyTree& tree) {
    require_rows(tree, ball.value(), "ancestry_distance_sum");
    const std::size_t in = ball.id();
    return ball.tape().record(Matrix::Constant(1, 1, pair_sum(tree, ball.value())), ball.requires_grad(),
                              [in, pairs = tree.ancestor_pairs()](Tape& t, const Matrix& g) {
                                  const Matrix& b = t.value(in);
                                  Matrix gi = Matrix::Zero(b.rows(), b.cols());
                                  for (const auto& [i, j] : pairs) {
                                      auto [gx, gy] = geo::poincare_distance_grad(b.row(i).transpose(), b.row(j).transpose());
                                      gi.row(i) += g(0, 0) * gx.transpose();
                                      gi.row(j) += g(0, 0) * gy.transpose();
                                  }
                                  t.accumulate(in, gi);
                              });
}

}  // namespace ad

}  // namespace medrec
