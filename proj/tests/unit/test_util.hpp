#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "medrec/autodiff.hpp"
#include "medrec/corpus.hpp"
#include "medrec/ontology.hpp"

namespace medrec::test {

inline Eigen::VectorXd random_ball_point(std::mt19937_64& rng, Eigen::Index dim, double max_norm = 0.9) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd v(dim);
    for (auto& x : v) x = g(rng);
    return v.normalized() * (max_norm * std::pow(u(rng), 1.0 / static_cast<double>(dim)));
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
}

/// Analytic gradient of a scalar tape function with respect to its input matrix.
inline Eigen::MatrixXd tape_gradient(const std::function<ad::Var(ad::Tape&, const ad::Var&)>& f,
                                     const Eigen::MatrixXd& x) {
    ad::Tape tape;
    ad::Var v = tape.variable(x);
    ad::Var out = f(tape, v);
    tape.backward(out);
    const auto& g = tape.grad(v.id());
    return g.size() ? Eigen::MatrixXd(g) : Eigen::MatrixXd::Zero(x.rows(), x.cols());
}

inline double tape_value(const std::function<ad::Var(ad::Tape&, const ad::Var&)>& f, const Eigen::MatrixXd& x) {
    ad::Tape tape;
    return f(tape, tape.constant(x)).scalar();
}

/// Central differences with step h.
inline Eigen::MatrixXd numeric_gradient(const std::function<double(const Eigen::MatrixXd&)>& f, Eigen::MatrixXd x,
                                        double h = 1e-6) {
    Eigen::MatrixXd g(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double keep = x.data()[i];
        x.data()[i] = keep + h;
        const double up = f(x);
        x.data()[i] = keep - h;
        const double down = f(x);
        x.data()[i] = keep;
        g.data()[i] = (up - down) / (2.0 * h);
    }
    return g;
}

inline double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-8});
}

/// root -> {a -> {a1, a2}, b -> {b1}} for each type, codes prefixed with the type letter.
inline OntologyForest tiny_forest() {
    OntologyForest f;
    const char* letters[] = {"D", "P", "M"};
    for (std::size_t t = 0; t < 3; ++t) {
        const std::string r = letters[t];
        f.trees[t] = OntologyTree({{r, ""}, {r + "a", r}, {r + "b", r}, {r + "a1", r + "a"}, {r + "a2", r + "a"},
                                   {r + "b1", r + "b"}});
    }
    return f;
}

/// Visit from codes; the first letter picks the tree (D, P or M).
inline Visit make_visit(const OntologyForest& f, const std::vector<std::string>& codes) {
    Visit v;
    for (const auto& c : codes) {
        const EntityType t = c[0] == 'D' ? EntityType::Diagnosis : c[0] == 'P' ? EntityType::Procedure : EntityType::Medication;
        v.of(t).push_back(f.tree(t).node(c));
    }
    for (auto& set : v.codes) std::sort(set.begin(), set.end());
    return v;
}

inline VisitCorpus make_corpus(const OntologyForest& f, const std::vector<std::vector<std::vector<std::string>>>& patients) {
    VisitCorpus c;
    int i = 0;
    for (const auto& visits : patients) {
        Patient p;
        p.id = "P" + std::to_string(i++);
        for (const auto& v : visits) p.visits.push_back(make_visit(f, v));
        c.patients.push_back(std::move(p));
    }
    return c;
}

}  // namespace medrec::test
