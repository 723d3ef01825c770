#include "medrec/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "medrec/errors.hpp"

namespace medrec {

namespace {

void require_batch(const PredictionBatch& b) {
    if (b.prob.rows() != b.truth.rows() || b.prob.cols() != b.truth.cols()) {
        throw StructuralError("prediction and label shapes differ");
    }
    if (b.prob.rows() == 0) throw StructuralError("empty prediction batch");
}

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

double jaccard(const PredictionBatch& b) {
    require_batch(b);
    double total = 0.0;
    for (Eigen::Index v = 0; v < b.prob.rows(); ++v) {
        int inter = 0, uni = 0;
        for (Eigen::Index m = 0; m < b.prob.cols(); ++m) {
            const bool p = b.predicted(v, m), t = b.positive(v, m);
            inter += p && t;
            uni += p || t;
        }
        total += uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
    }
    return total / static_cast<double>(b.prob.rows());
}

double prauc(const PredictionBatch& b, std::size_t* skipped) {
    require_batch(b);
    double total = 0.0;
    std::size_t used = 0, skip = 0;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(b.prob.cols()));
    for (Eigen::Index v = 0; v < b.prob.rows(); ++v) {
        const double positives = b.truth.row(v).sum();
        if (positives <= 0) {
            ++skip;
            continue;
        }
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index x, Eigen::Index y) { return b.prob(v, x) > b.prob(v, y); });
        double hits = 0.0, ap = 0.0;
        for (std::size_t k = 0; k < order.size(); ++k) {
            if (!b.positive(v, order[k])) continue;
            hits += 1.0;
            ap += hits / static_cast<double>(k + 1);
        }
        total += ap / positives;
        ++used;
    }
    if (skipped != nullptr) *skipped = skip;
    return used == 0 ? 0.0 : total / static_cast<double>(used);
}

double f1(const PredictionBatch& b) {
    require_batch(b);
    double total = 0.0;
    for (Eigen::Index v = 0; v < b.prob.rows(); ++v) {
        double tp = 0, pred = 0, pos = 0;
        for (Eigen::Index m = 0; m < b.prob.cols(); ++m) {
            const bool p = b.predicted(v, m), t = b.positive(v, m);
            tp += p && t;
            pred += p;
            pos += t;
        }
        const double precision = ratio(tp, pred), recall = ratio(tp, pos);
        total += ratio(2.0 * precision * recall, precision + recall);
    }
    return total / static_cast<double>(b.prob.rows());
}

TargetScores target_scores(const PredictionBatch& b, Eigen::Index med) {
    require_batch(b);
    if (med < 0 || med >= b.prob.cols()) throw LookupError("target medication column out of range");
    double tp = 0, pred = 0, pos = 0;
    for (Eigen::Index v = 0; v < b.prob.rows(); ++v) {
        const bool p = b.predicted(v, med), t = b.positive(v, med);
        tp += p && t;
        pred += p;
        pos += t;
    }
    TargetScores s;
    s.precision = ratio(tp, pred);
    s.recall = ratio(tp, pos);
    s.f1 = ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
    return s;
}

double med_count_mean(const PredictionBatch& b) {
    require_batch(b);
    double total = 0.0;
    for (Eigen::Index v = 0; v < b.prob.rows(); ++v)
        for (Eigen::Index m = 0; m < b.prob.cols(); ++m) total += b.predicted(v, m);
    return total / static_cast<double>(b.prob.rows());
}

EvaluationScores score(const PredictionBatch& batch, std::optional<Eigen::Index> target) {
    EvaluationScores s;
    s.jaccard = jaccard(batch);
    s.prauc = prauc(batch, &s.prauc_skipped);
    s.f1 = f1(batch);
    s.med_count_mean = med_count_mean(batch);
    if (target) s.target = target_scores(batch, *target);
    return s;
}

}  // namespace medrec
