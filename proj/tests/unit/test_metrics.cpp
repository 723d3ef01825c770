#include <gtest/gtest.h>

#include <random>

#include "medrec/errors.hpp"
#include "medrec/metrics.hpp"

namespace {

using namespace medrec;
using Eigen::MatrixXd;

PredictionBatch batch(std::initializer_list<std::initializer_list<double>> prob,
                      std::initializer_list<std::initializer_list<double>> truth) {
    PredictionBatch b;
    auto fill = [](MatrixXd& m, std::initializer_list<std::initializer_list<double>> rows) {
        m.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
        Eigen::Index r = 0;
        for (const auto& row : rows) {
            Eigen::Index c = 0;
            for (double x : row) m(r, c++) = x;
            ++r;
        }
    };
    fill(b.prob, prob);
    fill(b.truth, truth);
    return b;
}

// Oracles: plain loops over visits and medications.
struct Counts {
    int tp = 0, fp = 0, fn = 0;
};

Counts counts(const PredictionBatch& b, Eigen::Index v) {
    Counts c;
    for (Eigen::Index m = 0; m < b.prob.cols(); ++m) {
        const bool p = b.prob(v, m) >= 0.5, t = b.truth(v, m) == 1.0;
        c.tp += p && t;
        c.fp += p && !t;
        c.fn += !p && t;
    }
    return c;
}

double oracle_jaccard(const PredictionBatch& b) {
    double s = 0.0;
    for (Eigen::Index v = 0; v < b.prob.rows(); ++v) {
        const Counts c = counts(b, v);
        const int uni = c.tp + c.fp + c.fn;
        s += uni == 0 ? 1.0 : static_cast<double>(c.tp) / uni;
    }
    return s / static_cast<double>(b.prob.rows());
}

double oracle_f1(const PredictionBatch& b) {
    double s = 0.0;
    for (Eigen::Index v = 0; v < b.prob.rows(); ++v) {
        const Counts c = counts(b, v);
        const double p = c.tp + c.fp ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
        const double r = c.tp + c.fn ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
        s += p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    }
    return s / static_cast<double>(b.prob.rows());
}

// Rank of each medication enumerated explicitly; ties go to the lower index.
double oracle_ap(const PredictionBatch& b, std::size_t& skipped) {
    double s = 0.0;
    std::size_t used = 0;
    skipped = 0;
    const Eigen::Index n = b.prob.cols();
    for (Eigen::Index v = 0; v < b.prob.rows(); ++v) {
        std::vector<Eigen::Index> rank(static_cast<std::size_t>(n));
        int positives = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            rank[static_cast<std::size_t>(i)] = 1;
            for (Eigen::Index j = 0; j < n; ++j)
                if (b.prob(v, j) > b.prob(v, i) || (b.prob(v, j) == b.prob(v, i) && j < i)) ++rank[static_cast<std::size_t>(i)];
            positives += b.truth(v, i) == 1.0;
        }
        if (positives == 0) {
            ++skipped;
            continue;
        }
        double ap = 0.0;
        int hits = 0;
        for (Eigen::Index r = 1; r <= n; ++r)
            for (Eigen::Index i = 0; i < n; ++i)
                if (rank[static_cast<std::size_t>(i)] == r && b.truth(v, i) == 1.0) ap += static_cast<double>(++hits) / static_cast<double>(r);
        s += ap / positives;
        ++used;
    }
    return used ? s / static_cast<double>(used) : 0.0;
}

TEST(Metrics, WorkedExamples) {
    // pred {A,B}, truth {B,C}
    const PredictionBatch b = batch({{0.9, 0.8, 0.1}}, {{0, 1, 1}});
    EXPECT_NEAR(jaccard(b), 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(f1(b), 0.5, 1e-12);
    EXPECT_NEAR(prauc(batch({{0.2, 0.9}}, {{1, 0}})), 0.5, 1e-12);
    EXPECT_EQ(jaccard(batch({{0.1, 0.9}}, {{0, 1}})), 1.0);
    EXPECT_EQ(jaccard(batch({{0.1, 0.1}}, {{0, 1}})), 0.0);
    EXPECT_EQ(jaccard(batch({{0.1, 0.1}}, {{0, 0}})), 1.0);
    EXPECT_EQ(prauc(batch({{0.9, 0.8, 0.1}}, {{1, 1, 0}})), 1.0);
    EXPECT_EQ(med_count_mean(batch({{0.9, 0.8, 0.1}, {0.2, 0.5, 0.1}}, {{1, 1, 0}, {0, 0, 0}})), 1.5);
}

TEST(Metrics, TargetScoresPoolVisits) {
    const PredictionBatch b = batch({{0.9, 0.1}, {0.8, 0.1}, {0.1, 0.1}, {0.2, 0.1}}, {{1, 0}, {0, 0}, {1, 0}, {1, 1}});
    const TargetScores t = target_scores(b, 0);
    EXPECT_NEAR(t.precision, 0.5, 1e-15);
    EXPECT_NEAR(t.recall, 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(t.f1, 0.4, 1e-15);
    const TargetScores never = target_scores(b, 1);
    EXPECT_EQ(never.f1, 0.0);
    EXPECT_EQ(never.precision, 0.0);
    EXPECT_EQ(target_scores(batch({{0.9}, {0.1}}, {{1}, {0}}), 0).f1, 1.0);
}

TEST(Metrics, SkippedVisitsAreCounted) {
    std::size_t skipped = 7;
    EXPECT_EQ(prauc(batch({{0.9, 0.1}, {0.2, 0.3}}, {{1, 0}, {0, 0}}), &skipped), 1.0);
    EXPECT_EQ(skipped, 1u);
    const EvaluationScores s = score(batch({{0.9, 0.1}, {0.2, 0.3}}, {{1, 0}, {0, 0}}), 0);
    EXPECT_EQ(s.prauc_skipped, 1u);
    ASSERT_TRUE(s.target.has_value());
    EXPECT_EQ(s.target->recall, 1.0);
}

TEST(Metrics, EqualBruteForceOraclesExactly) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> size(1, 5), visits(1, 6), grid(0, 10);
    std::bernoulli_distribution coin(0.4);
    for (int k = 0; k < 200; ++k) {
        PredictionBatch b;
        const int n = size(rng), v = visits(rng);
        b.prob.resize(v, n);
        b.truth.resize(v, n);
        for (Eigen::Index i = 0; i < b.prob.size(); ++i) {
            b.prob.data()[i] = grid(rng) / 10.0;  // coarse grid forces ties
            b.truth.data()[i] = coin(rng);
        }
        EXPECT_EQ(jaccard(b), oracle_jaccard(b));
        EXPECT_EQ(f1(b), oracle_f1(b));
        std::size_t s1 = 0, s2 = 0;
        EXPECT_EQ(prauc(b, &s1), oracle_ap(b, s2));
        EXPECT_EQ(s1, s2);
        EXPECT_GE(jaccard(b), 0.0);
        EXPECT_LE(f1(b), 1.0);
    }
}

TEST(Metrics, RemovingAFalsePositiveNeverLowersF1) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    for (int k = 0; k < 200; ++k) {
        PredictionBatch b;
        b.prob.resize(1, 5);
        b.truth.resize(1, 5);
        for (Eigen::Index i = 0; i < 5; ++i) {
            b.prob(0, i) = u(rng);
            b.truth(0, i) = coin(rng);
        }
        const double before = f1(b);
        for (Eigen::Index i = 0; i < 5; ++i) {
            if (b.predicted(0, i) && !b.positive(0, i)) {
                PredictionBatch c = b;
                c.prob(0, i) = 0.0;
                EXPECT_GE(f1(c), before);
            }
        }
    }
}

TEST(Metrics, EmptyBatchIsRejected) {
    PredictionBatch b;
    EXPECT_THROW(jaccard(b), Error);
}

}  // namespace
