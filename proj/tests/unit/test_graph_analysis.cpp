#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "medrec/cooccurrence.hpp"
#include "medrec/errors.hpp"
#include "medrec/graph_analysis.hpp"
#include "medrec/sparse_attention.hpp"
#include "test_util.hpp"

namespace {

using namespace medrec;

// U of x counted pair by pair, ties worth one half.
double pair_count_u(const std::vector<double>& x, const std::vector<double>& y) {
    double u = 0.0;
    for (double a : x)
        for (double b : y) u += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
    return u;
}

struct PermutationReference {
    double u = 0.0, mean = 0.0, var = 0.0, p = 1.0;
};

// Enumerates every assignment of the pooled values to a first group of size n1 and
// takes the exact permutation mean and variance of U; p applies the normal approximation.
PermutationReference permutation_reference(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> pool(x);
    pool.insert(pool.end(), y.begin(), y.end());
    const std::size_t n = pool.size(), n1 = x.size();
    double s = 0.0, s2 = 0.0, count = 0.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != n1) continue;
        std::vector<double> a, b;
        for (std::size_t i = 0; i < n; ++i) (mask >> i & 1u ? a : b).push_back(pool[i]);
        const double u = pair_count_u(a, b);
        s += u;
        s2 += u * u;
        count += 1.0;
    }
    PermutationReference r;
    r.u = pair_count_u(x, y);
    r.mean = s / count;
    r.var = s2 / count - r.mean * r.mean;
    if (r.var > 1e-12) r.p = std::erfc(std::abs(r.u - r.mean) / std::sqrt(r.var) / std::sqrt(2.0));
    return r;
}

TEST(MannWhitney, SeparatedGroups) {
    const std::vector<double> x{1, 2, 3}, y{10, 20, 30};
    const RankSumResult r = mann_whitney(x, y);
    EXPECT_EQ(r.u1, 0.0);
    EXPECT_EQ(r.u2, 9.0);
    EXPECT_NEAR(r.z, -4.5 / std::sqrt(5.25), 1e-12);
    EXPECT_LT(r.p, 0.06);
    EXPECT_NEAR(r.p, permutation_reference(x, y).p, 1e-9);
}

TEST(MannWhitney, IdenticalGroupsSitAtTheMean) {
    const std::vector<double> x{1, 2, 3, 4}, y{1, 2, 3, 4};
    const RankSumResult r = mann_whitney(x, y);
    EXPECT_EQ(r.u1, 8.0);
    EXPECT_EQ(r.z, 0.0);
    EXPECT_EQ(r.p, 1.0);
    const std::vector<double> flat{5, 5, 5};
    EXPECT_EQ(mann_whitney(flat, flat).p, 1.0);
}

TEST(MannWhitney, HandMidranks) {
    // Pooled sorted: 1 | 2 2 2 | 3 3 | 5 with midranks 1, 3, 3, 3, 5.5, 5.5, 7.
    // x = {2, 3, 5} takes ranks 3 + 5.5 + 7 = 15.5, so U1 = 15.5 - 6 = 9.5.
    const std::vector<double> x{2, 3, 5}, y{1, 2, 2, 3};
    const RankSumResult r = mann_whitney(x, y);
    EXPECT_EQ(r.u1, 9.5);
    EXPECT_EQ(r.u2, 2.5);
    // Tie term: (27 - 3) + (8 - 2) = 30; var = 12/12 * (8 - 30/42).
    EXPECT_NEAR(r.z, 3.5 / std::sqrt(8.0 - 30.0 / 42.0), 1e-12);
}

TEST(MannWhitney, TooFewSamplesIsDegenerate) {
    const std::vector<double> one{1}, two{1, 2};
    EXPECT_THROW(mann_whitney(one, two), DegenerateError);
    EXPECT_THROW(mann_whitney(two, one), DegenerateError);
}

TEST(MannWhitney, MatchesExhaustivePermutationOracle) {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> coarse(0, 4);
    std::uniform_real_distribution<double> fine(0.0, 1.0);
    for (std::size_t n1 = 2; n1 <= 6; ++n1)
        for (std::size_t n2 = 2; n2 <= 6; ++n2)
            for (int rep = 0; rep < 4; ++rep) {
                std::vector<double> x(n1), y(n2);
                for (auto* g : {&x, &y})
                    for (double& v : *g) v = rep % 2 ? coarse(rng) : fine(rng);
                const RankSumResult r = mann_whitney(x, y);
                const PermutationReference ref = permutation_reference(x, y);
                EXPECT_EQ(r.u1, ref.u);
                EXPECT_EQ(r.u1 + r.u2, static_cast<double>(n1 * n2));
                EXPECT_NEAR(r.p, ref.p, 1e-9) << n1 << "x" << n2;
            }
}

TEST(Median, OddEvenEmpty) {
    EXPECT_EQ(median({3, 1, 2}), 2.0);
    EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
    EXPECT_TRUE(std::isnan(median({})));
}

TEST(GraphReport, PartitionsGatesAndExports) {
    const OntologyForest f = test::tiny_forest();
    const VisitCorpus c = test::make_corpus(f, {{{"Da1", "Ma1"}, {"Da1", "Pa1", "Ma1"}, {"Da2", "Ma1"}}});
    const CooccurrenceGraph g = build_prior(f, c);
    Eigen::VectorXd lk(static_cast<Eigen::Index>(g.gate_count()));
    for (Eigen::Index i = 0; i < lk.size(); ++i) lk(i) = i % 2 ? 4.0 : -4.0;
    const std::vector<GateRecord> gates = gate_records(g, lk, 1.0);
    ASSERT_EQ(gates.size(), g.gate_count());
    const std::vector<bool> kept = retained_gates(lk, g, 1.0);
    std::size_t strong_pruned = 0, total_retained = 0;
    for (std::size_t k = 0; k < gates.size(); ++k) {
        EXPECT_NE(gates[k].source, gates[k].target);
        EXPECT_EQ(gates[k].retained, gates[k].pi >= 0.5);
        strong_pruned += !gates[k].retained && gates[k].prior >= 0.5;
        total_retained += gates[k].retained;
    }
    std::size_t kept_count = 0;
    for (bool b : kept) kept_count += b;
    EXPECT_EQ(kept_count, total_retained);

    const GraphReport r = analyze_graph(g, gates, 0.5);
    EXPECT_EQ(r.pruned_strong, strong_pruned);
    EXPECT_EQ(r.retained_strong + r.retained_weak + r.pruned_strong + r.pruned_weak, gates.size());
    EXPECT_EQ(r.all_degrees.size(), g.node_count());
    EXPECT_LE(r.pruned_target_degrees.size(), r.pruned_strong);
    EXPECT_EQ(r.test.has_value(), r.test_error.empty());

    const std::string csv = gates_to_csv(g, gates);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "source_code,target_code,prior_weight,pi,retained_flag");
    EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), gates.size() + 1);
    const nlohmann::json j = graph_report_to_json(r);
    for (const char* key : {"strong_threshold", "edges", "pruned_target_count", "node_count", "median_out_degree_all", "mann_whitney"})
        EXPECT_TRUE(j.contains(key)) << key;
}

}  // namespace
