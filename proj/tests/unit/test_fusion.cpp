#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "medrec/errors.hpp"
#include "medrec/fusion.hpp"
#include "test_util.hpp"

namespace {

using namespace medrec;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST(Fuse, ZeroGateIsElementwiseMean) {
    std::mt19937_64 rng(1);
    const MatrixXd hie = test::random_matrix(rng, 5, 3), co = test::random_matrix(rng, 5, 3);
    const FusionResult r = fuse(hie, co, VectorXd::Zero(6), 0.0);
    EXPECT_LT((r.fused - 0.5 * (hie + co)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_TRUE((r.beta.array() == 0.5).all());
}

TEST(Fuse, SaturatedBiasSelectsHierarchy) {
    std::mt19937_64 rng(2);
    const MatrixXd hie = test::random_matrix(rng, 4, 3), co = test::random_matrix(rng, 4, 3);
    const FusionResult r = fuse(hie, co, VectorXd::Zero(6), 40.0);
    EXPECT_LT((r.fused - hie).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Fuse, HandConvexCombination) {
    MatrixXd hie(1, 2), co(1, 2);
    hie << 1, 0;
    co << 0, 1;
    const FusionResult r = fuse(hie, co, VectorXd::Zero(4), std::log(0.25 / 0.75));
    EXPECT_NEAR(r.fused(0, 0), 0.25, 1e-15);
    EXPECT_NEAR(r.fused(0, 1), 0.75, 1e-15);
}

TEST(Fuse, ShapeMismatchIsStructural) {
    EXPECT_THROW(fuse(MatrixXd::Zero(2, 3), MatrixXd::Zero(3, 3), VectorXd::Zero(6), 0.0), StructuralError);
    EXPECT_THROW(fuse(MatrixXd::Zero(2, 3), MatrixXd::Zero(2, 3), VectorXd::Zero(5), 0.0), StructuralError);
}

TEST(Fuse, BetweennessAndEqualInputs) {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 50; ++k) {
        const MatrixXd hie = test::random_matrix(rng, 6, 4), co = test::random_matrix(rng, 6, 4);
        const VectorXd w = test::random_matrix(rng, 8, 1, 3.0);
        const double b = test::random_matrix(rng, 1, 1, 3.0)(0);
        const FusionResult r = fuse(hie, co, w, b);
        EXPECT_TRUE((r.fused.array() >= hie.cwiseMin(co).array() - 1e-15).all());
        EXPECT_TRUE((r.fused.array() <= hie.cwiseMax(co).array() + 1e-15).all());
        EXPECT_LT((fuse(hie, hie, w, b).fused - hie).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(Combine, VariantWiring) {
    std::mt19937_64 rng(4);
    const MatrixXd hie = test::random_matrix(rng, 3, 2), co = test::random_matrix(rng, 3, 2);
    const VectorXd w = test::random_matrix(rng, 4, 1);
    EXPECT_EQ(combine(Variant::NoHie, hie, co, w, 0.3).fused, co);
    EXPECT_EQ(combine(Variant::NoCo, hie, co, w, 0.3).fused, hie);
    EXPECT_LT((combine(Variant::NoFus, hie, co, w, 0.3).fused - 0.5 * (hie + co)).cwiseAbs().maxCoeff(), 1e-15);
    // Perturbing the hierarchical input leaves no_hie untouched.
    EXPECT_EQ(combine(Variant::NoHie, hie * 3.0, co, w, 0.3).fused, co);
    // no_fus equals full whenever the inputs agree.
    EXPECT_LT((combine(Variant::NoFus, co, co, w, 0.3).fused - combine(Variant::Full, co, co, w, 0.3).fused).cwiseAbs().maxCoeff(), 1e-15);
    // ...and differs once beta leaves 1/2.
    MatrixXd a(1, 2), c(1, 2);
    a << 1, 0;
    c << 0, 1;
    const VectorXd w0 = VectorXd::Zero(4);
    EXPECT_GT((combine(Variant::Full, a, c, w0, 1.0).fused - combine(Variant::NoFus, a, c, w0, 1.0).fused).norm(), 0.1);
    EXPECT_EQ(parse_variant("no_fus"), Variant::NoFus);
    EXPECT_STREQ(variant_name(Variant::NoHie), "no_hie");
    EXPECT_THROW(parse_variant("none"), ConfigError);
}

TEST(Fuse, GradientsMatchFiniteDifferences) {
    std::mt19937_64 rng(5);
    const MatrixXd hie = test::random_matrix(rng, 4, 3), co = test::random_matrix(rng, 4, 3);
    const MatrixXd w = test::random_matrix(rng, 6, 1), b = test::random_matrix(rng, 1, 1);
    const MatrixXd r = test::random_matrix(rng, 4, 3), rb = test::random_matrix(rng, 4, 1);
    const MatrixXd* in[] = {&hie, &co, &w, &b};
    for (int slot = 0; slot < 4; ++slot) {
        auto f = [&](ad::Tape& t, const ad::Var& x) {
            auto pick = [&](int k) { return k == slot ? x : t.constant(*in[k]); };
            const ad::Fused out = ad::fuse(pick(0), pick(1), pick(2), pick(3));
            return ad::sum(ad::hadamard(out.table, t.constant(r))) + ad::sum(ad::hadamard(out.beta, t.constant(rb)));
        };
        const MatrixXd g = test::tape_gradient(f, *in[slot]);
        const MatrixXd n = test::numeric_gradient([&](const MatrixXd& v) { return test::tape_value(f, v); }, *in[slot]);
        EXPECT_LT(test::relative_error(g, n), 1e-4) << "slot " << slot;
    }
}

}  // namespace
