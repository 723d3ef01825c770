#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "medrec/errors.hpp"
#include "medrec/geometry.hpp"
#include "test_util.hpp"

namespace {

using namespace medrec;
using namespace medrec::geometry;
using Eigen::Vector2d;
using Eigen::VectorXd;
using mp = boost::multiprecision::cpp_dec_float_50;

// 50-digit straight-line evaluation of arccosh(1 + 2|x-y|^2 / ((1-|x|^2)(1-|y|^2))).
double mp_distance(const VectorXd& x, const VectorXd& y) {
    mp dxy = 0, xx = 0, yy = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const mp a = x(i), b = y(i);
        dxy += (a - b) * (a - b);
        xx += a * a;
        yy += b * b;
    }
    const mp arg = 1 + 2 * dxy / ((1 - xx) * (1 - yy));
    return static_cast<double>(log(arg + sqrt(arg * arg - 1)));
}

TEST(PoincareDistance, OriginToOrigin) {
    EXPECT_EQ(poincare_distance(Vector2d::Zero(), Vector2d::Zero()), 0.0);
}

TEST(PoincareDistance, HalfwayPointIsLogThree) {
    EXPECT_NEAR(poincare_distance(Vector2d(0, 0), Vector2d(0.5, 0)), std::log(3.0), 1e-15);
}

TEST(PoincareDistance, MatchesFiftyDigitOracle) {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 200; ++k) {
        const auto dim = static_cast<Eigen::Index>(1 + k % 6);
        const VectorXd x = test::random_ball_point(rng, dim, 0.99);
        const VectorXd y = test::random_ball_point(rng, dim, 0.99);
        EXPECT_NEAR(poincare_distance(x, y), mp_distance(x, y), 1e-10);
    }
}

TEST(PoincareDistance, RejectsPointsOutsideTheBall) {
    EXPECT_THROW(poincare_distance(Vector2d(1.0, 0), Vector2d::Zero()), DomainError);
    EXPECT_THROW(poincare_distance(Vector2d::Zero(), Vector2d(0.0, 0.99999 + 1e-7)), DomainError);
    EXPECT_THROW(poincare_distance(Vector2d(NAN, 0), Vector2d::Zero()), DomainError);
}

TEST(PoincareDistance, SymmetricPositiveAndTriangle) {
    std::mt19937_64 rng(12);
    for (int k = 0; k < 1000; ++k) {
        const VectorXd x = test::random_ball_point(rng, 3), y = test::random_ball_point(rng, 3),
                       z = test::random_ball_point(rng, 3);
        const double dxy = poincare_distance(x, y);
        EXPECT_NEAR(dxy, poincare_distance(y, x), 1e-12);
        EXPECT_GT(dxy, 0.0);
        EXPECT_EQ(poincare_distance(x, x), 0.0);
        EXPECT_LE(poincare_distance(x, z), dxy + poincare_distance(y, z) + 1e-9);
    }
}

TEST(MobiusAdd, CollinearCaseIsScalarGyroAddition) {
    const VectorXd r = mobius_add(Vector2d(0.3, 0), Vector2d(0.4, 0));
    EXPECT_NEAR(r(0), 0.625, 1e-15);
    EXPECT_EQ(r(1), 0.0);
}

TEST(MobiusAdd, LeftIdentityAndInverse) {
    std::mt19937_64 rng(13);
    for (int k = 0; k < 1000; ++k) {
        const VectorXd p = test::random_ball_point(rng, 4, 0.95);
        EXPECT_LT((mobius_add(VectorXd::Zero(4), p) - p).norm(), 1e-15);
        EXPECT_LT(mobius_add(VectorXd(-p), p).norm(), 1e-12);
    }
}

TEST(MobiusAdd, ResultStaysInBall) {
    const Vector2d a(0.99999 * std::sqrt(0.5), 0.99999 * std::sqrt(0.5));
    const VectorXd r = mobius_add(a, a);
    EXPECT_TRUE(in_ball(r));
}

TEST(ExpProject, KeepsInteriorAndRescalesOutside) {
    EXPECT_EQ(exp_project(Vector2d::Zero()), Vector2d::Zero());
    EXPECT_EQ(exp_project(Vector2d(0.2, 0.1)), Vector2d(0.2, 0.1));
    const VectorXd r = exp_project(Vector2d(3, 4));
    EXPECT_NEAR(r(0), 0.6 * (1 - 1e-5), 1e-15);
    EXPECT_NEAR(r(1), 0.8 * (1 - 1e-5), 1e-15);
    EXPECT_TRUE(in_ball(r));
}

TEST(LogOrigin, Examples) {
    EXPECT_EQ(log_origin(Vector2d::Zero()), Vector2d::Zero());
    const VectorXd r = log_origin(Vector2d(std::tanh(0.5), 0));
    EXPECT_NEAR(r(0), 1.0, 1e-14);
    EXPECT_EQ(r(1), 0.0);
    const Vector2d y = Vector2d(0.6, 0.8) * 0.9;
    EXPECT_NEAR(log_origin(y).norm(), 2.0 * std::atanh(0.9), 1e-12);
    EXPECT_NEAR(log_origin(y).norm(), 2.9444389791664403, 1e-12);
}

TEST(LogOrigin, InvertsExactExponentialMap) {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> len(0.0, 5.0);
    for (int k = 0; k < 1000; ++k) {
        VectorXd v = test::random_ball_point(rng, 3, 1.0);
        if (v.norm() > 0) v *= len(rng) / v.norm();
        EXPECT_LT((log_origin(exp_origin(v)) - v).norm(), 1e-9);
    }
}

TEST(GeometryGradients, DistanceMatchesFiniteDifferences) {
    std::mt19937_64 rng(15);
    for (int k = 0; k < 100; ++k) {
        const VectorXd x = test::random_ball_point(rng, 3, 0.8), y = test::random_ball_point(rng, 3, 0.8);
        const auto [gx, gy] = poincare_distance_grad(x, y);
        const auto nx = test::numeric_gradient([&](const Eigen::MatrixXd& v) { return poincare_distance(VectorXd(v), y); }, x);
        const auto ny = test::numeric_gradient([&](const Eigen::MatrixXd& v) { return poincare_distance(x, VectorXd(v)); }, y);
        EXPECT_LT(test::relative_error(gx, nx), 1e-5);
        EXPECT_LT(test::relative_error(gy, ny), 1e-5);
    }
}

TEST(GeometryGradients, MobiusAndLogMatchFiniteDifferences) {
    std::mt19937_64 rng(16);
    for (int k = 0; k < 100; ++k) {
        const VectorXd x = test::random_ball_point(rng, 3, 0.7), y = test::random_ball_point(rng, 3, 0.7);
        const VectorXd g = test::random_matrix(rng, 3, 1);
        const auto [dx, dy] = mobius_add_vjp(x, y, g);
        const auto nx = test::numeric_gradient([&](const Eigen::MatrixXd& v) { return g.dot(mobius_add(VectorXd(v), y)); }, x);
        const auto ny = test::numeric_gradient([&](const Eigen::MatrixXd& v) { return g.dot(mobius_add(x, VectorXd(v))); }, y);
        EXPECT_LT(test::relative_error(dx, nx), 1e-5);
        EXPECT_LT(test::relative_error(dy, ny), 1e-5);
        const auto nl = test::numeric_gradient([&](const Eigen::MatrixXd& v) { return g.dot(log_origin(VectorXd(v))); }, x);
        EXPECT_LT(test::relative_error(log_origin_vjp(x, g), nl), 1e-5);
    }
}

TEST(GeometryGradients, ProjectionJacobianOutsideTheBall) {
    std::mt19937_64 rng(17);
    const VectorXd v = test::random_ball_point(rng, 3, 1.0).normalized() * 2.5;
    const VectorXd g = test::random_matrix(rng, 3, 1);
    const auto n = test::numeric_gradient([&](const Eigen::MatrixXd& u) { return g.dot(exp_project(VectorXd(u))); }, v);
    EXPECT_LT(test::relative_error(exp_project_vjp(v, g), n), 1e-6);
}

TEST(GeometryTemplates, WorkInExtendedPrecision) {
    using Vl = Eigen::Matrix<long double, 2, 1>;
    EXPECT_NEAR(static_cast<double>(poincare_distance(Vl(0, 0), Vl(0.5L, 0))), std::log(3.0), 1e-15);
}

}  // namespace
