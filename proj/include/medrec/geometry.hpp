#pragma once

// Poincare-ball primitives (curvature -1): distance, Mobius addition, the boundary
// projection used as the flat-to-ball map, and the logarithmic map at the origin.
// Every primitive ships with a vector-Jacobian product so the autodiff tape can
// back-propagate through it without differentiating the formulas numerically.

#include <Eigen/Core>

#include <cmath>
#include <sstream>
#include <utility>

#include "medrec/errors.hpp"

namespace medrec::geometry {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Points are kept at Euclidean radius at most 1 - kBallEpsilon.
inline constexpr double kBallEpsilon = 1e-5;
/// Absolute slack on the radius check that absorbs the rounding of a rescale onto
/// the 1 - kBallEpsilon sphere.
inline constexpr double kRadiusSlack = 1e-12;

template <typename Scalar>
constexpr Scalar max_radius() {
    return Scalar(1) - Scalar(kBallEpsilon);
}

template <typename Derived>
bool in_ball(const Eigen::MatrixBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    return x.allFinite() && x.norm() <= max_radius<Scalar>() + Scalar(kRadiusSlack);
}

template <typename Derived>
void require_in_ball(const Eigen::MatrixBase<Derived>& x, const char* what) {
    if (!in_ball(x)) {
        std::ostringstream os;
        os << what << ": point with norm " << x.norm() << " lies outside the ball of radius "
           << max_radius<double>();
        throw DomainError(os.str());
    }
}

/// Validated point of the Poincare ball.
template <typename Scalar>
class BallPoint {
public:
    template <typename Derived>
    explicit BallPoint(const Eigen::MatrixBase<Derived>& coords) : coords_(coords) {
        require_in_ball(coords_, "BallPoint");
    }

    const Vec<Scalar>& coords() const noexcept { return coords_; }
    Eigen::Index dim() const noexcept { return coords_.size(); }

private:
    Vec<Scalar> coords_;
};

namespace detail {

// arccosh(1 + t) for t >= 0 without the cancellation of forming 1 + t first.
template <typename Scalar>
Scalar acosh1p(Scalar t) {
    using std::log1p;
    using std::sqrt;
    return log1p(t + sqrt(t * (t + Scalar(2))));
}

}  // namespace detail

/// Hyperbolic distance arccosh(1 + 2|x-y|^2 / ((1-|x|^2)(1-|y|^2))).
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar poincare_distance(const Eigen::MatrixBase<DerivedX>& x,
                                            const Eigen::MatrixBase<DerivedY>& y) {
    using Scalar = typename DerivedX::Scalar;
    require_in_ball(x, "poincare_distance");
    require_in_ball(y, "poincare_distance");
    const Scalar alpha = Scalar(1) - x.squaredNorm();
    const Scalar beta = Scalar(1) - y.squaredNorm();
    const Scalar delta = (x - y).squaredNorm();
    return detail::acosh1p(Scalar(2) * delta / (alpha * beta));
}

/// Gradient of the distance with respect to both arguments. At x == y the distance
/// has a cone-shaped minimum; the zero subgradient is returned there.
template <typename DerivedX, typename DerivedY>
std::pair<Vec<typename DerivedX::Scalar>, Vec<typename DerivedX::Scalar>> poincare_distance_grad(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
    using Scalar = typename DerivedX::Scalar;
    using std::sqrt;
    const Scalar alpha = Scalar(1) - x.squaredNorm();
    const Scalar beta = Scalar(1) - y.squaredNorm();
    const Vec<Scalar> diff = x - y;
    const Scalar delta = diff.squaredNorm();
    if (delta == Scalar(0)) {
        return {Vec<Scalar>::Zero(x.size()), Vec<Scalar>::Zero(y.size())};
    }
    const Scalar t = Scalar(2) * delta / (alpha * beta);
    const Scalar outer = Scalar(1) / sqrt(t * (t + Scalar(2)));
    const Scalar c = Scalar(4) / (alpha * beta);
    Vec<Scalar> gx = outer * (c * diff + (c * delta / alpha) * x);
    Vec<Scalar> gy = outer * (-c * diff + (c * delta / beta) * y);
    return {std::move(gx), std::move(gy)};
}

/// Rescales vectors that reach the boundary back to radius 1 - kBallEpsilon; interior
/// vectors pass through unchanged.
template <typename Derived>
Vec<typename Derived::Scalar> exp_project(const Eigen::MatrixBase<Derived>& v) {
    using Scalar = typename Derived::Scalar;
    const Scalar n = v.norm();
    if (n < max_radius<Scalar>()) return v;
    return v * (max_radius<Scalar>() / n);
}

template <typename DerivedV, typename DerivedG>
Vec<typename DerivedV::Scalar> exp_project_vjp(const Eigen::MatrixBase<DerivedV>& v,
                                               const Eigen::MatrixBase<DerivedG>& g) {
    using Scalar = typename DerivedV::Scalar;
    const Scalar n = v.norm();
    if (n < max_radius<Scalar>()) return g;
    const Scalar c = max_radius<Scalar>() / n;
    return c * (g - (g.dot(v) / (n * n)) * v);
}

/// Mobius addition x (+) y. Results that land on the boundary are re-projected.
template <typename DerivedX, typename DerivedY>
Vec<typename DerivedX::Scalar> mobius_add(const Eigen::MatrixBase<DerivedX>& x,
                                          const Eigen::MatrixBase<DerivedY>& y) {
    using Scalar = typename DerivedX::Scalar;
    using std::abs;
    const Scalar xy = x.dot(y);
    const Scalar x2 = x.squaredNorm();
    const Scalar y2 = y.squaredNorm();
    const Scalar den = Scalar(1) + Scalar(2) * xy + x2 * y2;
    if (abs(den) < Scalar(1e-12)) {
        throw DegenerateError("mobius_add: denominator vanishes");
    }
    const Vec<Scalar> out = ((Scalar(1) + Scalar(2) * xy + y2) * x + (Scalar(1) - x2) * y) / den;
    return exp_project(out);
}

template <typename DerivedX, typename DerivedY, typename DerivedG>
std::pair<Vec<typename DerivedX::Scalar>, Vec<typename DerivedX::Scalar>> mobius_add_vjp(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y,
    const Eigen::MatrixBase<DerivedG>& g_out) {
    using Scalar = typename DerivedX::Scalar;
    const Scalar xy = x.dot(y);
    const Scalar x2 = x.squaredNorm();
    const Scalar y2 = y.squaredNorm();
    const Scalar a = Scalar(1) + Scalar(2) * xy + y2;
    const Scalar b = Scalar(1) - x2;
    const Scalar den = Scalar(1) + Scalar(2) * xy + x2 * y2;
    const Vec<Scalar> raw = (a * x + b * y) / den;
    // Chain through the boundary projection first.
    const Vec<Scalar> g = exp_project_vjp(raw, g_out);
    const Scalar gx = g.dot(x);
    const Scalar gy = g.dot(y);
    const Scalar go = g.dot(raw);
    Vec<Scalar> dx = (a * g + Scalar(2) * gx * y - Scalar(2) * gy * x) / den -
                     (go / den) * (Scalar(2) * y + Scalar(2) * y2 * x);
    Vec<Scalar> dy = (b * g + Scalar(2) * gx * (x + y)) / den -
                     (go / den) * (Scalar(2) * x + Scalar(2) * x2 * y);
    return {std::move(dx), std::move(dy)};
}

namespace detail {

// f(n) = 2 artanh(n) / n and f'(n) / n, with series expansions near the origin.
template <typename Scalar>
std::pair<Scalar, Scalar> log_scale(Scalar n) {
    using std::atanh;
    if (n < Scalar(1e-4)) {
        const Scalar n2 = n * n;
        return {Scalar(2) + Scalar(2) * n2 / Scalar(3), Scalar(4) / Scalar(3) + Scalar(8) * n2 / Scalar(5)};
    }
    const Scalar f = Scalar(2) * atanh(n) / n;
    const Scalar df = (Scalar(2) / (Scalar(1) - n * n) - f) / n;
    return {f, df / n};
}

}  // namespace detail

/// Logarithmic map at the origin: 2 artanh(|y|) y / |y|, and 0 at the origin.
template <typename Derived>
Vec<typename Derived::Scalar> log_origin(const Eigen::MatrixBase<Derived>& y) {
    using Scalar = typename Derived::Scalar;
    const Scalar n = y.norm();
    if (n == Scalar(0)) return Vec<Scalar>::Zero(y.size());
    return detail::log_scale(n).first * y;
}

template <typename DerivedY, typename DerivedG>
Vec<typename DerivedY::Scalar> log_origin_vjp(const Eigen::MatrixBase<DerivedY>& y,
                                              const Eigen::MatrixBase<DerivedG>& g) {
    const auto [f, df_over_n] = detail::log_scale(y.norm());
    return f * g + (df_over_n * g.dot(y)) * y;
}

/// Exact exponential map at the origin, tanh(|v|/2) v / |v|. Inverse of log_origin.
template <typename Derived>
Vec<typename Derived::Scalar> exp_origin(const Eigen::MatrixBase<Derived>& v) {
    using Scalar = typename Derived::Scalar;
    using std::tanh;
    const Scalar n = v.norm();
    if (n == Scalar(0)) return Vec<Scalar>::Zero(v.size());
    return (tanh(n / Scalar(2)) / n) * v;
}

}  // namespace medrec::geometry
