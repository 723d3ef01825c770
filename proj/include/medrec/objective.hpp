#pragma once

#include <Eigen/Core>

#include "medrec/autodiff.hpp"

namespace medrec {

inline constexpr double kProbabilityClamp = 1e-7;

struct LossWeights {
    double bce = 0.99;
    double margin = 0.04;
    double hyp = 0.01;
    double sparse = 0.01;

    /// Throws ConfigError on a negative weight.
    void validate() const;
};

/// sigmoid(W z + b) with W stored |M| x 3 dim.
Eigen::VectorXd predict(const Eigen::VectorXd& z, const Eigen::MatrixXd& w, const Eigen::VectorXd& b);

/// -sum_i [m_i log p_i + (1 - m_i) log(1 - p_i)] with p clamped to [1e-7, 1 - 1e-7].
double bce_loss(const Eigen::VectorXd& prob, const Eigen::VectorXd& truth);

/// sum over (positive i, negative j) of max(0, 1 - (p_i - p_j)), divided by |M|.
double margin_loss(const Eigen::VectorXd& prob, const Eigen::VectorXd& truth);

namespace ad {

/// Probabilities for every row of z (rows x 3 dim); `w` is |M| x 3 dim, `b` is 1 x |M|.
Var predict(const Var& z, const Var& w, const Var& b);
/// Sum of the per-row BCE terms; 1x1.
Var bce_sum(const Var& prob, const Matrix& truth);
/// Sum of the per-row margin terms; 1x1.
Var margin_sum(const Var& prob, const Matrix& truth);

}  // namespace ad

}  // namespace medrec
