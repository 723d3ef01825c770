#pragma once

#include <string>

#include <Eigen/Core>

#include "medrec/autodiff.hpp"

namespace medrec {

/// Which embedding pathways feed the patient encoder.
enum class Variant { Full, NoHie, NoCo, NoFus };

Variant parse_variant(const std::string& name);
const char* variant_name(Variant v);

struct FusionResult {
    Eigen::MatrixXd fused;
    Eigen::VectorXd beta;  ///< one weight per row
};

/// beta_i = sigmoid(w^T [hie_i ; co_i] + b); fused_i = beta_i hie_i + (1 - beta_i) co_i.
FusionResult fuse(const Eigen::MatrixXd& hie, const Eigen::MatrixXd& co, const Eigen::VectorXd& w, double b);

/// Combines the two pathways as the variant prescribes. Betas are 0.5 for no_fus,
/// 1 for no_co and 0 for no_hie so they always describe the mixture in use.
FusionResult combine(Variant variant, const Eigen::MatrixXd& hie, const Eigen::MatrixXd& co, const Eigen::VectorXd& w,
                     double b);

namespace ad {

struct Fused {
    Var table;
    Var beta;  ///< rows x 1
};

/// `w` is 2 dim x 1 and `b` is 1 x 1.
Fused fuse(const Var& hie, const Var& co, const Var& w, const Var& b);
Fused combine(Variant variant, const Var& hie, const Var& co, const Var& w, const Var& b);

}  // namespace ad

}  // namespace medrec
