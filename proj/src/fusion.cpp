#include "medrec/fusion.hpp"

#include "medrec/errors.hpp"

namespace medrec {

Variant parse_variant(const std::string& name) {
    if (name == "full") return Variant::Full;
    if (name == "no_hie") return Variant::NoHie;
    if (name == "no_co") return Variant::NoCo;
    if (name == "no_fus") return Variant::NoFus;
    throw ConfigError("unknown variant '" + name + "' (expected full, no_hie, no_co or no_fus)");
}

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::Full: return "full";
        case Variant::NoHie: return "no_hie";
        case Variant::NoCo: return "no_co";
        case Variant::NoFus: return "no_fus";
    }
    return "full";
}

FusionResult fuse(const Eigen::MatrixXd& hie, const Eigen::MatrixXd& co, const Eigen::VectorXd& w, double b) {
    ad::Tape tape;
    const auto r = ad::fuse(tape.constant(hie), tape.constant(co), tape.constant(w), tape.constant(Eigen::MatrixXd::Constant(1, 1, b)));
    return FusionResult{r.table.value(), r.beta.value().col(0)};
}

FusionResult combine(Variant variant, const Eigen::MatrixXd& hie, const Eigen::MatrixXd& co, const Eigen::VectorXd& w,
                     double b) {
    ad::Tape tape;
    const auto r = ad::combine(variant, tape.constant(hie), tape.constant(co), tape.constant(w),
                               tape.constant(Eigen::MatrixXd::Constant(1, 1, b)));
    return FusionResult{r.table.value(), r.beta.value().col(0)};
}

namespace ad {

Fused fuse(const Var& hie, const Var& co, const Var& w, const Var& b) {
    if (hie.rows() != co.rows() || hie.cols() != co.cols()) throw StructuralError("fuse: embedding shapes differ");
    if (w.rows() != 2 * hie.cols() || w.cols() != 1) throw StructuralError("fuse: gate vector must be 2*dim x 1");
    if (b.rows() != 1 || b.cols() != 1) throw StructuralError("fuse: bias must be a scalar");
    const Var beta = sigmoid(add_row(matmul(concat_cols(hie, co), w), b));
    return Fused{co + row_scale(hie - co, beta), beta};
}

Fused combine(Variant variant, const Var& hie, const Var& co, const Var& w, const Var& b) {
    if (hie.rows() != co.rows() || hie.cols() != co.cols()) throw StructuralError("combine: embedding shapes differ");
    Tape& tape = hie.tape();
    switch (variant) {
        case Variant::Full: return fuse(hie, co, w, b);
        case Variant::NoHie: return Fused{co, tape.constant(Matrix::Zero(co.rows(), 1))};
        case Variant::NoCo: return Fused{hie, tape.constant(Matrix::Ones(hie.rows(), 1))};
        case Variant::NoFus: return Fused{0.5 * (hie + co), tape.constant(Matrix::Constant(hie.rows(), 1, 0.5))};
    }
    throw ConfigError("unknown variant");
}

}  // namespace ad

}  // namespace medrec
