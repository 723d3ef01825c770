#include "medrec/objective.hpp"

#include <algorithm>
#include <cmath>

#include "medrec/errors.hpp"

namespace medrec {

void LossWeights::validate() const {
    if (!(bce >= 0) || !(margin >= 0) || !(hyp >= 0) || !(sparse >= 0)) {
        throw ConfigError("loss weights must be non-negative");
    }
}

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

bool clamped(double p) { return p < kProbabilityClamp || p > 1.0 - kProbabilityClamp; }

void require_labels(const Eigen::Index rows, const Eigen::Index cols, const ad::Matrix& truth, const char* op) {
    if (truth.rows() != rows || truth.cols() != cols) throw StructuralError(std::string(op) + ": label shape mismatch");
}

}  // namespace

Eigen::VectorXd predict(const Eigen::VectorXd& z, const Eigen::MatrixXd& w, const Eigen::VectorXd& b) {
    ad::Tape tape;
    return ad::predict(tape.constant(z.transpose()), tape.constant(w), tape.constant(b.transpose())).value().row(0).transpose();
}

double bce_loss(const Eigen::VectorXd& prob, const Eigen::VectorXd& truth) {
    ad::Tape tape;
    return ad::bce_sum(tape.constant(prob.transpose()), truth.transpose()).scalar();
}

double margin_loss(const Eigen::VectorXd& prob, const Eigen::VectorXd& truth) {
    ad::Tape tape;
    return ad::margin_sum(tape.constant(prob.transpose()), truth.transpose()).scalar();
}

namespace ad {

Var predict(const Var& z, const Var& w, const Var& b) {
    if (w.cols() != z.cols()) throw StructuralError("predict: head width does not match the patient representation");
    if (b.rows() != 1 || b.cols() != w.rows()) throw StructuralError("predict: bias must be 1 x |M|");
    return sigmoid(add_row(matmul(z, transpose(w)), b));
}

Var bce_sum(const Var& prob, const Matrix& truth) {
    require_labels(prob.rows(), prob.cols(), truth, "bce_sum");
    const Matrix& p = prob.value();
    double total = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = 0; j < p.cols(); ++j) {
            const double q = clamp_prob(p(i, j));
            total -= truth(i, j) * std::log(q) + (1.0 - truth(i, j)) * std::log1p(-q);
        }
    const std::size_t ip = prob.id();
    return prob.tape().record(Matrix::Constant(1, 1, total), prob.requires_grad(), [ip, truth](Tape& t, const Matrix& g) {
        const Matrix& p = t.value(ip);
        Matrix gp(p.rows(), p.cols());
        for (Eigen::Index i = 0; i < p.rows(); ++i)
            for (Eigen::Index j = 0; j < p.cols(); ++j) {
                const double q = p(i, j);
                gp(i, j) = clamped(q) ? 0.0 : g(0, 0) * (-truth(i, j) / q + (1.0 - truth(i, j)) / (1.0 - q));
            }
        t.accumulate(ip, gp);
    });
}

Var margin_sum(const Var& prob, const Matrix& truth) {
    require_labels(prob.rows(), prob.cols(), truth, "margin_sum");
    const Matrix& p = prob.value();
    const double m = static_cast<double>(p.cols());
    double total = 0.0;
    for (Eigen::Index r = 0; r < p.rows(); ++r)
        for (Eigen::Index i = 0; i < p.cols(); ++i) {
            if (truth(r, i) != 1.0) continue;
            for (Eigen::Index j = 0; j < p.cols(); ++j) {
                if (truth(r, j) != 0.0) continue;
                total += std::max(0.0, 1.0 - (clamp_prob(p(r, i)) - clamp_prob(p(r, j)))) / m;
            }
        }
    const std::size_t ip = prob.id();
    return prob.tape().record(Matrix::Constant(1, 1, total), prob.requires_grad(), [ip, truth](Tape& t, const Matrix& g) {
        const Matrix& p = t.value(ip);
        const double m = static_cast<double>(p.cols());
        Matrix gp = Matrix::Zero(p.rows(), p.cols());
        for (Eigen::Index r = 0; r < p.rows(); ++r)
            for (Eigen::Index i = 0; i < p.cols(); ++i) {
                if (truth(r, i) != 1.0) continue;
                for (Eigen::Index j = 0; j < p.cols(); ++j) {
                    if (truth(r, j) != 0.0) continue;
                    if (1.0 - (clamp_prob(p(r, i)) - clamp_prob(p(r, j))) <= 0.0) continue;
                    if (!clamped(p(r, i))) gp(r, i) -= g(0, 0) / m;
                    if (!clamped(p(r, j))) gp(r, j) += g(0, 0) / m;
                }
            }
        t.accumulate(ip, gp);
    });
}

}  // namespace ad

}  // namespace medrec
