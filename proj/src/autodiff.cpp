#include "medrec/autodiff.hpp"

#include <cmath>

#include "medrec/errors.hpp"
#include "medrec/parameters.hpp"

namespace medrec::ad {

const Matrix& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Matrix value) { return record(std::move(value), false, nullptr); }

Var Tape::variable(Matrix value) {
    nodes_.push_back(Node{std::move(value), Matrix(), true, nullptr});
    return Var(this, nodes_.size() - 1);
}

Var Tape::param(const ParameterStore& store, std::size_t index) {
    if (store_ == nullptr) store_ = &store;
    if (store_ != &store) throw StructuralError("tape already bound to a different parameter store");
    if (param_node_.size() < store.size()) param_node_.resize(store.size(), -1);
    if (param_node_[index] >= 0) return Var(this, static_cast<std::size_t>(param_node_[index]));
    Var v = variable(store.value(index));
    param_node_[index] = static_cast<long>(v.id());
    bound_.emplace_back(index, v.id());
    return v;
}

Var Tape::record(Matrix value, bool requires_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, requires_grad ? std::move(backward) : nullptr});
    return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t id, const Matrix& g) { accumulate_expr(id, g); }

void Tape::backward(const Var& root) {
    if (root.rows() != 1 || root.cols() != 1) throw StructuralError("backward() needs a scalar root");
    if (!nodes_[root.id()].requires_grad) return;
    nodes_[root.id()].grad = Matrix::Ones(1, 1);
    for (std::size_t i = root.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.backward && n.grad.size() != 0) n.backward(*this, n.grad);
    }
}

namespace {

void require_same_tape(const Var& a, const Var& b) {
    if (&a.tape() != &b.tape()) throw StructuralError("variables live on different tapes");
}

void require_shape(bool ok, const char* op) {
    if (!ok) throw StructuralError(std::string(op) + ": shape mismatch");
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
    require_same_tape(a, b);
    require_shape(a.cols() == b.rows(), "matmul");
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape().record(a.value() * b.value(), a.requires_grad() || b.requires_grad(),
                           [ia, ib](Tape& t, const Matrix& g) {
                               if (t.requires_grad(ia)) t.accumulate_expr(ia, g * t.value(ib).transpose());
                               if (t.requires_grad(ib)) t.accumulate_expr(ib, t.value(ia).transpose() * g);
                           });
}

Var transpose(const Var& a) {
    const std::size_t ia = a.id();
    return a.tape().record(a.value().transpose(), a.requires_grad(),
                           [ia](Tape& t, const Matrix& g) { t.accumulate_expr(ia, g.transpose()); });
}

Var spmm(const SparseMatrix& s, const Var& b) {
    require_shape(s.cols() == b.rows(), "spmm");
    const std::size_t ib = b.id();
    // The sparse operand is copied so the closure owns it.
    return b.tape().record(s * b.value(), b.requires_grad(), [ib, st = SparseMatrix(s.transpose())](Tape& t, const Matrix& g) {
        t.accumulate_expr(ib, st * g);
    });
}

Var operator+(const Var& a, const Var& b) {
    require_same_tape(a, b);
    require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add");
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape().record(a.value() + b.value(), a.requires_grad() || b.requires_grad(),
                           [ia, ib](Tape& t, const Matrix& g) {
                               t.accumulate(ia, g);
                               t.accumulate(ib, g);
                           });
}

Var operator-(const Var& a, const Var& b) {
    require_same_tape(a, b);
    require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "sub");
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape().record(a.value() - b.value(), a.requires_grad() || b.requires_grad(),
                           [ia, ib](Tape& t, const Matrix& g) {
                               t.accumulate(ia, g);
                               t.accumulate_expr(ib, -g);
                           });
}

Var operator*(double s, const Var& a) {
    const std::size_t ia = a.id();
    return a.tape().record(s * a.value(), a.requires_grad(),
                           [ia, s](Tape& t, const Matrix& g) { t.accumulate_expr(ia, s * g); });
}

Var operator-(const Var& a) { return -1.0 * a; }

Var hadamard(const Var& a, const Var& b) {
    require_same_tape(a, b);
    require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "hadamard");
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape().record(a.value().cwiseProduct(b.value()), a.requires_grad() || b.requires_grad(),
                           [ia, ib](Tape& t, const Matrix& g) {
                               if (t.requires_grad(ia)) t.accumulate_expr(ia, g.cwiseProduct(t.value(ib)));
                               if (t.requires_grad(ib)) t.accumulate_expr(ib, g.cwiseProduct(t.value(ia)));
                           });
}

Var add_scalar(const Var& a, double s) {
    const std::size_t ia = a.id();
    return a.tape().record((a.value().array() + s).matrix(), a.requires_grad(),
                           [ia](Tape& t, const Matrix& g) { t.accumulate(ia, g); });
}

Var add_row(const Var& a, const Var& row) {
    require_same_tape(a, row);
    require_shape(row.rows() == 1 && row.cols() == a.cols(), "add_row");
    const std::size_t ia = a.id(), ir = row.id();
    Matrix out = a.value().rowwise() + row.value().row(0);
    return a.tape().record(std::move(out), a.requires_grad() || row.requires_grad(),
                           [ia, ir](Tape& t, const Matrix& g) {
                               t.accumulate(ia, g);
                               if (t.requires_grad(ir)) t.accumulate_expr(ir, g.colwise().sum());
                           });
}

Var row_scale(const Var& a, const Var& v) {
    require_same_tape(a, v);
    require_shape(v.cols() == 1 && v.rows() == a.rows(), "row_scale");
    const std::size_t ia = a.id(), iv = v.id();
    Matrix out = v.value().col(0).asDiagonal() * a.value();
    return a.tape().record(std::move(out), a.requires_grad() || v.requires_grad(),
                           [ia, iv](Tape& t, const Matrix& g) {
                               if (t.requires_grad(ia)) t.accumulate_expr(ia, t.value(iv).col(0).asDiagonal() * g);
                               if (t.requires_grad(iv))
                                   t.accumulate_expr(iv, g.cwiseProduct(t.value(ia)).rowwise().sum());
                           });
}

Var sigmoid(const Var& a) {
    const std::size_t ia = a.id();
    Matrix out = a.value().unaryExpr([](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
    });
    const std::size_t io = a.tape().size();
    return a.tape().record(std::move(out), a.requires_grad(), [ia, io](Tape& t, const Matrix& g) {
        const auto& s = t.value(io).array();
        t.accumulate_expr(ia, (g.array() * s * (1.0 - s)).matrix());
    });
}

Var tanh(const Var& a) {
    const std::size_t ia = a.id();
    Matrix out = a.value().array().tanh().matrix();
    const std::size_t io = a.tape().size();
    return a.tape().record(std::move(out), a.requires_grad(), [ia, io](Tape& t, const Matrix& g) {
        const auto& y = t.value(io).array();
        t.accumulate_expr(ia, (g.array() * (1.0 - y * y)).matrix());
    });
}

Var elu(const Var& a) {
    const std::size_t ia = a.id();
    Matrix out = a.value().unaryExpr([](double x) { return x > 0 ? x : std::expm1(x); });
    return a.tape().record(std::move(out), a.requires_grad(), [ia](Tape& t, const Matrix& g) {
        const Matrix d = t.value(ia).unaryExpr([](double x) { return x > 0 ? 1.0 : std::exp(x); });
        t.accumulate_expr(ia, g.cwiseProduct(d));
    });
}

Var sum(const Var& a) {
    const std::size_t ia = a.id();
    const Eigen::Index r = a.rows(), c = a.cols();
    return a.tape().record(Matrix::Constant(1, 1, a.value().sum()), a.requires_grad(),
                           [ia, r, c](Tape& t, const Matrix& g) { t.accumulate_expr(ia, Matrix::Constant(r, c, g(0, 0))); });
}

Var col_sum(const Var& a) {
    const std::size_t ia = a.id();
    const Eigen::Index r = a.rows();
    return a.tape().record(a.value().colwise().sum(), a.requires_grad(),
                           [ia, r](Tape& t, const Matrix& g) { t.accumulate_expr(ia, g.replicate(r, 1)); });
}

Var concat_cols(const Var& a, const Var& b) {
    require_same_tape(a, b);
    require_shape(a.rows() == b.rows(), "concat_cols");
    const std::size_t ia = a.id(), ib = b.id();
    const Eigen::Index ca = a.cols(), cb = b.cols();
    Matrix out(a.rows(), ca + cb);
    out << a.value(), b.value();
    return a.tape().record(std::move(out), a.requires_grad() || b.requires_grad(),
                           [ia, ib, ca, cb](Tape& t, const Matrix& g) {
                               if (t.requires_grad(ia)) t.accumulate_expr(ia, g.leftCols(ca));
                               if (t.requires_grad(ib)) t.accumulate_expr(ib, g.rightCols(cb));
                           });
}

Var vstack(const std::vector<Var>& parts) {
    if (parts.empty()) throw StructuralError("vstack of nothing");
    Tape& tape = parts.front().tape();
    Eigen::Index rows = 0;
    const Eigen::Index cols = parts.front().cols();
    bool rg = false;
    for (const auto& p : parts) {
        require_shape(p.cols() == cols && &p.tape() == &tape, "vstack");
        rows += p.rows();
        rg = rg || p.requires_grad();
    }
    Matrix out(rows, cols);
    std::vector<std::pair<std::size_t, Eigen::Index>> pieces;
    Eigen::Index r = 0;
    for (const auto& p : parts) {
        out.middleRows(r, p.rows()) = p.value();
        pieces.emplace_back(p.id(), p.rows());
        r += p.rows();
    }
    return tape.record(std::move(out), rg, [pieces](Tape& t, const Matrix& g) {
        Eigen::Index at = 0;
        for (const auto& [id, n] : pieces) {
            if (t.requires_grad(id)) t.accumulate_expr(id, g.middleRows(at, n));
            at += n;
        }
    });
}

Var gather_rows(const Var& a, const std::vector<Eigen::Index>& rows) {
    const std::size_t ia = a.id();
    Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        require_shape(rows[k] >= 0 && rows[k] < a.rows(), "gather_rows");
        out.row(static_cast<Eigen::Index>(k)) = a.value().row(rows[k]);
    }
    const Eigen::Index r = a.rows(), c = a.cols();
    return a.tape().record(std::move(out), a.requires_grad(), [ia, rows, r, c](Tape& t, const Matrix& g) {
        Matrix acc = Matrix::Zero(r, c);
        for (std::size_t k = 0; k < rows.size(); ++k) acc.row(rows[k]) += g.row(static_cast<Eigen::Index>(k));
        t.accumulate(ia, acc);
    });
}

Var slice_rows(const Var& a, Eigen::Index begin, Eigen::Index count) {
    require_shape(begin >= 0 && count >= 0 && begin + count <= a.rows(), "slice_rows");
    const std::size_t ia = a.id();
    const Eigen::Index r = a.rows(), c = a.cols();
    return a.tape().record(a.value().middleRows(begin, count), a.requires_grad(),
                           [ia, begin, count, r, c](Tape& t, const Matrix& g) {
                               Matrix acc = Matrix::Zero(r, c);
                               acc.middleRows(begin, count) = g;
                               t.accumulate(ia, acc);
                           });
}

Var slice_cols(const Var& a, Eigen::Index begin, Eigen::Index count) {
    require_shape(begin >= 0 && count >= 0 && begin + count <= a.cols(), "slice_cols");
    const std::size_t ia = a.id();
    const Eigen::Index r = a.rows(), c = a.cols();
    return a.tape().record(a.value().middleCols(begin, count), a.requires_grad(),
                           [ia, begin, count, r, c](Tape& t, const Matrix& g) {
                               Matrix acc = Matrix::Zero(r, c);
                               acc.middleCols(begin, count) = g;
                               t.accumulate(ia, acc);
                           });
}

}  // namespace medrec::ad
