#pragma once

// Reverse-mode differentiation over dense Eigen matrices.
//
// A Tape records every intermediate matrix together with a closure that pushes the
// incoming adjoint back to its inputs. Nodes are appended in evaluation order, so a
// single reverse sweep is a valid topological order. Leaves created from a
// ParameterStore are shared: binding the same parameter twice yields the same node.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstddef>
#include <functional>
#include <vector>

namespace medrec {
class ParameterStore;
}

namespace medrec::ad {

using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class Tape;

class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape& tape() const { return *tape_; }
    std::size_t id() const noexcept { return id_; }
    bool valid() const noexcept { return tape_ != nullptr; }

    const Matrix& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    double scalar() const { return value()(0, 0); }
    bool requires_grad() const;

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape {
public:
    /// Pushes the adjoint of a node into the adjoints of its inputs.
    using Backward = std::function<void(Tape&, const Matrix& grad_out)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value);
    Var variable(Matrix value);
    /// Leaf bound to entry `index` of `store`; cached per (store, index).
    Var param(const ParameterStore& store, std::size_t index);

    /// Records an interior node. `requires_grad` should be the OR over its inputs.
    Var record(Matrix value, bool requires_grad, Backward backward);

    const Matrix& value(std::size_t id) const { return nodes_[id].value; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    /// Adjoint of a node after backward(); empty when no gradient reached it.
    const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }

    void accumulate(std::size_t id, const Matrix& g);
    template <typename Expr>
    void accumulate_expr(std::size_t id, const Expr& g) {
        Node& n = nodes_[id];
        if (!n.requires_grad) return;
        if (n.grad.size() == 0) {
            n.grad = g;
        } else {
            n.grad += g;
        }
    }

    /// Seeds d(root)/d(root) = 1 for a 1x1 root and sweeps backwards.
    void backward(const Var& root);

    /// Parameter leaves created on this tape, as (store index, node id) pairs.
    const std::vector<std::pair<std::size_t, std::size_t>>& bound_params() const { return bound_; }
    const ParameterStore* bound_store() const { return store_; }

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        Backward backward;
    };
    std::vector<Node> nodes_;
    std::vector<std::pair<std::size_t, std::size_t>> bound_;
    std::vector<long> param_node_;
    const ParameterStore* store_ = nullptr;
};

// ---- elementary operations -------------------------------------------------

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
/// Constant sparse matrix times a variable.
Var spmm(const SparseMatrix& s, const Var& b);

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(double s, const Var& a);
Var operator-(const Var& a);
Var hadamard(const Var& a, const Var& b);
Var add_scalar(const Var& a, double s);

/// Adds a 1 x cols row vector to every row of a.
Var add_row(const Var& a, const Var& row);
/// Multiplies row i of a by v(i, 0); v is rows x 1.
Var row_scale(const Var& a, const Var& v);

Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var elu(const Var& a);

/// Sum of all entries, as a 1x1 node.
Var sum(const Var& a);
/// Sum over rows, giving a 1 x cols row.
Var col_sum(const Var& a);

Var concat_cols(const Var& a, const Var& b);
Var vstack(const std::vector<Var>& parts);
Var gather_rows(const Var& a, const std::vector<Eigen::Index>& rows);
Var slice_rows(const Var& a, Eigen::Index begin, Eigen::Index count);
Var slice_cols(const Var& a, Eigen::Index begin, Eigen::Index count);

}  // namespace medrec::ad
