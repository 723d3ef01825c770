#include "medrec/parameters.hpp"

#include <cmath>

#include "medrec/autodiff.hpp"
#include "medrec/errors.hpp"

namespace medrec {

std::size_t ParameterStore::add(const std::string& name, Eigen::MatrixXd value) {
    if (contains(name)) throw StructuralError("duplicate parameter '" + name + "'");
    const std::size_t i = values_.size();
    names_.push_back(name);
    grads_.push_back(Eigen::MatrixXd::Zero(value.rows(), value.cols()));
    values_.push_back(std::move(value));
    index_.emplace(name, i);
    return i;
}

std::size_t ParameterStore::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw LookupError("unknown parameter '" + name + "'");
    return it->second;
}

void ParameterStore::zero_grad() {
    for (auto& g : grads_) g.setZero();
}

void ParameterStore::collect_grads(const ad::Tape& tape) {
    for (const auto& [param, node] : tape.bound_params()) {
        const auto& g = tape.grad(node);
        if (g.size() != 0) grads_[param] += g;
    }
}

std::size_t ParameterStore::total_entries() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
    return n;
}

bool ParameterStore::all_finite() const {
    for (const auto& v : values_) {
        if (!v.allFinite()) return false;
    }
    return true;
}

void Adam::step(ParameterStore& store) {
    if (m_.size() != store.size()) {
        m_.clear();
        v_.clear();
        for (std::size_t i = 0; i < store.size(); ++i) {
            m_.push_back(Eigen::MatrixXd::Zero(store.value(i).rows(), store.value(i).cols()));
            v_.push_back(m_.back());
        }
    }
    ++t_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < store.size(); ++i) {
        const auto& g = store.grad(i);
        m_[i] = b1 * m_[i] + (1.0 - b1) * g;
        v_[i] = b2 * v_[i] + (1.0 - b2) * g.cwiseProduct(g);
        store.value(i).array() -=
            config_.learning_rate * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.epsilon);
    }
}

}  // namespace medrec
