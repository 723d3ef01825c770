#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace medrec {

namespace ad {
class Tape;
}

/// Named, shaped learnable arrays with gradient slots. Insertion order is the
/// canonical order used for checkpoints and optimizer state.
class ParameterStore {
public:
    std::size_t add(const std::string& name, Eigen::MatrixXd value);

    std::size_t size() const noexcept { return values_.size(); }
    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    std::size_t index_of(const std::string& name) const;

    const std::string& name(std::size_t i) const { return names_[i]; }
    Eigen::MatrixXd& value(std::size_t i) { return values_[i]; }
    const Eigen::MatrixXd& value(std::size_t i) const { return values_[i]; }
    Eigen::MatrixXd& value(const std::string& name) { return values_[index_of(name)]; }
    const Eigen::MatrixXd& value(const std::string& name) const { return values_[index_of(name)]; }
    Eigen::MatrixXd& grad(std::size_t i) { return grads_[i]; }
    const Eigen::MatrixXd& grad(std::size_t i) const { return grads_[i]; }

    void zero_grad();
    /// Adds the adjoints of every parameter leaf bound on `tape` into the grad slots.
    void collect_grads(const ad::Tape& tape);

    std::size_t total_entries() const;
    bool all_finite() const;

private:
    std::vector<std::string> names_;
    std::vector<Eigen::MatrixXd> values_;
    std::vector<Eigen::MatrixXd> grads_;
    std::map<std::string, std::size_t> index_;
};

struct AdamConfig {
    double learning_rate = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adaptive-moment first-order optimizer over a ParameterStore.
class Adam {
public:
    explicit Adam(AdamConfig config = {}) : config_(config) {}

    void step(ParameterStore& store);
    long steps_taken() const noexcept { return t_; }

private:
    AdamConfig config_;
    std::vector<Eigen::MatrixXd> m_;
    std::vector<Eigen::MatrixXd> v_;
    long t_ = 0;
};

}  // namespace medrec
