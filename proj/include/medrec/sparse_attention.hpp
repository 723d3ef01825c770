#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "medrec/autodiff.hpp"
#include "medrec/cooccurrence.hpp"

namespace medrec {

/// Globals of the gated co-occurrence attention.
struct AttentionConfig {
    int layers = 2;
    double tau = 1.0;           ///< softmax temperature
    double beta = 2.0 / 3.0;    ///< hard-concrete temperature
    double eta = 1.0;           ///< prior strength on scores
    double gamma = 1.0;         ///< prior strength on gates
    double log_kappa_init = 2.0;
    double leaky_slope = 0.2;

    /// Throws ConfigError on non-positive temperatures, negative strengths or L < 1.
    void validate() const;
};

enum class GateMode { Train, Eval };

/// Uniform draws, one per learnable gate, in gate order.
struct GateNoise {
    Eigen::VectorXd u;

    /// Draws from the open interval (0, 1).
    static GateNoise sample(std::size_t gates, std::mt19937_64& rng);
};

/// sigma(x): the probability that a relaxed gate with log kappa-bar = x exceeds 1/2.
double inclusion_probability(double log_kappa_bar);

/// log kappa-bar = log kappa + gamma * log(prior), per learnable gate.
Eigen::VectorXd effective_log_kappa(const Eigen::VectorXd& log_kappa, const CooccurrenceGraph& graph, double gamma);

/// Eval-mode retention per gate: pi >= 1/2.
std::vector<bool> retained_gates(const Eigen::VectorXd& log_kappa, const CooccurrenceGraph& graph, double gamma);
std::size_t retained_count(const Eigen::VectorXd& log_kappa, const CooccurrenceGraph& graph, double gamma);

// ---- value-level operations (each evaluates the differentiable op once) --------

/// s_ij = leaky(a^T [W h_i ; W h_j]) + eta * log(p_ij), per edge.
Eigen::VectorXd raw_scores(const Eigen::MatrixXd& h, const Eigen::MatrixXd& w, const Eigen::VectorXd& a,
                           const CooccurrenceGraph& graph, const AttentionConfig& config);

/// Per-edge gates; self-loops are 1. Train mode uses `noise`, eval mode thresholds pi.
Eigen::VectorXd sample_gates(const Eigen::VectorXd& log_kappa, const CooccurrenceGraph& graph,
                             const AttentionConfig& config, GateMode mode, const GateNoise* noise);

/// alpha_ij = exp(s_ij/tau) z_ij / sum_k exp(s_ik/tau) z_ik, per edge.
Eigen::VectorXd attention_weights(const Eigen::VectorXd& scores, const Eigen::VectorXd& gates,
                                  const CooccurrenceGraph& graph, double tau);

/// phi(sum_j alpha_ij h_j W) with phi = ELU.
Eigen::MatrixXd masked_softmax_layer(const Eigen::MatrixXd& h, const Eigen::MatrixXd& w, const Eigen::VectorXd& a,
                                     const Eigen::VectorXd& gates, const CooccurrenceGraph& graph,
                                     const AttentionConfig& config);

/// Sum of pi over learnable gates.
double sparsity_penalty(const Eigen::VectorXd& log_kappa, const CooccurrenceGraph& graph, double gamma);

namespace ad {

struct AttentionLayer {
    Var w;  ///< dim x dim
    Var a;  ///< 2 dim x 1
};

Var edge_scores(const Var& hw, const Var& a, const CooccurrenceGraph& graph, const std::vector<double>& log_priors,
                const AttentionConfig& config);
Var gate_values(const Var& log_kappa, const CooccurrenceGraph& graph, const std::vector<double>& log_priors,
                const AttentionConfig& config, GateMode mode, const GateNoise* noise);
Var masked_softmax_aggregate(const Var& scores, const Var& gates, const Var& hw, const CooccurrenceGraph& graph,
                             double tau);
Var attention_layer(const Var& h, const AttentionLayer& layer, const Var& gates, const CooccurrenceGraph& graph,
                    const std::vector<double>& log_priors, const AttentionConfig& config);
/// Applies every layer in turn to the initial node features.
Var encode_cooccurrence(const Var& h0, const std::vector<AttentionLayer>& layers, const Var& gates,
                        const CooccurrenceGraph& graph, const std::vector<double>& log_priors,
                        const AttentionConfig& config);
Var sparsity_penalty(const Var& log_kappa, const CooccurrenceGraph& graph, const std::vector<double>& log_priors,
                     double gamma);

}  // namespace ad

}  // namespace medrec
