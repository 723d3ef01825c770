#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "medrec/cooccurrence.hpp"

namespace medrec {

/// Two-sided Mann-Whitney U under the normal approximation with tie correction.
struct RankSumResult {
    double u1 = 0.0;  ///< U of the first group: rank sum minus n1(n1+1)/2, midranks for ties
    double u2 = 0.0;
    double z = 0.0;
    double p = 1.0;   ///< erfc(|z|/sqrt 2); 1 when every value is tied
    std::size_t n1 = 0;
    std::size_t n2 = 0;
};

/// Throws DegenerateError when either group has fewer than two samples.
RankSumResult mann_whitney(std::span<const double> x, std::span<const double> y);

/// One learnable gate after training.
struct GateRecord {
    std::size_t source = 0;
    std::size_t target = 0;
    double prior = 0.0;
    double pi = 0.0;
    bool retained = false;
};

/// Gates in edge order, self-loops excluded.
std::vector<GateRecord> gate_records(const CooccurrenceGraph& graph, const Eigen::VectorXd& log_kappa, double gamma);

/// CSV "source_code,target_code,prior_weight,pi,retained_flag".
std::string gates_to_csv(const CooccurrenceGraph& graph, std::span<const GateRecord> gates);

struct GraphReport {
    double strong_threshold = 0.5;
    std::size_t retained_strong = 0;
    std::size_t retained_weak = 0;
    std::size_t pruned_strong = 0;
    std::size_t pruned_weak = 0;
    /// Prior out-degrees of the distinct targets of pruned strong edges, and of every node.
    std::vector<double> pruned_target_degrees;
    std::vector<double> all_degrees;
    double median_pruned_target_degree = 0.0;  ///< NaN when there is no pruned strong edge
    double median_all_degree = 0.0;
    std::optional<RankSumResult> test;
    std::string test_error;  ///< why `test` is missing
};

/// An edge is strong when its prior is at least `strong_threshold`.
GraphReport analyze_graph(const CooccurrenceGraph& graph, std::span<const GateRecord> gates,
                          double strong_threshold = 0.5);

nlohmann::json graph_report_to_json(const GraphReport& report);

double median(std::vector<double> v);

}  // namespace medrec
