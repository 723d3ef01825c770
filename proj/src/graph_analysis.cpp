#include "medrec/graph_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>

#include "medrec/errors.hpp"
#include "medrec/sparse_attention.hpp"

namespace medrec {

RankSumResult mann_whitney(std::span<const double> x, std::span<const double> y) {
    if (x.size() < 2 || y.size() < 2) throw DegenerateError("rank-sum test needs at least two samples per group");
    const std::size_t n1 = x.size(), n2 = y.size(), n = n1 + n2;
    std::vector<std::pair<double, bool>> all;
    all.reserve(n);
    for (double v : x) all.emplace_back(v, true);
    for (double v : y) all.emplace_back(v, false);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    double r1 = 0.0, ties = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && all[j].first == all[i].first) ++j;
        const double mid = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k)
            if (all[k].second) r1 += mid;
        const double t = static_cast<double>(j - i);
        ties += t * t * t - t;
        i = j;
    }
    const double a = static_cast<double>(n1), b = static_cast<double>(n2), N = static_cast<double>(n);
    RankSumResult r;
    r.n1 = n1;
    r.n2 = n2;
    r.u1 = r1 - a * (a + 1.0) / 2.0;
    r.u2 = a * b - r.u1;
    const double var = a * b / 12.0 * ((N + 1.0) - ties / (N * (N - 1.0)));
    if (var <= 0.0) return r;
    r.z = (r.u1 - a * b / 2.0) / std::sqrt(var);
    r.p = std::erfc(std::abs(r.z) / std::sqrt(2.0));
    return r;
}

std::vector<GateRecord> gate_records(const CooccurrenceGraph& graph, const Eigen::VectorXd& log_kappa, double gamma) {
    const Eigen::VectorXd eff = effective_log_kappa(log_kappa, graph, gamma);
    std::vector<GateRecord> out;
    out.reserve(graph.gate_count());
    for (const auto& e : graph.edges()) {
        if (e.is_self_loop()) continue;
        const double pi = inclusion_probability(eff(e.gate));
        out.push_back({e.source, e.target, e.prior, pi, pi >= 0.5});
    }
    return out;
}

std::string gates_to_csv(const CooccurrenceGraph& graph, std::span<const GateRecord> gates) {
    std::string out = "source_code,target_code,prior_weight,pi,retained_flag\n";
    char buf[96];
    for (const auto& g : gates) {
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%d\n", g.prior, g.pi, g.retained ? 1 : 0);
        out += graph.code(g.source) + "," + graph.code(g.target) + buf;
    }
    return out;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

GraphReport analyze_graph(const CooccurrenceGraph& graph, std::span<const GateRecord> gates, double strong_threshold) {
    GraphReport r;
    r.strong_threshold = strong_threshold;
    std::set<std::size_t> pruned_targets;
    for (const auto& g : gates) {
        const bool strong = g.prior >= strong_threshold;
        if (g.retained) {
            ++(strong ? r.retained_strong : r.retained_weak);
        } else if (strong) {
            ++r.pruned_strong;
            pruned_targets.insert(g.target);
        } else {
            ++r.pruned_weak;
        }
    }
    for (std::size_t t : pruned_targets) r.pruned_target_degrees.push_back(static_cast<double>(graph.out_degree(t)));
    for (std::size_t i = 0; i < graph.node_count(); ++i) r.all_degrees.push_back(static_cast<double>(graph.out_degree(i)));
    r.median_pruned_target_degree = median(r.pruned_target_degrees);
    r.median_all_degree = median(r.all_degrees);
    try {
        r.test = mann_whitney(r.pruned_target_degrees, r.all_degrees);
    } catch (const DegenerateError& e) {
        r.test_error = e.what();
    }
    return r;
}

nlohmann::json graph_report_to_json(const GraphReport& r) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json j{{"strong_threshold", r.strong_threshold},
                     {"edges",
                      {{"retained_strong", r.retained_strong},
                       {"retained_weak", r.retained_weak},
                       {"pruned_strong", r.pruned_strong},
                       {"pruned_weak", r.pruned_weak}}},
                     {"pruned_target_count", r.pruned_target_degrees.size()},
                     {"node_count", r.all_degrees.size()},
                     {"median_out_degree_pruned_targets", num(r.median_pruned_target_degree)},
                     {"median_out_degree_all", num(r.median_all_degree)}};
    if (r.test) {
        j["mann_whitney"] = {{"u1", r.test->u1}, {"u2", r.test->u2}, {"z", r.test->z}, {"p", r.test->p},
                             {"n1", r.test->n1}, {"n2", r.test->n2}};
    } else {
        j["mann_whitney"] = {{"error", r.test_error}};
    }
    return j;
}

}  // namespace medrec
