#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Core>

namespace medrec {

inline constexpr double kDecisionThreshold = 0.5;

/// Per-visit scores and binary labels, one row per visit, one column per medication.
struct PredictionBatch {
    Eigen::MatrixXd prob;
    Eigen::MatrixXd truth;
    double threshold = kDecisionThreshold;

    bool predicted(Eigen::Index visit, Eigen::Index med) const { return prob(visit, med) >= threshold; }
    bool positive(Eigen::Index visit, Eigen::Index med) const { return truth(visit, med) == 1.0; }
};

/// Mean per-visit |pred & truth| / |pred | truth|; a visit with an empty union scores 1.
double jaccard(const PredictionBatch& batch);

/// Mean per-visit average precision. Visits without positives are skipped and counted
/// in `skipped`; returns 0 when every visit is skipped.
double prauc(const PredictionBatch& batch, std::size_t* skipped = nullptr);

/// Mean per-visit F1 over medications; 0/0 ratios count as 0.
double f1(const PredictionBatch& batch);

struct TargetScores {
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

/// Precision, recall and F1 of one medication column pooled over all visits.
TargetScores target_scores(const PredictionBatch& batch, Eigen::Index med);

/// Mean size of the thresholded prediction set.
double med_count_mean(const PredictionBatch& batch);

/// Every metric of one evaluation; target scores only when a target column is given.
struct EvaluationScores {
    double jaccard = 0.0;
    double prauc = 0.0;
    double f1 = 0.0;
    double med_count_mean = 0.0;
    std::size_t prauc_skipped = 0;
    std::optional<TargetScores> target;
};

EvaluationScores score(const PredictionBatch& batch, std::optional<Eigen::Index> target = std::nullopt);

}  // namespace medrec
