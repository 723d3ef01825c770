#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "medrec/corpus.hpp"
#include "medrec/model.hpp"
#include "medrec/objective.hpp"
#include "medrec/parameters.hpp"

namespace medrec {

struct TrainConfig {
    double learning_rate = 1e-2;
    int max_epochs = 200;
    int patience = 30;
    std::size_t batch_patients = 16;
    std::uint64_t seed = 0;
    LossWeights loss;

    void validate() const;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;  ///< mean step objective over the epoch
    double val_jaccard = 0.0;
    std::size_t retained_edges = 0;
    std::array<double, 3> mean_beta{};
};

struct TrainResult {
    std::vector<EpochLog> log;
    int best_epoch = 0;
    double best_val_jaccard = -1.0;
};

/// Called after every epoch with the current (not the best) parameters.
using EpochHook = std::function<void(const EpochLog&, const MedRecModel&)>;

/// Optimizes the model on `split.train`, tracking Jaccard on `split.validation`.
/// Stops after max_epochs or `patience` epochs without a strict improvement and leaves
/// the best-validation parameters in the model. Throws NumericalError on a non-finite
/// loss or gradient.
TrainResult train(MedRecModel& model, const VisitCorpus& corpus, const CorpusSplit& split, const TrainConfig& config,
                  const EpochHook& hook = {});

/// Eval-mode Jaccard over every visit of the given patients.
double evaluate_jaccard(const MedRecModel& model, const VisitCorpus& corpus, std::span<const std::size_t> patients);

/// "epoch,train_loss,val_jaccard,retained_edges,mean_beta_d,mean_beta_p,mean_beta_m".
std::string training_log_csv(const std::vector<EpochLog>& log);

/// Independent random stream number `stream` derived from `seed`.
std::mt19937_64 derive_rng(std::uint64_t seed, std::uint32_t stream);

}  // namespace medrec
