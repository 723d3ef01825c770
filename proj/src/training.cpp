#include "medrec/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "medrec/errors.hpp"
#include "medrec/metrics.hpp"

namespace medrec {

void TrainConfig::validate() const {
    if (!(learning_rate > 0)) throw ConfigError("learning rate must be positive");
    if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
    if (patience < 1 || patience > max_epochs) throw ConfigError("patience must lie in [1, max_epochs]");
    if (batch_patients < 1) throw ConfigError("batch_patients must be at least 1");
    loss.validate();
}

std::mt19937_64 derive_rng(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
    return std::mt19937_64(seq);
}

double evaluate_jaccard(const MedRecModel& model, const VisitCorpus& corpus, std::span<const std::size_t> patients) {
    const auto pred = model.predict(corpus, patients);
    return jaccard(PredictionBatch{pred.prob, pred.truth});
}

namespace {

void require_finite(const ParameterStore& store, int epoch, std::size_t step) {
    for (std::size_t i = 0; i < store.size(); ++i) {
        if (!store.grad(i).allFinite()) {
            throw NumericalError("non-finite gradient for '" + store.name(i) + "' at epoch " + std::to_string(epoch) +
                                 ", step " + std::to_string(step));
        }
    }
}

EpochLog summarize(const MedRecModel& model, const VisitCorpus& corpus, const CorpusSplit& split, int epoch,
                   double train_loss) {
    EpochLog row;
    row.epoch = epoch;
    row.train_loss = train_loss;
    row.val_jaccard = evaluate_jaccard(model, corpus, split.validation);
    row.retained_edges = model.retained_edges();
    ad::Tape tape;
    const auto e = model.embed(tape, GateMode::Eval, nullptr, false);
    for (std::size_t k = 0; k < 3; ++k) row.mean_beta[k] = e.beta[k].value().mean();
    return row;
}

}  // namespace

TrainResult train(MedRecModel& model, const VisitCorpus& corpus, const CorpusSplit& split, const TrainConfig& config,
                  const EpochHook& hook) {
    config.validate();
    if (split.train.empty() || split.validation.empty()) throw ConfigError("training needs non-empty train and validation splits");
    ParameterStore& store = model.params();
    Adam adam(AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8});
    std::mt19937_64 shuffle_rng = derive_rng(config.seed, 1);
    std::mt19937_64 gate_rng = derive_rng(config.seed, 2);

    TrainResult result;
    std::vector<Eigen::MatrixXd> best = [&] {
        std::vector<Eigen::MatrixXd> v;
        for (std::size_t i = 0; i < store.size(); ++i) v.push_back(store.value(i));
        return v;
    }();
    std::vector<std::size_t> order = split.train;
    int since_best = 0;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_patients) {
            const std::size_t end = std::min(order.size(), begin + config.batch_patients);
            const std::span<const std::size_t> batch(order.data() + begin, end - begin);
            const GateNoise noise = GateNoise::sample(model.graph().gate_count(), gate_rng);
            ad::Tape tape;
            const LossParts parts = model.loss(tape, corpus, batch, config.loss, GateMode::Train, &noise);
            const double value = parts.total.scalar();
            if (!std::isfinite(value)) {
                throw NumericalError("non-finite objective at epoch " + std::to_string(epoch) + ", step " +
                                     std::to_string(steps) + " (bce " + std::to_string(parts.bce) + ", margin " +
                                     std::to_string(parts.margin) + ", hyp " + std::to_string(parts.hyp) + ", sparse " +
                                     std::to_string(parts.sparse) + ")");
            }
            tape.backward(parts.total);
            store.zero_grad();
            store.collect_grads(tape);
            require_finite(store, epoch, steps);
            adam.step(store);
            loss_sum += value;
            ++steps;
        }
        EpochLog row = summarize(model, corpus, split, epoch, loss_sum / static_cast<double>(steps));
        result.log.push_back(row);
        if (hook) hook(row, model);
        if (row.val_jaccard > result.best_val_jaccard) {
            result.best_val_jaccard = row.val_jaccard;
            result.best_epoch = epoch;
            for (std::size_t i = 0; i < store.size(); ++i) best[i] = store.value(i);
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
    }
    for (std::size_t i = 0; i < store.size(); ++i) store.value(i) = best[i];
    return result;
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
    std::ostringstream os;
    os << "epoch,train_loss,val_jaccard,retained_edges,mean_beta_d,mean_beta_p,mean_beta_m\n";
    char buf[256];
    for (const auto& r : log) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%zu,%.17g,%.17g,%.17g\n", r.epoch, r.train_loss, r.val_jaccard,
                      r.retained_edges, r.mean_beta[0], r.mean_beta[1], r.mean_beta[2]);
        os << buf;
    }
    return os.str();
}

}  // namespace medrec
