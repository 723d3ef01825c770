#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "medrec/checkpoint.hpp"
#include "medrec/config.hpp"
#include "medrec/cooccurrence.hpp"
#include "medrec/errors.hpp"
#include "medrec/synthetic.hpp"
#include "medrec/training.hpp"
#include "test_util.hpp"

namespace {

using namespace medrec;

struct Small {
    GeneratedData data;
    CorpusSplit split;
    Small() {
        GeneratorSpec spec;
        spec.patients = 40;
        data = generate(spec);
        split = split_patients(data.corpus);
    }
    MedRecModel model(std::uint64_t seed = 5) const {
        ModelConfig c;
        c.dim = 8;
        return MedRecModel(data.forest, build_prior(data.forest, data.corpus, split.train), c, seed);
    }
    TrainConfig config(int epochs = 6) const {
        TrainConfig t;
        t.max_epochs = epochs;
        t.patience = std::min(epochs, 3);
        t.seed = 5;
        return t;
    }
};

TEST(TrainConfig, Validation) {
    TrainConfig t;
    EXPECT_NO_THROW(t.validate());
    t.learning_rate = 0.0;
    EXPECT_THROW(t.validate(), ConfigError);
    t = {};
    t.patience = t.max_epochs + 1;
    EXPECT_THROW(t.validate(), ConfigError);
    t = {};
    t.batch_patients = 0;
    EXPECT_THROW(t.validate(), ConfigError);
}

TEST(Train, EmptySplitsAreRejected) {
    Small s;
    MedRecModel m = s.model();
    CorpusSplit no_val = s.split;
    no_val.validation.clear();
    EXPECT_THROW(train(m, s.data.corpus, no_val, s.config()), ConfigError);
    CorpusSplit no_train = s.split;
    no_train.train.clear();
    EXPECT_THROW(train(m, s.data.corpus, no_train, s.config()), ConfigError);
}

TEST(Train, SameSeedIsBitIdentical) {
    Small s;
    MedRecModel a = s.model(), b = s.model();
    const TrainResult ra = train(a, s.data.corpus, s.split, s.config());
    const TrainResult rb = train(b, s.data.corpus, s.split, s.config());
    EXPECT_EQ(training_log_csv(ra.log), training_log_csv(rb.log));
    EXPECT_EQ(encode_checkpoint(a), encode_checkpoint(b));
}

TEST(Train, KeepsTheBestValidationEpoch) {
    Small s;
    MedRecModel m = s.model();
    std::vector<double> seen;
    const TrainResult r = train(m, s.data.corpus, s.split, s.config(8),
                                [&](const EpochLog& e, const MedRecModel&) { seen.push_back(e.val_jaccard); });
    ASSERT_EQ(seen.size(), r.log.size());
    const double best = *std::max_element(seen.begin(), seen.end());
    EXPECT_EQ(r.best_val_jaccard, best);
    // First epoch reaching the maximum.
    EXPECT_EQ(r.best_epoch, r.log[static_cast<std::size_t>(std::find(seen.begin(), seen.end(), best) - seen.begin())].epoch);
    EXPECT_EQ(evaluate_jaccard(m, s.data.corpus, s.split.validation), best);
    for (const auto& e : r.log) EXPECT_LE(e.val_jaccard, r.best_val_jaccard);
}

TEST(Train, PatienceStopsEarly) {
    Small s;
    MedRecModel m = s.model();
    TrainConfig t = s.config(50);
    t.patience = 1;
    t.learning_rate = 1e-9;
    const TrainResult r = train(m, s.data.corpus, s.split, t);
    // A learning rate this small cannot change the thresholded predictions.
    EXPECT_EQ(r.log.size(), 2u);
    EXPECT_EQ(r.best_epoch, r.log.front().epoch);
}

TEST(Train, LogCsvHeader) {
    EpochLog e;
    e.epoch = 1;
    const std::string csv = training_log_csv({e});
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,train_loss,val_jaccard,retained_edges,mean_beta_d,mean_beta_p,mean_beta_m");
}

TEST(Checkpoint, RoundTripReproducesPredictions) {
    Small s;
    MedRecModel m = s.model();
    train(m, s.data.corpus, s.split, s.config(2));
    const std::string bytes = encode_checkpoint(m, {{"note", "x"}});
    const Checkpoint cp = decode_checkpoint(bytes);
    EXPECT_EQ(cp.meta["note"], "x");
    MedRecModel fresh(s.data.forest, build_prior(s.data.forest, s.data.corpus, s.split.train),
                      model_config_from_json(cp.meta["model"]), 99);
    EXPECT_NE(fresh.predict(s.data.corpus, s.split.test).prob, m.predict(s.data.corpus, s.split.test).prob);
    restore_parameters(fresh, cp);
    EXPECT_EQ(fresh.predict(s.data.corpus, s.split.test).prob, m.predict(s.data.corpus, s.split.test).prob);
    EXPECT_EQ(encode_checkpoint(fresh, {{"note", "x"}}), bytes);

    const auto path = std::filesystem::temp_directory_path() / "medrec_roundtrip.ckpt";
    save_checkpoint(m, path.string());
    EXPECT_EQ(load_checkpoint(path.string()).params.size(), m.params().size());
    std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptInputsAreRejected) {
    Small s;
    const MedRecModel m = s.model();
    const std::string bytes = encode_checkpoint(m);
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, 4)), ParseError);
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 8)), ParseError);
    ModelConfig other;
    other.dim = 6;
    MedRecModel wrong(s.data.forest, build_prior(s.data.forest, s.data.corpus, s.split.train), other, 1);
    EXPECT_THROW(restore_parameters(wrong, decode_checkpoint(bytes)), StructuralError);
}

TEST(Config, DefaultsRoundTrip) {
    const RunConfig c = config_from_json(default_config_json());
    EXPECT_EQ(c.seed, 1u);
    EXPECT_EQ(c.train.learning_rate, 1e-2);
    EXPECT_EQ(c.train.max_epochs, 200);
    EXPECT_EQ(c.train.patience, 30);
    EXPECT_EQ(c.model.dim, 64);
    EXPECT_EQ(config_to_json(c), default_config_json());
}

TEST(Config, DottedOverridesAndErrors) {
    nlohmann::json doc = default_config_json();
    set_dotted(doc, "train.learning_rate", "0.5");
    set_dotted(doc, "variant", "no_hie");
    set_dotted(doc, "loss.sparse", "0.1");
    const RunConfig c = config_from_json(doc);
    EXPECT_EQ(c.train.learning_rate, 0.5);
    EXPECT_EQ(c.variant, "no_hie");
    EXPECT_EQ(c.train.loss.sparse, 0.1);
    EXPECT_THROW(set_dotted(doc, "train.learning_rat", "1"), ConfigError);
    EXPECT_THROW(set_dotted(doc, "train.max_epochs", "2.5"), ConfigError);
    EXPECT_THROW(set_dotted(doc, "train.max_epochs", "many"), ConfigError);
    EXPECT_THROW(merge_config(doc, {{"bogus", 1}}), ConfigError);
    EXPECT_THROW(merge_config(doc, {{"train", {{"nope", 1}}}}), ConfigError);
    nlohmann::json bad = default_config_json();
    set_dotted(bad, "variant", "neither");
    EXPECT_THROW(config_from_json(bad), ConfigError);
}

TEST(Config, FileThenOverrides) {
    const auto path = std::filesystem::temp_directory_path() / "medrec_config_test.json";
    {
        std::FILE* f = std::fopen(path.string().c_str(), "w");
        std::fputs(R"({"seed": 4, "train": {"max_epochs": 12, "patience": 5}})", f);
        std::fclose(f);
    }
    const RunConfig c = load_run_config(path.string(), {{"train.patience", "7"}});
    EXPECT_EQ(c.seed, 4u);
    EXPECT_EQ(c.train.seed, 4u);
    EXPECT_EQ(c.train.max_epochs, 12);
    EXPECT_EQ(c.train.patience, 7);
    {
        std::FILE* f = std::fopen(path.string().c_str(), "w");
        std::fputs("{\"seed\": ", f);
        std::fclose(f);
    }
    EXPECT_THROW(load_run_config(path.string(), {}), ParseError);
    std::filesystem::remove(path);
}

}  // namespace
