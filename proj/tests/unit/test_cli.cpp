#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

class Cli : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        dir = fs::temp_directory_path() / ("medrec_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    // Exit status of the command; stdout and stderr land in dir/out.txt and dir/err.txt.
    int run(const std::string& args) {
        const std::string cmd = std::string(MEDREC_CLI) + " " + args + " --out-dir " + dir.string() + " >" +
                                (dir / "out.txt").string() + " 2>" + (dir / "err.txt").string();
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
    std::string err() const { return slurp(dir / "err.txt"); }
};

const std::string kSmall = " --seed 3 --model.dim 8 --train.max_epochs 3 --train.patience 2";

TEST_F(Cli, FullPipeline) {
    ASSERT_EQ(run("gen-data --seed 3 --target-med M1.1.1 --unseen.plant true"), 0) << err();
    for (const char* f : {"ontology.json", "corpus.jsonl", "generator.json"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
    const json gen = json::parse(slurp(dir / "generator.json"));
    EXPECT_TRUE(gen.contains("resolved_rules"));

    ASSERT_EQ(run("mask-unseen --seed 3 --target-med M1.1.1"), 0) << err();
    const json unseen = json::parse(slurp(dir / "unseen.json"));
    std::vector<std::string> sources = unseen["sources"];
    std::sort(sources.begin(), sources.end());
    std::vector<std::string> planted = gen["planted"]["visible_sources"];
    std::sort(planted.begin(), planted.end());
    EXPECT_EQ(sources, planted);
    EXPECT_TRUE(fs::exists(dir / "corpus_masked.jsonl"));

    ASSERT_EQ(run("train --paths.unseen unseen.json" + kSmall), 0) << err();
    EXPECT_TRUE(fs::exists(dir / "model.ckpt"));
    const std::string log = slurp(dir / "train_log.csv");
    EXPECT_EQ(log.substr(0, log.find('\n')), "epoch,train_loss,val_jaccard,retained_edges,mean_beta_d,mean_beta_p,mean_beta_m");

    ASSERT_EQ(run("eval --paths.unseen unseen.json" + kSmall), 0) << err();
    const std::string first = slurp(dir / "eval.json");
    const json report = json::parse(first);
    for (const char* k : {"jaccard", "prauc", "f1", "med_count_mean", "tf1", "tprec", "trecall", "per_seed", "test_visits"})
        EXPECT_TRUE(report.contains(k)) << k;
    EXPECT_EQ(report["target_med"], "M1.1.1");
    EXPECT_EQ(report["per_seed"]["jaccard"].size(), 1u);
    ASSERT_EQ(run("eval --paths.unseen unseen.json" + kSmall), 0) << err();
    EXPECT_EQ(slurp(dir / "eval.json"), first);

    ASSERT_EQ(run("export-graph --paths.unseen unseen.json" + kSmall), 0) << err();
    const std::string gates = slurp(dir / "gates.csv");
    EXPECT_EQ(gates.substr(0, gates.find('\n')), "source_code,target_code,prior_weight,pi,retained_flag");
    EXPECT_TRUE(json::parse(slurp(dir / "graph_report.json")).contains("edges"));

    ASSERT_EQ(run("export-embeddings --paths.unseen unseen.json" + kSmall), 0) << err();
    EXPECT_TRUE(fs::exists(dir / "embeddings.csv"));
    EXPECT_TRUE(fs::exists(dir / "betas.csv"));
}

TEST_F(Cli, SameSeedTrainingIsByteIdentical) {
    ASSERT_EQ(run("gen-data --seed 2 --generator.patients 40"), 0) << err();
    const std::string train = "train --seed 2 --generator.patients 40 --model.dim 8 --train.max_epochs 3 --train.patience 2";
    ASSERT_EQ(run(train), 0) << err();
    const std::string ckpt = slurp(dir / "model.ckpt"), log = slurp(dir / "train_log.csv");
    fs::remove(dir / "model.ckpt");
    ASSERT_EQ(run(train), 0) << err();
    EXPECT_EQ(slurp(dir / "model.ckpt"), ckpt);
    EXPECT_EQ(slurp(dir / "train_log.csv"), log);
}

TEST_F(Cli, ErrorsAreOneLineJson) {
    EXPECT_EQ(run("train --seed 1"), 1);
    const std::string e = err();
    const json j = json::parse(e.substr(0, e.find('\n')));
    EXPECT_TRUE(j.contains("error"));
    EXPECT_TRUE(j.contains("message"));

    EXPECT_EQ(run("gen-data --generator.nonsense 3"), 1);
    EXPECT_NE(err().find("nonsense"), std::string::npos);

    { std::ofstream(dir / "corpus.jsonl") << "{broken\n"; }
    ASSERT_EQ(run("gen-data --paths.corpus other.jsonl"), 0) << err();
    EXPECT_EQ(run("train"), 1);
    const json parse = json::parse(err().substr(0, err().find('\n')));
    EXPECT_TRUE(parse.contains("line"));
    EXPECT_EQ(parse["line"], 1);
}

}  // namespace
