// medrec: command-line front end.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "medrec/checkpoint.hpp"
#include "medrec/config.hpp"
#include "medrec/cooccurrence.hpp"
#include "medrec/errors.hpp"
#include "medrec/graph_analysis.hpp"
#include "medrec/metrics.hpp"
#include "medrec/model.hpp"
#include "medrec/synthetic.hpp"
#include "medrec/training.hpp"
#include "medrec/unseen.hpp"

using namespace medrec;
using nlohmann::json;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> variant;
    std::optional<std::string> target_med;
    std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "JSON configuration file");
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--variant", f.variant, "full, no_hie, no_co or no_fus");
    cmd->add_option("--target-med", f.target_med, "target medication code");
    cmd->add_option("--out-dir", f.out_dir, "directory for relative paths and outputs");
}

/// Removes "--a.b value" and "--a.b=value" tokens from argv; anything dotted is a config override.
std::vector<std::pair<std::string, std::string>> take_dotted_overrides(std::vector<char*>& args) {
    std::vector<std::pair<std::string, std::string>> out;
    std::vector<char*> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string tok = args[i];
        const std::string key = tok.rfind("--", 0) == 0 ? tok.substr(2) : "";
        const auto eq = key.find('=');
        if (key.substr(0, eq).find('.') == std::string::npos) {
            rest.push_back(args[i]);
            continue;
        }
        if (eq != std::string::npos) {
            out.emplace_back(key.substr(0, eq), key.substr(eq + 1));
        } else {
            if (i + 1 >= args.size()) throw ConfigError("missing value for '" + tok + "'");
            out.emplace_back(key, args[++i]);
        }
    }
    args = std::move(rest);
    return out;
}

RunConfig resolve_config(std::vector<std::pair<std::string, std::string>> overrides, const CommonFlags& f) {
    if (f.seed) overrides.emplace_back("seed", std::to_string(*f.seed));
    if (f.variant) overrides.emplace_back("variant", *f.variant);
    if (f.target_med) overrides.emplace_back("target_med", *f.target_med);
    if (f.out_dir) overrides.emplace_back("paths.out_dir", *f.out_dir);
    RunConfig c = load_run_config(f.config, overrides);
    std::filesystem::create_directories(c.paths.out_dir);
    return c;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

struct Inputs {
    OntologyForest forest;
    VisitCorpus corpus;
    CorpusSplit split;
    std::optional<UnseenSpec> unseen;
};

Inputs load_inputs(const RunConfig& c) {
    Inputs in;
    in.forest = load_ontology(c.resolve(c.paths.ontology));
    in.corpus = read_corpus(in.forest, c.resolve(c.paths.corpus));
    in.split = split_patients(in.corpus);
    if (!c.paths.unseen.empty()) {
        std::ifstream f(c.resolve(c.paths.unseen));
        if (!f) throw ConfigError("cannot read unseen specification '" + c.resolve(c.paths.unseen) + "'");
        json j;
        try {
            j = json::parse(f);
        } catch (const json::parse_error& e) {
            throw ParseError(c.resolve(c.paths.unseen), 0, "", e.what());
        }
        in.unseen = unseen_from_json(j);
        in.corpus = apply_unseen(in.forest, in.corpus, in.split, *in.unseen);
    }
    return in;
}

MedRecModel load_model(const Inputs& in, const std::string& path, Checkpoint* out = nullptr) {
    Checkpoint cp = load_checkpoint(path);
    ModelConfig mc = model_config_from_json(cp.meta.at("model"));
    const auto seed = cp.meta.value("seed", std::uint64_t{0});
    MedRecModel model(in.forest, build_prior(in.forest, in.corpus, in.split.train), mc, seed);
    restore_parameters(model, cp);
    if (out) *out = std::move(cp);
    return model;
}

int cmd_gen_data(const RunConfig& c) {
    GeneratorSpec spec = c.generator;
    if (c.unseen.plant) {
        if (c.target_med.empty()) throw ConfigError("unseen.plant needs target_med");
        spec = plant_unseen_scenario(spec, c.target_med, c.unseen.visible, c.unseen.held_out);
    }
    const GeneratedData data = generate(spec);
    save_ontology(data.forest, c.resolve(c.paths.ontology));
    write_corpus(data.forest, data.corpus, c.resolve(c.paths.corpus));
    json g = generator_to_json(spec);
    json rules = json::array();
    for (const auto& r : data.rules) rules.push_back({{"ancestor", r.ancestor}, {"medication", r.medication}, {"propensity", r.propensity}});
    g["resolved_rules"] = rules;
    g["attempts"] = data.attempts;
    write_text(c.resolve("generator.json"), dump(g));
    std::cout << json{{"ontology", c.resolve(c.paths.ontology)},
                      {"corpus", c.resolve(c.paths.corpus)},
                      {"patients", data.corpus.patients.size()},
                      {"visits", data.corpus.visit_count()}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_train(const RunConfig& c) {
    const Inputs in = load_inputs(c);
    MedRecModel model(in.forest, build_prior(in.forest, in.corpus, in.split.train), c.model, c.seed);
    const TrainResult r = train(model, in.corpus, in.split, c.train);
    json meta{{"seed", c.seed},
              {"variant", c.variant},
              {"best_epoch", r.best_epoch},
              {"best_val_jaccard", r.best_val_jaccard},
              {"config", config_to_json(c)}};
    if (in.unseen) meta["unseen"] = unseen_to_json(*in.unseen);
    save_checkpoint(model, c.resolve(c.paths.checkpoint), meta);
    write_text(c.resolve("train_log.csv"), training_log_csv(r.log));
    std::cout << json{{"checkpoint", c.resolve(c.paths.checkpoint)},
                      {"epochs", r.log.size()},
                      {"best_epoch", r.best_epoch},
                      {"best_val_jaccard", r.best_val_jaccard},
                      {"retained_edges", model.retained_edges()}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_eval(const RunConfig& c, std::vector<std::string> checkpoints) {
    const Inputs in = load_inputs(c);
    if (checkpoints.empty()) checkpoints.push_back(c.resolve(c.paths.checkpoint));
    std::string target = c.target_med;
    if (target.empty() && in.unseen) target = in.unseen->target;
    std::optional<Eigen::Index> col;
    if (!target.empty()) {
        const auto& mt = in.forest.tree(EntityType::Medication);
        if (!mt.contains(target)) throw LookupError("unknown target medication '" + target + "'");
        const long ord = mt.leaf_ordinal(mt.node(target));
        if (ord < 0) throw LookupError("target medication '" + target + "' is not a leaf");
        col = ord;
    }
    const char* keys[] = {"jaccard", "prauc", "f1", "med_count_mean", "tf1", "tprec", "trecall"};
    json per_seed = json::object();
    for (const char* k : keys) per_seed[k] = json::array();
    per_seed["seed"] = json::array();
    per_seed["checkpoint"] = json::array();
    for (const auto& path : checkpoints) {
        Checkpoint cp;
        const MedRecModel model = load_model(in, path, &cp);
        const VisitPredictions pred = model.predict(in.corpus, in.split.test);
        const EvaluationScores s = score({pred.prob, pred.truth}, col);
        if (s.prauc_skipped) std::cerr << "warning: " << s.prauc_skipped << " test visits without medications skipped in prauc\n";
        per_seed["jaccard"].push_back(s.jaccard);
        per_seed["prauc"].push_back(s.prauc);
        per_seed["f1"].push_back(s.f1);
        per_seed["med_count_mean"].push_back(s.med_count_mean);
        if (s.target) {
            per_seed["tf1"].push_back(s.target->f1);
            per_seed["tprec"].push_back(s.target->precision);
            per_seed["trecall"].push_back(s.target->recall);
        }
        per_seed["seed"].push_back(cp.meta.value("seed", std::uint64_t{0}));
        per_seed["checkpoint"].push_back(path);
    }
    json report{{"test_visits", 0}, {"target_med", target.empty() ? json(nullptr) : json(target)}};
    for (const char* k : keys) {
        const auto& arr = per_seed[k];
        if (arr.empty()) {
            report[k] = nullptr;
            continue;
        }
        double sum = 0.0;
        for (const auto& v : arr) sum += v.get<double>();
        report[k] = sum / static_cast<double>(arr.size());
    }
    std::size_t visits = 0;
    for (std::size_t p : in.split.test) visits += in.corpus.patients[p].visits.size();
    report["test_visits"] = visits;
    report["per_seed"] = per_seed;
    const std::string text = dump(report);
    write_text(c.resolve("eval.json"), text);
    std::cout << text;
    return 0;
}

int cmd_mask_unseen(const RunConfig& c) {
    if (c.target_med.empty()) throw ConfigError("mask-unseen needs --target-med");
    const OntologyForest forest = load_ontology(c.resolve(c.paths.ontology));
    const VisitCorpus corpus = read_corpus(forest, c.resolve(c.paths.corpus));
    const CorpusSplit split = split_patients(corpus);
    const UnseenResult r = build_unseen(forest, corpus, split, c.target_med, c.unseen.thresholds);
    if (r.spec.sources.empty()) std::cerr << "warning: no source codes selected; the unseen setting equals standard evaluation\n";
    write_text(c.resolve("unseen.json"), dump(unseen_to_json(r.spec)));
    write_corpus(forest, r.masked, c.resolve("corpus_masked.jsonl"));
    std::cout << unseen_to_json(r.spec).dump() << "\n";
    return 0;
}

int cmd_export_graph(const RunConfig& c) {
    const Inputs in = load_inputs(c);
    const MedRecModel model = load_model(in, c.resolve(c.paths.checkpoint));
    const auto gates = gate_records(model.graph(), model.log_kappa(), model.config().attention.gamma);
    const GraphReport report = analyze_graph(model.graph(), gates, c.strong_prior);
    write_text(c.resolve("gates.csv"), gates_to_csv(model.graph(), gates));
    write_text(c.resolve("prior.csv"), prior_to_csv(model.graph()));
    const std::string text = dump(graph_report_to_json(report));
    write_text(c.resolve("graph_report.json"), text);
    std::cout << text;
    return 0;
}

int cmd_export_embeddings(const RunConfig& c) {
    const Inputs in = load_inputs(c);
    const MedRecModel model = load_model(in, c.resolve(c.paths.checkpoint));
    const EmbeddingSnapshot snap = model.embeddings();
    const Eigen::Index d = model.config().dim;
    std::string emb = "code,type,pathway";
    for (Eigen::Index k = 0; k < d; ++k) emb += ",e" + std::to_string(k);
    emb += "\n";
    std::string betas = "code,type,beta\n";
    char buf[32];
    for (EntityType t : kEntityTypes) {
        const auto& tree = in.forest.tree(t);
        const std::size_t ti = type_index(t);
        const std::pair<const char*, const Eigen::MatrixXd*> pathways[] = {
            {"fused", &snap.fused[ti]}, {"hie", &snap.hie[ti]}, {"co", &snap.co[ti]}};
        for (std::size_t leaf = 0; leaf < tree.leaves().size(); ++leaf) {
            const std::string& code = tree.code(tree.leaves()[leaf]);
            for (const auto& [name, table] : pathways) {
                emb += code + "," + type_name(t) + "," + name;
                for (Eigen::Index k = 0; k < d; ++k) {
                    std::snprintf(buf, sizeof buf, ",%.17g", (*table)(static_cast<Eigen::Index>(leaf), k));
                    emb += buf;
                }
                emb += "\n";
            }
            std::snprintf(buf, sizeof buf, "%.17g", snap.beta[ti](static_cast<Eigen::Index>(leaf)));
            betas += code + "," + type_name(t) + "," + buf + "\n";
        }
    }
    write_text(c.resolve("embeddings.csv"), emb);
    write_text(c.resolve("betas.csv"), betas);
    std::cout << json{{"embeddings", c.resolve("embeddings.csv")}, {"betas", c.resolve("betas.csv")}}.dump() << "\n";
    return 0;
}

void report_error(const std::string& kind, const std::string& message, const json& extra = json::object()) {
    json j{{"error", kind}, {"message", message}};
    j.update(extra);
    std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Medication recommendation from hierarchical and co-occurrence code embeddings"};
    app.require_subcommand(1);
    app.footer("Any configuration field can be set with --section.key value, e.g. --train.learning_rate 0.005.");
    CommonFlags flags;
    std::vector<std::string> checkpoints;
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic ontology and corpus");
    auto* tr = app.add_subcommand("train", "train a model and write a checkpoint");
    auto* ev = app.add_subcommand("eval", "score checkpoints on the test split");
    ev->add_option("checkpoints", checkpoints, "checkpoint files, one per seed");
    auto* mask = app.add_subcommand("mask-unseen", "select and mask the sources of a target medication");
    auto* eg = app.add_subcommand("export-graph", "export learned gates and the edge-refinement report");
    auto* ee = app.add_subcommand("export-embeddings", "export per-code embeddings and fusion weights");
    for (auto* cmd : {gen, tr, ev, mask, eg, ee}) add_common(cmd, flags);

    std::vector<char*> args(argv, argv + argc);
    std::vector<std::pair<std::string, std::string>> overrides;
    try {
        overrides = take_dotted_overrides(args);
    } catch (const Error& e) {
        report_error("usage_error", e.what());
        return 2;
    }
    try {
        app.parse(static_cast<int>(args.size()), args.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error("usage_error", e.what());
        return 2;
    }
    try {
        auto* cmd = app.get_subcommands().front();
        const RunConfig c = resolve_config(std::move(overrides), flags);
        if (cmd == gen) return cmd_gen_data(c);
        if (cmd == tr) return cmd_train(c);
        if (cmd == ev) return cmd_eval(c, checkpoints);
        if (cmd == mask) return cmd_mask_unseen(c);
        if (cmd == eg) return cmd_export_graph(c);
        return cmd_export_embeddings(c);
    } catch (const ParseError& e) {
        report_error(e.kind(), e.what(), {{"file", e.file()}, {"line", e.line()}, {"field", e.field()}});
    } catch (const Error& e) {
        report_error(e.kind(), e.what());
    } catch (const std::exception& e) {
        report_error("internal_error", e.what());
    }
    return 1;
}
