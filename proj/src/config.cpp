#include "medrec/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "medrec/checkpoint.hpp"
#include "medrec/errors.hpp"

namespace medrec {

using nlohmann::json;

std::string RunConfig::resolve(const std::string& path) const {
    if (path.empty() || std::filesystem::path(path).is_absolute()) return path;
    return (std::filesystem::path(paths.out_dir) / path).string();
}

json default_config_json() {
    const RunConfig c;
    return config_to_json(c);
}

namespace {

bool same_kind(const json& a, const json& b) {
    if (a.is_number() && b.is_number()) {
        return !(a.is_number_integer() && b.is_number_float());
    }
    return a.type() == b.type();
}

}  // namespace

void merge_config(json& base, const json& patch, const std::string& where) {
    if (!patch.is_object()) throw ConfigError("configuration" + (where.empty() ? "" : " '" + where + "'") + " must be an object");
    for (const auto& [key, value] : patch.items()) {
        const std::string path = where.empty() ? key : where + "." + key;
        if (!base.contains(key)) throw ConfigError("unknown configuration key '" + path + "'");
        json& slot = base[key];
        if (slot.is_object() && value.is_object()) {
            merge_config(slot, value, path);
        } else if (slot.is_null() || same_kind(slot, value) || (slot.is_string() && value.is_null())) {
            slot = value;
        } else {
            throw ConfigError("configuration key '" + path + "' expects a " + std::string(slot.type_name()));
        }
    }
}

void set_dotted(json& doc, const std::string& dotted, const std::string& text) {
    json value;
    try {
        value = json::parse(text);
    } catch (const json::exception&) {
        value = text;
    }
    json patch = value;
    std::string rest = dotted;
    std::vector<std::string> parts;
    for (std::size_t pos; (pos = rest.find('.')) != std::string::npos;) {
        parts.push_back(rest.substr(0, pos));
        rest = rest.substr(pos + 1);
    }
    parts.push_back(rest);
    // A string-typed field keeps text such as "1" as a string.
    const json* slot = &doc;
    for (const auto& p : parts) {
        if (!slot->is_object() || !slot->contains(p)) throw ConfigError("unknown configuration key '" + dotted + "'");
        slot = &slot->at(p);
    }
    if (slot->is_string() && !value.is_string()) patch = text;
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
    merge_config(doc, patch);
}

json config_to_json(const RunConfig& c) {
    json gen = generator_to_json(c.generator);
    gen.erase("seed");
    return json{{"seed", c.seed},
                {"variant", c.variant},
                {"target_med", c.target_med},
                {"paths",
                 {{"ontology", c.paths.ontology},
                  {"corpus", c.paths.corpus},
                  {"checkpoint", c.paths.checkpoint},
                  {"unseen", c.paths.unseen},
                  {"out_dir", c.paths.out_dir}}},
                {"train",
                 {{"learning_rate", c.train.learning_rate},
                  {"max_epochs", c.train.max_epochs},
                  {"patience", c.train.patience},
                  {"batch_patients", c.train.batch_patients}}},
                {"loss",
                 {{"bce", c.train.loss.bce},
                  {"margin", c.train.loss.margin},
                  {"hyp", c.train.loss.hyp},
                  {"sparse", c.train.loss.sparse}}},
                {"model", [&] {
                     json m = model_config_to_json(c.model);
                     m.erase("variant");
                     return m;
                 }()},
                {"generator", gen},
                {"unseen",
                 {{"plant", c.unseen.plant},
                  {"visible", c.unseen.visible},
                  {"held_out", c.unseen.held_out},
                  {"source_threshold", c.unseen.thresholds.source},
                  {"reverse_threshold", c.unseen.thresholds.reverse}}},
                {"strong_prior", c.strong_prior}};
}

RunConfig config_from_json(const json& doc) {
    json full = default_config_json();
    merge_config(full, doc);
    RunConfig c;
    try {
        full.at("seed").get_to(c.seed);
        full.at("variant").get_to(c.variant);
        full.at("target_med").get_to(c.target_med);
        const auto& p = full.at("paths");
        p.at("ontology").get_to(c.paths.ontology);
        p.at("corpus").get_to(c.paths.corpus);
        p.at("checkpoint").get_to(c.paths.checkpoint);
        p.at("unseen").get_to(c.paths.unseen);
        p.at("out_dir").get_to(c.paths.out_dir);
        const auto& t = full.at("train");
        t.at("learning_rate").get_to(c.train.learning_rate);
        t.at("max_epochs").get_to(c.train.max_epochs);
        t.at("patience").get_to(c.train.patience);
        t.at("batch_patients").get_to(c.train.batch_patients);
        const auto& l = full.at("loss");
        l.at("bce").get_to(c.train.loss.bce);
        l.at("margin").get_to(c.train.loss.margin);
        l.at("hyp").get_to(c.train.loss.hyp);
        l.at("sparse").get_to(c.train.loss.sparse);
        json m = full.at("model");
        m["variant"] = c.variant;
        c.model = model_config_from_json(m);
        json g = full.at("generator");
        g["seed"] = c.seed;
        c.generator = generator_from_json(g);
        const auto& u = full.at("unseen");
        u.at("plant").get_to(c.unseen.plant);
        u.at("visible").get_to(c.unseen.visible);
        u.at("held_out").get_to(c.unseen.held_out);
        u.at("source_threshold").get_to(c.unseen.thresholds.source);
        u.at("reverse_threshold").get_to(c.unseen.thresholds.reverse);
        full.at("strong_prior").get_to(c.strong_prior);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run configuration: ") + e.what());
    }
    c.train.seed = c.seed;
    c.train.validate();
    if (c.strong_prior < 0.0 || c.strong_prior > 1.0) throw ConfigError("strong_prior must lie in [0, 1]");
    return c;
}

RunConfig load_run_config(const std::string& file, const std::vector<std::pair<std::string, std::string>>& overrides) {
    json doc = default_config_json();
    if (!file.empty()) {
        std::ifstream in(file);
        if (!in) throw ConfigError("cannot read configuration '" + file + "'");
        json patch;
        try {
            patch = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ParseError(file, 0, "", e.what());
        }
        merge_config(doc, patch);
    }
    for (const auto& [key, text] : overrides) set_dotted(doc, key, text);
    return config_from_json(doc);
}

}  // namespace medrec
