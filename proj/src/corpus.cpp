#include "medrec/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "medrec/errors.hpp"

namespace medrec {

std::size_t VisitCorpus::visit_count() const {
    std::size_t n = 0;
    for (const auto& p : patients) n += p.visits.size();
    return n;
}

void validate_corpus(const OntologyForest& forest, VisitCorpus& corpus) {
    for (auto& patient : corpus.patients) {
        if (patient.visits.size() < 2) {
            throw ValidationError("patient '" + patient.id + "' has fewer than two visits");
        }
        for (auto& visit : patient.visits) {
            for (EntityType t : kEntityTypes) {
                auto& codes = visit.of(t);
                std::sort(codes.begin(), codes.end());
                codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
                const auto& tree = forest.tree(t);
                for (std::size_t c : codes) {
                    if (c >= tree.size() || !tree.is_leaf(c)) {
                        throw ValidationError("patient '" + patient.id + "' references a non-leaf " + type_name(t) + " code");
                    }
                }
            }
        }
    }
}

namespace {

std::vector<std::size_t> parse_codes(const OntologyTree& tree, const nlohmann::json& arr, const std::string& source,
                                     long line, const std::string& field) {
    if (!arr.is_array()) throw ParseError(source, line, field, "expected an array of codes");
    std::vector<std::size_t> out;
    for (const auto& c : arr) {
        if (!c.is_string()) throw ParseError(source, line, field, "codes must be strings");
        const auto code = c.get<std::string>();
        if (!tree.contains(code)) throw ParseError(source, line, field, "code '" + code + "' is not in the ontology");
        const std::size_t node = tree.node(code);
        if (!tree.is_leaf(node)) throw ParseError(source, line, field, "code '" + code + "' is not an ontology leaf");
        out.push_back(node);
    }
    return out;
}

}  // namespace

VisitCorpus parse_corpus(const OntologyForest& forest, const std::string& text, const std::string& source) {
    VisitCorpus corpus;
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(source, lineno, "", e.what());
        }
        if (!doc.is_object()) throw ParseError(source, lineno, "", "expected a JSON object");
        if (!doc.contains("patient_id") || !doc.at("patient_id").is_string()) {
            throw ParseError(source, lineno, "patient_id", "missing string 'patient_id'");
        }
        if (!doc.contains("visits") || !doc.at("visits").is_array()) {
            throw ParseError(source, lineno, "visits", "missing array 'visits'");
        }
        Patient patient;
        patient.id = doc.at("patient_id").get<std::string>();
        long v = 0;
        for (const auto& vj : doc.at("visits")) {
            const std::string where = "visits[" + std::to_string(v++) + "]";
            if (!vj.is_object()) throw ParseError(source, lineno, where, "visit must be an object");
            Visit visit;
            for (EntityType t : kEntityTypes) {
                const std::string key = type_tag(t);
                if (!vj.contains(key)) throw ParseError(source, lineno, where + "." + key, "missing code list");
                visit.of(t) = parse_codes(forest.tree(t), vj.at(key), source, lineno, where + "." + key);
            }
            patient.visits.push_back(std::move(visit));
        }
        if (patient.visits.size() < 2) {
            throw ParseError(source, lineno, "visits", "patient '" + patient.id + "' has fewer than two visits");
        }
        corpus.patients.push_back(std::move(patient));
    }
    validate_corpus(forest, corpus);
    return corpus;
}

VisitCorpus read_corpus(const OntologyForest& forest, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "", "cannot open corpus file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_corpus(forest, ss.str(), path);
}

std::string serialize_corpus(const OntologyForest& forest, const VisitCorpus& corpus) {
    std::string out;
    for (const auto& patient : corpus.patients) {
        nlohmann::json visits = nlohmann::json::array();
        for (const auto& visit : patient.visits) {
            nlohmann::json vj = nlohmann::json::object();
            for (EntityType t : kEntityTypes) {
                std::vector<std::size_t> ids = visit.of(t);
                std::sort(ids.begin(), ids.end());
                nlohmann::json arr = nlohmann::json::array();
                for (std::size_t c : ids) arr.push_back(forest.tree(t).code(c));
                vj[type_tag(t)] = std::move(arr);
            }
            visits.push_back(std::move(vj));
        }
        nlohmann::json doc = {{"patient_id", patient.id}, {"visits", std::move(visits)}};
        out += doc.dump();
        out += '\n';
    }
    return out;
}

void write_corpus(const OntologyForest& forest, const VisitCorpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << serialize_corpus(forest, corpus);
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

CorpusSplit split_patient_ids(const std::vector<std::string>& ids, const SplitFractions& fractions) {
    if (fractions.train <= 0 || fractions.validation <= 0 || fractions.test <= 0) {
        throw ConfigError("split fractions must all be positive");
    }
    const double total = fractions.train + fractions.validation + fractions.test;
    const std::size_t n = ids.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ha = fnv1a(ids[a]), hb = fnv1a(ids[b]);
        return ha != hb ? ha < hb : ids[a] < ids[b];
    });
    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fractions.train / total));
    const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fractions.validation / total));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
        throw ConfigError("split of " + std::to_string(n) + " patients leaves an empty partition");
    }
    CorpusSplit split;
    for (std::size_t k = 0; k < n; ++k) {
        auto& part = k < n_train ? split.train : (k < n_train + n_val ? split.validation : split.test);
        part.push_back(order[k]);
    }
    for (auto* part : {&split.train, &split.validation, &split.test}) std::sort(part->begin(), part->end());
    return split;
}

CorpusSplit split_patients(const VisitCorpus& corpus, const SplitFractions& fractions) {
    std::vector<std::string> ids;
    ids.reserve(corpus.patients.size());
    for (const auto& p : corpus.patients) ids.push_back(p.id);
    return split_patient_ids(ids, fractions);
}

}  // namespace medrec
