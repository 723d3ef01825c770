#include "medrec/ontology.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "medrec/errors.hpp"

namespace medrec {

const char* type_name(EntityType t) {
    switch (t) {
        case EntityType::Diagnosis: return "diagnosis";
        case EntityType::Procedure: return "procedure";
        case EntityType::Medication: return "medication";
    }
    return "?";
}

const char* type_tag(EntityType t) {
    switch (t) {
        case EntityType::Diagnosis: return "d";
        case EntityType::Procedure: return "p";
        case EntityType::Medication: return "m";
    }
    return "?";
}

OntologyTree::OntologyTree(const std::vector<std::pair<std::string, std::string>>& declarations) {
    if (declarations.empty()) throw StructuralError("ontology tree has no nodes");
    for (const auto& [code, parent] : declarations) {
        if (code.empty()) throw StructuralError("ontology node with empty code");
        if (!index_.emplace(code, codes_.size()).second) throw StructuralError("duplicate ontology code '" + code + "'");
        codes_.push_back(code);
    }
    const std::size_t n = codes_.size();
    parent_.assign(n, -1);
    children_.assign(n, {});
    long roots = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = declarations[i].second;
        if (p.empty()) {
            ++roots;
            root_ = i;
            continue;
        }
        auto it = index_.find(p);
        if (it == index_.end()) throw StructuralError("code '" + codes_[i] + "' has unknown parent '" + p + "'");
        if (it->second == i) throw StructuralError("code '" + codes_[i] + "' is its own parent");
        parent_[i] = static_cast<long>(it->second);
        children_[it->second].push_back(i);
    }
    if (roots != 1) throw StructuralError("ontology tree needs exactly one root, found " + std::to_string(roots));

    // Depths by walking up; a walk longer than n means a cycle.
    depth_.assign(n, 0);
    ancestors_.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> chain;
        long cur = parent_[i];
        while (cur >= 0) {
            chain.push_back(static_cast<std::size_t>(cur));
            if (chain.size() > n) throw StructuralError("ontology contains a cycle through '" + codes_[i] + "'");
            cur = parent_[static_cast<std::size_t>(cur)];
        }
        std::reverse(chain.begin(), chain.end());
        depth_[i] = chain.size();
        ancestors_[i] = std::move(chain);
    }

    leaf_ordinal_.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (children_[i].empty()) {
            leaf_ordinal_[i] = static_cast<long>(leaves_.size());
            leaves_.push_back(i);
        }
        for (std::size_t a : ancestors_[i]) pairs_.emplace_back(i, a);
    }

    topo_.resize(n);
    std::iota(topo_.begin(), topo_.end(), std::size_t{0});
    std::stable_sort(topo_.begin(), topo_.end(), [this](std::size_t a, std::size_t b) { return depth_[a] < depth_[b]; });
}

std::size_t OntologyTree::node(const std::string& code) const {
    auto it = index_.find(code);
    if (it == index_.end()) throw LookupError("unknown ontology code '" + code + "'");
    return it->second;
}

bool OntologyTree::is_ancestor(std::size_t ancestor, std::size_t node) const {
    const auto& chain = ancestors_.at(node);
    return std::find(chain.begin(), chain.end(), ancestor) != chain.end();
}

OntologyForest ontology_from_json(const nlohmann::json& doc, const std::string& source) {
    if (!doc.is_object()) throw ParseError(source, 0, "", "ontology document must be a JSON object");
    OntologyForest forest;
    for (EntityType t : kEntityTypes) {
        const std::string key = type_name(t);
        if (!doc.contains(key) || !doc.at(key).is_array()) {
            throw ParseError(source, 0, key, "missing array '" + key + "'");
        }
        std::vector<std::pair<std::string, std::string>> decl;
        long k = 0;
        for (const auto& entry : doc.at(key)) {
            const std::string where = key + "[" + std::to_string(k++) + "]";
            if (!entry.is_object() || !entry.contains("code") || !entry.at("code").is_string()) {
                throw ParseError(source, 0, where + ".code", "entry needs a string 'code'");
            }
            if (!entry.contains("parent") || !(entry.at("parent").is_null() || entry.at("parent").is_string())) {
                throw ParseError(source, 0, where + ".parent", "entry needs 'parent' as string or null");
            }
            const auto& p = entry.at("parent");
            decl.emplace_back(entry.at("code").get<std::string>(), p.is_null() ? std::string() : p.get<std::string>());
        }
        forest.trees[type_index(t)] = OntologyTree(decl);
    }
    return forest;
}

nlohmann::json ontology_to_json(const OntologyForest& forest) {
    nlohmann::json doc = nlohmann::json::object();
    for (EntityType t : kEntityTypes) {
        const auto& tree = forest.tree(t);
        nlohmann::json arr = nlohmann::json::array();
        for (std::size_t i = 0; i < tree.size(); ++i) {
            const long p = tree.parent(i);
            arr.push_back({{"code", tree.code(i)},
                           {"parent", p < 0 ? nlohmann::json(nullptr) : nlohmann::json(tree.code(static_cast<std::size_t>(p)))}});
        }
        doc[type_name(t)] = std::move(arr);
    }
    return doc;
}

OntologyForest load_ontology(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "", "cannot open ontology file");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path, 0, "", e.what());
    }
    return ontology_from_json(doc, path);
}

void save_ontology(const OntologyForest& forest, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << ontology_to_json(forest).dump(1) << '\n';
}

}  // namespace medrec
