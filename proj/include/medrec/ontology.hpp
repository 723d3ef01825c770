#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace medrec {

enum class EntityType : int { Diagnosis = 0, Procedure = 1, Medication = 2 };

inline constexpr std::array<EntityType, 3> kEntityTypes = {EntityType::Diagnosis, EntityType::Procedure,
                                                           EntityType::Medication};

inline constexpr std::size_t type_index(EntityType t) { return static_cast<std::size_t>(t); }
/// "diagnosis" / "procedure" / "medication".
const char* type_name(EntityType t);
/// "d" / "p" / "m".
const char* type_tag(EntityType t);

/// One rooted ontology tree. Node order is the order codes were declared in.
class OntologyTree {
public:
    OntologyTree() = default;
    /// Builds from (code, parent) declarations; an empty parent marks the root.
    /// Throws StructuralError unless the declarations form a single rooted tree.
    explicit OntologyTree(const std::vector<std::pair<std::string, std::string>>& declarations);

    std::size_t size() const noexcept { return codes_.size(); }
    const std::string& code(std::size_t node) const { return codes_.at(node); }
    /// Node id of a code; throws LookupError.
    std::size_t node(const std::string& code) const;
    bool contains(const std::string& code) const { return index_.count(code) != 0; }

    std::size_t root() const noexcept { return root_; }
    /// Parent node id, or -1 for the root.
    long parent(std::size_t node) const { return parent_.at(node); }
    std::size_t depth(std::size_t node) const { return depth_.at(node); }
    /// Ancestors ordered from the root down to the direct parent.
    const std::vector<std::size_t>& ancestors(std::size_t node) const { return ancestors_.at(node); }
    const std::vector<std::size_t>& children(std::size_t node) const { return children_.at(node); }
    bool is_leaf(std::size_t node) const { return children_.at(node).empty(); }

    /// Leaves in node order; leaf ordinals index the co-occurrence graph.
    const std::vector<std::size_t>& leaves() const noexcept { return leaves_; }
    /// Ordinal of a leaf among leaves(), or -1 for internal nodes.
    long leaf_ordinal(std::size_t node) const { return leaf_ordinal_.at(node); }

    /// All (descendant, ancestor) pairs of the transitive closure, no self-pairs.
    const std::vector<std::pair<std::size_t, std::size_t>>& ancestor_pairs() const noexcept { return pairs_; }
    /// Nodes sorted by depth (stable), so every parent precedes its children.
    const std::vector<std::size_t>& topological_order() const noexcept { return topo_; }

    /// True if `ancestor` lies on the root path of `node` (strictly above it).
    bool is_ancestor(std::size_t ancestor, std::size_t node) const;

private:
    std::vector<std::string> codes_;
    std::map<std::string, std::size_t> index_;
    std::vector<long> parent_;
    std::vector<std::size_t> depth_;
    std::vector<std::vector<std::size_t>> ancestors_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::size_t> leaves_;
    std::vector<long> leaf_ordinal_;
    std::vector<std::pair<std::size_t, std::size_t>> pairs_;
    std::vector<std::size_t> topo_;
    std::size_t root_ = 0;
};

/// Diagnosis, procedure and medication trees.
struct OntologyForest {
    std::array<OntologyTree, 3> trees;

    const OntologyTree& tree(EntityType t) const { return trees[type_index(t)]; }
    OntologyTree& tree(EntityType t) { return trees[type_index(t)]; }
};

/// {"diagnosis": [{"code": .., "parent": .. | null}, ..], "procedure": [..], "medication": [..]}
OntologyForest ontology_from_json(const nlohmann::json& doc, const std::string& source = "<json>");
nlohmann::json ontology_to_json(const OntologyForest& forest);
OntologyForest load_ontology(const std::string& path);
void save_ontology(const OntologyForest& forest, const std::string& path);

}  // namespace medrec
