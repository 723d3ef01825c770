#include "medrec/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>
#include <set>

#include "medrec/errors.hpp"
#include "medrec/unseen.hpp"

namespace medrec {

std::vector<std::string> PlantedScenario::sources() const {
    std::vector<std::string> all = visible_sources;
    all.insert(all.end(), held_out_sources.begin(), held_out_sources.end());
    return all;
}

GeneratorSpec unseen_benchmark_spec(const std::string& target, std::uint64_t seed) {
    GeneratorSpec base;
    base.seed = seed;
    base.patients = 600;
    base.rule_propensities = {0.95, 0.9};
    base.noise_rate = 0.02;
    return plant_unseen_scenario(base, target);
}

std::string child_code(const std::string& parent, int i) {
    return parent.size() == 1 ? parent + std::to_string(i) : parent + "." + std::to_string(i);
}

namespace {

const std::array<const char*, 3> kRootCodes{"D", "P", "M"};

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), id, 0x5eedu};
    return std::mt19937_64(seq);
}

std::size_t leaves_below(const std::vector<int>& branching, std::size_t depth) {
    std::size_t n = 1;
    for (std::size_t l = depth; l < branching.size(); ++l) n *= static_cast<std::size_t>(branching[l]);
    return n;
}

/// Regular tree declarations in breadth-first order.
std::vector<std::pair<std::string, std::string>> regular_tree(const std::string& root, const std::vector<int>& branching) {
    std::vector<std::pair<std::string, std::string>> decl{{root, ""}};
    std::vector<std::string> level{root};
    for (int b : branching) {
        std::vector<std::string> next;
        for (const auto& p : level) {
            for (int i = 1; i <= b; ++i) {
                next.push_back(child_code(p, i));
                decl.emplace_back(next.back(), p);
            }
        }
        level = std::move(next);
    }
    return decl;
}

std::vector<std::size_t> nodes_at_depth(const OntologyTree& tree, std::size_t depth) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < tree.size(); ++i) {
        if (tree.depth(i) == depth) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> leaves_under(const OntologyTree& tree, std::size_t ancestor) {
    std::vector<std::size_t> out;
    for (std::size_t leaf : tree.leaves()) {
        if (tree.is_ancestor(ancestor, leaf)) out.push_back(leaf);
    }
    return out;
}

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> u(0, v.size() - 1);
    return v[u(rng)];
}

template <typename T>
std::vector<T> pick_distinct(std::vector<T> v, std::size_t k, std::mt19937_64& rng) {
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> u(i, v.size() - 1);
        std::swap(v[i], v[u(rng)]);
    }
    v.resize(k);
    return v;
}

int uniform_int(int lo, int hi, std::mt19937_64& rng) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

bool coin(double p, std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

std::string patient_id(std::size_t i, std::size_t n) {
    int width = 4;
    for (std::size_t m = n; m >= 10000; m /= 10) ++width;
    char buf[32];
    std::snprintf(buf, sizeof buf, "P%0*zu", width, i);
    return buf;
}

OntologyForest build_forest(const GeneratorSpec& spec) {
    OntologyForest forest;
    for (EntityType t : kEntityTypes) {
        auto decl = regular_tree(kRootCodes[type_index(t)], spec.branching[type_index(t)]);
        if (t == EntityType::Diagnosis && spec.planted) {
            for (const auto& s : spec.planted->sources()) decl.emplace_back(s, spec.planted->anchor);
        }
        forest.tree(t) = OntologyTree(decl);
    }
    return forest;
}

struct Structure {
    std::vector<std::size_t> conditions;                     // diagnosis ancestors, excluding a planted anchor
    std::map<std::size_t, std::size_t> procedure_link;       // condition -> procedure ancestor
    std::map<std::size_t, std::vector<std::pair<std::size_t, double>>> meds;  // condition -> (med node, propensity)
    std::vector<MedicationRule> rules;
};

Structure resolve_structure(const GeneratorSpec& spec, const OntologyForest& forest) {
    const auto& dt = forest.tree(EntityType::Diagnosis);
    const auto& pt = forest.tree(EntityType::Procedure);
    const auto& mt = forest.tree(EntityType::Medication);
    auto rng = stream(spec.seed, 11);
    Structure s;
    const auto anchor = spec.planted ? static_cast<long>(dt.node(spec.planted->anchor)) : -1L;
    for (std::size_t c : nodes_at_depth(dt, static_cast<std::size_t>(spec.condition_depth))) {
        if (static_cast<long>(c) != anchor) s.conditions.push_back(c);
    }
    const std::size_t proc_depth = std::min<std::size_t>(static_cast<std::size_t>(spec.condition_depth),
                                                         spec.branching[1].size() - 1);
    const auto proc_ancestors = nodes_at_depth(pt, proc_depth);
    std::vector<std::size_t> med_pool;
    for (std::size_t m : mt.leaves()) {
        if (!spec.planted || mt.code(m) != spec.planted->target) med_pool.push_back(m);
    }
    for (std::size_t c : s.conditions) s.procedure_link[c] = pick(proc_ancestors, rng);

    if (spec.rules.empty()) {
        if (spec.rule_propensities.size() > med_pool.size()) throw ConfigError("more rule medications than medications");
        for (std::size_t c : s.conditions) {
            const auto chosen = pick_distinct(med_pool, spec.rule_propensities.size(), rng);
            for (std::size_t k = 0; k < chosen.size(); ++k) {
                s.rules.push_back({dt.code(c), mt.code(chosen[k]), spec.rule_propensities[k]});
            }
        }
    } else {
        s.rules = spec.rules;
    }
    for (const auto& r : s.rules) {
        if (!dt.contains(r.ancestor)) throw ConfigError("rule ancestor '" + r.ancestor + "' is not a diagnosis code");
        if (!mt.contains(r.medication) || !mt.is_leaf(mt.node(r.medication))) {
            throw ConfigError("rule medication '" + r.medication + "' is not a medication leaf");
        }
        if (!probability(r.propensity)) throw ConfigError("rule propensity outside [0, 1]");
        const std::size_t a = dt.node(r.ancestor);
        if (std::find(s.conditions.begin(), s.conditions.end(), a) == s.conditions.end()) {
            throw ConfigError("rule ancestor '" + r.ancestor + "' is not a condition-level diagnosis");
        }
        s.meds[a].emplace_back(mt.node(r.medication), r.propensity);
    }
    if (spec.planted) s.rules.push_back({spec.planted->anchor, spec.planted->target, 1.0});
    return s;
}

VisitCorpus sample_corpus(const GeneratorSpec& spec, const OntologyForest& forest, const Structure& s, int attempt) {
    const auto& dt = forest.tree(EntityType::Diagnosis);
    const auto& pt = forest.tree(EntityType::Procedure);
    const auto& mt = forest.tree(EntityType::Medication);
    auto rng = stream(spec.seed, 100 + static_cast<std::uint32_t>(attempt));

    std::vector<std::string> ids;
    for (std::size_t i = 0; i < spec.patients; ++i) ids.push_back(patient_id(i, spec.patients));
    std::set<std::size_t> test_patients;
    if (spec.planted) {
        const auto split = split_patient_ids(ids);
        test_patients.insert(split.test.begin(), split.test.end());
    }

    std::map<std::size_t, std::vector<std::size_t>> cond_leaves, proc_leaves;
    for (std::size_t c : s.conditions) cond_leaves[c] = leaves_under(dt, c);
    for (const auto& [c, p] : s.procedure_link) proc_leaves[p] = leaves_under(pt, p);
    std::vector<std::size_t> noise_pool;
    for (std::size_t m : mt.leaves()) {
        if (!spec.planted || mt.code(m) != spec.planted->target) noise_pool.push_back(m);
    }

    // Planted pieces, resolved to node ids.
    std::vector<std::size_t> anchors, visible, all_sources;
    std::size_t blocker = 0, target = 0;
    if (spec.planted) {
        const auto& pl = *spec.planted;
        std::set<std::string> src(pl.visible_sources.begin(), pl.visible_sources.end());
        src.insert(pl.held_out_sources.begin(), pl.held_out_sources.end());
        for (std::size_t leaf : leaves_under(dt, dt.node(pl.anchor))) {
            if (!src.count(dt.code(leaf))) anchors.push_back(leaf);
        }
        for (const auto& c : pl.visible_sources) visible.push_back(dt.node(c));
        for (const auto& c : pl.sources()) all_sources.push_back(dt.node(c));
        blocker = pt.node(pl.blocker);
        target = mt.node(pl.target);
        // Keep the blocker out of ordinary procedure draws.
        for (auto& [p, leaves] : proc_leaves) std::erase(leaves, blocker);
    }

    VisitCorpus corpus;
    for (std::size_t i = 0; i < spec.patients; ++i) {
        Patient patient;
        patient.id = ids[i];
        const int k = uniform_int(spec.min_conditions, spec.max_conditions, rng);
        std::vector<std::size_t> conds = pick_distinct(s.conditions, static_cast<std::size_t>(k), rng);
        const bool is_test = test_patients.count(i) != 0;
        const int visits = uniform_int(spec.min_visits, spec.max_visits, rng);
        for (int v = 0; v < visits; ++v) {
            std::vector<std::size_t> active;
            for (std::size_t c : conds) {
                if (coin(spec.condition_active, rng)) active.push_back(c);
            }
            const bool anchor_active = spec.planted && coin(spec.planted->visit_rate, rng);
            if (active.empty() && !anchor_active) active.push_back(pick(conds, rng));
            Visit visit;
            auto& d = visit.of(EntityType::Diagnosis);
            auto& p = visit.of(EntityType::Procedure);
            auto& m = visit.of(EntityType::Medication);
            for (std::size_t c : active) {
                const auto& leaves = cond_leaves.at(c);
                const int n = uniform_int(spec.min_codes_per_condition, spec.max_codes_per_condition, rng);
                for (std::size_t leaf : pick_distinct(leaves, static_cast<std::size_t>(n), rng)) d.push_back(leaf);
                if (coin(spec.procedure_rate, rng)) p.push_back(pick(proc_leaves.at(s.procedure_link.at(c)), rng));
                if (auto it = s.meds.find(c); it != s.meds.end()) {
                    for (const auto& [med, prop] : it->second) {
                        if (coin(prop, rng)) m.push_back(med);
                    }
                }
            }
            if (anchor_active) {
                const auto& pl = *spec.planted;
                const int n = uniform_int(spec.min_codes_per_condition, spec.max_codes_per_condition, rng);
                if (coin(is_test ? pl.test_source_rate : pl.source_rate, rng)) {
                    for (std::size_t leaf : pick_distinct(is_test ? all_sources : visible, static_cast<std::size_t>(n), rng))
                        d.push_back(leaf);
                    m.push_back(target);
                } else {
                    for (std::size_t leaf : pick_distinct(anchors, static_cast<std::size_t>(n), rng)) d.push_back(leaf);
                    if (coin(pl.blocker_rate, rng)) {
                        p.push_back(blocker);
                    } else {
                        m.push_back(target);
                    }
                }
            }
            if (coin(spec.noise_rate, rng)) m.push_back(pick(noise_pool, rng));
            patient.visits.push_back(std::move(visit));
        }
        corpus.patients.push_back(std::move(patient));
    }
    validate_corpus(forest, corpus);
    return corpus;
}

}  // namespace

void GeneratorSpec::validate() const {
    for (std::size_t t = 0; t < 3; ++t) {
        if (branching[t].empty()) throw ConfigError("every ontology tree needs at least one level");
        for (int b : branching[t]) {
            if (b < 1) throw ConfigError("branching factors must be positive");
        }
    }
    if (patients < 1) throw ConfigError("generator needs at least one patient");
    if (min_visits < 2 || max_visits < min_visits) throw ConfigError("visits per patient must satisfy 2 <= min <= max");
    if (condition_depth < 1 || static_cast<std::size_t>(condition_depth) >= branching[0].size()) {
        throw ConfigError("condition depth must lie strictly inside the diagnosis tree");
    }
    std::size_t n_conditions = 1;
    for (int l = 0; l < condition_depth; ++l) n_conditions *= static_cast<std::size_t>(branching[0][l]);
    if (planted) --n_conditions;
    if (min_conditions < 1 || max_conditions < min_conditions || static_cast<std::size_t>(max_conditions) > n_conditions) {
        throw ConfigError("conditions per patient must satisfy 1 <= min <= max <= condition count");
    }
    if (min_codes_per_condition < 1 || max_codes_per_condition < min_codes_per_condition ||
        static_cast<std::size_t>(max_codes_per_condition) > leaves_below(branching[0], static_cast<std::size_t>(condition_depth))) {
        throw ConfigError("codes per condition exceed the leaves available under a condition");
    }
    if (!probability(condition_active) || !probability(procedure_rate) || !probability(noise_rate)) {
        throw ConfigError("rates must lie in [0, 1]");
    }
    for (double p : rule_propensities) {
        if (!probability(p)) throw ConfigError("rule propensities must lie in [0, 1]");
    }
    if (planted) {
        const auto& pl = *planted;
        if (!probability(pl.blocker_rate) || !probability(pl.source_rate) || !probability(pl.test_source_rate) ||
            !probability(pl.visit_rate)) {
            throw ConfigError("planted scenario rates must lie in [0, 1]");
        }
        if (pl.visible_sources.empty()) throw ConfigError("planted scenario needs at least one visible source");
    }
    if (max_planting_attempts < 1) throw ConfigError("max_planting_attempts must be positive");
}

GeneratedData generate(const GeneratorSpec& spec) {
    spec.validate();
    GeneratedData out;
    out.forest = build_forest(spec);
    const Structure s = resolve_structure(spec, out.forest);
    out.rules = s.rules;
    if (!spec.planted) {
        out.corpus = sample_corpus(spec, out.forest, s, 0);
        return out;
    }
    std::vector<std::string> expected = spec.planted->visible_sources;
    std::sort(expected.begin(), expected.end());
    for (int attempt = 0; attempt < spec.max_planting_attempts; ++attempt) {
        out.corpus = sample_corpus(spec, out.forest, s, attempt);
        auto found = select_sources(out.forest, out.corpus, split_patients(out.corpus), spec.planted->target);
        std::sort(found.begin(), found.end());
        if (found == expected) {
            out.attempts = attempt + 1;
            return out;
        }
    }
    throw ConfigError("could not draw a corpus whose unseen sources are exactly the planted ones");
}

GeneratorSpec plant_unseen_scenario(const GeneratorSpec& spec, const std::string& target, int visible, int held_out) {
    spec.validate();
    if (spec.planted) throw ConfigError("scenario already planted");
    if (visible < 1 || held_out < 0) throw ConfigError("planted scenario needs visible sources");
    const auto& db = spec.branching[0];
    if (db.size() < 2 || static_cast<std::size_t>(spec.condition_depth) + 1 != db.size()) {
        throw ConfigError("diagnosis tree too shallow to plant sibling sources under a condition");
    }
    GeneratorSpec base = spec;
    const OntologyForest forest = build_forest(base);
    const auto& mt = forest.tree(EntityType::Medication);
    if (!mt.contains(target) || !mt.is_leaf(mt.node(target))) {
        throw ConfigError("target '" + target + "' is not a medication leaf");
    }
    auto rng = stream(spec.seed, 10);
    const auto& dt = forest.tree(EntityType::Diagnosis);
    const auto& pt = forest.tree(EntityType::Procedure);
    PlantedScenario pl;
    pl.target = target;
    pl.anchor = dt.code(pick(nodes_at_depth(dt, static_cast<std::size_t>(spec.condition_depth)), rng));
    pl.blocker = pt.code(pick(pt.leaves(), rng));
    const int existing = db.back();
    for (int i = 1; i <= visible; ++i) pl.visible_sources.push_back(child_code(pl.anchor, existing + i));
    for (int i = 1; i <= held_out; ++i) pl.held_out_sources.push_back(child_code(pl.anchor, existing + visible + i));
    GeneratorSpec out = spec;
    out.planted = pl;
    out.validate();
    return out;
}

nlohmann::json generator_to_json(const GeneratorSpec& s) {
    nlohmann::json j{{"seed", s.seed},
                     {"branching", {{"diagnosis", s.branching[0]}, {"procedure", s.branching[1]}, {"medication", s.branching[2]}}},
                     {"patients", s.patients},
                     {"min_visits", s.min_visits},
                     {"max_visits", s.max_visits},
                     {"condition_depth", s.condition_depth},
                     {"min_conditions", s.min_conditions},
                     {"max_conditions", s.max_conditions},
                     {"condition_active", s.condition_active},
                     {"min_codes_per_condition", s.min_codes_per_condition},
                     {"max_codes_per_condition", s.max_codes_per_condition},
                     {"procedure_rate", s.procedure_rate},
                     {"rule_propensities", s.rule_propensities},
                     {"noise_rate", s.noise_rate},
                     {"max_planting_attempts", s.max_planting_attempts}};
    nlohmann::json rules = nlohmann::json::array();
    for (const auto& r : s.rules) rules.push_back({{"ancestor", r.ancestor}, {"medication", r.medication}, {"propensity", r.propensity}});
    j["rules"] = rules;
    if (s.planted) {
        const auto& p = *s.planted;
        j["planted"] = {{"target", p.target},
                        {"anchor", p.anchor},
                        {"blocker", p.blocker},
                        {"visible_sources", p.visible_sources},
                        {"held_out_sources", p.held_out_sources},
                        {"blocker_rate", p.blocker_rate},
                        {"source_rate", p.source_rate},
                        {"test_source_rate", p.test_source_rate},
                        {"visit_rate", p.visit_rate}};
    } else {
        j["planted"] = nullptr;
    }
    return j;
}

GeneratorSpec generator_from_json(const nlohmann::json& j) {
    GeneratorSpec s;
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) j.at(key).get_to(field);
        };
        get("seed", s.seed);
        if (j.contains("branching")) {
            const auto& b = j.at("branching");
            if (b.contains("diagnosis")) b.at("diagnosis").get_to(s.branching[0]);
            if (b.contains("procedure")) b.at("procedure").get_to(s.branching[1]);
            if (b.contains("medication")) b.at("medication").get_to(s.branching[2]);
        }
        get("patients", s.patients);
        get("min_visits", s.min_visits);
        get("max_visits", s.max_visits);
        get("condition_depth", s.condition_depth);
        get("min_conditions", s.min_conditions);
        get("max_conditions", s.max_conditions);
        get("condition_active", s.condition_active);
        get("min_codes_per_condition", s.min_codes_per_condition);
        get("max_codes_per_condition", s.max_codes_per_condition);
        get("procedure_rate", s.procedure_rate);
        get("rule_propensities", s.rule_propensities);
        get("noise_rate", s.noise_rate);
        get("max_planting_attempts", s.max_planting_attempts);
        if (j.contains("rules")) {
            for (const auto& r : j.at("rules")) {
                s.rules.push_back({r.at("ancestor").get<std::string>(), r.at("medication").get<std::string>(),
                                   r.value("propensity", 1.0)});
            }
        }
        if (j.contains("planted") && !j.at("planted").is_null()) {
            const auto& p = j.at("planted");
            PlantedScenario pl;
            p.at("target").get_to(pl.target);
            p.at("anchor").get_to(pl.anchor);
            p.at("blocker").get_to(pl.blocker);
            p.at("visible_sources").get_to(pl.visible_sources);
            if (p.contains("held_out_sources")) p.at("held_out_sources").get_to(pl.held_out_sources);
            pl.blocker_rate = p.value("blocker_rate", pl.blocker_rate);
            pl.source_rate = p.value("source_rate", pl.source_rate);
            pl.test_source_rate = p.value("test_source_rate", pl.test_source_rate);
            pl.visit_rate = p.value("visit_rate", pl.visit_rate);
            s.planted = pl;
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("generator configuration: ") + e.what());
    }
    s.validate();
    return s;
}

}  // namespace medrec
