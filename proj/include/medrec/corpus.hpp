#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "medrec/ontology.hpp"

namespace medrec {

/// One visit: sorted, duplicate-free leaf node ids per entity type.
struct Visit {
    std::array<std::vector<std::size_t>, 3> codes;

    const std::vector<std::size_t>& of(EntityType t) const { return codes[type_index(t)]; }
    std::vector<std::size_t>& of(EntityType t) { return codes[type_index(t)]; }
    bool operator==(const Visit&) const = default;
};

struct Patient {
    std::string id;
    std::vector<Visit> visits;
    bool operator==(const Patient&) const = default;
};

struct VisitCorpus {
    std::vector<Patient> patients;

    std::size_t visit_count() const;
    bool operator==(const VisitCorpus&) const = default;
};

/// Sorts and de-duplicates every code set and checks that codes are ontology leaves
/// and that every patient has at least two visits. Throws ValidationError.
void validate_corpus(const OntologyForest& forest, VisitCorpus& corpus);

/// Corpus JSONL: one {"patient_id": .., "visits": [{"d": [..], "p": [..], "m": [..]}]} per line.
VisitCorpus read_corpus(const OntologyForest& forest, const std::string& path);
VisitCorpus parse_corpus(const OntologyForest& forest, const std::string& text, const std::string& source = "<corpus>");
/// Canonical serialization: keys in lexicographic order, codes in ontology node order.
std::string serialize_corpus(const OntologyForest& forest, const VisitCorpus& corpus);
void write_corpus(const OntologyForest& forest, const VisitCorpus& corpus, const std::string& path);

struct SplitFractions {
    double train = 2.0 / 3.0;
    double validation = 1.0 / 6.0;
    double test = 1.0 / 6.0;
};

/// Patient indices of each partition.
struct CorpusSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

/// Deterministic split by patient that depends only on the patient ids: patients are
/// ranked by a 64-bit FNV-1a hash of their id and cut at the rounded fractions.
/// Each partition keeps corpus order. Throws ConfigError if a partition is empty.
CorpusSplit split_patients(const VisitCorpus& corpus, const SplitFractions& fractions = {});
CorpusSplit split_patient_ids(const std::vector<std::string>& ids, const SplitFractions& fractions = {});

}  // namespace medrec
