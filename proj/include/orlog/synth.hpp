#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "orlog/entity.hpp"
#include "orlog/evaluation.hpp"
#include "orlog/logic_form.hpp"

namespace orlog {

/// Parameters of the synthetic gold-consistent fixture generator.
struct SynthConfig {
    std::size_t entities = 240;
    std::size_t queries_per_template = 12;
    std::size_t attributes = 24;
    std::size_t min_attributes_per_entity = 3;
    std::size_t max_attributes_per_entity = 6;
    /// Mock priors move from the gold label toward (and past) 0.5 by up to 2*noise.
    double noise = 0.0;
    std::uint64_t seed = 42;
};

/// The six structural templates used for synthetic queries: label and form
/// over placeholders A, B, C.
const std::vector<std::pair<std::string, std::string>>& synth_templates();

struct SynthData {
    std::vector<Entity> corpus;
    std::vector<QuerySpec> queries;
    Qrels qrels;
    /// Gold truth of every (entity, attribute predicate).
    std::map<std::pair<std::string, PredicateId>, bool> gold;
    /// Mock oracle table derived from `gold` and the configured noise.
    std::map<std::pair<std::string, PredicateId>, double> priors;
};

SynthData generate_synth(const SynthConfig& config);

/// Same fixture with the mock priors regenerated for a different noise
/// level. The per-pair perturbation draws are shared across noise levels.
std::map<std::pair<std::string, PredicateId>, double> synth_priors(const SynthData& data,
                                                                   const SynthConfig& config,
                                                                   double noise);

/// Writes corpus.jsonl, queries.jsonl, qrels.txt and mock_oracle.tsv.
void write_synth(const std::filesystem::path& dir, const SynthData& data);

}  // namespace orlog
