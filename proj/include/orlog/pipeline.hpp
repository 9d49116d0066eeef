#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "orlog/entity.hpp"
#include "orlog/inference.hpp"
#include "orlog/logic_form.hpp"
#include "orlog/oracle.hpp"
#include "orlog/retrieval.hpp"

namespace orlog {

struct ElicitationOptions {
    KnowledgeMode mode = KnowledgeMode::Parametric;
    std::string suffix = std::string(kDefaultSuffix);
    std::size_t context_cap = kDefaultContextCap;
};

/// Outcome of scoring one candidate against one query.
struct EntityScore {
    double posterior = 0.0;
    PriorAssignment priors;
    std::size_t predicate_calls = 0;
    /// At least one predicate fell back to the 0.5 prior after an oracle failure.
    bool degraded = false;
    /// Number of prompts that fell back to parametric for lack of a description.
    std::size_t missing_descriptions = 0;
};

/// Elicits one plausibility per declared predicate and returns the posterior
/// of the query's logical form. Oracle failures assign prior 0.5 and mark the
/// score degraded.
EntityScore score_entity(const QuerySpec& query, const Entity& entity, OracleBackend& backend,
                         const ElicitationOptions& options = {});

inline constexpr double kFallbackPrior = 0.5;

struct RerankEntry {
    std::string entity_id;
    double posterior = 0.0;
    std::size_t base_rank = 0;
    bool degraded = false;

    friend bool operator==(const RerankEntry&, const RerankEntry&) = default;
};

struct RerankedList {
    std::string qid;
    std::vector<RerankEntry> entries;

    friend bool operator==(const RerankedList&, const RerankedList&) = default;
};

class MissingPosterior : public std::runtime_error {
  public:
    explicit MissingPosterior(const std::string& id)
        : std::runtime_error("no posterior for entity '" + id + "'") {}
};

/// Descending posterior; equal posteriors keep base-retriever order.
RerankedList rerank(const std::string& qid, const CandidateList& candidates,
                    const std::map<std::string, double>& posteriors);

struct LedgerEntry {
    std::string qid;
    std::string entity_id;
    std::size_t predicate_calls = 0;
    bool degraded = false;

    friend bool operator==(const LedgerEntry&, const LedgerEntry&) = default;
};

/// Oracle usage per (query, entity) pair plus the one-off decomposition cost
/// of each query.
struct CostLedger {
    std::vector<LedgerEntry> pairs;
    std::map<std::string, long> parse_token_cost;

    friend bool operator==(const CostLedger&, const CostLedger&) = default;
};

class EmptyLedger : public std::runtime_error {
  public:
    EmptyLedger() : std::runtime_error("cost ledger has no query-entity pairs") {}
};

/// Mean over all pairs of `predicate_calls + parse_cost / pairs_in_query`.
double cost_per_pair(const CostLedger& ledger);

void write_ledger(std::ostream& out, const CostLedger& ledger);
CostLedger read_ledger(std::istream& in);
CostLedger read_ledger(const std::filesystem::path& path);

struct PipelineResult {
    std::map<std::string, RerankedList> lists;
    CostLedger ledger;
    std::map<std::string, std::string> failures;  // qid -> reason
    std::size_t missing_descriptions = 0;
};

struct PipelineInput {
    const std::vector<QuerySpec>* queries = nullptr;
    const std::vector<Entity>* corpus = nullptr;
    const std::map<std::string, CandidateList>* candidates = nullptr;
};

/// Scores every (query, candidate) pair and reranks each query.
/// `run_pipeline` spreads pairs over up to `threads` OpenMP threads (0 means
/// the OpenMP default); `run_pipeline_serial` is the reference loop. Both
/// yield identical results for deterministic backends.
PipelineResult run_pipeline(const PipelineInput& input, OracleBackend& backend,
                            const ElicitationOptions& options = {}, int threads = 0);
PipelineResult run_pipeline_serial(const PipelineInput& input, OracleBackend& backend,
                                   const ElicitationOptions& options = {});

/// Method/mode tag for output runs, e.g. `orlog-param+`.
std::string run_tag(KnowledgeMode mode, bool degraded = false);

/// Writes every reranked list as a TREC run, posterior as score, queries in
/// qid order.
void write_reranked_run(std::ostream& out, const PipelineResult& result, KnowledgeMode mode);

/// JSONL query file: `{"qid", "text", "form", "predicates": [{"id","text"}],
/// "template"?, "parse_tokens"?}`.
std::vector<QuerySpec> load_queries(const std::filesystem::path& path);
QuerySpec query_from_json(const std::string& line);
std::string query_to_json(const QuerySpec& q);
void save_queries(const std::filesystem::path& path, const std::vector<QuerySpec>& queries);

/// Optional hook to an external query translator. POSTs `{"qid","text"}` to
/// `endpoint + path` and expects `{"predicates", "form", "parse_token_cost"}`.
QuerySpec translate_query(const std::string& endpoint, const std::string& qid,
                          const std::string& text, const std::string& path = "/translate");

}  // namespace orlog
