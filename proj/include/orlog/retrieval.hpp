#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "orlog/entity.hpp"
#include "orlog/trec.hpp"

namespace orlog {

inline constexpr std::size_t kDefaultTopK = 20;

/// A retrieved entity with its base-retriever score and 1-based rank.
struct ScoredCandidate {
    std::string entity_id;
    double base_score = 0.0;
    std::size_t base_rank = 0;

    friend bool operator==(const ScoredCandidate&, const ScoredCandidate&) = default;
};

using CandidateList = std::vector<ScoredCandidate>;

class DuplicateEntityId : public std::runtime_error {
  public:
    explicit DuplicateEntityId(const std::string& id)
        : std::runtime_error("duplicate entity id '" + id + "'") {}
};

class EmptyQuery : public std::runtime_error {
  public:
    EmptyQuery() : std::runtime_error("query has no terms after tokenization") {}
};

class UnknownEntityId : public std::runtime_error {
  public:
    explicit UnknownEntityId(const std::string& id)
        : std::runtime_error("unknown entity id '" + id + "'") {}
};

/// Lowercases (Unicode-aware where the C.UTF-8 locale is available) and splits
/// on every non-alphanumeric code point. No stemming.
std::vector<std::string> tokenize(std::string_view text,
                                  const std::set<std::string>* stopwords = nullptr);

enum class FieldPolicy { TitleOnly, TitlePlusDescription };

FieldPolicy parse_field_policy(std::string_view text);
std::string_view to_string(FieldPolicy policy);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct Posting {
    std::uint32_t doc = 0;
    std::uint32_t tf = 0;

    friend bool operator==(const Posting&, const Posting&) = default;
};

/// Immutable in-memory inverted index over a corpus.
class InvertedIndex {
  public:
    static InvertedIndex build(const std::vector<Entity>& corpus,
                               FieldPolicy policy = FieldPolicy::TitlePlusDescription,
                               std::set<std::string> stopwords = {});

    std::size_t doc_count() const { return ids_.size(); }
    double avg_doc_len() const { return avg_doc_len_; }
    std::uint32_t doc_length(std::size_t doc) const { return doc_lengths_[doc]; }
    const std::string& entity_id(std::size_t doc) const { return ids_[doc]; }
    std::optional<std::size_t> ordinal_of(std::string_view entity_id) const;

    /// Postings sorted by document ordinal; empty for unknown terms.
    const std::vector<Posting>& postings(std::string_view term) const;
    std::size_t term_count() const { return postings_.size(); }
    FieldPolicy field_policy() const { return policy_; }
    const std::set<std::string>& stopwords() const { return stopwords_; }

    void save(const std::filesystem::path& path) const;
    static InvertedIndex load(const std::filesystem::path& path);

    friend bool operator==(const InvertedIndex& a, const InvertedIndex& b);

  private:
    std::vector<std::string> ids_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_len_ = 0.0;
    std::map<std::string, std::vector<Posting>, std::less<>> postings_;
    std::unordered_map<std::string, std::size_t> ordinal_;
    FieldPolicy policy_ = FieldPolicy::TitlePlusDescription;
    std::set<std::string> stopwords_;
};

inline constexpr std::string_view kIndexMagic = "orlog-bm25-index";
inline constexpr int kIndexFormatVersion = 1;

/// Robertson IDF with +1 inside the log, so it is never negative.
double bm25_idf(std::size_t doc_count, std::size_t doc_freq);

/// BM25 of one document for the given (already tokenized) query terms.
/// Repeated query terms contribute once per occurrence.
double bm25_score(const InvertedIndex& index, const std::vector<std::string>& query_terms,
                  std::size_t doc, const Bm25Params& params = {});

/// Top-k documents sharing at least one term with the query, by descending
/// BM25 then ascending entity id.
CandidateList retrieve_topk(const InvertedIndex& index, std::string_view query_text,
                            std::size_t k = kDefaultTopK, const Bm25Params& params = {});

struct QueryText {
    std::string qid;
    std::string text;
};

struct BatchRetrieval {
    std::map<std::string, CandidateList> candidates;
    std::map<std::string, std::string> failures;  // qid -> reason
};

/// Runs `retrieve_topk` for every query. The parallel version distributes
/// queries over OpenMP threads; both produce identical results.
BatchRetrieval retrieve_batch(const InvertedIndex& index, const std::vector<QueryText>& queries,
                              std::size_t k = kDefaultTopK, const Bm25Params& params = {},
                              int threads = 0);
BatchRetrieval retrieve_batch_serial(const InvertedIndex& index,
                                     const std::vector<QueryText>& queries,
                                     std::size_t k = kDefaultTopK, const Bm25Params& params = {});

/// Reads a TREC run and keeps the best `k` lines per query (by score, then
/// by the file's rank), renumbering ranks 1..k. When `known_ids` is given,
/// every entity must belong to it.
std::map<std::string, CandidateList> import_run(const std::filesystem::path& path,
                                                std::size_t k = kDefaultTopK,
                                                const std::set<std::string>* known_ids = nullptr);

/// JSONL corpus: one `{"id", "title", "text"}` object per line.
std::vector<Entity> load_corpus(const std::filesystem::path& path);
void save_corpus(const std::filesystem::path& path, const std::vector<Entity>& corpus);

}  // namespace orlog
