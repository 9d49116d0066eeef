#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

#include "orlog/entity.hpp"
#include "orlog/logic_form.hpp"

namespace orlog {

inline constexpr std::string_view kDefaultSuffix = "Is this predicate True or False?";
inline constexpr std::size_t kDefaultContextCap = 2000;

/// Knowledge available to the oracle: the entity name only, or name plus
/// its textual description.
enum class KnowledgeMode { Parametric, ParametricPlus };

std::string_view to_string(KnowledgeMode mode);
KnowledgeMode parse_knowledge_mode(std::string_view text);

/// The four-part truth-valuation prompt sent for one (entity, predicate)
/// pair. `entity_id` and `predicate_id` are routing keys only; they are not
/// part of the text the model sees.
struct TruthPrompt {
    std::optional<std::string> context;
    std::string entity_title;
    std::string predicate_text;
    std::string suffix;

    std::string entity_id;
    PredicateId predicate_id;

    /// Set when ParametricPlus was requested but no description existed.
    bool missing_description = false;
};

struct LogitPair {
    double z_true = 0.0;
    double z_false = 0.0;
};

/// Probability in [0,1] that a predicate holds for an entity.
class PlausibilityScore {
  public:
    explicit PlausibilityScore(double value);
    double value() const { return value_; }

  private:
    double value_;
};

using OracleResponse = std::variant<LogitPair, PlausibilityScore>;

class NonFiniteLogit : public std::domain_error {
  public:
    NonFiniteLogit() : std::domain_error("non-finite logit") {}
};

class BackendUnavailable : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class MalformedResponse : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class MissingDescription : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A decoding-free plausibility scorer. Implementations must tolerate
/// concurrent calls to `score`.
class OracleBackend {
  public:
    virtual ~OracleBackend() = default;
    virtual OracleResponse score(const TruthPrompt& prompt) = 0;
};

/// Looks up (entity_id, predicate_id) in a fixed table.
class MockBackend final : public OracleBackend {
  public:
    MockBackend(std::map<std::pair<std::string, PredicateId>, double> table,
                double default_prob = 0.5);
    MockBackend(MockBackend&& other) noexcept
        : table_(std::move(other.table_)),
          default_prob_(other.default_prob_),
          calls_(other.calls_.load()) {}

    /// TSV rows `entity_id<TAB>predicate_id<TAB>prob`; a row `* * p` sets
    /// the default for misses. Blank lines and `#` comments are skipped.
    static MockBackend from_tsv(const std::filesystem::path& path);

    OracleResponse score(const TruthPrompt& prompt) override;

    std::size_t call_count() const { return calls_.load(); }
    double default_prob() const { return default_prob_; }
    std::size_t size() const { return table_.size(); }

  private:
    std::map<std::pair<std::string, PredicateId>, double> table_;
    double default_prob_;
    std::atomic<std::size_t> calls_{0};
};

class ConstantBackend final : public OracleBackend {
  public:
    explicit ConstantBackend(double prob) : prob_(prob) {}
    OracleResponse score(const TruthPrompt&) override { return PlausibilityScore(prob_); }

  private:
    double prob_;
};

struct HttpBackendConfig {
    std::string endpoint;  // e.g. http://localhost:8080
    std::string path = "/truth-eval";
    int retries = 2;
    std::chrono::milliseconds timeout{30000};
    std::string bearer_token;
};

/// POSTs `{context?, entity_title, predicate, suffix}` as JSON and accepts
/// `{logit_true, logit_false}` or `{prob_true}`.
class HttpBackend final : public OracleBackend {
  public:
    explicit HttpBackend(HttpBackendConfig config);
    OracleResponse score(const TruthPrompt& prompt) override;

  private:
    HttpBackendConfig config_;
};

/// JSON request body for the truth-evaluation endpoint.
std::string encode_truth_request(const TruthPrompt& prompt);
/// Parses a truth-evaluation response body; throws MalformedResponse.
OracleResponse decode_truth_response(std::string_view body);

/// Instantiates `tmpl` for `entity`. In ParametricPlus mode the context is
/// the entity description cut to `context_cap` bytes (at a UTF-8 boundary);
/// an empty description falls back to a parametric prompt with
/// `missing_description` set.
TruthPrompt build_prompt(const Entity& entity, const PredicateTemplate& tmpl, KnowledgeMode mode,
                         std::string_view suffix = kDefaultSuffix,
                         std::size_t context_cap = kDefaultContextCap);

/// Softmax probability of True over {True, False}, computed as the logistic
/// of the logit difference so that it is stable for any finite logits.
PlausibilityScore score_from_logits(LogitPair z);

/// One backend call; converts logits when needed.
PlausibilityScore elicit(OracleBackend& backend, const TruthPrompt& prompt);

}  // namespace orlog
