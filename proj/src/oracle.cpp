#include "orlog/oracle.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

namespace orlog {

using nlohmann::json;

std::string_view to_string(KnowledgeMode mode) {
    return mode == KnowledgeMode::Parametric ? "param" : "param+";
}

KnowledgeMode parse_knowledge_mode(std::string_view text) {
    if (text == "param" || text == "parametric") {
        return KnowledgeMode::Parametric;
    }
    if (text == "param+" || text == "parametric_plus" || text == "parametric+") {
        return KnowledgeMode::ParametricPlus;
    }
    throw std::invalid_argument("unknown knowledge mode '" + std::string(text) + "'");
}

PlausibilityScore::PlausibilityScore(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw std::domain_error("plausibility outside [0,1]");
    }
}

// ---------------------------------------------------------------------------

MockBackend::MockBackend(std::map<std::pair<std::string, PredicateId>, double> table,
                         double default_prob)
    : table_(std::move(table)), default_prob_(default_prob) {
    auto in_range = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!in_range(default_prob_)) {
        throw std::domain_error("mock default probability outside [0,1]");
    }
    for (const auto& [key, p] : table_) {
        if (!in_range(p)) {
            throw std::domain_error("mock probability for (" + key.first + ", " + key.second +
                                    ") outside [0,1]");
        }
    }
}

MockBackend MockBackend::from_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open mock table " + path.string());
    }
    std::map<std::pair<std::string, PredicateId>, double> table;
    double fallback = 0.5;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        std::istringstream fields(line);
        std::string entity;
        std::string predicate;
        std::string prob_text;
        std::string extra;
        if (!(fields >> entity >> predicate >> prob_text) || (fields >> extra)) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": expected 3 columns");
        }
        double prob = 0.0;
        try {
            std::size_t used = 0;
            prob = std::stod(prob_text, &used);
            if (used != prob_text.size() || !(prob >= 0.0 && prob <= 1.0)) {
                throw std::invalid_argument(prob_text);
            }
        } catch (const std::exception&) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": probability must be a number in [0,1]");
        }
        if (entity == "*" && predicate == "*") {
            fallback = prob;
        } else {
            table[{entity, predicate}] = prob;
        }
    }
    return MockBackend(std::move(table), fallback);
}

OracleResponse MockBackend::score(const TruthPrompt& prompt) {
    calls_.fetch_add(1, std::memory_order_relaxed);
    const auto it = table_.find({prompt.entity_id, prompt.predicate_id});
    return PlausibilityScore(it == table_.end() ? default_prob_ : it->second);
}

// ---------------------------------------------------------------------------

std::string encode_truth_request(const TruthPrompt& prompt) {
    json body = {
        {"entity_title", prompt.entity_title},
        {"predicate", prompt.predicate_text},
        {"suffix", prompt.suffix},
    };
    if (prompt.context) {
        body["context"] = *prompt.context;
    }
    return body.dump();
}

OracleResponse decode_truth_response(std::string_view body) {
    json parsed;
    try {
        parsed = json::parse(body);
    } catch (const json::exception& e) {
        throw MalformedResponse(std::string("response is not JSON: ") + e.what());
    }
    if (!parsed.is_object()) {
        throw MalformedResponse("response is not a JSON object");
    }
    if (parsed.contains("logit_true") && parsed.contains("logit_false")) {
        const auto& t = parsed["logit_true"];
        const auto& f = parsed["logit_false"];
        if (!t.is_number() || !f.is_number()) {
            throw MalformedResponse("logits must be numbers");
        }
        return LogitPair{t.get<double>(), f.get<double>()};
    }
    if (parsed.contains("prob_true")) {
        const auto& p = parsed["prob_true"];
        if (!p.is_number() || !(p.get<double>() >= 0.0 && p.get<double>() <= 1.0)) {
            throw MalformedResponse("prob_true must be a number in [0,1]");
        }
        return PlausibilityScore(p.get<double>());
    }
    throw MalformedResponse("response has neither logits nor prob_true");
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) {
        throw std::invalid_argument("http backend needs an endpoint");
    }
    if (config_.retries < 0) {
        throw std::invalid_argument("retries must be >= 0");
    }
}

OracleResponse HttpBackend::score(const TruthPrompt& prompt) {
    const std::string body = encode_truth_request(prompt);
    std::string last_error = "no attempt made";
    // One client per call keeps concurrent scoring free of shared state.
    httplib::Client client(config_.endpoint);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    if (!config_.bearer_token.empty()) {
        client.set_bearer_token_auth(config_.bearer_token);
    }
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        auto res = client.Post(config_.path, body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw MalformedResponse("HTTP " + std::to_string(res->status) + " from oracle");
        }
        return decode_truth_response(res->body);
    }
    throw BackendUnavailable("oracle at " + config_.endpoint + " failed after " +
                             std::to_string(config_.retries + 1) + " attempts: " + last_error);
}

// ---------------------------------------------------------------------------

namespace {

std::string utf8_prefix(const std::string& text, std::size_t cap) {
    if (text.size() <= cap) {
        return text;
    }
    std::size_t cut = cap;
    while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) {
        --cut;
    }
    return text.substr(0, cut);
}

}  // namespace

TruthPrompt build_prompt(const Entity& entity, const PredicateTemplate& tmpl, KnowledgeMode mode,
                         std::string_view suffix, std::size_t context_cap) {
    if (entity.title.empty()) {
        throw std::invalid_argument("entity '" + entity.id + "' has an empty title");
    }
    TruthPrompt prompt;
    prompt.entity_title = entity.title;
    prompt.predicate_text = tmpl.instantiate(entity.title);
    prompt.suffix = std::string(suffix);
    prompt.entity_id = entity.id;
    prompt.predicate_id = tmpl.id;
    if (prompt.predicate_text.empty()) {
        throw std::invalid_argument("predicate '" + tmpl.id + "' instantiates to empty text");
    }
    if (mode == KnowledgeMode::ParametricPlus) {
        if (entity.description.empty()) {
            prompt.missing_description = true;
        } else {
            prompt.context = utf8_prefix(entity.description, context_cap);
        }
    }
    return prompt;
}

PlausibilityScore score_from_logits(LogitPair z) {
    if (!std::isfinite(z.z_true) || !std::isfinite(z.z_false)) {
        throw NonFiniteLogit();
    }
    // exp(t)/(exp(t)+exp(f)) == 1/(1+exp(f-t)); exp overflow yields inf -> 0.
    const double diff = z.z_false - z.z_true;
    return PlausibilityScore(1.0 / (1.0 + std::exp(diff)));
}

PlausibilityScore elicit(OracleBackend& backend, const TruthPrompt& prompt) {
    const OracleResponse response = backend.score(prompt);
    if (const auto* logits = std::get_if<LogitPair>(&response)) {
        try {
            return score_from_logits(*logits);
        } catch (const NonFiniteLogit&) {
            throw MalformedResponse("oracle returned non-finite logits");
        }
    }
    return std::get<PlausibilityScore>(response);
}

}  // namespace orlog
