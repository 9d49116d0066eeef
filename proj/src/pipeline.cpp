#include "orlog/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>
#include <omp.h>

#include "orlog/trec.hpp"

namespace orlog {

using nlohmann::json;

EntityScore score_entity(const QuerySpec& query, const Entity& entity, OracleBackend& backend,
                         const ElicitationOptions& options) {
    EntityScore out;
    for (const auto& tmpl : query.predicates) {
        const TruthPrompt prompt =
            build_prompt(entity, tmpl, options.mode, options.suffix, options.context_cap);
        out.missing_descriptions += prompt.missing_description ? 1 : 0;
        ++out.predicate_calls;
        try {
            out.priors[tmpl.id] = elicit(backend, prompt).value();
        } catch (const BackendUnavailable&) {
            out.priors[tmpl.id] = kFallbackPrior;
            out.degraded = true;
        } catch (const MalformedResponse&) {
            out.priors[tmpl.id] = kFallbackPrior;
            out.degraded = true;
        }
    }
    out.posterior = posterior(query.form, out.priors);
    return out;
}

RerankedList rerank(const std::string& qid, const CandidateList& candidates,
                    const std::map<std::string, double>& posteriors) {
    RerankedList out{qid, {}};
    out.entries.reserve(candidates.size());
    for (const auto& c : candidates) {
        const auto it = posteriors.find(c.entity_id);
        if (it == posteriors.end()) {
            throw MissingPosterior(c.entity_id);
        }
        out.entries.push_back(RerankEntry{c.entity_id, it->second, c.base_rank, false});
    }
    std::sort(out.entries.begin(), out.entries.end(),
              [](const RerankEntry& a, const RerankEntry& b) {
                  if (a.posterior != b.posterior) {
                      return a.posterior > b.posterior;
                  }
                  return a.base_rank < b.base_rank;
              });
    return out;
}

// ---------------------------------------------------------------------------
// Cost ledger

double cost_per_pair(const CostLedger& ledger) {
    if (ledger.pairs.empty()) {
        throw EmptyLedger();
    }
    std::map<std::string, std::size_t> pairs_per_query;
    for (const auto& p : ledger.pairs) {
        ++pairs_per_query[p.qid];
    }
    double total = 0.0;
    for (const auto& p : ledger.pairs) {
        const auto it = ledger.parse_token_cost.find(p.qid);
        const double parse = it == ledger.parse_token_cost.end() ? 0.0 : it->second;
        total += static_cast<double>(p.predicate_calls) +
                 parse / static_cast<double>(pairs_per_query[p.qid]);
    }
    return total / static_cast<double>(ledger.pairs.size());
}

void write_ledger(std::ostream& out, const CostLedger& ledger) {
    std::map<std::string, std::size_t> pairs_per_query;
    for (const auto& p : ledger.pairs) {
        ++pairs_per_query[p.qid];
    }
    // Queries without candidates still record their parse cost.
    for (const auto& [qid, cost] : ledger.parse_token_cost) {
        out << json{{"qid", qid}, {"parse_token_cost", cost},
                    {"candidate_count", pairs_per_query[qid]}}
                   .dump()
            << '\n';
    }
    for (const auto& p : ledger.pairs) {
        out << json{{"qid", p.qid},
                    {"entity_id", p.entity_id},
                    {"predicate_calls", p.predicate_calls},
                    {"degraded", p.degraded}}
                   .dump()
            << '\n';
    }
}

CostLedger read_ledger(std::istream& in) {
    CostLedger ledger;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const json obj = json::parse(line);
            const auto qid = obj.at("qid").get<std::string>();
            if (obj.contains("entity_id")) {
                ledger.pairs.push_back(LedgerEntry{qid, obj.at("entity_id").get<std::string>(),
                                                   obj.at("predicate_calls").get<std::size_t>(),
                                                   obj.value("degraded", false)});
            } else {
                ledger.parse_token_cost[qid] = obj.at("parse_token_cost").get<long>();
            }
        } catch (const json::exception& e) {
            throw std::runtime_error("ledger line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return ledger;
}

CostLedger read_ledger(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open ledger " + path.string());
    }
    return read_ledger(in);
}

// ---------------------------------------------------------------------------
// Batch pipeline

namespace {

struct Task {
    std::size_t query;
    std::size_t candidate;
    const Entity* entity;
};

struct TaskResult {
    EntityScore score;
    std::string error;
    bool failed = false;
};

struct Plan {
    std::vector<Task> tasks;
    std::map<std::string, std::string> failures;
};

Plan plan_tasks(const PipelineInput& input) {
    std::unordered_map<std::string, const Entity*> by_id;
    for (const auto& e : *input.corpus) {
        by_id.emplace(e.id, &e);
    }
    Plan plan;
    for (std::size_t qi = 0; qi < input.queries->size(); ++qi) {
        const auto& q = (*input.queries)[qi];
        const auto cand = input.candidates->find(q.qid);
        if (cand == input.candidates->end()) {
            plan.failures[q.qid] = "no candidate list";
            continue;
        }
        std::vector<Task> mine;
        std::string missing;
        for (std::size_t ci = 0; ci < cand->second.size(); ++ci) {
            const auto it = by_id.find(cand->second[ci].entity_id);
            if (it == by_id.end()) {
                missing = cand->second[ci].entity_id;
                break;
            }
            mine.push_back(Task{qi, ci, it->second});
        }
        if (!missing.empty()) {
            plan.failures[q.qid] = "candidate '" + missing + "' not in corpus";
            continue;
        }
        plan.tasks.insert(plan.tasks.end(), mine.begin(), mine.end());
    }
    return plan;
}

TaskResult run_task(const PipelineInput& input, const Task& task, OracleBackend& backend,
                    const ElicitationOptions& options) {
    TaskResult r;
    try {
        r.score = score_entity((*input.queries)[task.query], *task.entity, backend, options);
    } catch (const std::exception& e) {
        r.failed = true;
        r.error = e.what();
    }
    return r;
}

// Folds per-task results into reranked lists and the ledger, in query order.
PipelineResult assemble(const PipelineInput& input, Plan plan,
                        const std::vector<TaskResult>& results) {
    PipelineResult out;
    out.failures = std::move(plan.failures);

    std::map<std::size_t, std::vector<std::size_t>> by_query;
    for (std::size_t t = 0; t < plan.tasks.size(); ++t) {
        by_query[plan.tasks[t].query].push_back(t);
    }
    for (std::size_t qi = 0; qi < input.queries->size(); ++qi) {
        const auto& q = (*input.queries)[qi];
        if (out.failures.contains(q.qid)) {
            continue;
        }
        out.ledger.parse_token_cost[q.qid] = q.parse_token_cost;
        const auto& cands = input.candidates->at(q.qid);
        const auto& tasks = by_query[qi];

        std::map<std::string, double> posteriors;
        std::map<std::string, bool> degraded;
        std::string error;
        for (const auto t : tasks) {
            if (results[t].failed) {
                error = results[t].error;
                break;
            }
            const auto& id = cands[plan.tasks[t].candidate].entity_id;
            posteriors[id] = results[t].score.posterior;
            degraded[id] = results[t].score.degraded;
        }
        if (!error.empty()) {
            out.failures[q.qid] = error;
            out.ledger.parse_token_cost.erase(q.qid);
            continue;
        }
        RerankedList list = rerank(q.qid, cands, posteriors);
        for (auto& e : list.entries) {
            e.degraded = degraded[e.entity_id];
        }
        for (const auto t : tasks) {
            const auto& id = cands[plan.tasks[t].candidate].entity_id;
            out.ledger.pairs.push_back(LedgerEntry{q.qid, id, results[t].score.predicate_calls,
                                                   results[t].score.degraded});
            out.missing_descriptions += results[t].score.missing_descriptions;
        }
        out.lists.emplace(q.qid, std::move(list));
    }
    return out;
}

void check_input(const PipelineInput& input) {
    if (input.queries == nullptr || input.corpus == nullptr || input.candidates == nullptr) {
        throw std::invalid_argument("pipeline input is incomplete");
    }
}

}  // namespace

PipelineResult run_pipeline_serial(const PipelineInput& input, OracleBackend& backend,
                                   const ElicitationOptions& options) {
    check_input(input);
    Plan plan = plan_tasks(input);
    std::vector<TaskResult> results;
    results.reserve(plan.tasks.size());
    for (const auto& task : plan.tasks) {
        results.push_back(run_task(input, task, backend, options));
    }
    return assemble(input, std::move(plan), results);
}

PipelineResult run_pipeline(const PipelineInput& input, OracleBackend& backend,
                            const ElicitationOptions& options, int threads) {
    check_input(input);
    Plan plan = plan_tasks(input);
    std::vector<TaskResult> results(plan.tasks.size());
    const auto n = static_cast<std::ptrdiff_t>(plan.tasks.size());
    const int nthreads = threads > 0 ? threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        results[u] = run_task(input, plan.tasks[u], backend, options);
    }
    return assemble(input, std::move(plan), results);
}

std::string run_tag(KnowledgeMode mode, bool degraded) {
    std::string tag = "orlog-";
    tag += to_string(mode);
    if (degraded) {
        tag += "-degraded";
    }
    return tag;
}

void write_reranked_run(std::ostream& out, const PipelineResult& result, KnowledgeMode mode) {
    for (const auto& [qid, list] : result.lists) {
        long rank = 0;
        for (const auto& e : list.entries) {
            write_run_line(out, RunLine{qid, e.entity_id, ++rank, e.posterior,
                                        run_tag(mode, e.degraded)});
        }
    }
}

// ---------------------------------------------------------------------------
// Query files

namespace {

QuerySpec query_from_object(const json& obj) {
    QuerySpec q;
    q.qid = obj.at("qid").get<std::string>();
    q.raw = obj.value("text", std::string{});
    for (const auto& p : obj.at("predicates")) {
        q.predicates.push_back(
            PredicateTemplate{p.at("id").get<std::string>(), p.at("text").get<std::string>()});
    }
    q.form = parse_formula(obj.at("form").get<std::string>());
    if (obj.contains("template") && !obj["template"].is_null()) {
        q.template_label = obj["template"].get<std::string>();
    }
    if (obj.contains("parse_tokens") && !obj["parse_tokens"].is_null()) {
        q.parse_token_cost = obj["parse_tokens"].get<long>();
        if (q.parse_token_cost < 0) {
            throw InvalidQuery(q.qid + ": parse_tokens must be >= 0");
        }
    }
    validate_query(q);
    return q;
}

}  // namespace

QuerySpec query_from_json(const std::string& line) {
    return query_from_object(json::parse(line));
}

std::string query_to_json(const QuerySpec& q) {
    json preds = json::array();
    for (const auto& p : q.predicates) {
        preds.push_back({{"id", p.id}, {"text", p.text}});
    }
    json obj = {{"qid", q.qid},
                {"text", q.raw},
                {"form", format_formula(q.form)},
                {"predicates", std::move(preds)}};
    if (q.template_label) {
        obj["template"] = *q.template_label;
    }
    if (q.parse_token_cost != 0) {
        obj["parse_tokens"] = q.parse_token_cost;
    }
    return obj.dump();
}

std::vector<QuerySpec> load_queries(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open query file " + path.string());
    }
    std::vector<QuerySpec> queries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            queries.push_back(query_from_json(line));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " +
                                     e.what());
        }
    }
    return queries;
}

void save_queries(const std::filesystem::path& path, const std::vector<QuerySpec>& queries) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write query file " + path.string());
    }
    for (const auto& q : queries) {
        out << query_to_json(q) << '\n';
    }
}

QuerySpec translate_query(const std::string& endpoint, const std::string& qid,
                          const std::string& text, const std::string& path) {
    httplib::Client client(endpoint);
    const auto res =
        client.Post(path, json{{"qid", qid}, {"text", text}}.dump(), "application/json");
    if (!res) {
        throw BackendUnavailable("translator unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw BackendUnavailable("translator returned HTTP " + std::to_string(res->status));
    }
    try {
        json obj = json::parse(res->body);
        obj["qid"] = qid;
        obj["text"] = text;
        if (obj.contains("parse_token_cost")) {
            obj["parse_tokens"] = obj["parse_token_cost"];
        }
        return query_from_object(obj);
    } catch (const json::exception& e) {
        throw MalformedResponse(std::string("translator response: ") + e.what());
    }
}

}  // namespace orlog
