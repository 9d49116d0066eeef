// orlog: batch front-end. One subcommand per workflow step:
//   index -> retrieve -> rerank -> eval / cost, plus synth for fixtures.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>

#include "config.hpp"
#include "orlog/evaluation.hpp"
#include "orlog/oracle.hpp"
#include "orlog/pipeline.hpp"
#include "orlog/retrieval.hpp"
#include "orlog/synth.hpp"
#include "orlog/trec.hpp"

namespace {

using orlog::cli::RunConfig;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    return out;
}

std::set<std::string> read_stopwords(const std::string& path) {
    std::set<std::string> words;
    if (path.empty()) {
        return words;
    }
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        for (auto& t : orlog::tokenize(line)) {
            words.insert(std::move(t));
        }
    }
    return words;
}

orlog::InvertedIndex index_for(const RunConfig& c) {
    if (!c.index.empty()) {
        return orlog::InvertedIndex::load(c.index);
    }
    return orlog::InvertedIndex::build(orlog::load_corpus(c.corpus),
                                       orlog::parse_field_policy(c.field_policy),
                                       read_stopwords(c.stopwords));
}

void report_failures(const std::map<std::string, std::string>& failures) {
    for (const auto& [qid, why] : failures) {
        std::cerr << "warning: query " << qid << ": " << why << '\n';
    }
}

int cmd_index(const RunConfig& c) {
    const auto corpus = orlog::load_corpus(c.corpus);
    const auto index = orlog::InvertedIndex::build(
        corpus, orlog::parse_field_policy(c.field_policy), read_stopwords(c.stopwords));
    index.save(c.index);
    std::cerr << "indexed " << index.doc_count() << " entities, " << index.term_count()
              << " terms\n";
    return 0;
}

int cmd_retrieve(const RunConfig& c) {
    const auto index = index_for(c);
    std::vector<orlog::QueryText> texts;
    for (const auto& q : orlog::load_queries(c.queries)) {
        texts.push_back({q.qid, q.raw});
    }
    const auto batch =
        orlog::retrieve_batch(index, texts, c.k, {c.k1, c.b}, c.concurrency);
    auto out = open_out(c.out);
    for (const auto& [qid, list] : batch.candidates) {
        for (const auto& cand : list) {
            orlog::write_run_line(out, {qid, cand.entity_id, static_cast<long>(cand.base_rank),
                                        cand.base_score, "bm25"});
        }
    }
    report_failures(batch.failures);
    return 0;
}

std::unique_ptr<orlog::OracleBackend> make_backend(const RunConfig& c) {
    if (c.backend == "mock") {
        return std::make_unique<orlog::MockBackend>(orlog::MockBackend::from_tsv(c.mock_table));
    }
    if (c.backend == "constant") {
        return std::make_unique<orlog::ConstantBackend>(c.constant_prob);
    }
    orlog::HttpBackendConfig http;
    http.endpoint = c.endpoint;
    http.retries = c.retries;
    http.timeout = std::chrono::milliseconds(c.timeout_ms);
    if (const char* token = std::getenv(orlog::cli::kTokenEnvVar)) {
        http.bearer_token = token;
    }
    return std::make_unique<orlog::HttpBackend>(http);
}

int cmd_rerank(const RunConfig& c) {
    const auto queries = orlog::load_queries(c.queries);
    const auto corpus = orlog::load_corpus(c.corpus);

    std::map<std::string, orlog::CandidateList> candidates;
    if (!c.run.empty()) {
        std::set<std::string> known;
        for (const auto& e : corpus) {
            known.insert(e.id);
        }
        candidates = orlog::import_run(c.run, c.k, &known);
    } else {
        const auto index = c.index.empty()
                               ? orlog::InvertedIndex::build(
                                     corpus, orlog::parse_field_policy(c.field_policy),
                                     read_stopwords(c.stopwords))
                               : orlog::InvertedIndex::load(c.index);
        std::vector<orlog::QueryText> texts;
        for (const auto& q : queries) {
            texts.push_back({q.qid, q.raw});
        }
        candidates = orlog::retrieve_batch(index, texts, c.k, {c.k1, c.b}, c.concurrency)
                         .candidates;
    }

    auto backend = make_backend(c);
    orlog::ElicitationOptions options;
    options.mode = orlog::parse_knowledge_mode(c.mode);
    options.suffix = c.suffix;
    options.context_cap = c.context_cap;

    const auto result =
        orlog::run_pipeline({&queries, &corpus, &candidates}, *backend, options, c.concurrency);
    {
        auto out = open_out(c.out);
        orlog::write_reranked_run(out, result, options.mode);
    }
    const std::string ledger_path = c.ledger.empty() ? c.out + ".ledger.jsonl" : c.ledger;
    {
        auto out = open_out(ledger_path);
        orlog::write_ledger(out, result.ledger);
    }

    std::size_t degraded = 0;
    for (const auto& p : result.ledger.pairs) {
        degraded += p.degraded ? 1 : 0;
    }
    std::cerr << "reranked " << result.lists.size() << " queries, "
              << result.ledger.pairs.size() << " pairs";
    if (degraded > 0) {
        std::cerr << ", " << degraded << " degraded";
    }
    if (result.missing_descriptions > 0) {
        std::cerr << ", " << result.missing_descriptions << " prompts without description";
    }
    std::cerr << '\n';
    report_failures(result.failures);
    return 0;
}

int cmd_eval(const RunConfig& c) {
    const auto qrels = orlog::read_qrels(c.qrels);
    const auto run = orlog::read_run_rankings(c.run);
    const auto report = orlog::evaluate_parallel(run, qrels, c.concurrency);

    std::vector<orlog::Comparison> comparisons;
    std::vector<orlog::TemplateSlice> slices;
    const bool with_baseline = !c.baseline.empty();
    if (with_baseline) {
        const auto base_run = orlog::read_run_rankings(c.baseline);
        comparisons = orlog::compare(report, orlog::evaluate_parallel(base_run, qrels, c.concurrency));
        if (!c.queries.empty()) {
            slices = orlog::template_breakdown(run, base_run, qrels, orlog::load_queries(c.queries));
        }
    }

    orlog::print_report_table(std::cout, report, with_baseline ? &comparisons : nullptr);
    if (!c.report.empty()) {
        auto out = open_out(c.report);
        out << orlog::report_to_json(report, with_baseline ? &comparisons : nullptr,
                                     slices.empty() ? nullptr : &slices)
            << '\n';
    }
    if (!c.template_csv.empty()) {
        auto out = open_out(c.template_csv);
        orlog::write_template_csv(out, slices);
    }
    return 0;
}

int cmd_cost(const RunConfig& c) {
    const auto ledger = orlog::read_ledger(c.ledger);
    const double avg = orlog::cost_per_pair(ledger);
    std::printf("%-10s %-8s %s\n", "Retriever", "Method", "Avg. generated tokens");
    std::printf("%-10s %-8s %.2f\n", c.retriever_label.c_str(), "OrLog", avg);
    std::printf("pairs=%zu mean=%.17g\n", ledger.pairs.size(), avg);
    return 0;
}

int cmd_synth(const RunConfig& c) {
    orlog::SynthConfig cfg;
    cfg.entities = c.entities;
    cfg.queries_per_template = c.queries_per_template;
    cfg.attributes = c.attributes;
    cfg.noise = c.noise;
    cfg.seed = c.seed;
    const auto data = orlog::generate_synth(cfg);
    orlog::write_synth(c.out_dir, data);
    std::cerr << "wrote " << data.corpus.size() << " entities, " << data.queries.size()
              << " queries to " << c.out_dir << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OrLog: logical-form reranking with oracle-elicited predicate priors"};
    app.require_subcommand(1);
    app.fallthrough();

    RunConfig config;
    orlog::cli::register_options(app, config);

    const std::map<std::string, int (*)(const RunConfig&)> commands = {
        {"index", cmd_index},   {"retrieve", cmd_retrieve}, {"rerank", cmd_rerank},
        {"eval", cmd_eval},     {"cost", cmd_cost},         {"synth", cmd_synth}};
    const std::map<std::string, std::string> help = {
        {"index", "build a BM25 index snapshot from a corpus"},
        {"retrieve", "write top-k BM25 candidates as a TREC run"},
        {"rerank", "rerank candidates by logical-form posterior; writes run and ledger"},
        {"eval", "metrics report, with sign tests against a baseline run"},
        {"cost", "average oracle tokens per query-entity pair from a ledger"},
        {"synth", "generate a gold-consistent synthetic fixture"}};
    for (const auto& [name, fn] : commands) {
        app.add_subcommand(name, help.at(name));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        orlog::cli::require_for(command, config);
        return commands.at(command)(config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
