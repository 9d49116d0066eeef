#include "config.hpp"

#include <stdexcept>
#include <vector>

namespace orlog::cli {

namespace {

// "--field-policy,--field_policy" so the config key `field_policy` resolves.
std::string names(const std::string& key) {
    std::string dashed = key;
    for (auto& c : dashed) {
        if (c == '_') c = '-';
    }
    return dashed == key ? "--" + key : "--" + dashed + ",--" + key;
}

void need(const std::string& command, const std::string& value, const char* key) {
    if (value.empty()) {
        throw std::invalid_argument(command + " requires --" + key);
    }
}

}  // namespace

void register_options(CLI::App& app, RunConfig& c) {
    app.set_config("--config", "", "key = value settings file; flags override it");
    app.allow_config_extras(CLI::config_extras_mode::error);

    const auto existing = CLI::ExistingFile;
    app.add_option(names("corpus"), c.corpus, "JSONL corpus {id,title,text}")->check(existing);
    app.add_option(names("queries"), c.queries, "JSONL decomposed queries")->check(existing);
    app.add_option(names("qrels"), c.qrels, "TREC qrels")->check(existing);
    app.add_option(names("run"), c.run, "TREC run (input)")->check(existing);
    app.add_option(names("baseline"), c.baseline, "baseline TREC run for sign tests")
        ->check(existing);
    app.add_option(names("index"), c.index, "index snapshot path");
    app.add_option(names("stopwords"), c.stopwords, "stopword list, one per line")
        ->check(existing);
    app.add_option(names("out"), c.out, "output file");
    app.add_option(names("ledger"), c.ledger, "cost ledger JSONL");
    app.add_option(names("report"), c.report, "metrics report JSON output");
    app.add_option(names("template_csv"), c.template_csv, "per-template CSV output");
    app.add_option(names("out_dir"), c.out_dir, "output directory");

    app.add_option(names("k"), c.k, "candidates per query")->check(CLI::PositiveNumber);
    app.add_option(names("k1"), c.k1, "BM25 k1")->check(CLI::NonNegativeNumber);
    app.add_option(names("b"), c.b, "BM25 b")->check(CLI::Range(0.0, 1.0));
    app.add_option(names("field_policy"), c.field_policy, "indexed fields")
        ->check(CLI::IsMember({"title_only", "title_plus_description"}));

    app.add_option(names("backend"), c.backend, "oracle backend")
        ->check(CLI::IsMember({"mock", "http", "constant"}));
    app.add_option(names("mock_table"), c.mock_table, "mock oracle TSV")->check(existing);
    app.add_option(names("endpoint"), c.endpoint, "HTTP oracle base URL");
    app.add_option(names("retries"), c.retries, "HTTP retries")->check(CLI::Range(0, 100));
    app.add_option(names("timeout_ms"), c.timeout_ms, "HTTP timeout in ms")
        ->check(CLI::PositiveNumber);
    app.add_option(names("constant_prob"), c.constant_prob, "constant backend plausibility")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option(names("mode"), c.mode, "knowledge mode")
        ->check(CLI::IsMember({"param", "param+", "parametric", "parametric_plus"}));
    app.add_option(names("concurrency"), c.concurrency, "worker threads, 0 = default")
        ->check(CLI::Range(0, 4096));
    app.add_option(names("context_cap"), c.context_cap, "max context characters")
        ->check(CLI::PositiveNumber);
    app.add_option(names("suffix"), c.suffix, "truth-valuation suffix");

    app.add_option(names("retriever_label"), c.retriever_label, "retriever name in cost table");

    app.add_option(names("seed"), c.seed, "synthetic data seed");
    app.add_option(names("noise"), c.noise, "mock prior noise")->check(CLI::Range(0.0, 0.5));
    app.add_option(names("entities"), c.entities, "synthetic entities")
        ->check(CLI::PositiveNumber);
    app.add_option(names("queries_per_template"), c.queries_per_template,
                   "synthetic queries per template")
        ->check(CLI::PositiveNumber);
    app.add_option(names("attributes"), c.attributes, "synthetic attribute vocabulary size")
        ->check(CLI::Range(3, 32));
}

void require_for(const std::string& command, const RunConfig& c) {
    if (command == "index") {
        need(command, c.corpus, "corpus");
        need(command, c.index, "index");
    } else if (command == "retrieve") {
        need(command, c.queries, "queries");
        need(command, c.out, "out");
        if (c.index.empty() && c.corpus.empty()) {
            throw std::invalid_argument("retrieve requires --index or --corpus");
        }
    } else if (command == "rerank") {
        need(command, c.queries, "queries");
        need(command, c.corpus, "corpus");
        need(command, c.out, "out");
        if (c.suffix.empty()) {
            throw std::invalid_argument("suffix must not be empty");
        }
        if (c.backend == "mock") need(command, c.mock_table, "mock_table");
        if (c.backend == "http") need(command, c.endpoint, "endpoint");
    } else if (command == "eval") {
        need(command, c.run, "run");
        need(command, c.qrels, "qrels");
        if (!c.template_csv.empty() && (c.baseline.empty() || c.queries.empty())) {
            throw std::invalid_argument("template_csv requires --baseline and --queries");
        }
    } else if (command == "cost") {
        need(command, c.ledger, "ledger");
    } else if (command == "synth") {
        need(command, c.out_dir, "out_dir");
    }
}

}  // namespace orlog::cli
