#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <CLI11.hpp>

namespace orlog::cli {

/// Every setting a subcommand may read. Flags and config-file keys share the
/// same names (multi-word keys use '_' in files; flags accept '-' or '_').
struct RunConfig {
    // paths
    std::string corpus;
    std::string queries;
    std::string qrels;
    std::string run;
    std::string baseline;
    std::string index;
    std::string stopwords;
    std::string out;
    std::string ledger;
    std::string report;
    std::string template_csv;
    std::string out_dir;

    // retriever
    std::size_t k = 20;
    double k1 = 1.2;
    double b = 0.75;
    std::string field_policy = "title_plus_description";

    // oracle
    std::string backend = "mock";
    std::string mock_table;
    std::string endpoint;
    int retries = 2;
    long timeout_ms = 30000;
    double constant_prob = 0.5;
    std::string mode = "param";
    int concurrency = 0;
    std::size_t context_cap = 2000;
    std::string suffix = "Is this predicate True or False?";

    // cost report
    std::string retriever_label = "BM25";

    // synthetic data
    std::uint64_t seed = 42;
    double noise = 0.0;
    std::size_t entities = 240;
    std::size_t queries_per_template = 12;
    std::size_t attributes = 24;
};

/// Only source of the oracle endpoint secret.
inline constexpr const char* kTokenEnvVar = "ORLOG_ORACLE_TOKEN";

/// Registers every RunConfig field as an option of `app`, plus `--config`.
/// Unknown config-file keys are an error.
void register_options(CLI::App& app, RunConfig& config);

/// Throws std::invalid_argument when `command` lacks a required setting.
void require_for(const std::string& command, const RunConfig& config);

}  // namespace orlog::cli
