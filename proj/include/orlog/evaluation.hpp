#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "orlog/logic_form.hpp"
#include "orlog/trec.hpp"

namespace orlog {

using Ranking = std::vector<std::string>;
using RelevantSet = std::set<std::string>;
using Qrels = std::map<std::string, RelevantSet>;

/// Ranked entity ids per query.
using Run = std::map<std::string, Ranking>;

/// `qid 0 entity_id rel`; rel > 0 is relevant. Queries with no relevant
/// entity are dropped.
Qrels read_qrels(const std::filesystem::path& path);
Qrels read_qrels(std::istream& in);
void write_qrels(std::ostream& out, const Qrels& qrels);

/// Orders each query's lines by descending score, ties by ascending rank.
Run run_from_lines(const std::vector<RunLine>& lines);
Run read_run_rankings(const std::filesystem::path& path);

double precision_at_k(const Ranking& ranking, const RelevantSet& relevant, std::size_t k);
double recall_at_k(const Ranking& ranking, const RelevantSet& relevant, std::size_t k);
double f1_at_k(const Ranking& ranking, const RelevantSet& relevant, std::size_t k);
/// Binary gains, 1/log2(rank+1) discount, ideal DCG from min(|relevant|, k) hits.
double ndcg_at_k(const Ranking& ranking, const RelevantSet& relevant, std::size_t k);
double reciprocal_rank(const Ranking& ranking, const RelevantSet& relevant);

struct SignTestResult {
    double p_value = 1.0;
    std::size_t wins = 0;    // a > b
    std::size_t losses = 0;  // a < b
    std::size_t ties = 0;
    bool all_ties = false;
};

/// Exact two-tailed paired sign test; ties are discarded. When every pair is
/// tied the p-value is reported as 1 with `all_ties` set.
SignTestResult sign_test(const std::vector<double>& a, const std::vector<double>& b);

/// Metric names in report order: P@1, P@10, R@1, R@10, F1@1, F1@10,
/// NDCG@1, NDCG@10, MRR.
const std::vector<std::string>& metric_names();

struct MetricsReport {
    std::vector<std::string> qids;                         // evaluated queries, sorted
    std::map<std::string, std::vector<double>> per_query;  // metric -> value per qid
    std::map<std::string, double> mean;                    // metric -> macro average
};

/// Evaluates every query in `qrels`; queries missing from the run score 0.
MetricsReport evaluate(const Run& run, const Qrels& qrels);
/// Same, distributing queries over OpenMP threads.
MetricsReport evaluate_parallel(const Run& run, const Qrels& qrels, int threads = 0);

struct Comparison {
    std::string metric;
    double mean_a = 0.0;
    double mean_b = 0.0;
    SignTestResult test;
};

/// Sign test per metric between two reports over the same queries.
std::vector<Comparison> compare(const MetricsReport& a, const MetricsReport& b);

struct TemplateSlice {
    std::string label;
    std::size_t queries = 0;
    double mean_delta_p1 = 0.0;
    SignTestResult test;
};

inline constexpr std::string_view kUnlabeledTemplate = "(none)";

/// Mean P@1(a) - P@1(b) per template label over queries in `qrels`.
std::vector<TemplateSlice> template_breakdown(const Run& run_a, const Run& run_b,
                                              const Qrels& qrels,
                                              const std::vector<QuerySpec>& queries);

std::string report_to_json(const MetricsReport& report,
                           const std::vector<Comparison>* comparisons = nullptr,
                           const std::vector<TemplateSlice>* slices = nullptr);
void print_report_table(std::ostream& out, const MetricsReport& report,
                        const std::vector<Comparison>* comparisons = nullptr);
void write_template_csv(std::ostream& out, const std::vector<TemplateSlice>& slices);

}  // namespace orlog
