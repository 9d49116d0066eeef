#include "orlog/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/binomial.hpp>
#include <json.hpp>
#include <omp.h>

namespace orlog {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Files

Qrels read_qrels(std::istream& in) {
    Qrels qrels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::istringstream fields(line);
        std::string qid;
        std::string iter;
        std::string entity;
        std::string rel_text;
        std::string extra;
        if (!(fields >> qid >> iter >> entity >> rel_text) || (fields >> extra)) {
            throw std::runtime_error("qrels line " + std::to_string(lineno) +
                                     ": expected 4 columns");
        }
        long rel = 0;
        try {
            std::size_t used = 0;
            rel = std::stol(rel_text, &used);
            if (used != rel_text.size()) {
                throw std::invalid_argument(rel_text);
            }
        } catch (const std::exception&) {
            throw std::runtime_error("qrels line " + std::to_string(lineno) +
                                     ": relevance must be an integer");
        }
        if (rel > 0) {
            qrels[qid].insert(entity);
        }
    }
    return qrels;
}

Qrels read_qrels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open qrels " + path.string());
    }
    return read_qrels(in);
}

void write_qrels(std::ostream& out, const Qrels& qrels) {
    for (const auto& [qid, rel] : qrels) {
        for (const auto& e : rel) {
            out << qid << " 0 " << e << " 1\n";
        }
    }
}

Run run_from_lines(const std::vector<RunLine>& lines) {
    std::map<std::string, std::vector<const RunLine*>> grouped;
    for (const auto& l : lines) {
        grouped[l.qid].push_back(&l);
    }
    Run run;
    for (auto& [qid, rows] : grouped) {
        std::stable_sort(rows.begin(), rows.end(), [](const RunLine* a, const RunLine* b) {
            if (a->score != b->score) return a->score > b->score;
            return a->rank < b->rank;
        });
        auto& ranking = run[qid];
        for (const auto* r : rows) {
            ranking.push_back(r->entity_id);
        }
    }
    return run;
}

Run read_run_rankings(const std::filesystem::path& path) {
    return run_from_lines(read_run(path));
}

// ---------------------------------------------------------------------------
// Per-query metrics

namespace {

std::size_t hits_at_k(const Ranking& ranking, const RelevantSet& relevant, std::size_t k) {
    std::size_t hits = 0;
    const std::size_t depth = std::min(k, ranking.size());
    for (std::size_t i = 0; i < depth; ++i) {
        hits += relevant.contains(ranking[i]) ? 1 : 0;
    }
    return hits;
}

}  // namespace

double precision_at_k(const Ranking& ranking, const RelevantSet& relevant, std::size_t k) {
    if (k == 0) {
        throw std::invalid_argument("k must be >= 1");
    }
    return static_cast<double>(hits_at_k(ranking, relevant, k)) / static_cast<double>(k);
}

double recall_at_k(const Ranking& ranking, const RelevantSet& relevant, std::size_t k) {
    if (k == 0) {
        throw std::invalid_argument("k must be >= 1");
    }
    if (relevant.empty()) {
        return 0.0;
    }
    return static_cast<double>(hits_at_k(ranking, relevant, k)) /
           static_cast<double>(relevant.size());
}

double f1_at_k(const Ranking& ranking, const RelevantSet& relevant, std::size_t k) {
    const double p = precision_at_k(ranking, relevant, k);
    const double r = recall_at_k(ranking, relevant, k);
    if (p + r == 0.0) {
        return 0.0;
    }
    return 2.0 * p * r / (p + r);
}

double ndcg_at_k(const Ranking& ranking, const RelevantSet& relevant, std::size_t k) {
    if (k == 0) {
        throw std::invalid_argument("k must be >= 1");
    }
    double dcg = 0.0;
    const std::size_t depth = std::min(k, ranking.size());
    for (std::size_t i = 0; i < depth; ++i) {
        if (relevant.contains(ranking[i])) {
            dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
        }
    }
    double idcg = 0.0;
    const std::size_t ideal = std::min(k, relevant.size());
    for (std::size_t i = 0; i < ideal; ++i) {
        idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    return idcg == 0.0 ? 0.0 : dcg / idcg;
}

double reciprocal_rank(const Ranking& ranking, const RelevantSet& relevant) {
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (relevant.contains(ranking[i])) {
            return 1.0 / static_cast<double>(i + 1);
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Sign test

namespace {

// P(X >= m) for X ~ Binomial(n, 1/2).
double upper_tail_half(std::size_t n, std::size_t m) {
    if (m == 0) {
        return 1.0;
    }
    if (n <= 62) {
        // Exact integer binomial coefficients.
        std::uint64_t coeff = 1;  // C(n, 0)
        std::uint64_t tail = 0;
        for (std::size_t i = 0; i <= n; ++i) {
            if (i >= m) {
                tail += coeff;
            }
            // C(n, i+1) = C(n, i) * (n - i) / (i + 1), split to avoid overflow.
            if (i < n) {
                coeff = coeff / (i + 1) * (n - i) + coeff % (i + 1) * (n - i) / (i + 1);
            }
        }
        return std::ldexp(static_cast<double>(tail), -static_cast<int>(n));
    }
    const boost::math::binomial_distribution<double> dist(static_cast<double>(n), 0.5);
    return boost::math::cdf(boost::math::complement(dist, static_cast<double>(m - 1)));
}

}  // namespace

SignTestResult sign_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("sign test needs paired samples of equal length");
    }
    SignTestResult r;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) {
            ++r.wins;
        } else if (a[i] < b[i]) {
            ++r.losses;
        } else {
            ++r.ties;
        }
    }
    const std::size_t n = r.wins + r.losses;
    if (n == 0) {
        r.all_ties = true;
        r.p_value = 1.0;
        return r;
    }
    const std::size_t extreme = std::max(r.wins, r.losses);
    r.p_value = std::min(1.0, 2.0 * upper_tail_half(n, extreme));
    return r;
}

// ---------------------------------------------------------------------------
// Reports

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names = {"P@1",    "P@10",    "R@1", "R@10", "F1@1",
                                                   "F1@10", "NDCG@1", "NDCG@10", "MRR"};
    return names;
}

namespace {

std::vector<double> query_metrics(const Ranking& ranking, const RelevantSet& rel) {
    return {precision_at_k(ranking, rel, 1), precision_at_k(ranking, rel, 10),
            recall_at_k(ranking, rel, 1),    recall_at_k(ranking, rel, 10),
            f1_at_k(ranking, rel, 1),        f1_at_k(ranking, rel, 10),
            ndcg_at_k(ranking, rel, 1),      ndcg_at_k(ranking, rel, 10),
            reciprocal_rank(ranking, rel)};
}

double mean_of(const std::vector<double>& values) {
    if (values.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const double v : values) {
        sum += v;
    }
    return sum / static_cast<double>(values.size());
}

MetricsReport collect(const Qrels& qrels, const std::vector<std::vector<double>>& rows) {
    MetricsReport report;
    const auto& names = metric_names();
    for (const auto& [qid, rel] : qrels) {
        report.qids.push_back(qid);
    }
    for (std::size_t m = 0; m < names.size(); ++m) {
        auto& column = report.per_query[names[m]];
        column.reserve(rows.size());
        for (const auto& row : rows) {
            column.push_back(row[m]);
        }
        report.mean[names[m]] = mean_of(column);
    }
    return report;
}

const Ranking& ranking_for(const Run& run, const std::string& qid) {
    static const Ranking empty;
    const auto it = run.find(qid);
    return it == run.end() ? empty : it->second;
}

}  // namespace

MetricsReport evaluate(const Run& run, const Qrels& qrels) {
    std::vector<std::vector<double>> rows;
    rows.reserve(qrels.size());
    for (const auto& [qid, rel] : qrels) {
        rows.push_back(query_metrics(ranking_for(run, qid), rel));
    }
    return collect(qrels, rows);
}

MetricsReport evaluate_parallel(const Run& run, const Qrels& qrels, int threads) {
    std::vector<const std::pair<const std::string, RelevantSet>*> items;
    items.reserve(qrels.size());
    for (const auto& item : qrels) {
        items.push_back(&item);
    }
    std::vector<std::vector<double>> rows(items.size());
    const auto n = static_cast<std::ptrdiff_t>(items.size());
    const int nthreads = threads > 0 ? threads : omp_get_max_threads();

#pragma omp parallel for num_threads(nthreads)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        rows[u] = query_metrics(ranking_for(run, items[u]->first), items[u]->second);
    }
    return collect(qrels, rows);
}

std::vector<Comparison> compare(const MetricsReport& a, const MetricsReport& b) {
    if (a.qids != b.qids) {
        throw std::invalid_argument("reports cover different query sets");
    }
    std::vector<Comparison> out;
    for (const auto& name : metric_names()) {
        out.push_back(Comparison{name, a.mean.at(name), b.mean.at(name),
                                 sign_test(a.per_query.at(name), b.per_query.at(name))});
    }
    return out;
}

std::vector<TemplateSlice> template_breakdown(const Run& run_a, const Run& run_b,
                                              const Qrels& qrels,
                                              const std::vector<QuerySpec>& queries) {
    std::map<std::string, std::string> label_of;
    for (const auto& q : queries) {
        label_of[q.qid] = q.template_label.value_or(std::string(kUnlabeledTemplate));
    }
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& [qid, rel] : qrels) {
        const auto it = label_of.find(qid);
        const std::string label =
            it == label_of.end() ? std::string(kUnlabeledTemplate) : it->second;
        auto& [pa, pb] = groups[label];
        pa.push_back(precision_at_k(ranking_for(run_a, qid), rel, 1));
        pb.push_back(precision_at_k(ranking_for(run_b, qid), rel, 1));
    }
    std::vector<TemplateSlice> out;
    for (const auto& [label, values] : groups) {
        const auto& [pa, pb] = values;
        double delta = 0.0;
        for (std::size_t i = 0; i < pa.size(); ++i) {
            delta += pa[i] - pb[i];
        }
        out.push_back(TemplateSlice{label, pa.size(), delta / static_cast<double>(pa.size()),
                                    sign_test(pa, pb)});
    }
    return out;
}

std::string report_to_json(const MetricsReport& report, const std::vector<Comparison>* comparisons,
                           const std::vector<TemplateSlice>* slices) {
    json doc;
    doc["queries"] = report.qids.size();
    doc["mean"] = report.mean;
    json per_query = json::object();
    for (std::size_t i = 0; i < report.qids.size(); ++i) {
        json row = json::object();
        for (const auto& name : metric_names()) {
            row[name] = report.per_query.at(name)[i];
        }
        per_query[report.qids[i]] = std::move(row);
    }
    doc["per_query"] = std::move(per_query);
    if (comparisons != nullptr) {
        json cmp = json::array();
        for (const auto& c : *comparisons) {
            cmp.push_back({{"metric", c.metric},
                           {"run", c.mean_a},
                           {"baseline", c.mean_b},
                           {"wins", c.test.wins},
                           {"losses", c.test.losses},
                           {"ties", c.test.ties},
                           {"p_value", c.test.p_value},
                           {"all_ties", c.test.all_ties}});
        }
        doc["sign_tests"] = std::move(cmp);
        doc["sign_test_ties"] = "discarded";
    }
    if (slices != nullptr) {
        json arr = json::array();
        for (const auto& s : *slices) {
            arr.push_back({{"template", s.label},
                           {"queries", s.queries},
                           {"mean_delta_p1", s.mean_delta_p1},
                           {"p_value", s.test.p_value}});
        }
        doc["templates"] = std::move(arr);
    }
    return doc.dump(2);
}

void print_report_table(std::ostream& out, const MetricsReport& report,
                        const std::vector<Comparison>* comparisons) {
    const auto flags = out.flags();
    out << "queries: " << report.qids.size() << '\n';
    out << std::left << std::setw(9) << "metric" << std::right << std::setw(10) << "run";
    if (comparisons != nullptr) {
        out << std::setw(10) << "baseline" << std::setw(6) << "win" << std::setw(6) << "loss"
            << std::setw(6) << "tie" << std::setw(12) << "p";
    }
    out << '\n' << std::fixed;
    for (std::size_t m = 0; m < metric_names().size(); ++m) {
        const auto& name = metric_names()[m];
        out << std::left << std::setw(9) << name << std::right << std::setw(10)
            << std::setprecision(4) << report.mean.at(name);
        if (comparisons != nullptr) {
            const auto& c = (*comparisons)[m];
            out << std::setw(10) << c.mean_b << std::setw(6) << c.test.wins << std::setw(6)
                << c.test.losses << std::setw(6) << c.test.ties << std::setw(12)
                << std::setprecision(6) << c.test.p_value;
        }
        out << '\n';
    }
    out.flags(flags);
}

void write_template_csv(std::ostream& out, const std::vector<TemplateSlice>& slices) {
    out << "template,queries,mean_delta_p1,p_value\n";
    for (const auto& s : slices) {
        out << '"' << s.label << "\"," << s.queries << ',' << std::setprecision(17)
            << s.mean_delta_p1 << ',' << s.test.p_value << '\n';
    }
}

}  // namespace orlog
