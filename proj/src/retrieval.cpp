#include "orlog/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <locale>

#include <json.hpp>
#include <omp.h>

#include "orlog/trec.hpp"

namespace orlog {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Tokenizer

namespace {

const std::ctype<wchar_t>& unicode_ctype() {
    static const std::locale loc = [] {
        for (const char* name : {"C.UTF-8", "C.utf8", "en_US.UTF-8"}) {
            try {
                return std::locale(name);
            } catch (const std::runtime_error&) {
            }
        }
        return std::locale::classic();
    }();
    return std::use_facet<std::ctype<wchar_t>>(loc);
}

// Decodes one UTF-8 sequence at `pos`; invalid bytes decode to U+FFFD and
// consume a single byte.
char32_t next_code_point(std::string_view s, std::size_t& pos) {
    const auto lead = static_cast<unsigned char>(s[pos]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
        ++pos;
        return lead;
    } else if ((lead & 0xE0) == 0xC0) {
        len = 2;
        cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
        len = 3;
        cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
        len = 4;
        cp = lead & 0x07;
    } else {
        ++pos;
        return 0xFFFD;
    }
    if (pos + len > s.size()) {
        ++pos;
        return 0xFFFD;
    }
    for (std::size_t i = 1; i < len; ++i) {
        const auto cont = static_cast<unsigned char>(s[pos + i]);
        if ((cont & 0xC0) != 0x80) {
            ++pos;
            return 0xFFFD;
        }
        cp = (cp << 6) | (cont & 0x3F);
    }
    pos += len;
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const std::set<std::string>* stopwords) {
    const auto& ct = unicode_ctype();
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            if (stopwords == nullptr || !stopwords->contains(current)) {
                tokens.push_back(std::move(current));
            }
            current.clear();
        }
    };
    std::size_t pos = 0;
    while (pos < text.size()) {
        const char32_t cp = next_code_point(text, pos);
        const auto wc = static_cast<wchar_t>(cp);
        if (cp != 0xFFFD && ct.is(std::ctype_base::alnum, wc)) {
            append_utf8(current, static_cast<char32_t>(ct.tolower(wc)));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

FieldPolicy parse_field_policy(std::string_view text) {
    if (text == "title_only") return FieldPolicy::TitleOnly;
    if (text == "title_plus_description") return FieldPolicy::TitlePlusDescription;
    throw std::invalid_argument("unknown field policy '" + std::string(text) + "'");
}

std::string_view to_string(FieldPolicy policy) {
    return policy == FieldPolicy::TitleOnly ? "title_only" : "title_plus_description";
}

// ---------------------------------------------------------------------------
// Index

InvertedIndex InvertedIndex::build(const std::vector<Entity>& corpus, FieldPolicy policy,
                                   std::set<std::string> stopwords) {
    if (corpus.empty()) {
        throw std::invalid_argument("cannot index an empty corpus");
    }
    InvertedIndex index;
    index.policy_ = policy;
    index.stopwords_ = std::move(stopwords);
    index.ids_.reserve(corpus.size());
    index.doc_lengths_.reserve(corpus.size());
    std::uint64_t total_len = 0;
    for (const auto& entity : corpus) {
        const auto doc = static_cast<std::uint32_t>(index.ids_.size());
        if (!index.ordinal_.emplace(entity.id, doc).second) {
            throw DuplicateEntityId(entity.id);
        }
        index.ids_.push_back(entity.id);

        auto terms = tokenize(entity.title, &index.stopwords_);
        if (policy == FieldPolicy::TitlePlusDescription) {
            auto body = tokenize(entity.description, &index.stopwords_);
            terms.insert(terms.end(), body.begin(), body.end());
        }
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(terms.size()));
        total_len += terms.size();

        std::map<std::string, std::uint32_t> tf;
        for (auto& t : terms) {
            ++tf[std::move(t)];
        }
        for (auto& [term, count] : tf) {
            // Documents arrive in ordinal order, so postings stay sorted.
            index.postings_[term].push_back(Posting{doc, count});
        }
    }
    index.avg_doc_len_ = static_cast<double>(total_len) / static_cast<double>(corpus.size());
    return index;
}

std::optional<std::size_t> InvertedIndex::ordinal_of(std::string_view entity_id) const {
    const auto it = ordinal_.find(std::string(entity_id));
    if (it == ordinal_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const std::vector<Posting>& InvertedIndex::postings(std::string_view term) const {
    static const std::vector<Posting> empty;
    const auto it = postings_.find(term);
    return it == postings_.end() ? empty : it->second;
}

bool operator==(const InvertedIndex& a, const InvertedIndex& b) {
    return a.ids_ == b.ids_ && a.doc_lengths_ == b.doc_lengths_ &&
           a.avg_doc_len_ == b.avg_doc_len_ && a.postings_ == b.postings_ &&
           a.policy_ == b.policy_ && a.stopwords_ == b.stopwords_;
}

void InvertedIndex::save(const std::filesystem::path& path) const {
    json postings = json::object();
    for (const auto& [term, list] : postings_) {
        json flat = json::array();
        for (const auto& p : list) {
            flat.push_back(p.doc);
            flat.push_back(p.tf);
        }
        postings[term] = std::move(flat);
    }
    const json doc = {
        {"magic", kIndexMagic},
        {"version", kIndexFormatVersion},
        {"field_policy", to_string(policy_)},
        {"stopwords", stopwords_},
        {"ids", ids_},
        {"doc_lengths", doc_lengths_},
        {"postings", std::move(postings)},
    };
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write index snapshot " + path.string());
    }
    out << doc.dump() << '\n';
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open index snapshot " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw std::runtime_error("index snapshot is not JSON: " + std::string(e.what()));
    }
    if (!doc.is_object() || doc.value("magic", "") != kIndexMagic) {
        throw std::runtime_error(path.string() + " is not an index snapshot");
    }
    if (doc.value("version", -1) != kIndexFormatVersion) {
        throw std::runtime_error("unsupported index snapshot version");
    }
    try {
        InvertedIndex index;
        index.policy_ = parse_field_policy(doc.at("field_policy").get<std::string>());
        index.stopwords_ = doc.at("stopwords").get<std::set<std::string>>();
        index.ids_ = doc.at("ids").get<std::vector<std::string>>();
        index.doc_lengths_ = doc.at("doc_lengths").get<std::vector<std::uint32_t>>();
        if (index.ids_.empty() || index.ids_.size() != index.doc_lengths_.size()) {
            throw std::runtime_error("ids/doc_lengths mismatch");
        }
        std::uint64_t total = 0;
        for (std::size_t i = 0; i < index.ids_.size(); ++i) {
            if (!index.ordinal_.emplace(index.ids_[i], i).second) {
                throw DuplicateEntityId(index.ids_[i]);
            }
            total += index.doc_lengths_[i];
        }
        index.avg_doc_len_ = static_cast<double>(total) / static_cast<double>(index.ids_.size());
        for (const auto& [term, flat] : doc.at("postings").items()) {
            const auto values = flat.get<std::vector<std::uint32_t>>();
            if (values.size() % 2 != 0) {
                throw std::runtime_error("odd posting array for '" + term + "'");
            }
            auto& list = index.postings_[term];
            for (std::size_t i = 0; i < values.size(); i += 2) {
                if (values[i] >= index.ids_.size()) {
                    throw std::runtime_error("posting refers to unknown document");
                }
                list.push_back(Posting{values[i], values[i + 1]});
            }
        }
        return index;
    } catch (const json::exception& e) {
        throw std::runtime_error("corrupt index snapshot: " + std::string(e.what()));
    }
}

// ---------------------------------------------------------------------------
// Scoring

double bm25_idf(std::size_t doc_count, std::size_t doc_freq) {
    const auto n = static_cast<double>(doc_count);
    const auto df = static_cast<double>(doc_freq);
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

namespace {

double term_contribution(const InvertedIndex& index, double idf, std::uint32_t tf,
                         std::size_t doc, const Bm25Params& params) {
    const double f = tf;
    const double norm = 1.0 - params.b + params.b * index.doc_length(doc) / index.avg_doc_len();
    return idf * f * (params.k1 + 1.0) / (f + params.k1 * norm);
}

bool better(const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.base_score != b.base_score) {
        return a.base_score > b.base_score;
    }
    return a.entity_id < b.entity_id;
}

}  // namespace

double bm25_score(const InvertedIndex& index, const std::vector<std::string>& query_terms,
                  std::size_t doc, const Bm25Params& params) {
    double score = 0.0;
    for (const auto& term : query_terms) {
        const auto& list = index.postings(term);
        const auto it = std::lower_bound(
            list.begin(), list.end(), doc,
            [](const Posting& p, std::size_t d) { return p.doc < d; });
        if (it == list.end() || it->doc != doc) {
            continue;
        }
        score += term_contribution(index, bm25_idf(index.doc_count(), list.size()), it->tf, doc,
                                   params);
    }
    return score;
}

CandidateList retrieve_topk(const InvertedIndex& index, std::string_view query_text,
                            std::size_t k, const Bm25Params& params) {
    if (k == 0) {
        throw std::invalid_argument("k must be >= 1");
    }
    const auto terms = tokenize(query_text, &index.stopwords());
    if (terms.empty()) {
        throw EmptyQuery();
    }
    // Term-at-a-time accumulation in query-term order, matching bm25_score.
    std::vector<double> acc(index.doc_count(), 0.0);
    std::vector<std::uint32_t> touched;
    std::vector<bool> seen(index.doc_count(), false);
    for (const auto& term : terms) {
        const auto& list = index.postings(term);
        if (list.empty()) {
            continue;
        }
        const double idf = bm25_idf(index.doc_count(), list.size());
        for (const auto& p : list) {
            acc[p.doc] += term_contribution(index, idf, p.tf, p.doc, params);
            if (!seen[p.doc]) {
                seen[p.doc] = true;
                touched.push_back(p.doc);
            }
        }
    }
    CandidateList out;
    out.reserve(touched.size());
    for (const auto doc : touched) {
        out.push_back(ScoredCandidate{index.entity_id(doc), acc[doc], 0});
    }
    const std::size_t keep = std::min(k, out.size());
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(keep), out.end(),
                      better);
    out.resize(keep);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].base_rank = i + 1;
    }
    return out;
}

BatchRetrieval retrieve_batch_serial(const InvertedIndex& index,
                                     const std::vector<QueryText>& queries, std::size_t k,
                                     const Bm25Params& params) {
    BatchRetrieval out;
    for (const auto& q : queries) {
        try {
            out.candidates[q.qid] = retrieve_topk(index, q.text, k, params);
        } catch (const std::exception& e) {
            out.failures[q.qid] = e.what();
        }
    }
    return out;
}

BatchRetrieval retrieve_batch(const InvertedIndex& index, const std::vector<QueryText>& queries,
                              std::size_t k, const Bm25Params& params, int threads) {
    const auto n = static_cast<std::ptrdiff_t>(queries.size());
    std::vector<CandidateList> lists(queries.size());
    std::vector<std::string> errors(queries.size());
    std::vector<char> failed(queries.size(), 0);
    const int nthreads = threads > 0 ? threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        try {
            lists[u] = retrieve_topk(index, queries[u].text, k, params);
        } catch (const std::exception& e) {
            failed[u] = 1;
            errors[u] = e.what();
        }
    }

    BatchRetrieval out;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        if (failed[i]) {
            out.failures[queries[i].qid] = std::move(errors[i]);
        } else {
            out.candidates[queries[i].qid] = std::move(lists[i]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Run import and corpus files

std::map<std::string, CandidateList> import_run(const std::filesystem::path& path, std::size_t k,
                                                const std::set<std::string>* known_ids) {
    if (k == 0) {
        throw std::invalid_argument("k must be >= 1");
    }
    struct Row {
        double score;
        long rank;
        std::size_t order;
        std::string entity;
    };
    std::map<std::string, std::vector<Row>> per_query;
    std::size_t order = 0;
    for (auto& line : read_run(path)) {
        if (known_ids != nullptr && !known_ids->contains(line.entity_id)) {
            throw UnknownEntityId(line.entity_id);
        }
        per_query[line.qid].push_back(Row{line.score, line.rank, order++, line.entity_id});
    }
    std::map<std::string, CandidateList> out;
    for (auto& [qid, rows] : per_query) {
        std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.rank != b.rank) return a.rank < b.rank;
            return a.order < b.order;
        });
        auto& list = out[qid];
        std::set<std::string> kept;
        for (const auto& row : rows) {
            if (list.size() == k) {
                break;
            }
            if (!kept.insert(row.entity).second) {
                continue;  // duplicate entity within a query: keep the best line
            }
            list.push_back(ScoredCandidate{row.entity, row.score, list.size() + 1});
        }
    }
    return out;
}

std::vector<Entity> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open corpus " + path.string());
    }
    std::vector<Entity> corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const json obj = json::parse(line);
            Entity e{obj.at("id").get<std::string>(), obj.at("title").get<std::string>(),
                     obj.value("text", std::string{})};
            if (e.id.empty() || e.title.empty()) {
                throw std::runtime_error("empty id or title");
            }
            corpus.push_back(std::move(e));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " +
                                     e.what());
        }
    }
    return corpus;
}

void save_corpus(const std::filesystem::path& path, const std::vector<Entity>& corpus) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write corpus " + path.string());
    }
    for (const auto& e : corpus) {
        out << json{{"id", e.id}, {"title", e.title}, {"text", e.description}}.dump() << '\n';
    }
}

}  // namespace orlog
