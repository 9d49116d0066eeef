#include "orlog/synth.hpp"

#include <algorithm>
#include <cctype>
#include <string_view>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

#include "orlog/inference.hpp"
#include "orlog/retrieval.hpp"
#include "orlog/pipeline.hpp"

namespace orlog {

namespace {

const std::vector<std::string>& vocabulary() {
    static const std::vector<std::string> words = {
        "comedy",   "mystery",   "romance",  "horror",    "fantasy",  "western",
        "satire",   "thriller",  "biography", "poetry",   "french",   "german",
        "japanese", "italian",   "russian",  "spanish",   "medieval", "victorian",
        "modern",   "maritime",  "military", "musical",   "religious", "rural",
        "urban",    "gothic",    "epic",     "dystopian", "pastoral", "nautical",
        "colonial", "surrealist"};
    return words;
}

const std::vector<std::string>& fillers() {
    static const std::vector<std::string> lines = {
        "It received mixed reviews on release.",
        "The work was later adapted several times.",
        "Critics praised its structure and pacing.",
        "It remains widely read and studied.",
        "An expanded edition appeared decades later.",
        ""};
    return lines;
}

const char* const kSyllables[] = {"ka", "lo", "mi", "ren", "tar", "vel", "do", "sa", "quin",
                                  "bra", "ti", "mor", "ael", "fen", "gu", "shi", "pol", "zer"};

// Portable draws on top of the standard engine; distribution objects are
// implementation-defined and would break byte-identical fixtures.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

    std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }

  private:
    std::mt19937_64 engine_;
};

std::string capitalized_word(Rng& rng, std::size_t syllables) {
    std::string w;
    for (std::size_t i = 0; i < syllables; ++i) {
        w += kSyllables[rng.below(std::size(kSyllables))];
    }
    w.front() = static_cast<char>(w.front() - 'a' + 'A');
    return w;
}

std::string query_text(const std::string& label, const std::vector<std::string>& w) {
    if (label == "A∧B") return w[0] + " " + w[1] + " works";
    if (label == "A∧B∧C") return w[0] + " " + w[1] + " " + w[2] + " works";
    if (label == "A∧¬B") return w[0] + " works that are not " + w[1];
    if (label == "A∧B∧¬C") return w[0] + " " + w[1] + " works that are not " + w[2];
    if (label == "A∨B") return "works that are " + w[0] + " or " + w[1];
    return "works that are " + w[0] + ", " + w[1] + " or " + w[2];
}

// Replaces placeholder atoms A, B, C by attribute predicate ids.
Formula substitute(const Formula& f, const std::map<std::string, std::string>& names) {
    switch (f.kind()) {
        case Formula::Kind::Atom:
            return Formula::atom(names.at(f.id()));
        case Formula::Kind::Not:
            return Formula::negate(substitute(f.children().front(), names));
        default: {
            std::vector<Formula> kids;
            for (const auto& c : f.children()) {
                kids.push_back(substitute(c, names));
            }
            return f.kind() == Formula::Kind::And ? Formula::conj(std::move(kids))
                                                  : Formula::disj(std::move(kids));
        }
    }
}

// Stand-in for the translator's output length: one token per identifier,
// operator and parenthesis of the rendered form.
long form_token_count(const std::string& form) {
    long n = 0;
    bool in_word = false;
    for (const char c : form) {
        const bool word_char = std::isalnum(static_cast<unsigned char>(c)) || c == '_';
        if (word_char && !in_word) ++n;
        if (!word_char && c != ' ') ++n;
        in_word = word_char;
    }
    return n;
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& synth_templates() {
    static const std::vector<std::pair<std::string, std::string>> templates = {
        {"A∧B", "A & B"},   {"A∧B∧C", "A & B & C"}, {"A∧¬B", "A & !B"},
        {"A∧B∧¬C", "A & B & !C"}, {"A∨B", "A | B"},     {"A∨B∨C", "A | B | C"}};
    return templates;
}

std::map<std::pair<std::string, PredicateId>, double> synth_priors(const SynthData& data,
                                                                   const SynthConfig& config,
                                                                   double noise) {
    if (!(noise >= 0.0 && noise <= 0.5)) {
        throw std::invalid_argument("noise must be in [0, 0.5]");
    }
    Rng rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
    std::map<std::pair<std::string, PredicateId>, double> priors;
    // Iterate in corpus-then-vocabulary order so draws line up across noise levels.
    for (const auto& e : data.corpus) {
        for (std::size_t a = 0; a < config.attributes; ++a) {
            const auto key = std::make_pair(e.id, vocabulary()[a]);
            const double shift = 2.0 * noise * rng.uniform();
            const bool truth = data.gold.at(key);
            priors[key] = std::clamp(truth ? 1.0 - shift : shift, 0.0, 1.0);
        }
    }
    return priors;
}

SynthData generate_synth(const SynthConfig& config) {
    if (config.attributes < 3 || config.attributes > vocabulary().size()) {
        throw std::invalid_argument("attributes must be in [3, " +
                                    std::to_string(vocabulary().size()) + "]");
    }
    if (config.entities == 0 || config.queries_per_template == 0) {
        throw std::invalid_argument("entities and queries_per_template must be >= 1");
    }
    if (config.min_attributes_per_entity == 0 ||
        config.min_attributes_per_entity > config.max_attributes_per_entity ||
        config.max_attributes_per_entity > config.attributes) {
        throw std::invalid_argument("invalid attributes-per-entity range");
    }

    Rng rng(config.seed);
    SynthData data;
    const auto& vocab = vocabulary();

    std::vector<std::set<std::size_t>> attrs_of(config.entities);
    std::set<std::string> titles;
    for (std::size_t i = 0; i < config.entities; ++i) {
        std::string title;
        do {
            title = capitalized_word(rng, rng.between(2, 3)) + " " +
                    capitalized_word(rng, rng.between(1, 3));
        } while (!titles.insert(title).second);

        const std::size_t count =
            rng.between(config.min_attributes_per_entity, config.max_attributes_per_entity);
        auto& attrs = attrs_of[i];
        while (attrs.size() < count) {
            attrs.insert(rng.below(config.attributes));
        }
        std::vector<std::string> words;
        for (const auto a : attrs) {
            words.push_back(vocab[a]);
        }
        std::string desc = title + (std::string_view("aeiou").find(words.front().front()) !=
                                            std::string_view::npos
                                        ? " is an"
                                        : " is a");
        for (std::size_t w = 0; w < words.size(); ++w) {
            desc += w == 0 ? " " : (w + 1 == words.size() ? " and " : ", ");
            desc += words[w];
        }
        desc += " work.";
        const auto& filler = fillers()[rng.below(fillers().size())];
        if (!filler.empty()) {
            desc += " " + filler;
        }
        char id[32];
        std::snprintf(id, sizeof id, "E%04zu", i + 1);
        data.corpus.push_back(Entity{id, title, desc});
    }

    for (std::size_t i = 0; i < config.entities; ++i) {
        for (std::size_t a = 0; a < config.attributes; ++a) {
            data.gold[{data.corpus[i].id, vocab[a]}] = attrs_of[i].contains(a);
        }
    }

    std::size_t qnum = 0;
    for (const auto& [label, form_text] : synth_templates()) {
        const Formula shape = parse_formula(form_text);
        const auto slots = atoms_of(shape);
        for (std::size_t n = 0; n < config.queries_per_template; ++n) {
            bool done = false;
            for (int attempt = 0; attempt < 1000 && !done; ++attempt) {
                std::vector<std::size_t> picked;
                while (picked.size() < slots.size()) {
                    const auto a = rng.below(config.attributes);
                    if (std::find(picked.begin(), picked.end(), a) == picked.end()) {
                        picked.push_back(a);
                    }
                }
                std::map<std::string, std::string> names;
                std::vector<std::string> words;
                QuerySpec q;
                for (std::size_t s = 0; s < slots.size(); ++s) {
                    names[slots[s]] = vocab[picked[s]];
                    words.push_back(vocab[picked[s]]);
                    const auto& word = vocab[picked[s]];
                    const bool vowel = std::string_view("aeiou").find(word.front()) != std::string_view::npos;
                    q.predicates.push_back(
                        PredicateTemplate{word, std::string("{e} is ") + (vowel ? "an " : "a ") + word + " work"});
                }
                q.form = substitute(shape, names);

                RelevantSet relevant;
                for (std::size_t i = 0; i < config.entities; ++i) {
                    Assignment world;
                    for (const auto& w : words) {
                        world[w] = data.gold.at({data.corpus[i].id, w});
                    }
                    if (eval_assignment(q.form, world)) {
                        relevant.insert(data.corpus[i].id);
                    }
                }
                if (relevant.empty()) {
                    continue;
                }
                char qid[32];
                std::snprintf(qid, sizeof qid, "q%03zu", ++qnum);
                q.qid = qid;
                q.raw = query_text(label, words);
                q.template_label = label;
                q.parse_token_cost = form_token_count(format_formula(q.form));
                validate_query(q);
                data.qrels[q.qid] = std::move(relevant);
                data.queries.push_back(std::move(q));
                done = true;
            }
            if (!done) {
                throw std::runtime_error("could not draw a satisfiable " + label + " query");
            }
        }
    }

    data.priors = synth_priors(data, config, config.noise);
    return data;
}

void write_synth(const std::filesystem::path& dir, const SynthData& data) {
    std::filesystem::create_directories(dir);
    save_corpus(dir / "corpus.jsonl", data.corpus);
    save_queries(dir / "queries.jsonl", data.queries);
    {
        std::ofstream out(dir / "qrels.txt");
        if (!out) {
            throw std::runtime_error("cannot write qrels in " + dir.string());
        }
        write_qrels(out, data.qrels);
    }
    std::ofstream out(dir / "mock_oracle.tsv");
    if (!out) {
        throw std::runtime_error("cannot write mock table in " + dir.string());
    }
    for (const auto& [key, p] : data.priors) {
        char prob[32];
        std::snprintf(prob, sizeof prob, "%.17g", p);
        out << key.first << '\t' << key.second << '\t' << prob << '\n';
    }
    out << "*\t*\t0.5\n";
}

}  // namespace orlog
