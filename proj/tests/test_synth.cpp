#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <cmath>
#include <sstream>

#include "orlog/inference.hpp"
#include "orlog/synth.hpp"

using namespace orlog;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("synthetic fixture covers every template with enough queries") {
    const auto data = generate_synth(SynthConfig{});
    CHECK(data.corpus.size() == 240);
    CHECK(data.queries.size() == 72);
    std::map<std::string, int> per_label;
    for (const auto& q : data.queries) {
        REQUIRE(q.template_label.has_value());
        ++per_label[*q.template_label];
    }
    CHECK(per_label.size() == synth_templates().size());
    for (const auto& [label, n] : per_label) {
        CHECK_MESSAGE(n == 12, label);
    }
}

TEST_CASE("qrels agree with the logical form evaluated on gold attributes") {
    const auto data = generate_synth(SynthConfig{.entities = 80, .queries_per_template = 5});
    for (const auto& q : data.queries) {
        const auto& rel = data.qrels.at(q.qid);
        CHECK_FALSE(rel.empty());
        for (const auto& e : data.corpus) {
            Assignment world;
            for (const auto& p : q.predicates) {
                world[p.id] = data.gold.at({e.id, p.id});
            }
            CHECK(eval_assignment(q.form, world) == rel.contains(e.id));
        }
    }
}

TEST_CASE("noise-free priors are exactly the gold labels") {
    const auto data = generate_synth(SynthConfig{.entities = 50, .queries_per_template = 2});
    for (const auto& [key, p] : data.priors) {
        CHECK(p == (data.gold.at(key) ? 1.0 : 0.0));
    }
}

TEST_CASE("noisy priors stay within 2*noise of the gold label") {
    SynthConfig cfg{.entities = 50, .queries_per_template = 2};
    const auto data = generate_synth(cfg);
    for (const double eps : {0.1, 0.25, 0.5}) {
        const auto priors = synth_priors(data, cfg, eps);
        for (const auto& [key, p] : priors) {
            const double target = data.gold.at(key) ? 1.0 : 0.0;
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            CHECK(std::abs(p - target) <= 2.0 * eps);
        }
    }
    CHECK_THROWS_AS(synth_priors(data, cfg, 0.6), std::invalid_argument);
}

TEST_CASE("same seed writes byte-identical files; another seed differs") {
    const auto root = std::filesystem::temp_directory_path() / "orlog_synth_test";
    std::filesystem::remove_all(root);
    SynthConfig cfg{.entities = 60, .queries_per_template = 3, .noise = 0.2, .seed = 7};
    write_synth(root / "a", generate_synth(cfg));
    write_synth(root / "b", generate_synth(cfg));
    cfg.seed = 8;
    write_synth(root / "c", generate_synth(cfg));
    for (const char* f : {"corpus.jsonl", "queries.jsonl", "qrels.txt", "mock_oracle.tsv"}) {
        CHECK_MESSAGE(slurp(root / "a" / f) == slurp(root / "b" / f), f);
        CHECK_FALSE(slurp(root / "a" / f).empty());
    }
    CHECK(slurp(root / "a" / "corpus.jsonl") != slurp(root / "c" / "corpus.jsonl"));
    std::filesystem::remove_all(root);
}

TEST_CASE("invalid generator settings are rejected") {
    CHECK_THROWS_AS(generate_synth(SynthConfig{.attributes = 2}), std::invalid_argument);
    CHECK_THROWS_AS(generate_synth(SynthConfig{.attributes = 99}), std::invalid_argument);
    CHECK_THROWS_AS(generate_synth(SynthConfig{.entities = 0}), std::invalid_argument);
    CHECK_THROWS_AS(generate_synth(SynthConfig{.min_attributes_per_entity = 7}),
                    std::invalid_argument);
}
