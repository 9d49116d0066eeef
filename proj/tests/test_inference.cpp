#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "orlog/inference.hpp"
#include "support/generators.hpp"

using namespace orlog;

namespace {

Formula f(const char* text) { return parse_formula(text); }

}  // namespace

TEST_CASE("posterior: examples") {
    CHECK(posterior(f("A & B"), {{"A", 0.9}, {"B", 0.8}}) == doctest::Approx(0.72).epsilon(1e-15));
    for (double p : {0.0, 0.1, 0.3, 0.5, 0.77, 1.0}) {
        CHECK(posterior(f("A | !A"), {{"A", p}}) == 1.0);
        CHECK(posterior(f("A & !A"), {{"A", p}}) == 0.0);
    }
    CHECK(std::abs(posterior(f("A | B"), {{"A", 0.6}, {"B", 0.5}}) - 0.8) <= 1e-15);
    CHECK(std::abs(posterior(f("A & B & !C"), {{"A", 0.9}, {"B", 0.8}, {"C", 0.3}}) - 0.504) <=
          1e-15);
}

TEST_CASE("posterior_bruteforce: examples") {
    CHECK(std::abs(posterior_bruteforce(f("A & B"), {{"A", 0.9}, {"B", 0.8}}) - 0.72) <= 1e-12);
    CHECK(posterior_bruteforce(f("A | !A"), {{"A", 0.37}}) == doctest::Approx(1.0));
    CHECK(std::abs(posterior_bruteforce(f("A | B"), {{"A", 0.6}, {"B", 0.5}}) - 0.8) <= 1e-12);
    CHECK(posterior_bruteforce(f("A"), {{"A", 0.25}}) == 0.25);
    CHECK(posterior_bruteforce(f("A | B | C"), {{"A", 0.5}, {"B", 0.5}, {"C", 0.5}}) == 0.875);
}

TEST_CASE("errors: missing priors, bad priors, atom cap") {
    CHECK_THROWS_AS(posterior(f("A & B"), {{"A", 0.5}}), MissingPrior);
    CHECK_THROWS_AS(posterior_bruteforce(f("A & B"), {{"B", 0.5}}), MissingPrior);
    try {
        posterior(f("A & Zed"), {{"A", 0.5}});
    } catch (const MissingPrior& e) {
        CHECK(e.id() == "Zed");
    }
    CHECK_THROWS_AS(posterior(f("A"), {{"A", 1.5}}), InvalidPrior);
    CHECK_THROWS_AS(posterior(f("A"), {{"A", std::nan("")}}), InvalidPrior);

    std::vector<Formula> many;
    PriorAssignment priors;
    for (int i = 0; i < 25; ++i) {
        many.push_back(Formula::atom(testing::atom_name(static_cast<std::size_t>(i))));
        priors[testing::atom_name(static_cast<std::size_t>(i))] = 0.5;
    }
    const Formula wide = Formula::disj(many);
    CHECK_THROWS_AS(posterior_bruteforce(wide, priors), TooManyAtoms);
    // The Shannon engine has no such cap: 1 - 0.5^25.
    CHECK(posterior(wide, priors) == 1.0 - std::ldexp(1.0, -25));
}

TEST_CASE("eval_assignment") {
    CHECK_FALSE(eval_assignment(f("A & B"), {{"A", true}, {"B", false}}));
    CHECK(eval_assignment(f("!A"), {{"A", false}}));
    CHECK(eval_assignment(f("A & (B | C)"), {{"A", true}, {"B", false}, {"C", true}}));
    CHECK_THROWS_AS(eval_assignment(f("A | B"), {{"A", true}}), MissingAssignment);
}

TEST_CASE("property: engine agrees with enumeration on random formulas") {
    testing::Gen g(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const Formula phi = testing::random_formula(g, 5, 12);
        const PriorAssignment w = testing::random_priors(g, phi);
        REQUIRE(std::abs(posterior(phi, w) - posterior_bruteforce(phi, w)) <= 1e-12);
    }
}

TEST_CASE("property: complement law and De Morgan invariance") {
    testing::Gen g(99);
    for (int trial = 0; trial < 300; ++trial) {
        const Formula phi = testing::random_formula(g, 5, 8);
        const PriorAssignment w = testing::random_priors(g, phi);
        const double p = posterior(phi, w);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        CHECK(std::abs(posterior(Formula::negate(phi), w) - (1.0 - p)) <= 1e-12);
        CHECK(std::abs(posterior(to_nnf(phi), w) - p) <= 1e-12);
    }
}

TEST_CASE("property: monotone formulas are non-decreasing in every prior") {
    testing::Gen g(5);
    for (int trial = 0; trial < 200; ++trial) {
        const Formula phi = testing::random_formula(g, 4, 8, /*allow_not=*/false);
        PriorAssignment w = testing::random_priors(g, phi);
        const double base = posterior(phi, w);
        for (const auto& a : atoms_of(phi)) {
            PriorAssignment bumped = w;
            bumped[a] = std::min(1.0, bumped[a] + 0.1);
            CHECK(posterior(phi, bumped) >= base - 1e-15);
        }
    }
}

TEST_CASE("property: degenerate priors reproduce boolean evaluation exactly") {
    testing::Gen g(17);
    for (int trial = 0; trial < 300; ++trial) {
        const Formula phi = testing::random_formula(g, 5, 10);
        PriorAssignment w;
        Assignment world;
        for (const auto& a : atoms_of(phi)) {
            const bool v = g.coin();
            w[a] = v ? 1.0 : 0.0;
            world[a] = v;
        }
        const double p = posterior(phi, w);
        REQUIRE((p == 0.0 || p == 1.0));
        REQUIRE((p == 1.0) == eval_assignment(phi, world));
    }
}

TEST_CASE("property: conjunction of distinct atoms is the product of priors") {
    testing::Gen g(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + g.below(8);
        std::vector<Formula> atoms;
        PriorAssignment w;
        double product = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto name = testing::atom_name(i);
            atoms.push_back(Formula::atom(name));
            w[name] = g.uniform();
            product *= w[name];
        }
        REQUIRE(posterior(Formula::conj(atoms), w) == product);
    }
}

TEST_CASE("shared atoms take one consistent value") {
    // (A | B) & (A | C): A shared. Exact value 1 - (1-a)(1 - b c).
    const double a = 0.3, b = 0.6, c = 0.7;
    const double expected = a + (1 - a) * b * c;
    CHECK(std::abs(posterior(f("(A | B) & (A | C)"), {{"A", a}, {"B", b}, {"C", c}}) - expected) <=
          1e-15);
    // Naive independent evaluation would give (1-(1-a)(1-b)) * (1-(1-a)(1-c)).
    const double naive = (1 - (1 - a) * (1 - b)) * (1 - (1 - a) * (1 - c));
    CHECK(std::abs(expected - naive) > 1e-3);
}
