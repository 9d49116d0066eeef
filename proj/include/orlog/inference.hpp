#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>

#include "orlog/logic_form.hpp"

namespace orlog {

/// Plausibility of each predicate, used as an independent prior weight.
using PriorAssignment = std::map<PredicateId, double>;

/// Truth value of each predicate in one possible world.
using Assignment = std::map<PredicateId, bool>;

class MissingPrior : public std::runtime_error {
  public:
    explicit MissingPrior(PredicateId id)
        : std::runtime_error("missing prior for predicate '" + id + "'"), id_(std::move(id)) {}
    const PredicateId& id() const { return id_; }

  private:
    PredicateId id_;
};

class InvalidPrior : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

class MissingAssignment : public std::runtime_error {
  public:
    explicit MissingAssignment(const PredicateId& id)
        : std::runtime_error("no truth value for predicate '" + id + "'") {}
};

class TooManyAtoms : public std::runtime_error {
  public:
    explicit TooManyAtoms(std::size_t n)
        : std::runtime_error("brute force limited to " + std::to_string(kMaxAtoms) +
                             " atoms, got " + std::to_string(n)) {}
    static constexpr std::size_t kMaxAtoms = 24;
};

bool eval_assignment(const Formula& f, const Assignment& world);

/// Probability that `f` holds when every atom is independently true with its
/// prior: the weighted model count of `f`.
///
/// Exact up to floating-point rounding. Computed by memoized Shannon
/// expansion over atoms in first-occurrence order, splitting And/Or nodes
/// into independent products whenever their children share no atoms.
/// Priors of exactly 0 or 1 are handled without smoothing.
double posterior(const Formula& f, const PriorAssignment& priors);

/// Reference weighted model count by explicit enumeration of all 2^n worlds.
/// Shares no code with `posterior`; intended as a test oracle.
double posterior_bruteforce(const Formula& f, const PriorAssignment& priors);

}  // namespace orlog
