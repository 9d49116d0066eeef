#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace orlog {

/// Identifier of an atomic predicate, e.g. "A" or "P1".
using PredicateId = std::string;

/// True if `id` matches `[A-Za-z][A-Za-z0-9_]*`.
bool is_valid_predicate_id(std::string_view id);

/// Boolean formula over atomic predicates.
///
/// And/Or nodes always hold at least two children and never directly nest a
/// child of the same kind, so structural equality is canonical.
class Formula {
  public:
    enum class Kind { Atom, Not, And, Or };

    static Formula atom(PredicateId id);
    static Formula negate(Formula operand);
    static Formula conj(std::vector<Formula> operands);
    static Formula disj(std::vector<Formula> operands);

    Kind kind() const { return kind_; }
    bool is_atom() const { return kind_ == Kind::Atom; }

    /// Only meaningful for atoms.
    const PredicateId& id() const { return id_; }
    const std::vector<Formula>& children() const { return children_; }

    friend bool operator==(const Formula&, const Formula&) = default;

  private:
    Formula(Kind kind, PredicateId id, std::vector<Formula> children)
        : kind_(kind), id_(std::move(id)), children_(std::move(children)) {}

    static Formula nary(Kind kind, std::vector<Formula> operands);

    Kind kind_;
    PredicateId id_;
    std::vector<Formula> children_;
};

class SyntaxError : public std::runtime_error {
  public:
    SyntaxError(const std::string& what, std::size_t offset);
    std::size_t offset() const { return offset_; }

  private:
    std::size_t offset_;
};

class EmptyFormula : public std::runtime_error {
  public:
    EmptyFormula() : std::runtime_error("empty formula") {}
};

/// Parses the DSL:
///
///     expr   := term ('|' term)*
///     term   := factor ('&' factor)*
///     factor := '!' factor | '(' expr ')' | IDENT
///
/// Whitespace is insignificant. Same-operator chains are flattened.
Formula parse_formula(std::string_view text);

/// Canonical DSL rendering; `parse_formula(format_formula(f)) == f`.
std::string format_formula(const Formula& f);

/// Distinct atoms in first-occurrence (left-to-right) order.
std::vector<PredicateId> atoms_of(const Formula& f);

/// Negation normal form: negations only directly above atoms.
Formula to_nnf(const Formula& f);

/// Number of nodes on the longest root-to-leaf path (an atom has depth 1).
std::size_t depth_of(const Formula& f);

/// Natural-language statement about an entity, with exactly one `{e}` slot.
struct PredicateTemplate {
    PredicateId id;
    std::string text;

    /// Substitutes the entity title verbatim into the placeholder.
    std::string instantiate(std::string_view entity_title) const;
};

inline constexpr std::string_view kEntityPlaceholder = "{e}";

/// A query together with its decomposition into predicates and a logical form.
struct QuerySpec {
    std::string qid;
    std::string raw;
    std::vector<PredicateTemplate> predicates;
    Formula form = Formula::atom("unset");
    std::optional<std::string> template_label;
    long parse_token_cost = 0;

    const PredicateTemplate* find_predicate(std::string_view id) const;
};

class InvalidQuery : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Throws InvalidQuery unless predicate ids are valid and unique, every
/// template has exactly one placeholder, and the declared predicates are
/// exactly the atoms of the form.
void validate_query(const QuerySpec& q);

}  // namespace orlog
