#include "orlog/logic_form.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_set>

namespace orlog {

bool is_valid_predicate_id(std::string_view id) {
    if (id.empty() || !std::isalpha(static_cast<unsigned char>(id.front()))) {
        return false;
    }
    return std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
}

Formula Formula::atom(PredicateId id) {
    if (!is_valid_predicate_id(id)) {
        throw std::invalid_argument("invalid predicate id '" + id + "'");
    }
    return Formula(Kind::Atom, std::move(id), {});
}

Formula Formula::negate(Formula operand) {
    std::vector<Formula> kids;
    kids.push_back(std::move(operand));
    return Formula(Kind::Not, {}, std::move(kids));
}

Formula Formula::nary(Kind kind, std::vector<Formula> operands) {
    std::vector<Formula> flat;
    flat.reserve(operands.size());
    for (auto& op : operands) {
        if (op.kind_ == kind) {
            for (auto& grandchild : op.children_) {
                flat.push_back(std::move(grandchild));
            }
        } else {
            flat.push_back(std::move(op));
        }
    }
    if (flat.size() < 2) {
        throw std::invalid_argument("And/Or need at least two operands");
    }
    return Formula(kind, {}, std::move(flat));
}

Formula Formula::conj(std::vector<Formula> operands) {
    return nary(Kind::And, std::move(operands));
}

Formula Formula::disj(std::vector<Formula> operands) {
    return nary(Kind::Or, std::move(operands));
}

SyntaxError::SyntaxError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

namespace {

class Parser {
  public:
    explicit Parser(std::string_view text) : text_(text) {}

    Formula parse() {
        skip_ws();
        if (pos_ == text_.size()) {
            throw EmptyFormula();
        }
        Formula f = expr();
        skip_ws();
        if (pos_ != text_.size()) {
            if (text_[pos_] == ')') {
                throw SyntaxError("unbalanced ')'", pos_);
            }
            throw SyntaxError(std::string("unexpected '") + text_[pos_] + "'", pos_);
        }
        return f;
    }

  private:
    Formula expr() {
        std::vector<Formula> terms;
        terms.push_back(term());
        while (accept('|')) {
            terms.push_back(term());
        }
        return terms.size() == 1 ? std::move(terms.front()) : Formula::disj(std::move(terms));
    }

    Formula term() {
        std::vector<Formula> factors;
        factors.push_back(factor());
        while (accept('&')) {
            factors.push_back(factor());
        }
        return factors.size() == 1 ? std::move(factors.front())
                                   : Formula::conj(std::move(factors));
    }

    Formula factor() {
        skip_ws();
        if (pos_ == text_.size()) {
            throw SyntaxError("expected operand, found end of input", pos_);
        }
        const char c = text_[pos_];
        if (c == '!') {
            ++pos_;
            return Formula::negate(factor());
        }
        if (c == '(') {
            const std::size_t open = pos_++;
            skip_ws();
            if (pos_ < text_.size() && text_[pos_] == ')') {
                throw SyntaxError("empty parentheses", pos_);
            }
            Formula inner = expr();
            skip_ws();
            if (pos_ == text_.size() || text_[pos_] != ')') {
                throw SyntaxError("unclosed '('", open);
            }
            ++pos_;
            return inner;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
            return Formula::atom(std::string(text_.substr(start, pos_ - start)));
        }
        throw SyntaxError(std::string("expected operand, found '") + c + "'", pos_);
    }

    bool accept(char op) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == op) {
            ++pos_;
            return true;
        }
        return false;
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

// Binding strength used when deciding on parentheses.
int precedence(Formula::Kind k) {
    switch (k) {
        case Formula::Kind::Or: return 1;
        case Formula::Kind::And: return 2;
        default: return 3;
    }
}

void format_into(const Formula& f, std::string& out) {
    switch (f.kind()) {
        case Formula::Kind::Atom:
            out += f.id();
            return;
        case Formula::Kind::Not: {
            const Formula& inner = f.children().front();
            out += '!';
            if (precedence(inner.kind()) < 3) {
                out += '(';
                format_into(inner, out);
                out += ')';
            } else {
                format_into(inner, out);
            }
            return;
        }
        case Formula::Kind::And:
        case Formula::Kind::Or: {
            const char* sep = f.kind() == Formula::Kind::And ? " & " : " | ";
            bool first = true;
            for (const auto& child : f.children()) {
                if (!first) {
                    out += sep;
                }
                first = false;
                if (precedence(child.kind()) <= precedence(f.kind())) {
                    out += '(';
                    format_into(child, out);
                    out += ')';
                } else {
                    format_into(child, out);
                }
            }
            return;
        }
    }
}

void collect_atoms(const Formula& f, std::vector<PredicateId>& out,
                   std::unordered_set<std::string>& seen) {
    if (f.is_atom()) {
        if (seen.insert(f.id()).second) {
            out.push_back(f.id());
        }
        return;
    }
    for (const auto& child : f.children()) {
        collect_atoms(child, out, seen);
    }
}

Formula nnf(const Formula& f, bool negated) {
    switch (f.kind()) {
        case Formula::Kind::Atom:
            return negated ? Formula::negate(f) : f;
        case Formula::Kind::Not:
            return nnf(f.children().front(), !negated);
        case Formula::Kind::And:
        case Formula::Kind::Or: {
            std::vector<Formula> kids;
            kids.reserve(f.children().size());
            for (const auto& child : f.children()) {
                kids.push_back(nnf(child, negated));
            }
            const bool is_and = (f.kind() == Formula::Kind::And) != negated;
            return is_and ? Formula::conj(std::move(kids)) : Formula::disj(std::move(kids));
        }
    }
    return f;
}

}  // namespace

Formula parse_formula(std::string_view text) {
    return Parser(text).parse();
}

std::string format_formula(const Formula& f) {
    std::string out;
    format_into(f, out);
    return out;
}

std::vector<PredicateId> atoms_of(const Formula& f) {
    std::vector<PredicateId> out;
    std::unordered_set<std::string> seen;
    collect_atoms(f, out, seen);
    return out;
}

Formula to_nnf(const Formula& f) {
    return nnf(f, false);
}

std::size_t depth_of(const Formula& f) {
    std::size_t deepest = 0;
    for (const auto& child : f.children()) {
        deepest = std::max(deepest, depth_of(child));
    }
    return deepest + 1;
}

std::string PredicateTemplate::instantiate(std::string_view entity_title) const {
    std::string out = text;
    const auto at = out.find(kEntityPlaceholder);
    if (at != std::string::npos) {
        out.replace(at, kEntityPlaceholder.size(), entity_title);
    }
    return out;
}

const PredicateTemplate* QuerySpec::find_predicate(std::string_view id) const {
    for (const auto& p : predicates) {
        if (p.id == id) {
            return &p;
        }
    }
    return nullptr;
}

void validate_query(const QuerySpec& q) {
    std::set<std::string> declared;
    for (const auto& p : q.predicates) {
        if (!is_valid_predicate_id(p.id)) {
            throw InvalidQuery(q.qid + ": invalid predicate id '" + p.id + "'");
        }
        if (!declared.insert(p.id).second) {
            throw InvalidQuery(q.qid + ": duplicate predicate id '" + p.id + "'");
        }
        const auto first = p.text.find(kEntityPlaceholder);
        if (first == std::string::npos ||
            p.text.find(kEntityPlaceholder, first + 1) != std::string::npos) {
            throw InvalidQuery(q.qid + ": predicate '" + p.id +
                               "' must contain exactly one {e} placeholder");
        }
    }
    const auto atoms = atoms_of(q.form);
    for (const auto& a : atoms) {
        if (!declared.contains(a)) {
            throw InvalidQuery(q.qid + ": form uses undeclared predicate '" + a + "'");
        }
    }
    if (atoms.size() != declared.size()) {
        throw InvalidQuery(q.qid + ": declared predicates not all used in form");
    }
}

}  // namespace orlog
