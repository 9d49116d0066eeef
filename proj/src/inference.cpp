#include "orlog/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <unordered_map>
#include <vector>

namespace orlog {

namespace {

void check_prior(const PredicateId& id, double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidPrior("prior for '" + id + "' outside [0,1]");
    }
}

// ---------------------------------------------------------------------------
// Residual formulas for Shannon expansion. Atoms are dense indices assigned in
// first-occurrence order; constants appear only transiently during
// conditioning and are simplified away.

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    enum class Kind { True, False, Var, Not, And, Or } kind;
    int var = -1;
    std::vector<NodePtr> kids;
    std::vector<int> vars;  // sorted, distinct
    std::string key;
};

const NodePtr& const_node(bool value) {
    static const NodePtr t = std::make_shared<Node>(Node{Node::Kind::True, -1, {}, {}, "T"});
    static const NodePtr f = std::make_shared<Node>(Node{Node::Kind::False, -1, {}, {}, "F"});
    return value ? t : f;
}

bool is_const(const NodePtr& n) {
    return n->kind == Node::Kind::True || n->kind == Node::Kind::False;
}

NodePtr make_var(int v) {
    return std::make_shared<Node>(Node{Node::Kind::Var, v, {}, {v}, std::to_string(v)});
}

NodePtr make_not(NodePtr child) {
    if (is_const(child)) {
        return const_node(child->kind == Node::Kind::False);
    }
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Not;
    n->vars = child->vars;
    n->key = "!" + child->key;
    n->kids.push_back(std::move(child));
    return n;
}

// Builds an And/Or from already-simplified children, absorbing constants and
// flattening nested nodes of the same kind.
NodePtr make_nary(Node::Kind kind, const std::vector<NodePtr>& children) {
    const bool is_and = kind == Node::Kind::And;
    const auto identity = is_and ? Node::Kind::True : Node::Kind::False;
    const auto absorbing = is_and ? Node::Kind::False : Node::Kind::True;

    std::vector<NodePtr> kids;
    for (const auto& c : children) {
        if (c->kind == absorbing) {
            return const_node(!is_and);
        }
        if (c->kind == identity) {
            continue;
        }
        if (c->kind == kind) {
            kids.insert(kids.end(), c->kids.begin(), c->kids.end());
        } else {
            kids.push_back(c);
        }
    }
    if (kids.empty()) {
        return const_node(is_and);
    }
    if (kids.size() == 1) {
        return kids.front();
    }
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->key = is_and ? "&(" : "|(";
    for (const auto& k : kids) {
        n->vars.insert(n->vars.end(), k->vars.begin(), k->vars.end());
        n->key += k->key;
        n->key += ',';
    }
    n->key += ')';
    std::sort(n->vars.begin(), n->vars.end());
    n->vars.erase(std::unique(n->vars.begin(), n->vars.end()), n->vars.end());
    n->kids = std::move(kids);
    return n;
}

NodePtr compile(const Formula& f, const std::unordered_map<std::string, int>& index) {
    switch (f.kind()) {
        case Formula::Kind::Atom:
            return make_var(index.at(f.id()));
        case Formula::Kind::Not:
            return make_not(compile(f.children().front(), index));
        case Formula::Kind::And:
        case Formula::Kind::Or: {
            std::vector<NodePtr> kids;
            for (const auto& c : f.children()) {
                kids.push_back(compile(c, index));
            }
            return make_nary(f.kind() == Formula::Kind::And ? Node::Kind::And : Node::Kind::Or,
                             kids);
        }
    }
    return nullptr;
}

NodePtr condition(const NodePtr& n, int v, bool value) {
    if (!std::binary_search(n->vars.begin(), n->vars.end(), v)) {
        return n;
    }
    switch (n->kind) {
        case Node::Kind::Var:
            return const_node(value);
        case Node::Kind::Not:
            return make_not(condition(n->kids.front(), v, value));
        case Node::Kind::And:
        case Node::Kind::Or: {
            std::vector<NodePtr> kids;
            kids.reserve(n->kids.size());
            for (const auto& k : n->kids) {
                kids.push_back(condition(k, v, value));
            }
            return make_nary(n->kind, kids);
        }
        default:
            return n;
    }
}

bool share_var(const std::vector<int>& a, const std::vector<int>& b) {
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i == *j) {
            return true;
        }
        *i < *j ? ++i : ++j;
    }
    return false;
}

// Groups children of an And/Or into connected components of the
// "shares an atom" relation. Components keep first-child order.
std::vector<std::vector<NodePtr>> independent_groups(const std::vector<NodePtr>& kids) {
    std::vector<std::size_t> parent(kids.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            x = parent[x] = parent[parent[x]];
        }
        return x;
    };
    for (std::size_t i = 0; i < kids.size(); ++i) {
        for (std::size_t j = i + 1; j < kids.size(); ++j) {
            if (share_var(kids[i]->vars, kids[j]->vars)) {
                parent[find(j)] = find(i);
            }
        }
    }
    std::vector<std::vector<NodePtr>> groups;
    std::vector<std::size_t> root_to_group(kids.size(), kids.size());
    for (std::size_t i = 0; i < kids.size(); ++i) {
        const auto r = find(i);
        if (root_to_group[r] == kids.size()) {
            root_to_group[r] = groups.size();
            groups.emplace_back();
        }
        groups[root_to_group[r]].push_back(kids[i]);
    }
    return groups;
}

class ModelCounter {
  public:
    explicit ModelCounter(std::vector<double> weights) : weights_(std::move(weights)) {}

    double count(const NodePtr& n) {
        switch (n->kind) {
            case Node::Kind::True: return 1.0;
            case Node::Kind::False: return 0.0;
            case Node::Kind::Var: return weights_[static_cast<std::size_t>(n->var)];
            case Node::Kind::Not: return 1.0 - count(n->kids.front());
            default: break;
        }
        if (auto it = memo_.find(n->key); it != memo_.end()) {
            return it->second;
        }
        const double result = count_nary(n);
        memo_.emplace(n->key, result);
        return result;
    }

  private:
    double count_nary(const NodePtr& n) {
        const bool is_and = n->kind == Node::Kind::And;
        const auto groups = independent_groups(n->kids);
        if (groups.size() > 1) {
            // Independent parts: P(all) = prod P(g), P(any) = 1 - prod (1 - P(g)).
            double acc = 1.0;
            for (const auto& g : groups) {
                const double p = count(g.size() == 1 ? g.front() : make_nary(n->kind, g));
                acc *= is_and ? p : 1.0 - p;
            }
            return is_and ? acc : 1.0 - acc;
        }
        return shannon(n);
    }

    double shannon(const NodePtr& n) {
        const int v = n->vars.front();
        const double hi = count(condition(n, v, true));
        const double lo = count(condition(n, v, false));
        if (hi == lo) {
            return hi;
        }
        const double p = weights_[static_cast<std::size_t>(v)];
        return p * hi + (1.0 - p) * lo;
    }

    std::vector<double> weights_;
    std::unordered_map<std::string, double> memo_;
};

// ---------------------------------------------------------------------------
// Enumeration oracle.

struct IndexedFormula {
    Formula::Kind kind;
    std::size_t atom = 0;
    std::vector<IndexedFormula> kids;
};

IndexedFormula index_formula(const Formula& f,
                             const std::unordered_map<std::string, std::size_t>& index) {
    IndexedFormula out{f.kind(), 0, {}};
    if (f.is_atom()) {
        out.atom = index.at(f.id());
    }
    for (const auto& c : f.children()) {
        out.kids.push_back(index_formula(c, index));
    }
    return out;
}

bool eval_indexed(const IndexedFormula& f, std::uint32_t world) {
    switch (f.kind) {
        case Formula::Kind::Atom:
            return (world >> f.atom) & 1U;
        case Formula::Kind::Not:
            return !eval_indexed(f.kids.front(), world);
        case Formula::Kind::And:
            for (const auto& k : f.kids) {
                if (!eval_indexed(k, world)) return false;
            }
            return true;
        case Formula::Kind::Or:
            for (const auto& k : f.kids) {
                if (eval_indexed(k, world)) return true;
            }
            return false;
    }
    return false;
}

}  // namespace

bool eval_assignment(const Formula& f, const Assignment& world) {
    switch (f.kind()) {
        case Formula::Kind::Atom: {
            const auto it = world.find(f.id());
            if (it == world.end()) {
                throw MissingAssignment(f.id());
            }
            return it->second;
        }
        case Formula::Kind::Not:
            return !eval_assignment(f.children().front(), world);
        case Formula::Kind::And: {
            // Evaluate every child so a missing atom is always reported.
            bool all = true;
            for (const auto& c : f.children()) {
                all = eval_assignment(c, world) && all;
            }
            return all;
        }
        case Formula::Kind::Or: {
            bool any = false;
            for (const auto& c : f.children()) {
                any = eval_assignment(c, world) || any;
            }
            return any;
        }
    }
    return false;
}

double posterior(const Formula& f, const PriorAssignment& priors) {
    const auto atoms = atoms_of(f);
    std::unordered_map<std::string, int> index;
    std::vector<double> weights;
    weights.reserve(atoms.size());
    for (const auto& a : atoms) {
        const auto it = priors.find(a);
        if (it == priors.end()) {
            throw MissingPrior(a);
        }
        check_prior(a, it->second);
        index.emplace(a, static_cast<int>(weights.size()));
        weights.push_back(it->second);
    }
    ModelCounter counter(std::move(weights));
    return counter.count(compile(f, index));
}

double posterior_bruteforce(const Formula& f, const PriorAssignment& priors) {
    const auto atoms = atoms_of(f);
    if (atoms.size() > TooManyAtoms::kMaxAtoms) {
        throw TooManyAtoms(atoms.size());
    }
    std::unordered_map<std::string, std::size_t> index;
    std::vector<double> p(atoms.size());
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const auto it = priors.find(atoms[i]);
        if (it == priors.end()) {
            throw MissingPrior(atoms[i]);
        }
        check_prior(atoms[i], it->second);
        p[i] = it->second;
        index.emplace(atoms[i], i);
    }
    const IndexedFormula compiled = index_formula(f, index);
    const std::uint32_t worlds = 1U << atoms.size();
    double total = 0.0;
    for (std::uint32_t w = 0; w < worlds; ++w) {
        if (!eval_indexed(compiled, w)) {
            continue;
        }
        double weight = 1.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            weight *= ((w >> i) & 1U) ? p[i] : 1.0 - p[i];
        }
        total += weight;
    }
    return total;
}

}  // namespace orlog
