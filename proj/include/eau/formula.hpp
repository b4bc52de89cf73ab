#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace eau {

enum class Comparison { GreaterEqual, Greater, LessEqual, Less };

/// `value ⋈ threshold`.
bool compare(double value, Comparison cmp, double threshold) noexcept;
std::string_view comparison_symbol(Comparison cmp) noexcept;
/// ≥ ↔ <, > ↔ ≤.
Comparison negate(Comparison cmp) noexcept;
/// True for ≥ and >, i.e. obligations that ask for a high probability.
bool is_lower_bound(Comparison cmp) noexcept;

struct StateNode;
struct PathNode;
class PathFormula;

/**
 * PCTL state formula. Immutable and cheap to copy; children are shared.
 * Accessors for the wrong node kind throw InvalidArgument.
 */
class StateFormula {
public:
    enum class Kind { True, False, Atom, Not, And, Or, Implies, Prob };

    static StateFormula truth();
    static StateFormula falsity();
    static StateFormula atom(std::string name);
    static StateFormula negation(StateFormula f);
    static StateFormula conjunction(StateFormula lhs, StateFormula rhs);
    static StateFormula disjunction(StateFormula lhs, StateFormula rhs);
    static StateFormula implication(StateFormula lhs, StateFormula rhs);
    static StateFormula probability(Comparison cmp, double threshold, PathFormula path);

    Kind kind() const noexcept;
    const std::string& name() const;
    const StateFormula& operand() const;  // Not
    const StateFormula& lhs() const;      // And, Or, Implies
    const StateFormula& rhs() const;
    Comparison comparison() const;  // Prob
    double threshold() const;
    const PathFormula& path() const;

    bool is_binary() const noexcept;
    /// True when no Prob node occurs anywhere in the tree.
    bool is_probability_free() const;

    friend bool operator==(const StateFormula& a, const StateFormula& b);

private:
    explicit StateFormula(std::shared_ptr<const StateNode> node) : node_(std::move(node)) {}
    std::shared_ptr<const StateNode> node_;
};

class PathFormula {
public:
    enum class Kind { Next, Eventually, Globally, Until };

    static PathFormula next(StateFormula f);
    static PathFormula eventually(StateFormula f);
    static PathFormula globally(StateFormula f);
    static PathFormula until(StateFormula lhs, StateFormula rhs);

    Kind kind() const noexcept;
    const StateFormula& operand() const;  // Next, Eventually, Globally
    const StateFormula& lhs() const;      // Until
    const StateFormula& rhs() const;

    /// True when every state subformula is Prob-free.
    bool is_probability_free() const;

    friend bool operator==(const PathFormula& a, const PathFormula& b);

private:
    explicit PathFormula(std::shared_ptr<const PathNode> node) : node_(std::move(node)) {}
    std::shared_ptr<const PathNode> node_;
};

/**
 * Grammar (precedence ! > & > | > ->, `->` right-associative):
 *
 *   phi  := true | false | atom | "!" phi | phi "&" phi | phi "|" phi
 *         | phi "->" phi | "(" phi ")" | "P" cmp number "[" path "]"
 *   path := "X" phi | "F" phi | "G" phi | phi "U" phi | "!" path
 *
 * A negated unary path is rewritten on the spot: `!F a` becomes `G !a`,
 * `!G a` becomes `F !a`, `!X a` becomes `X !a`. Negated until is rejected.
 * `true`, `false`, `P`, `X`, `F`, `G` and `U` are reserved.
 *
 * Throws ParseError with the byte offset of the offending token.
 */
StateFormula parse_formula(std::string_view text);

/// Canonical text; binary children are parenthesized, so parse(format(f)) == f.
std::string format_formula(const StateFormula& f);
std::string format_path(const PathFormula& p);

/// Pushes negations down to atoms; Prob nodes absorb a negation by flipping ⋈.
StateFormula negation_normal_form(const StateFormula& f);

}  // namespace eau
