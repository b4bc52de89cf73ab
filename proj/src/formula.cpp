#include "eau/formula.hpp"

#include <cctype>
#include <charconv>
#include <optional>
#include <utility>

#include "eau/error.hpp"
#include "eau/mdp_io.hpp"

namespace eau {

bool compare(double value, Comparison cmp, double threshold) noexcept {
    switch (cmp) {
        case Comparison::GreaterEqual: return value >= threshold;
        case Comparison::Greater: return value > threshold;
        case Comparison::LessEqual: return value <= threshold;
        case Comparison::Less: return value < threshold;
    }
    return false;
}

std::string_view comparison_symbol(Comparison cmp) noexcept {
    switch (cmp) {
        case Comparison::GreaterEqual: return ">=";
        case Comparison::Greater: return ">";
        case Comparison::LessEqual: return "<=";
        case Comparison::Less: return "<";
    }
    return "?";
}

Comparison negate(Comparison cmp) noexcept {
    switch (cmp) {
        case Comparison::GreaterEqual: return Comparison::Less;
        case Comparison::Greater: return Comparison::LessEqual;
        case Comparison::LessEqual: return Comparison::Greater;
        case Comparison::Less: return Comparison::GreaterEqual;
    }
    return cmp;
}

bool is_lower_bound(Comparison cmp) noexcept {
    return cmp == Comparison::GreaterEqual || cmp == Comparison::Greater;
}

struct StateNode {
    explicit StateNode(StateFormula::Kind k) : kind(k) {}
    StateFormula::Kind kind;
    std::string name;
    std::optional<StateFormula> lhs, rhs;
    Comparison cmp = Comparison::GreaterEqual;
    double threshold = 0.0;
    std::optional<PathFormula> path;
};

struct PathNode {
    explicit PathNode(PathFormula::Kind k) : kind(k) {}
    PathFormula::Kind kind;
    std::optional<StateFormula> lhs, rhs;
};

namespace {

[[noreturn]] void wrong_kind(const char* what) {
    throw InvalidArgument(std::string("formula node has no ") + what);
}

}  // namespace

// ---------------------------------------------------------------------------
// StateFormula

StateFormula StateFormula::truth() { return StateFormula(std::make_shared<StateNode>(Kind::True)); }
StateFormula StateFormula::falsity() { return StateFormula(std::make_shared<StateNode>(Kind::False)); }

StateFormula StateFormula::atom(std::string name) {
    if (name.empty())
        throw InvalidArgument("empty atom name");
    auto node = std::make_shared<StateNode>(Kind::Atom);
    node->name = std::move(name);
    return StateFormula(std::move(node));
}

StateFormula StateFormula::negation(StateFormula f) {
    auto node = std::make_shared<StateNode>(Kind::Not);
    node->lhs = std::move(f);
    return StateFormula(std::move(node));
}

namespace {

std::shared_ptr<StateNode> binary(StateFormula::Kind kind, StateFormula lhs, StateFormula rhs) {
    auto node = std::make_shared<StateNode>(kind);
    node->lhs = std::move(lhs);
    node->rhs = std::move(rhs);
    return node;
}

}  // namespace

StateFormula StateFormula::conjunction(StateFormula lhs, StateFormula rhs) {
    return StateFormula(binary(Kind::And, std::move(lhs), std::move(rhs)));
}
StateFormula StateFormula::disjunction(StateFormula lhs, StateFormula rhs) {
    return StateFormula(binary(Kind::Or, std::move(lhs), std::move(rhs)));
}
StateFormula StateFormula::implication(StateFormula lhs, StateFormula rhs) {
    return StateFormula(binary(Kind::Implies, std::move(lhs), std::move(rhs)));
}

StateFormula StateFormula::probability(Comparison cmp, double threshold, PathFormula path) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw InvalidArgument("probability threshold outside [0,1]");
    auto node = std::make_shared<StateNode>(Kind::Prob);
    node->cmp = cmp;
    node->threshold = threshold;
    node->path = std::move(path);
    return StateFormula(std::move(node));
}

StateFormula::Kind StateFormula::kind() const noexcept { return node_->kind; }

const std::string& StateFormula::name() const {
    if (node_->kind != Kind::Atom)
        wrong_kind("atom name");
    return node_->name;
}

const StateFormula& StateFormula::operand() const {
    if (node_->kind != Kind::Not)
        wrong_kind("operand");
    return *node_->lhs;
}

const StateFormula& StateFormula::lhs() const {
    if (!is_binary())
        wrong_kind("left operand");
    return *node_->lhs;
}

const StateFormula& StateFormula::rhs() const {
    if (!is_binary())
        wrong_kind("right operand");
    return *node_->rhs;
}

Comparison StateFormula::comparison() const {
    if (node_->kind != Kind::Prob)
        wrong_kind("comparison");
    return node_->cmp;
}

double StateFormula::threshold() const {
    if (node_->kind != Kind::Prob)
        wrong_kind("threshold");
    return node_->threshold;
}

const PathFormula& StateFormula::path() const {
    if (node_->kind != Kind::Prob)
        wrong_kind("path");
    return *node_->path;
}

bool StateFormula::is_binary() const noexcept {
    return node_->kind == Kind::And || node_->kind == Kind::Or || node_->kind == Kind::Implies;
}

bool StateFormula::is_probability_free() const {
    switch (node_->kind) {
        case Kind::True:
        case Kind::False:
        case Kind::Atom: return true;
        case Kind::Not: return node_->lhs->is_probability_free();
        case Kind::Prob: return false;
        default: return node_->lhs->is_probability_free() && node_->rhs->is_probability_free();
    }
}

bool operator==(const StateFormula& a, const StateFormula& b) {
    if (a.node_ == b.node_)
        return true;
    const StateNode& x = *a.node_;
    const StateNode& y = *b.node_;
    if (x.kind != y.kind)
        return false;
    switch (x.kind) {
        case StateFormula::Kind::True:
        case StateFormula::Kind::False: return true;
        case StateFormula::Kind::Atom: return x.name == y.name;
        case StateFormula::Kind::Not: return *x.lhs == *y.lhs;
        case StateFormula::Kind::Prob: return x.cmp == y.cmp && x.threshold == y.threshold && *x.path == *y.path;
        default: return *x.lhs == *y.lhs && *x.rhs == *y.rhs;
    }
}

// ---------------------------------------------------------------------------
// PathFormula

namespace {

std::shared_ptr<PathNode> unary_path(PathFormula::Kind kind, StateFormula f) {
    auto node = std::make_shared<PathNode>(kind);
    node->rhs = std::move(f);
    return node;
}

}  // namespace

PathFormula PathFormula::next(StateFormula f) { return PathFormula(unary_path(Kind::Next, std::move(f))); }
PathFormula PathFormula::eventually(StateFormula f) { return PathFormula(unary_path(Kind::Eventually, std::move(f))); }
PathFormula PathFormula::globally(StateFormula f) { return PathFormula(unary_path(Kind::Globally, std::move(f))); }

PathFormula PathFormula::until(StateFormula lhs, StateFormula rhs) {
    auto node = std::make_shared<PathNode>(Kind::Until);
    node->lhs = std::move(lhs);
    node->rhs = std::move(rhs);
    return PathFormula(std::move(node));
}

PathFormula::Kind PathFormula::kind() const noexcept { return node_->kind; }

const StateFormula& PathFormula::operand() const {
    if (node_->kind == Kind::Until)
        wrong_kind("unary operand");
    return *node_->rhs;
}

const StateFormula& PathFormula::lhs() const {
    if (node_->kind != Kind::Until)
        wrong_kind("until operands");
    return *node_->lhs;
}

const StateFormula& PathFormula::rhs() const {
    if (node_->kind != Kind::Until)
        wrong_kind("until operands");
    return *node_->rhs;
}

bool PathFormula::is_probability_free() const {
    if (node_->kind == Kind::Until && !node_->lhs->is_probability_free())
        return false;
    return node_->rhs->is_probability_free();
}

bool operator==(const PathFormula& a, const PathFormula& b) {
    if (a.node_ == b.node_)
        return true;
    if (a.node_->kind != b.node_->kind)
        return false;
    if (a.node_->kind == PathFormula::Kind::Until && !(*a.node_->lhs == *b.node_->lhs))
        return false;
    return *a.node_->rhs == *b.node_->rhs;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

enum class Tok { Ident, Number, Bang, Amp, Bar, Arrow, LParen, RParen, LBracket, RBracket, Cmp, End };

struct Token {
    Tok type;
    std::string_view text;
    std::size_t offset;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    Token next() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        const std::size_t start = pos_;
        if (pos_ == text_.size())
            return {Tok::End, {}, start};
        const char c = text_[pos_];
        auto single = [&](Tok t) {
            ++pos_;
            return Token{t, text_.substr(start, 1), start};
        };
        switch (c) {
            case '!': return single(Tok::Bang);
            case '&': return single(Tok::Amp);
            case '|': return single(Tok::Bar);
            case '(': return single(Tok::LParen);
            case ')': return single(Tok::RParen);
            case '[': return single(Tok::LBracket);
            case ']': return single(Tok::RBracket);
            case '-':
                if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
                    pos_ += 2;
                    return {Tok::Arrow, text_.substr(start, 2), start};
                }
                break;
            case '>':
            case '<':
                pos_ += (pos_ + 1 < text_.size() && text_[pos_ + 1] == '=') ? 2 : 1;
                return {Tok::Cmp, text_.substr(start, pos_ - start), start};
            default: break;
        }
        if (ident_start(c)) {
            while (pos_ < text_.size() && ident_char(text_[pos_]))
                ++pos_;
            return {Tok::Ident, text_.substr(start, pos_ - start), start};
        }
        if (digit(c) || c == '.') {
            while (pos_ < text_.size() && (digit(text_[pos_]) || text_[pos_] == '.'))
                ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
                std::size_t p = pos_ + 1;
                if (p < text_.size() && (text_[p] == '+' || text_[p] == '-'))
                    ++p;
                if (p < text_.size() && digit(text_[p])) {
                    while (p < text_.size() && digit(text_[p]))
                        ++p;
                    pos_ = p;
                }
            }
            return {Tok::Number, text_.substr(start, pos_ - start), start};
        }
        throw ParseError("unexpected character '" + std::string(1, c) + "' at offset " + std::to_string(start),
                         start);
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

bool is_reserved(std::string_view s) {
    return s == "true" || s == "false" || s == "P" || s == "X" || s == "F" || s == "G" || s == "U";
}

StateFormula negate_state(StateFormula f) {
    if (f.kind() == StateFormula::Kind::Not)
        return f.operand();
    return StateFormula::negation(std::move(f));
}

class Parser {
public:
    explicit Parser(std::string_view text) : lexer_(text) { advance(); }

    StateFormula parse() {
        StateFormula f = implies();
        if (cur_.type != Tok::End)
            fail("unexpected '" + std::string(cur_.text) + "'");
        return f;
    }

private:
    void advance() { cur_ = lexer_.next(); }

    [[noreturn]] void fail(const std::string& msg) const { fail_at(msg, cur_.offset); }
    [[noreturn]] static void fail_at(const std::string& msg, std::size_t offset) {
        throw ParseError(msg + " at offset " + std::to_string(offset), offset);
    }

    void expect(Tok t, const char* what) {
        if (cur_.type != t)
            fail(std::string("expected ") + what);
        advance();
    }

    bool at_keyword(std::string_view kw) const { return cur_.type == Tok::Ident && cur_.text == kw; }

    StateFormula implies() {
        StateFormula lhs = disjunction();
        if (cur_.type == Tok::Arrow) {
            advance();
            return StateFormula::implication(std::move(lhs), implies());
        }
        return lhs;
    }

    StateFormula disjunction() {
        StateFormula f = conjunction();
        while (cur_.type == Tok::Bar) {
            advance();
            f = StateFormula::disjunction(std::move(f), conjunction());
        }
        return f;
    }

    StateFormula conjunction() {
        StateFormula f = unary();
        while (cur_.type == Tok::Amp) {
            advance();
            f = StateFormula::conjunction(std::move(f), unary());
        }
        return f;
    }

    StateFormula unary() {
        if (cur_.type == Tok::Bang) {
            advance();
            return StateFormula::negation(unary());
        }
        return primary();
    }

    StateFormula primary() {
        switch (cur_.type) {
            case Tok::LParen: {
                advance();
                StateFormula f = implies();
                expect(Tok::RParen, "')'");
                return f;
            }
            case Tok::Ident: break;
            case Tok::End: fail("unexpected end of formula");
            default: fail("unexpected '" + std::string(cur_.text) + "'");
        }
        const Token tok = cur_;
        advance();
        if (tok.text == "true")
            return StateFormula::truth();
        if (tok.text == "false")
            return StateFormula::falsity();
        if (tok.text == "P")
            return probability();
        if (is_reserved(tok.text))
            fail_at("reserved word '" + std::string(tok.text) + "' used as atom", tok.offset);
        return StateFormula::atom(std::string(tok.text));
    }

    StateFormula probability() {
        if (cur_.type != Tok::Cmp)
            fail_at("expected comparison after 'P'", cur_.offset);
        Comparison cmp = cur_.text == ">="   ? Comparison::GreaterEqual
                         : cur_.text == ">"  ? Comparison::Greater
                         : cur_.text == "<=" ? Comparison::LessEqual
                                             : Comparison::Less;
        advance();
        if (cur_.type != Tok::Number)
            fail("expected probability threshold");
        double rho = 0;
        if (!parse_real(cur_.text, rho))
            fail("malformed number '" + std::string(cur_.text) + "'");
        if (!(rho >= 0.0 && rho <= 1.0))
            fail("threshold " + std::string(cur_.text) + " outside [0,1]");
        advance();
        expect(Tok::LBracket, "'['");
        PathFormula path = path_formula();
        expect(Tok::RBracket, "']'");
        return StateFormula::probability(cmp, rho, std::move(path));
    }

    PathFormula path_formula() {
        if (cur_.type == Tok::Bang) {
            const std::size_t bang = cur_.offset;
            std::size_t bangs = 0;
            while (cur_.type == Tok::Bang) {
                ++bangs;
                advance();
            }
            if (!(at_keyword("X") || at_keyword("F") || at_keyword("G"))) {
                // `!a U b`: the negations belong to the left state operand.
                StateFormula lhs = unary();
                for (std::size_t i = 0; i < bangs; ++i)
                    lhs = StateFormula::negation(std::move(lhs));
                return until_tail(finish_state(std::move(lhs)));
            }
            PathFormula p = path_formula();
            if (bangs % 2 == 0)
                return p;
            switch (p.kind()) {
                case PathFormula::Kind::Next: return PathFormula::next(negate_state(p.operand()));
                case PathFormula::Kind::Eventually: return PathFormula::globally(negate_state(p.operand()));
                case PathFormula::Kind::Globally: return PathFormula::eventually(negate_state(p.operand()));
                case PathFormula::Kind::Until: fail_at("negated until is not supported", bang);
            }
        }
        if (at_keyword("X")) {
            advance();
            return PathFormula::next(implies());
        }
        if (at_keyword("F")) {
            advance();
            return PathFormula::eventually(implies());
        }
        if (at_keyword("G")) {
            advance();
            return PathFormula::globally(implies());
        }
        return until_tail(implies());
    }

    // Continues a state formula whose leading unary part is already parsed.
    StateFormula finish_state(StateFormula first) {
        StateFormula conj = std::move(first);
        while (cur_.type == Tok::Amp) {
            advance();
            conj = StateFormula::conjunction(std::move(conj), unary());
        }
        StateFormula disj = std::move(conj);
        while (cur_.type == Tok::Bar) {
            advance();
            disj = StateFormula::disjunction(std::move(disj), conjunction());
        }
        if (cur_.type == Tok::Arrow) {
            advance();
            return StateFormula::implication(std::move(disj), implies());
        }
        return disj;
    }

    PathFormula until_tail(StateFormula lhs) {
        if (!at_keyword("U"))
            fail("expected 'U' or a path operator");
        advance();
        return PathFormula::until(std::move(lhs), implies());
    }

    Lexer lexer_;
    Token cur_{Tok::End, {}, 0};
};

// ---------------------------------------------------------------------------
// Formatter

void format_into(std::string& out, const StateFormula& f);

void format_child(std::string& out, const StateFormula& f) {
    if (f.is_binary()) {
        out += '(';
        format_into(out, f);
        out += ')';
    } else {
        format_into(out, f);
    }
}

void format_path_into(std::string& out, const PathFormula& p) {
    switch (p.kind()) {
        case PathFormula::Kind::Next: out += "X "; break;
        case PathFormula::Kind::Eventually: out += "F "; break;
        case PathFormula::Kind::Globally: out += "G "; break;
        case PathFormula::Kind::Until:
            format_child(out, p.lhs());
            out += " U ";
            format_child(out, p.rhs());
            return;
    }
    format_child(out, p.operand());
}

void format_into(std::string& out, const StateFormula& f) {
    using K = StateFormula::Kind;
    switch (f.kind()) {
        case K::True: out += "true"; return;
        case K::False: out += "false"; return;
        case K::Atom: out += f.name(); return;
        case K::Not:
            out += '!';
            format_child(out, f.operand());
            return;
        case K::And:
        case K::Or:
        case K::Implies:
            format_child(out, f.lhs());
            out += f.kind() == K::And ? " & " : f.kind() == K::Or ? " | " : " -> ";
            format_child(out, f.rhs());
            return;
        case K::Prob:
            out += 'P';
            out += comparison_symbol(f.comparison());
            out += format_real(f.threshold());
            out += " [ ";
            format_path_into(out, f.path());
            out += " ]";
            return;
    }
}

PathFormula nnf_path(const PathFormula& p);

StateFormula nnf(const StateFormula& f, bool negated) {
    using K = StateFormula::Kind;
    switch (f.kind()) {
        case K::True: return negated ? StateFormula::falsity() : f;
        case K::False: return negated ? StateFormula::truth() : f;
        case K::Atom: return negated ? StateFormula::negation(f) : f;
        case K::Not: return nnf(f.operand(), !negated);
        case K::And:
            return negated ? StateFormula::disjunction(nnf(f.lhs(), true), nnf(f.rhs(), true))
                           : StateFormula::conjunction(nnf(f.lhs(), false), nnf(f.rhs(), false));
        case K::Or:
            return negated ? StateFormula::conjunction(nnf(f.lhs(), true), nnf(f.rhs(), true))
                           : StateFormula::disjunction(nnf(f.lhs(), false), nnf(f.rhs(), false));
        case K::Implies:
            return negated ? StateFormula::conjunction(nnf(f.lhs(), false), nnf(f.rhs(), true))
                           : StateFormula::disjunction(nnf(f.lhs(), true), nnf(f.rhs(), false));
        case K::Prob:
            return StateFormula::probability(negated ? negate(f.comparison()) : f.comparison(), f.threshold(),
                                             nnf_path(f.path()));
    }
    return f;
}

PathFormula nnf_path(const PathFormula& p) {
    switch (p.kind()) {
        case PathFormula::Kind::Next: return PathFormula::next(nnf(p.operand(), false));
        case PathFormula::Kind::Eventually: return PathFormula::eventually(nnf(p.operand(), false));
        case PathFormula::Kind::Globally: return PathFormula::globally(nnf(p.operand(), false));
        case PathFormula::Kind::Until: return PathFormula::until(nnf(p.lhs(), false), nnf(p.rhs(), false));
    }
    return p;
}

}  // namespace

StateFormula parse_formula(std::string_view text) { return Parser(text).parse(); }

std::string format_formula(const StateFormula& f) {
    std::string out;
    format_into(out, f);
    return out;
}

std::string format_path(const PathFormula& p) {
    std::string out;
    format_path_into(out, p);
    return out;
}

StateFormula negation_normal_form(const StateFormula& f) { return nnf(f, false); }

}  // namespace eau
