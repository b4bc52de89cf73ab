// Optimal reachability on MDPs: graph precomputation, value iteration from
// below, then exact policy evaluation with strict-improvement policy iteration.

#include <algorithm>
#include <cmath>
#include <limits>

#include "eau/checker.hpp"
#include "eau/error.hpp"

namespace eau {

StateMask propositional_states(const Mdp& mdp, const StateFormula& f) {
    using K = StateFormula::Kind;
    const std::size_t n = mdp.num_states();
    switch (f.kind()) {
        case K::True: return StateMask(n, 1);
        case K::False: return StateMask(n, 0);
        case K::Atom: return mdp.label_mask(f.name());
        case K::Not: {
            StateMask m = propositional_states(mdp, f.operand());
            for (char& c : m)
                c = !c;
            return m;
        }
        case K::And:
        case K::Or:
        case K::Implies: {
            StateMask l = propositional_states(mdp, f.lhs());
            StateMask r = propositional_states(mdp, f.rhs());
            for (StateId s = 0; s < n; ++s)
                l[s] = f.kind() == K::And  ? (l[s] && r[s])
                       : f.kind() == K::Or ? (l[s] || r[s])
                                           : (!l[s] || r[s]);
            return l;
        }
        case K::Prob: break;
    }
    throw UnsupportedError("nested probability operator is not supported in MDP-level checks");
}

namespace {

constexpr double kOptimalSlack = 1e-8;
constexpr double kImprovement = 1e-12;
constexpr std::size_t kMaxPolicyIterations = 1000;

/// Reverse edges of an MDP: for each target, the (source, choice) pairs reaching it.
struct MdpPredecessors {
    std::vector<std::size_t> offsets;
    std::vector<StateId> sources;
    std::vector<std::size_t> choices;

    explicit MdpPredecessors(const Mdp& mdp) {
        const std::size_t n = mdp.num_states();
        offsets.assign(n + 1, 0);
        for (std::size_t c = 0; c < mdp.num_choices(); ++c)
            for (const Transition& t : mdp.choice_transitions(c))
                if (t.probability > 0.0)
                    ++offsets[t.target + 1];
        for (std::size_t i = 0; i < n; ++i)
            offsets[i + 1] += offsets[i];
        sources.resize(offsets[n]);
        choices.resize(offsets[n]);
        std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
        for (StateId s = 0; s < n; ++s)
            for (ActionId a = 0; a < mdp.num_actions(s); ++a) {
                const std::size_t c = mdp.choice(s, a);
                for (const Transition& t : mdp.choice_transitions(c))
                    if (t.probability > 0.0) {
                        const std::size_t k = fill[t.target]++;
                        sources[k] = s;
                        choices[k] = c;
                    }
            }
    }

    std::size_t begin(StateId t) const { return offsets[t]; }
    std::size_t end(StateId t) const { return offsets[t + 1]; }
};

class UntilSolver {
public:
    UntilSolver(const Mdp& mdp, StateMask lhs, StateMask rhs, OptimizationMode mode)
        : mdp_(mdp), pred_(mdp), n_(mdp.num_states()), rhs_(std::move(rhs)), mode_(mode) {
        middle_.assign(n_, 0);
        for (StateId s = 0; s < n_; ++s)
            middle_[s] = lhs[s] && !rhs_[s];
        action_.assign(n_, 0);
    }

    ReachResult solve() {
        if (mode_ == OptimizationMode::Max) {
            no_ = prob0_all();
            yes_ = prob1_exists();
        } else {
            no_ = prob0_exists();
            yes_ = prob1_all();
        }
        std::vector<double> x = iterate_values();
        if (mode_ == OptimizationMode::Max)
            rank_max_actions(x);
        else
            pick_min_actions(x);
        x = improve_policy();

        ReachResult out;
        out.probabilities = std::move(x);
        out.policy = StochasticPolicy(mdp_);
        for (StateId s = 0; s < n_; ++s)
            out.policy.row(s)[action_[s]] = 1.0;
        return out;
    }

private:
    double choice_value(std::size_t c, const std::vector<double>& x) const {
        double acc = 0.0;
        for (const Transition& t : mdp_.choice_transitions(c))
            acc += t.probability * x[t.target];
        return acc;
    }

    /// Pmax = 0: cannot reach rhs through middle states under any choice.
    StateMask prob0_all() const {
        StateMask reach = rhs_;
        std::vector<StateId> stack;
        for (StateId s = 0; s < n_; ++s)
            if (rhs_[s])
                stack.push_back(s);
        while (!stack.empty()) {
            StateId t = stack.back();
            stack.pop_back();
            for (std::size_t k = pred_.begin(t); k < pred_.end(t); ++k) {
                StateId s = pred_.sources[k];
                if (!reach[s] && middle_[s]) {
                    reach[s] = 1;
                    stack.push_back(s);
                }
            }
        }
        for (char& c : reach)
            c = !c;
        return reach;
    }

    /// Pmax = 1, as the greatest fixpoint of "some choice stays inside and
    /// makes progress". Records the progress choice for each member.
    StateMask prob1_exists() {
        StateMask outer(n_, 0);
        for (StateId s = 0; s < n_; ++s)
            outer[s] = !no_[s];
        while (true) {
            StateMask inner = rhs_;
            bool grew = true;
            while (grew) {
                grew = false;
                for (StateId s = 0; s < n_; ++s) {
                    if (inner[s] || !middle_[s] || !outer[s])
                        continue;
                    for (ActionId a = 0; a < mdp_.num_actions(s); ++a) {
                        bool inside = true;
                        bool progress = false;
                        for (const Transition& t : mdp_.transitions(s, a)) {
                            if (t.probability <= 0.0)
                                continue;
                            inside = inside && outer[t.target];
                            progress = progress || inner[t.target];
                        }
                        if (inside && progress) {
                            inner[s] = 1;
                            action_[s] = a;
                            grew = true;
                            break;
                        }
                    }
                }
            }
            if (inner == outer)
                return inner;
            outer = std::move(inner);
        }
    }

    /// Pmin = 0: some choice avoids ever reaching rhs. Complement of the
    /// least set containing rhs and every middle state all of whose choices
    /// hit the set.
    StateMask prob0_exists() {
        StateMask forced = rhs_;
        std::vector<std::size_t> open(n_, 0);
        for (StateId s = 0; s < n_; ++s)
            open[s] = mdp_.num_actions(s);
        std::vector<char> hit(mdp_.num_choices(), 0);
        std::vector<StateId> stack;
        for (StateId s = 0; s < n_; ++s)
            if (rhs_[s])
                stack.push_back(s);
        while (!stack.empty()) {
            StateId t = stack.back();
            stack.pop_back();
            for (std::size_t k = pred_.begin(t); k < pred_.end(t); ++k) {
                const std::size_t c = pred_.choices[k];
                const StateId s = pred_.sources[k];
                if (hit[c])
                    continue;
                hit[c] = 1;
                if (--open[s] == 0 && middle_[s] && !forced[s]) {
                    forced[s] = 1;
                    stack.push_back(s);
                }
            }
        }
        StateMask no(n_, 0);
        for (StateId s = 0; s < n_; ++s) {
            if (forced[s])
                continue;
            no[s] = 1;
            for (ActionId a = 0; a < mdp_.num_actions(s); ++a)
                if (!hit[mdp_.choice(s, a)]) {
                    action_[s] = a;
                    break;
                }
        }
        return no;
    }

    /// Pmin = 1: cannot reach a Pmin = 0 state through middle states.
    StateMask prob1_all() const {
        StateMask reach = no_;
        std::vector<StateId> stack;
        for (StateId s = 0; s < n_; ++s)
            if (no_[s])
                stack.push_back(s);
        while (!stack.empty()) {
            StateId t = stack.back();
            stack.pop_back();
            for (std::size_t k = pred_.begin(t); k < pred_.end(t); ++k) {
                StateId s = pred_.sources[k];
                if (!reach[s] && middle_[s]) {
                    reach[s] = 1;
                    stack.push_back(s);
                }
            }
        }
        for (char& c : reach)
            c = !c;
        return reach;
    }

    bool is_maybe(StateId s) const { return !yes_[s] && !no_[s]; }

    std::vector<double> iterate_values() const {
        std::vector<double> x(n_, 0.0);
        std::vector<StateId> maybe;
        for (StateId s = 0; s < n_; ++s) {
            if (yes_[s])
                x[s] = 1.0;
            else if (!no_[s])
                maybe.push_back(s);
        }
        const bool max = mode_ == OptimizationMode::Max;
        for (std::size_t sweep = 0; sweep < 1'000'000 && !maybe.empty(); ++sweep) {
            double change = 0.0;
            for (StateId s : maybe) {
                double best = max ? 0.0 : 1.0;
                for (ActionId a = 0; a < mdp_.num_actions(s); ++a) {
                    const double v = choice_value(mdp_.choice(s, a), x);
                    best = max ? std::max(best, v) : std::min(best, v);
                }
                change = std::max(change, std::abs(best - x[s]));
                x[s] = best;
            }
            if (change < 1e-10)
                return x;
        }
        if (!maybe.empty())
            throw SolverError("reachability value iteration did not converge");
        return x;
    }

    /// Among near-optimal choices, prefer one that moves closer (in BFS
    /// rank) to the sure-reach region, so the policy cannot idle in a loop.
    void rank_max_actions(const std::vector<double>& x) {
        StateMask ranked = yes_;
        std::vector<StateId> frontier;
        for (StateId s = 0; s < n_; ++s)
            if (yes_[s])
                frontier.push_back(s);
        std::vector<StateId> next;
        while (!frontier.empty()) {
            next.clear();
            for (StateId t : frontier)
                for (std::size_t k = pred_.begin(t); k < pred_.end(t); ++k) {
                    const StateId s = pred_.sources[k];
                    if (ranked[s] || !is_maybe(s))
                        continue;
                    const std::size_t c = pred_.choices[k];
                    if (choice_value(c, x) >= x[s] - kOptimalSlack) {
                        ranked[s] = 1;
                        action_[s] = static_cast<ActionId>(c - mdp_.choice(s, 0));
                        next.push_back(s);
                    }
                }
            std::sort(next.begin(), next.end());
            frontier.swap(next);
        }
        for (StateId s = 0; s < n_; ++s)
            if (is_maybe(s) && !ranked[s])
                action_[s] = best_action(s, x);
    }

    void pick_min_actions(const std::vector<double>& x) {
        for (StateId s = 0; s < n_; ++s)
            if (is_maybe(s))
                action_[s] = best_action(s, x);
    }

    ActionId best_action(StateId s, const std::vector<double>& x) const {
        const bool max = mode_ == OptimizationMode::Max;
        ActionId arg = 0;
        double best = choice_value(mdp_.choice(s, 0), x);
        for (ActionId a = 1; a < mdp_.num_actions(s); ++a) {
            const double v = choice_value(mdp_.choice(s, a), x);
            if (max ? v > best + kImprovement : v < best - kImprovement) {
                best = v;
                arg = a;
            }
        }
        return arg;
    }

    std::vector<double> evaluate() const {
        std::vector<std::int64_t> index(n_, -1);
        std::vector<StateId> maybe;
        for (StateId s = 0; s < n_; ++s)
            if (is_maybe(s)) {
                index[s] = static_cast<std::int64_t>(maybe.size());
                maybe.push_back(s);
            }
        SparseMatrix a;
        a.cols = maybe.size();
        std::vector<double> b(maybe.size(), 0.0);
        for (std::size_t i = 0; i < maybe.size(); ++i) {
            for (const Transition& t : mdp_.transitions(maybe[i], action_[maybe[i]])) {
                if (yes_[t.target])
                    b[i] += t.probability;
                else if (index[t.target] >= 0)
                    a.push_entry(static_cast<std::uint32_t>(index[t.target]), t.probability);
            }
            a.end_row();
        }
        std::vector<double> x(n_, 0.0);
        for (StateId s = 0; s < n_; ++s)
            if (yes_[s])
                x[s] = 1.0;
        if (!maybe.empty()) {
            std::vector<double> sol = solve_fixed_point(a, b);
            for (std::size_t i = 0; i < maybe.size(); ++i)
                x[maybe[i]] = std::clamp(sol[i], 0.0, 1.0);
        }
        return x;
    }

    std::vector<double> improve_policy() {
        const bool max = mode_ == OptimizationMode::Max;
        std::vector<double> x = evaluate();
        for (std::size_t round = 0; round < kMaxPolicyIterations; ++round) {
            bool changed = false;
            for (StateId s = 0; s < n_; ++s) {
                if (!is_maybe(s))
                    continue;
                const double current = x[s];
                const ActionId a = best_action(s, x);
                const double v = choice_value(mdp_.choice(s, a), x);
                if (a != action_[s] && (max ? v > current + kImprovement : v < current - kImprovement)) {
                    action_[s] = a;
                    changed = true;
                }
            }
            if (!changed)
                return x;
            x = evaluate();
        }
        throw SolverError("policy iteration did not stabilise");
    }

    const Mdp& mdp_;
    MdpPredecessors pred_;
    std::size_t n_;
    StateMask rhs_;
    StateMask middle_;
    OptimizationMode mode_;
    StateMask yes_;
    StateMask no_;
    std::vector<ActionId> action_;
};

ReachResult next_step(const Mdp& mdp, const StateMask& target, OptimizationMode mode) {
    const bool max = mode == OptimizationMode::Max;
    ReachResult out;
    out.probabilities.assign(mdp.num_states(), 0.0);
    out.policy = StochasticPolicy(mdp);
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        ActionId arg = 0;
        double best = 0.0;
        for (ActionId a = 0; a < mdp.num_actions(s); ++a) {
            double v = 0.0;
            for (const Transition& t : mdp.transitions(s, a))
                if (target[t.target])
                    v += t.probability;
            v = std::min(v, 1.0);
            if (a == 0 || (max ? v > best + kImprovement : v < best - kImprovement)) {
                best = v;
                arg = a;
            }
        }
        out.probabilities[s] = best;
        out.policy.row(s)[arg] = 1.0;
    }
    return out;
}

OptimizationMode opposite(OptimizationMode m) {
    return m == OptimizationMode::Max ? OptimizationMode::Min : OptimizationMode::Max;
}

}  // namespace

ReachResult max_reach_mdp(const Mdp& mdp, const PathFormula& path, OptimizationMode mode) {
    if (!path.is_probability_free())
        throw UnsupportedError("nested probability operator is not supported in MDP-level checks");
    const std::size_t n = mdp.num_states();
    switch (path.kind()) {
        case PathFormula::Kind::Next: return next_step(mdp, propositional_states(mdp, path.operand()), mode);
        case PathFormula::Kind::Eventually:
            return UntilSolver(mdp, StateMask(n, 1), propositional_states(mdp, path.operand()), mode).solve();
        case PathFormula::Kind::Until:
            return UntilSolver(mdp, propositional_states(mdp, path.lhs()), propositional_states(mdp, path.rhs()),
                               mode)
                .solve();
        case PathFormula::Kind::Globally: {
            StateMask bad = propositional_states(mdp, path.operand());
            for (char& c : bad)
                c = !c;
            ReachResult r = UntilSolver(mdp, StateMask(n, 1), std::move(bad), opposite(mode)).solve();
            for (double& p : r.probabilities)
                p = 1.0 - p;
            return r;
        }
    }
    throw UnsupportedError("unknown path operator");
}

}  // namespace eau
