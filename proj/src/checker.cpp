#include "eau/checker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eau/error.hpp"

namespace eau {

// ---------------------------------------------------------------------------
// Rewards

ValueIterationResult value_iteration(const Mdp& mdp, const ValueIterationOptions& options) {
    const std::size_t n = mdp.num_states();
    const double gamma = mdp.discount();
    ValueIterationResult result;
    result.values.assign(n, 0.0);
    std::vector<double>& v = result.values;

    auto q_value = [&](StateId s, ActionId a) {
        const std::size_t c = mdp.choice(s, a);
        double acc = 0.0;
        for (const Transition& t : mdp.choice_transitions(c))
            acc += t.probability * v[t.target];
        return mdp.state_reward(s) + mdp.choice_reward(c) + gamma * acc;
    };

    bool converged = false;
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        double change = 0.0;
        for (StateId s = 0; s < n; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (ActionId a = 0; a < mdp.num_actions(s); ++a)
                best = std::max(best, q_value(s, a));
            change = std::max(change, std::abs(best - v[s]));
            v[s] = best;
        }
        result.iterations = it + 1;
        if (!std::isfinite(change))
            break;
        if (change < options.tolerance) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw SolverError("value iteration did not converge within " + std::to_string(options.max_iterations) +
                          " iterations");

    auto offsets = mdp.state_choice_offsets();
    result.q.offsets.assign(offsets.begin(), offsets.end());
    result.q.values.resize(mdp.num_choices());
    for (StateId s = 0; s < n; ++s)
        for (ActionId a = 0; a < mdp.num_actions(s); ++a)
            result.q.values[mdp.choice(s, a)] = q_value(s, a);
    return result;
}

StochasticPolicy extract_optimal_policy(const QTable& q, double tie_tol) {
    StochasticPolicy policy(std::span<const std::size_t>(q.offsets));
    for (StateId s = 0; s < q.num_states(); ++s) {
        auto row = q.row(s);
        if (row.empty())
            continue;
        const double best = *std::max_element(row.begin(), row.end());
        for (ActionId a = 0; a < row.size(); ++a)
            if (row[a] >= best - tie_tol) {
                policy.row(s)[a] = 1.0;
                break;
            }
    }
    return policy;
}

StochasticPolicy optimal_policy(const Mdp& mdp) { return extract_optimal_policy(value_iteration(mdp).q); }

std::vector<double> evaluate_policy(const Mdp& mdp, const StochasticPolicy& policy, const SolverOptions& options) {
    const MarkovChain chain = induce_chain(mdp, policy);
    const std::size_t n = chain.num_states();
    const double gamma = chain.discount();
    SparseMatrix a;
    a.columns.reserve(chain.num_transitions());
    a.values.reserve(chain.num_transitions());
    a.cols = n;
    for (StateId s = 0; s < n; ++s) {
        for (const Transition& t : chain.successors(s))
            a.push_entry(t.target, gamma * t.probability);
        a.end_row();
    }
    auto r = chain.state_rewards();
    return solve_fixed_point(a, r, options);
}

double expected_utility(const Mdp& mdp, const StochasticPolicy& policy) {
    return evaluate_policy(mdp, policy)[mdp.initial_state()];
}

// ---------------------------------------------------------------------------
// Markov chains

namespace {

/// Reverse adjacency of a chain over positive-probability edges.
struct Predecessors {
    std::vector<std::size_t> offsets;
    std::vector<StateId> sources;

    explicit Predecessors(const MarkovChain& chain) {
        const std::size_t n = chain.num_states();
        offsets.assign(n + 1, 0);
        for (StateId s = 0; s < n; ++s)
            for (const Transition& t : chain.successors(s))
                if (t.probability > 0.0)
                    ++offsets[t.target + 1];
        for (std::size_t i = 0; i < n; ++i)
            offsets[i + 1] += offsets[i];
        sources.resize(offsets[n]);
        std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
        for (StateId s = 0; s < n; ++s)
            for (const Transition& t : chain.successors(s))
                if (t.probability > 0.0)
                    sources[fill[t.target]++] = s;
    }

    std::span<const StateId> of(StateId t) const { return {sources.data() + offsets[t], offsets[t + 1] - offsets[t]}; }
};

/// Marks every state that reaches `seed` through states in `through`.
StateMask backward_reach(const Predecessors& pred, const StateMask& seed, const StateMask& through) {
    StateMask seen = seed;
    std::vector<StateId> stack;
    for (StateId s = 0; s < seed.size(); ++s)
        if (seed[s])
            stack.push_back(s);
    while (!stack.empty()) {
        StateId t = stack.back();
        stack.pop_back();
        for (StateId s : pred.of(t))
            if (!seen[s] && through[s]) {
                seen[s] = 1;
                stack.push_back(s);
            }
    }
    return seen;
}

StateMask invert(StateMask m) {
    for (char& c : m)
        c = !c;
    return m;
}

}  // namespace

UntilSystem build_until_system(const MarkovChain& chain, const StateMask& lhs, const StateMask& rhs) {
    const std::size_t n = chain.num_states();
    const Predecessors pred(chain);

    StateMask lhs_only(n, 0);
    for (StateId s = 0; s < n; ++s)
        lhs_only[s] = lhs[s] && !rhs[s];

    UntilSystem sys;
    sys.no = invert(backward_reach(pred, rhs, lhs_only));
    sys.yes = invert(backward_reach(pred, sys.no, lhs_only));
    sys.index.assign(n, -1);
    for (StateId s = 0; s < n; ++s)
        if (!sys.yes[s] && !sys.no[s]) {
            sys.index[s] = static_cast<std::int64_t>(sys.maybe.size());
            sys.maybe.push_back(s);
        }

    sys.a.cols = sys.maybe.size();
    sys.b.assign(sys.maybe.size(), 0.0);
    for (std::size_t i = 0; i < sys.maybe.size(); ++i) {
        for (const Transition& t : chain.successors(sys.maybe[i])) {
            if (sys.yes[t.target])
                sys.b[i] += t.probability;
            else if (sys.index[t.target] >= 0)
                sys.a.push_entry(static_cast<std::uint32_t>(sys.index[t.target]), t.probability);
        }
        sys.a.end_row();
    }
    return sys;
}

std::vector<double> solve_until(const UntilSystem& system, const SolverOptions& options) {
    const std::size_t n = system.yes.size();
    std::vector<double> out(n, 0.0);
    for (StateId s = 0; s < n; ++s)
        if (system.yes[s])
            out[s] = 1.0;
    if (!system.maybe.empty()) {
        std::vector<double> x = solve_fixed_point(system.a, system.b, options);
        for (std::size_t i = 0; i < x.size(); ++i)
            out[system.maybe[i]] = std::clamp(x[i], 0.0, 1.0);
    }
    return out;
}

StateMask satisfying_states(const MarkovChain& chain, const StateFormula& f) {
    using K = StateFormula::Kind;
    const std::size_t n = chain.num_states();
    switch (f.kind()) {
        case K::True: return StateMask(n, 1);
        case K::False: return StateMask(n, 0);
        case K::Atom: return chain.label_mask(f.name());
        case K::Not: return invert(satisfying_states(chain, f.operand()));
        case K::And:
        case K::Or:
        case K::Implies: {
            StateMask l = satisfying_states(chain, f.lhs());
            StateMask r = satisfying_states(chain, f.rhs());
            for (StateId s = 0; s < n; ++s)
                l[s] = f.kind() == K::And  ? (l[s] && r[s])
                       : f.kind() == K::Or ? (l[s] || r[s])
                                           : (!l[s] || r[s]);
            return l;
        }
        case K::Prob: {
            std::vector<double> p = path_probabilities(chain, f.path());
            StateMask m(n, 0);
            for (StateId s = 0; s < n; ++s)
                m[s] = compare(p[s], f.comparison(), f.threshold());
            return m;
        }
    }
    return StateMask(n, 0);
}

std::vector<double> path_probabilities(const MarkovChain& chain, const PathFormula& path) {
    const std::size_t n = chain.num_states();
    switch (path.kind()) {
        case PathFormula::Kind::Next: {
            const StateMask target = satisfying_states(chain, path.operand());
            std::vector<double> p(n, 0.0);
            for (StateId s = 0; s < n; ++s)
                for (const Transition& t : chain.successors(s))
                    if (target[t.target])
                        p[s] += t.probability;
            for (double& v : p)
                v = std::min(v, 1.0);
            return p;
        }
        case PathFormula::Kind::Eventually:
            return solve_until(build_until_system(chain, StateMask(n, 1), satisfying_states(chain, path.operand())));
        case PathFormula::Kind::Until:
            return solve_until(build_until_system(chain, satisfying_states(chain, path.lhs()),
                                                  satisfying_states(chain, path.rhs())));
        case PathFormula::Kind::Globally: {
            std::vector<double> p = solve_until(
                build_until_system(chain, StateMask(n, 1), invert(satisfying_states(chain, path.operand()))));
            for (double& v : p)
                v = 1.0 - v;
            return p;
        }
    }
    return std::vector<double>(n, 0.0);
}

CheckResult check_pctl_mc(const MarkovChain& chain, const StateFormula& f, StateId state) {
    if (state >= chain.num_states())
        throw InvalidArgument("state " + std::to_string(state) + " out of range");
    CheckResult result;
    if (f.kind() == StateFormula::Kind::Prob) {
        const double p = path_probabilities(chain, f.path())[state];
        result.probability = p;
        result.verdict = compare(p, f.comparison(), f.threshold());
    } else {
        result.verdict = satisfying_states(chain, f)[state] != 0;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Strategic checks

CheckResult check_strategic_stit(const Mdp& mdp, const StateFormula& f, StateId state) {
    if (f.kind() != StateFormula::Kind::Prob)
        throw UnsupportedError("strategic stit content must be a P operator");
    if (state >= mdp.num_states())
        throw InvalidArgument("state " + std::to_string(state) + " out of range");
    const OptimizationMode mode = is_lower_bound(f.comparison()) ? OptimizationMode::Max : OptimizationMode::Min;
    ReachResult reach = max_reach_mdp(mdp, f.path(), mode);
    CheckResult result;
    result.probability = reach.probabilities[state];
    result.verdict = compare(*result.probability, f.comparison(), f.threshold());
    if (result.verdict)
        result.witness = std::move(reach.policy);
    return result;
}

CheckResult check_ought_under(const Mdp& mdp, const StochasticPolicy& optimal, const StateFormula& f, StateId state) {
    CheckResult result = check_pctl_mc(induce_chain(mdp, optimal), f, state);
    result.witness = optimal;
    return result;
}

CheckResult check_strategic_ought(const Mdp& mdp, const StateFormula& f, StateId state) {
    if (state >= mdp.num_states())
        throw InvalidArgument("state " + std::to_string(state) + " out of range");
    return check_ought_under(mdp, optimal_policy(mdp), f, state);
}

std::vector<StateId> violation_successors(const Mdp& mdp, StateId state, const std::string& label) {
    const StateMask marked = mdp.label_mask(label);
    std::vector<StateId> out;
    for (ActionId a = 0; a < mdp.num_actions(state); ++a)
        for (const Transition& t : mdp.transitions(state, a))
            if (t.probability > 0.0 && marked[t.target])
                out.push_back(t.target);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

CtdResult check_ctd(const Mdp& mdp, const StateFormula& duty, std::span<const StateId> violations,
                    const StateFormula& ctd, StateId state) {
    if (violations.empty())
        throw InvalidArgument("empty violation set");
    if (state >= mdp.num_states())
        throw InvalidArgument("state " + std::to_string(state) + " out of range");
    for (StateId v : violations) {
        bool successor = false;
        for (ActionId a = 0; a < mdp.num_actions(state) && !successor; ++a)
            for (const Transition& t : mdp.transitions(state, a))
                if (t.target == v && t.probability > 0.0)
                    successor = true;
        if (!successor)
            throw InvalidArgument("violation state " + std::to_string(v) + " is not a successor of state " +
                                  std::to_string(state));
    }

    const StochasticPolicy pi = optimal_policy(mdp);
    CtdResult result;
    result.duty = check_ought_under(mdp, pi, duty, state);
    result.verdict = true;
    for (StateId v : violations) {
        CheckResult r = check_ought_under(mdp, pi, ctd, v);
        result.verdict = result.verdict && r.verdict;
        result.cases.emplace_back(v, std::move(r));
    }
    return result;
}

}  // namespace eau
