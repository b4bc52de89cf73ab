#include "eau/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eau/checker.hpp"
#include "eau/error.hpp"
#include "eau/linear.hpp"

namespace eau {

std::vector<double> GradientVector::to_choices(const Mdp& mdp) const {
    std::vector<double> out(mdp.num_choices(), 0.0);
    for (const GradientEntry& e : entries)
        out[mdp.choice(e.state, e.action)] = e.value;
    return out;
}

double satisfaction_probability(const Mdp& mdp, const StochasticPolicy& policy, const PathFormula& path) {
    return path_probabilities(induce_chain(mdp, policy), path)[mdp.initial_state()];
}

namespace {

/// Per-choice sensitivities weighted by visits, packed as a GradientVector.
GradientVector pack(const Mdp& mdp, Objective objective, const std::vector<double>& visits,
                    const std::vector<double>& choice_terms) {
    GradientVector g;
    g.objective = objective;
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        if (mdp.is_absorbing(s))
            continue;
        for (ActionId a = 0; a < mdp.num_actions(s); ++a) {
            const double v = visits[s] == 0.0 ? 0.0 : visits[s] * choice_terms[mdp.choice(s, a)];
            g.entries.push_back({s, a, v});
        }
    }
    return g;
}

/// ∇P(lhs U rhs) at the initial state.
GradientVector until_gradient(const Mdp& mdp, const StochasticPolicy& policy, const StateMask& lhs,
                              const StateMask& rhs) {
    const std::size_t n = mdp.num_states();
    const MarkovChain chain = induce_chain(mdp, policy);

    StateMask middle(n, 0);
    for (StateId s = 0; s < n; ++s)
        middle[s] = lhs[s] && !rhs[s];

    // Middle states that can leave the middle region under π; the rest are
    // trapped with probability zero of success.
    StateMask leaves(n, 0);
    {
        std::vector<std::vector<StateId>> pred(n);
        for (StateId s = 0; s < n; ++s)
            for (const Transition& t : chain.successors(s))
                if (t.probability > 0.0)
                    pred[t.target].push_back(s);
        std::vector<StateId> stack;
        for (StateId s = 0; s < n; ++s)
            if (!middle[s]) {
                leaves[s] = 1;
                stack.push_back(s);
            }
        while (!stack.empty()) {
            StateId t = stack.back();
            stack.pop_back();
            for (StateId s : pred[t])
                if (!leaves[s] && middle[s]) {
                    leaves[s] = 1;
                    stack.push_back(s);
                }
        }
    }

    std::vector<std::int64_t> index(n, -1);
    std::vector<StateId> unknowns;
    for (StateId s = 0; s < n; ++s)
        if (middle[s] && leaves[s]) {
            index[s] = static_cast<std::int64_t>(unknowns.size());
            unknowns.push_back(s);
        }

    SparseMatrix a;
    a.cols = unknowns.size();
    std::vector<double> b(unknowns.size(), 0.0);
    for (std::size_t i = 0; i < unknowns.size(); ++i) {
        for (const Transition& t : chain.successors(unknowns[i])) {
            if (rhs[t.target])
                b[i] += t.probability;
            else if (index[t.target] >= 0)
                a.push_entry(static_cast<std::uint32_t>(index[t.target]), t.probability);
        }
        a.end_row();
    }

    std::vector<double> x(n, 0.0);
    for (StateId s = 0; s < n; ++s)
        if (rhs[s])
            x[s] = 1.0;
    std::vector<double> visits(n, 0.0);
    const StateId init = mdp.initial_state();
    if (!unknowns.empty()) {
        std::vector<double> sol = solve_fixed_point(a, b);
        for (std::size_t i = 0; i < unknowns.size(); ++i)
            x[unknowns[i]] = sol[i];
        if (index[init] >= 0) {
            std::vector<double> e(unknowns.size(), 0.0);
            e[static_cast<std::size_t>(index[init])] = 1.0;
            std::vector<double> y = solve_fixed_point(transpose(a), e);
            for (std::size_t i = 0; i < unknowns.size(); ++i)
                visits[unknowns[i]] = y[i];
        }
    }

    std::vector<double> terms(mdp.num_choices(), 0.0);
    for (std::size_t c = 0; c < mdp.num_choices(); ++c)
        for (const Transition& t : mdp.choice_transitions(c))
            terms[c] += t.probability * x[t.target];
    return pack(mdp, Objective::Probability, visits, terms);
}

}  // namespace

GradientVector probability_gradient(const Mdp& mdp, const StochasticPolicy& policy, const PathFormula& path) {
    if (!path.is_probability_free())
        throw UnsupportedError("gradients of nested probability operators are not supported");
    validate_policy(mdp, policy);
    const std::size_t n = mdp.num_states();
    switch (path.kind()) {
        case PathFormula::Kind::Next: {
            const StateMask target = propositional_states(mdp, path.operand());
            std::vector<double> visits(n, 0.0);
            visits[mdp.initial_state()] = 1.0;
            std::vector<double> terms(mdp.num_choices(), 0.0);
            for (std::size_t c = 0; c < mdp.num_choices(); ++c)
                for (const Transition& t : mdp.choice_transitions(c))
                    if (target[t.target])
                        terms[c] += t.probability;
            return pack(mdp, Objective::Probability, visits, terms);
        }
        case PathFormula::Kind::Eventually:
            return until_gradient(mdp, policy, StateMask(n, 1), propositional_states(mdp, path.operand()));
        case PathFormula::Kind::Until:
            return until_gradient(mdp, policy, propositional_states(mdp, path.lhs()),
                                  propositional_states(mdp, path.rhs()));
        case PathFormula::Kind::Globally: {
            StateMask bad = propositional_states(mdp, path.operand());
            for (char& c : bad)
                c = !c;
            GradientVector g = until_gradient(mdp, policy, StateMask(n, 1), bad);
            for (GradientEntry& e : g.entries)
                e.value = -e.value;
            return g;
        }
    }
    throw UnsupportedError("unknown path operator");
}

GradientVector utility_gradient(const Mdp& mdp, const StochasticPolicy& policy) {
    const std::vector<double> v = evaluate_policy(mdp, policy);
    const MarkovChain chain = induce_chain(mdp, policy);
    const std::size_t n = mdp.num_states();
    const double gamma = mdp.discount();

    SparseMatrix p;
    p.cols = n;
    for (StateId s = 0; s < n; ++s) {
        for (const Transition& t : chain.successors(s))
            p.push_entry(t.target, gamma * t.probability);
        p.end_row();
    }
    std::vector<double> e(n, 0.0);
    e[mdp.initial_state()] = 1.0;
    const std::vector<double> occupancy = solve_fixed_point(transpose(p), e);

    std::vector<double> terms(mdp.num_choices(), 0.0);
    for (std::size_t c = 0; c < mdp.num_choices(); ++c) {
        double acc = 0.0;
        for (const Transition& t : mdp.choice_transitions(c))
            acc += t.probability * v[t.target];
        terms[c] = mdp.choice_reward(c) + gamma * acc;
    }
    return pack(mdp, Objective::Utility, occupancy, terms);
}

GradientVector top_k_mask(const GradientVector& g, std::size_t k) {
    if (k < 1 || k > g.size())
        throw InvalidArgument("top-k: k=" + std::to_string(k) + " outside [1," + std::to_string(g.size()) + "]");
    std::vector<std::size_t> order(g.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return std::abs(g.entries[i].value) > std::abs(g.entries[j].value);
    });
    GradientVector out = g;
    for (std::size_t r = k; r < order.size(); ++r)
        out.entries[order[r]].value = 0.0;
    return out;
}

}  // namespace eau
