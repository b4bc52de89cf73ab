#include "eau/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>

#include "eau/checker.hpp"
#include "eau/error.hpp"
#include "eau/mdp_io.hpp"

namespace eau {

Obligation::Obligation(StateFormula content) : content_(std::move(content)) {
    if (content_.kind() != StateFormula::Kind::Prob)
        throw InvalidArgument("obligation content must be a P operator");
}

namespace {

constexpr double kChoiceSlack = 1e-9;

/// Choices that keep the optimal probability of `path` (given per-state
/// optimum `p`). States whose outcome is already decided allow everything.
std::vector<char> probability_optimal_choices(const Mdp& mdp, const PathFormula& path, const std::vector<double>& p,
                                              bool maximize) {
    const std::size_t n = mdp.num_states();
    StateMask decided(n, 0);
    std::vector<double> target_value = p;
    switch (path.kind()) {
        case PathFormula::Kind::Next: {
            const StateMask t = propositional_states(mdp, path.operand());
            for (StateId s = 0; s < n; ++s)
                target_value[s] = t[s] ? 1.0 : 0.0;
            break;
        }
        case PathFormula::Kind::Eventually: {
            decided = propositional_states(mdp, path.operand());
            break;
        }
        case PathFormula::Kind::Until: {
            const StateMask l = propositional_states(mdp, path.lhs());
            const StateMask r = propositional_states(mdp, path.rhs());
            for (StateId s = 0; s < n; ++s)
                decided[s] = r[s] || !l[s];
            break;
        }
        case PathFormula::Kind::Globally: {
            decided = propositional_states(mdp, path.operand());
            for (char& c : decided)
                c = !c;
            break;
        }
    }
    std::vector<char> allowed(mdp.num_choices(), 1);
    for (StateId s = 0; s < n; ++s) {
        if (decided[s])
            continue;
        for (ActionId a = 0; a < mdp.num_actions(s); ++a) {
            const std::size_t c = mdp.choice(s, a);
            double q = 0.0;
            for (const Transition& t : mdp.choice_transitions(c))
                q += t.probability * target_value[t.target];
            allowed[c] = maximize ? q >= p[s] - kChoiceSlack : q <= p[s] + kChoiceSlack;
        }
    }
    return allowed;
}

/// Reward value iteration restricted to `allowed` choices; tie-broken argmax.
StochasticPolicy restricted_optimal_policy(const Mdp& mdp, const std::vector<char>& allowed) {
    const std::size_t n = mdp.num_states();
    const double gamma = mdp.discount();
    std::vector<double> v(n, 0.0);
    auto q_value = [&](StateId s, ActionId a) {
        const std::size_t c = mdp.choice(s, a);
        double acc = 0.0;
        for (const Transition& t : mdp.choice_transitions(c))
            acc += t.probability * v[t.target];
        return mdp.state_reward(s) + mdp.choice_reward(c) + gamma * acc;
    };
    bool converged = false;
    for (std::size_t it = 0; it < 100'000 && !converged; ++it) {
        double change = 0.0;
        for (StateId s = 0; s < n; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (ActionId a = 0; a < mdp.num_actions(s); ++a)
                if (allowed[mdp.choice(s, a)])
                    best = std::max(best, q_value(s, a));
            change = std::max(change, std::abs(best - v[s]));
            v[s] = best;
        }
        converged = change < 1e-10;
    }
    if (!converged)
        throw SolverError("restricted value iteration did not converge");
    StochasticPolicy policy(mdp);
    for (StateId s = 0; s < n; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (ActionId a = 0; a < mdp.num_actions(s); ++a)
            if (allowed[mdp.choice(s, a)])
                best = std::max(best, q_value(s, a));
        for (ActionId a = 0; a < mdp.num_actions(s); ++a)
            if (allowed[mdp.choice(s, a)] && q_value(s, a) >= best - 1e-9) {
                policy.row(s)[a] = 1.0;
                break;
            }
    }
    return policy;
}

TraceRecord evaluate(const Mdp& mdp, const StochasticPolicy& policy, const PathFormula& path, std::size_t it) {
    return {it, satisfaction_probability(mdp, policy, path), expected_utility(mdp, policy)};
}

std::size_t resolve_k(std::size_t k, std::size_t size) { return k == 0 ? size : k; }

}  // namespace

StochasticPolicy max_sat_policy(const Mdp& mdp, const Obligation& ob) {
    const bool maximize = ob.raises();
    ReachResult reach = max_reach_mdp(mdp, ob.path(), maximize ? OptimizationMode::Max : OptimizationMode::Min);
    const std::vector<char> allowed = probability_optimal_choices(mdp, ob.path(), reach.probabilities, maximize);
    StochasticPolicy refined = restricted_optimal_policy(mdp, allowed);

    const double target = reach.probabilities[mdp.initial_state()];
    const double got = satisfaction_probability(mdp, refined, ob.path());
    const bool kept = maximize ? got >= target - 1e-9 : got <= target + 1e-9;
    return kept ? refined : reach.policy;
}

SynthesisTrace line_search(const Mdp& mdp, const Obligation& ob, std::size_t steps) {
    if (steps == 0)
        throw InvalidArgument("line search needs at least one step");
    const StochasticPolicy phi = max_sat_policy(mdp, ob);
    const StochasticPolicy star = optimal_policy(mdp);

    SynthesisTrace trace;
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(steps);
        const TraceRecord r = evaluate(mdp, interpolate_policies(phi, star, t), ob.path(), i);
        trace.records.push_back(r);
        if (ob.satisfied_by(r.probability) && (!best || r.utility > trace.records[*best].utility))
            best = i;
    }
    trace.satisfied = best.has_value();
    trace.selected = best.value_or(0);
    trace.policy = interpolate_policies(phi, star, static_cast<double>(trace.selected) / static_cast<double>(steps));
    return trace;
}

std::vector<double> normalized_direction(const Mdp& mdp, const GradientVector& g) {
    std::vector<double> dir = g.to_choices(mdp);
    double norm2 = 0.0;
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        if (mdp.is_absorbing(s))
            continue;
        const std::size_t first = mdp.choice(s, 0);
        const std::size_t m = mdp.num_actions(s);
        double mean = 0.0;
        for (std::size_t c = first; c < first + m; ++c)
            mean += dir[c];
        mean /= static_cast<double>(m);
        for (std::size_t c = first; c < first + m; ++c) {
            dir[c] -= mean;
            norm2 += dir[c] * dir[c];
        }
    }
    const double norm = std::sqrt(norm2);
    if (norm > 1e-12)
        for (double& d : dir)
            d /= norm;
    return dir;
}

StochasticPolicy softened_optimal_policy(const Mdp& mdp, double noise) {
    return interpolate_policies(optimal_policy(mdp), StochasticPolicy::uniform(mdp), noise);
}

std::vector<double> project_simplex(const std::vector<double>& v) {
    if (v.empty())
        throw InvalidArgument("cannot project an empty vector");
    for (double x : v)
        if (!std::isfinite(x))
            throw InvalidArgument("cannot project a non-finite vector");
    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0;
    double tau = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        cumulative += u[i];
        const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0)
            tau = t;
    }
    std::vector<double> out(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::max(v[i] - tau, 0.0);
        sum += out[i];
    }
    for (double& x : out)
        x /= sum;
    return out;
}

StochasticPolicy gradient_step(const Mdp& mdp, const StochasticPolicy& policy, const std::vector<double>& direction,
                               double eta) {
    StochasticPolicy next = policy;
    std::vector<double> row;
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        if (mdp.is_absorbing(s))
            continue;
        auto r = next.row(s);
        const std::size_t first = mdp.choice(s, 0);
        row.assign(r.size(), 0.0);
        for (std::size_t a = 0; a < r.size(); ++a)
            row[a] = r[a] + eta * direction[first + a];
        const std::vector<double> p = project_simplex(row);
        std::copy(p.begin(), p.end(), r.begin());
    }
    return next;
}

namespace {

enum class Rule { Average, Alternating };

SynthesisTrace run_gradient(const Mdp& mdp, const Obligation& ob, const GradientOptions& options, Rule rule) {
    if (!(options.eta > 0.0))
        throw InvalidArgument("learning rate must be positive");
    const double sign = ob.raises() ? 1.0 : -1.0;
    StochasticPolicy policy = softened_optimal_policy(mdp);

    SynthesisTrace trace;
    std::optional<std::size_t> best;
    StochasticPolicy best_policy;
    for (std::size_t it = 0;; ++it) {
        const TraceRecord r = evaluate(mdp, policy, ob.path(), it);
        trace.records.push_back(r);
        const bool ok = ob.satisfied_by(r.probability);
        if (ok && (!best || r.utility > trace.records[*best].utility)) {
            best = it;
            best_policy = policy;
        }
        if (it == options.iterations)
            break;

        GradientVector g;
        g.objective = Objective::Utility;
        std::vector<double> dir;
        if (rule == Rule::Average) {
            const std::vector<double> dv = normalized_direction(mdp, utility_gradient(mdp, policy));
            const std::vector<double> df = normalized_direction(mdp, probability_gradient(mdp, policy, ob.path()));
            dir.resize(dv.size());
            for (std::size_t c = 0; c < dv.size(); ++c)
                dir[c] = 0.5 * (dv[c] + sign * df[c]);
        } else if (ok) {
            dir = normalized_direction(mdp, utility_gradient(mdp, policy));
        } else {
            dir = normalized_direction(mdp, probability_gradient(mdp, policy, ob.path()));
            for (double& d : dir)
                d *= sign;
        }

        // Pack back into entries so top-k sees exactly the policy parameters.
        for (StateId s = 0; s < mdp.num_states(); ++s)
            if (!mdp.is_absorbing(s))
                for (ActionId a = 0; a < mdp.num_actions(s); ++a)
                    g.entries.push_back({s, a, dir[mdp.choice(s, a)]});
        if (options.k != 0 && !g.entries.empty())
            g = top_k_mask(g, std::min(options.k, g.size()));
        policy = gradient_step(mdp, policy, g.to_choices(mdp), options.eta);
    }

    if (rule == Rule::Alternating && best) {
        trace.selected = *best;
        trace.policy = std::move(best_policy);
        trace.satisfied = true;
    } else {
        trace.selected = trace.records.size() - 1;
        trace.policy = std::move(policy);
        trace.satisfied = ob.satisfied_by(trace.records.back().probability);
    }
    return trace;
}

}  // namespace

SynthesisTrace average_gradient(const Mdp& mdp, const Obligation& ob, const GradientOptions& options) {
    return run_gradient(mdp, ob, options, Rule::Average);
}

SynthesisTrace alternating_gradient(const Mdp& mdp, const Obligation& ob, const GradientOptions& options) {
    return run_gradient(mdp, ob, options, Rule::Alternating);
}

GridResult grid_search(const Mdp& mdp, const Obligation& ob, const std::vector<double>& etas,
                       const std::vector<std::size_t>& ks, std::size_t iterations, std::size_t jobs) {
    if (etas.empty() || ks.empty())
        throw InvalidArgument("grid search needs at least one eta and one k");
    GridResult grid;
    grid.etas = etas;
    grid.ks = ks;
    const std::size_t cells = etas.size() * ks.size();
    grid.probability.assign(cells, std::numeric_limits<double>::quiet_NaN());
    grid.utility.assign(cells, std::numeric_limits<double>::quiet_NaN());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t cell = next++; cell < cells; cell = next++) {
            GradientOptions o;
            o.eta = etas[cell / ks.size()];
            o.k = ks[cell % ks.size()];
            o.iterations = iterations;
            try {
                const SynthesisTrace t = alternating_gradient(mdp, ob, o);
                grid.probability[cell] = t.records[t.selected].probability;
                grid.utility[cell] = t.records[t.selected].utility;
            } catch (const Error&) {
                // Left as NaN.
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, cells));
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < threads; ++i)
        pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool)
        t.join();
    return grid;
}

namespace {

std::string csv_real(double v) { return std::isnan(v) ? "nan" : format_real(v); }

}  // namespace

std::string format_grid_csv(const GridResult& grid, std::size_t num_parameters) {
    std::string out = "eta,k,final_probability,final_utility\n";
    for (std::size_t i = 0; i < grid.etas.size(); ++i)
        for (std::size_t j = 0; j < grid.ks.size(); ++j) {
            out += format_real(grid.etas[i]) + ',' + std::to_string(resolve_k(grid.ks[j], num_parameters)) + ',' +
                   csv_real(grid.probability_at(i, j)) + ',' + csv_real(grid.utility_at(i, j)) + '\n';
        }
    return out;
}

std::string format_grid_matrix(const GridResult& grid, bool utility, std::size_t num_parameters) {
    std::string out = "eta";
    for (std::size_t k : grid.ks)
        out += ",k=" + std::to_string(resolve_k(k, num_parameters));
    out += '\n';
    for (std::size_t i = 0; i < grid.etas.size(); ++i) {
        out += format_real(grid.etas[i]);
        for (std::size_t j = 0; j < grid.ks.size(); ++j)
            out += ',' + csv_real(utility ? grid.utility_at(i, j) : grid.probability_at(i, j));
        out += '\n';
    }
    return out;
}

std::string format_trace_csv(const SynthesisTrace& trace) {
    std::string out = "iteration,satisfaction_probability,expected_utility\n";
    for (const TraceRecord& r : trace.records)
        out += std::to_string(r.iteration) + ',' + format_real(r.probability) + ',' + format_real(r.utility) + '\n';
    return out;
}

ImplicationResult synth_implication(const Mdp& mdp, const StateFormula& antecedent, const StateFormula& consequent,
                                    const GradientOptions& options) {
    const Obligation negated(negation_normal_form(StateFormula::negation(antecedent)));
    const Obligation wanted(consequent);

    ImplicationResult result{ImplicationBranch::NegatedAntecedent, {}, alternating_gradient(mdp, negated, options),
                             alternating_gradient(mdp, wanted, options)};
    const SynthesisTrace& a = result.negated_antecedent;
    const SynthesisTrace& b = result.consequent;
    if (!a.satisfied && !b.satisfied)
        throw Error("neither disjunct of the implication could be satisfied");
    const double va = a.records[a.selected].utility;
    const double vb = b.records[b.selected].utility;
    if (a.satisfied && (!b.satisfied || va >= vb)) {
        result.branch = ImplicationBranch::NegatedAntecedent;
        result.policy = a.policy;
    } else {
        result.branch = ImplicationBranch::Consequent;
        result.policy = b.policy;
    }
    return result;
}

}  // namespace eau
