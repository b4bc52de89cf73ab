#include "eau/explore.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "eau/checker.hpp"
#include "eau/error.hpp"
#include "eau/gradients.hpp"
#include "eau/mdp_io.hpp"

namespace eau {

Shield build_shield(const Mdp& mdp, const PathFormula& safety, double rho) {
    if (!safety.is_probability_free())
        throw InvalidArgument("shield formula must not nest probability operators");
    if (!(rho >= 0.0 && rho <= 1.0))
        throw InvalidArgument("shield threshold outside [0,1]");

    std::vector<double> value;
    if (safety.kind() == PathFormula::Kind::Next) {
        const StateMask t = propositional_states(mdp, safety.operand());
        value.assign(t.begin(), t.end());
    } else {
        value = max_reach_mdp(mdp, safety, OptimizationMode::Max).probabilities;
    }

    Shield shield;
    shield.threshold = rho;
    auto offsets = mdp.state_choice_offsets();
    shield.offsets.assign(offsets.begin(), offsets.end());
    shield.safety.assign(mdp.num_choices(), 0.0);
    shield.allowed.assign(mdp.num_choices(), 0);
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        double best = -1.0;
        bool any = false;
        for (ActionId a = 0; a < mdp.num_actions(s); ++a) {
            const std::size_t c = mdp.choice(s, a);
            double v = 0.0;
            for (const Transition& t : mdp.choice_transitions(c))
                v += t.probability * value[t.target];
            shield.safety[c] = v;
            best = std::max(best, v);
            if (v >= rho) {
                shield.allowed[c] = 1;
                any = true;
            }
        }
        if (!any)
            for (ActionId a = 0; a < mdp.num_actions(s); ++a)
                if (shield.safety[mdp.choice(s, a)] >= best - 1e-12)
                    shield.allowed[mdp.choice(s, a)] = 1;
    }
    return shield;
}

ActionId shielded_step(const Shield& shield, StateId state, ActionId proposed) {
    if (shield.permits(state, proposed))
        return proposed;
    const std::size_t first = shield.offsets[state];
    const std::size_t m = shield.offsets[state + 1] - first;
    ActionId pick = proposed;
    double best = -1.0;
    for (ActionId a = 0; a < m; ++a)
        if (shield.allowed[first + a] && shield.safety[first + a] > best) {
            best = shield.safety[first + a];
            pick = a;
        }
    return pick;
}

StateMask terminal_states(const Mdp& mdp) {
    StateMask t(mdp.num_states(), 0);
    for (StateId s : mdp.absorbing_states())
        t[s] = 1;
    if (mdp.has_label("terminal"))
        for (StateId s : mdp.labels().at("terminal"))
            t[s] = 1;
    return t;
}

Episode run_episode(const Mdp& mdp, const StochasticPolicy& policy, const Shield* shield, double epsilon,
                    std::size_t max_steps, Rng& rng) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw InvalidArgument("epsilon outside [0,1]");
    const StateMask terminal = terminal_states(mdp);
    Episode ep;
    StateId s = mdp.initial_state();
    ep.states.push_back(s);
    std::vector<double> weights;
    for (std::size_t step = 0; step < max_steps && !terminal[s]; ++step) {
        ActionId a = rng.uniform() < epsilon ? static_cast<ActionId>(rng.below(mdp.num_actions(s)))
                                             : static_cast<ActionId>(rng.categorical(policy.row(s)));
        ActionId taken = shield ? shielded_step(*shield, s, a) : a;
        ep.actions.push_back(taken);
        ep.substituted.push_back(taken != a);
        auto succ = mdp.transitions(s, taken);
        weights.resize(succ.size());
        for (std::size_t i = 0; i < succ.size(); ++i)
            weights[i] = succ[i].probability;
        s = succ[rng.categorical(weights)].target;
        ep.states.push_back(s);
    }
    return ep;
}

RewardEstimate::RewardEstimate(std::size_t num_states, double default_value)
    : values_(num_states, default_value), known_(num_states, 0) {}

void RewardEstimate::observe(StateId s, double reward) {
    values_[s] = reward;
    known_[s] = 1;
}

StochasticPolicy random_policy(const Mdp& mdp, Rng& rng) {
    StochasticPolicy p(mdp);
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        const std::vector<double> row = rng.dirichlet(mdp.num_actions(s));
        std::copy(row.begin(), row.end(), p.row(s).begin());
    }
    return p;
}

StochasticPolicy exploration_update(const Mdp& estimated, const Obligation& ob, const StochasticPolicy& policy,
                                    double f, ExplorationUpdate update, double eta, bool normalize) {
    const bool utility = update == ExplorationUpdate::UtilityOnly || ob.satisfied_by(f);
    const GradientVector g =
        utility ? utility_gradient(estimated, policy) : probability_gradient(estimated, policy, ob.path());
    std::vector<double> dir = normalize ? normalized_direction(estimated, g) : g.to_choices(estimated);
    if (!utility && !ob.raises())
        for (double& d : dir)
            d = -d;
    return gradient_step(estimated, policy, dir, eta);
}

ExplorationResult learn_with_exploration(const Mdp& env, const Obligation& ob, const ExplorationOptions& options,
                                         std::uint64_t seed) {
    Rng rng(seed);
    ExplorationResult result;
    result.policy = options.initial_policy ? *options.initial_policy : random_policy(env, rng);
    validate_policy(env, result.policy);

    std::optional<Shield> shield;
    if (options.shield)
        shield = build_shield(env, ob.path(), ob.threshold());

    RewardEstimate estimate(env.num_states(), options.default_reward);
    if (options.rewards_known)
        for (StateId s = 0; s < env.num_states(); ++s)
            estimate.observe(s, env.state_reward(s));

    auto record = [&](std::size_t episode) {
        result.records.push_back({episode, satisfaction_probability(env, result.policy, ob.path()),
                                  expected_utility(env, result.policy)});
    };
    record(0);
    for (std::size_t e = 1; e <= options.episodes; ++e) {
        const Episode ep =
            run_episode(env, result.policy, shield ? &*shield : nullptr, options.epsilon, options.max_steps, rng);
        result.steps += ep.actions.size();
        result.shield_substitutions += static_cast<std::size_t>(std::count(ep.substituted.begin(), ep.substituted.end(), 1));
        for (StateId s : ep.states)
            estimate.observe(s, env.state_reward(s));

        const Mdp estimated = env.with_state_rewards(estimate.values());
        result.policy = exploration_update(estimated, ob, result.policy, result.records.back().probability,
                                           options.update, options.eta, options.normalize);
        record(e);
    }
    return result;
}

std::vector<AggregateRow> aggregate_runs(const std::vector<ExplorationResult>& runs) {
    if (runs.empty())
        return {};
    std::size_t length = runs.front().records.size();
    for (const auto& r : runs)
        length = std::min(length, r.records.size());
    const double n = static_cast<double>(runs.size());
    double t = 0.0;
    if (runs.size() > 1) {
        boost::math::students_t dist(n - 1.0);
        t = boost::math::quantile(dist, 0.9);
    }
    auto stats = [&](auto get, double& mean, double& lo, double& hi, std::size_t i) {
        double sum = 0.0;
        for (const auto& r : runs)
            sum += get(r.records[i]);
        mean = sum / n;
        double ss = 0.0;
        for (const auto& r : runs) {
            const double d = get(r.records[i]) - mean;
            ss += d * d;
        }
        const double half = runs.size() > 1 ? t * std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
        lo = mean - half;
        hi = mean + half;
    };
    std::vector<AggregateRow> rows(length);
    for (std::size_t i = 0; i < length; ++i) {
        AggregateRow& row = rows[i];
        row.episode = runs.front().records[i].iteration;
        stats([](const TraceRecord& r) { return r.probability; }, row.mean_probability, row.ci_low, row.ci_high, i);
        stats([](const TraceRecord& r) { return r.utility; }, row.mean_utility, row.utility_ci_low,
              row.utility_ci_high, i);
    }
    return rows;
}

std::string format_aggregate_csv(const std::vector<AggregateRow>& rows) {
    std::string out =
        "episode,mean_probability,ci80_low,ci80_high,mean_utility,utility_ci80_low,utility_ci80_high\n";
    for (const AggregateRow& r : rows)
        out += std::to_string(r.episode) + ',' + format_real(r.mean_probability) + ',' + format_real(r.ci_low) + ',' +
               format_real(r.ci_high) + ',' + format_real(r.mean_utility) + ',' + format_real(r.utility_ci_low) +
               ',' + format_real(r.utility_ci_high) + '\n';
    return out;
}

}  // namespace eau
