#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eau/formula.hpp"
#include "eau/mdp.hpp"
#include "eau/rng.hpp"
#include "eau/synth.hpp"

namespace eau {

/**
 * Action filter for a safety property. An action is permitted when its
 * one-step value Σ T(s,a,s')·p_max(s') reaches the threshold; where no action
 * does, the best ones are permitted instead.
 */
struct Shield {
    std::vector<char> allowed;       // per choice
    std::vector<double> safety;      // per choice one-step value
    std::vector<std::size_t> offsets;
    double threshold = 0.0;

    bool permits(StateId s, ActionId a) const { return allowed[offsets[s] + a] != 0; }
};

/// Only the dynamics and labels of `mdp` are used.
Shield build_shield(const Mdp& mdp, const PathFormula& safety, double rho);

/// `proposed` if permitted, else the permitted action with the highest
/// one-step safety value (lowest index on ties).
ActionId shielded_step(const Shield& shield, StateId state, ActionId proposed);

struct Episode {
    std::vector<StateId> states;     // visited states, starting with the initial one
    std::vector<ActionId> actions;   // action taken after states[i]
    std::vector<char> substituted;   // whether the shield replaced the proposal
};

/// States where a run ends: absorbing ones and those labelled "terminal".
StateMask terminal_states(const Mdp& mdp);

/// One ε-greedy run of at most `max_steps` actions, filtered by `shield` when given.
Episode run_episode(const Mdp& mdp, const StochasticPolicy& policy, const Shield* shield, double epsilon,
                    std::size_t max_steps, Rng& rng);

/// The learner's knowledge of state rewards.
class RewardEstimate {
public:
    RewardEstimate(std::size_t num_states, double default_value);

    void observe(StateId s, double reward);
    bool known(StateId s) const { return known_[s] != 0; }
    double value(StateId s) const { return values_[s]; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::vector<double> values_;
    StateMask known_;
};

enum class ExplorationUpdate { Alternating, UtilityOnly };

struct ExplorationOptions {
    std::size_t episodes = 300;
    double eta = 0.01;
    double epsilon = 0.1;
    std::size_t max_steps = 100;
    bool shield = true;
    ExplorationUpdate update = ExplorationUpdate::Alternating;
    double default_reward = 0.0;
    /// Normalize gradients as the offline gradient methods do.
    bool normalize = false;
    /// Start from this policy instead of a random one.
    std::optional<StochasticPolicy> initial_policy;
    /// Rewards known before the first run (e.g. all of them for an offline comparison).
    bool rewards_known = false;
};

struct ExplorationResult {
    StochasticPolicy policy;
    /// Record i is the policy after i runs; utility is measured with the true rewards.
    std::vector<TraceRecord> records;
    std::size_t shield_substitutions = 0;
    std::size_t steps = 0;
};

/// Policy with each row drawn from a flat Dirichlet distribution.
StochasticPolicy random_policy(const Mdp& mdp, Rng& rng);

ExplorationResult learn_with_exploration(const Mdp& env, const Obligation& ob, const ExplorationOptions& options,
                                         std::uint64_t seed);

/// Policy update used after each run; also the per-iteration rule of the
/// offline alternating method when `normalize` is set.
StochasticPolicy exploration_update(const Mdp& estimated, const Obligation& ob, const StochasticPolicy& policy,
                                    double f, ExplorationUpdate update, double eta, bool normalize);

struct AggregateRow {
    std::size_t episode;
    double mean_probability, ci_low, ci_high;
    double mean_utility, utility_ci_low, utility_ci_high;
};

/// Per-episode mean and two-sided 80% Student-t interval across runs.
std::vector<AggregateRow> aggregate_runs(const std::vector<ExplorationResult>& runs);
std::string format_aggregate_csv(const std::vector<AggregateRow>& rows);

}  // namespace eau
