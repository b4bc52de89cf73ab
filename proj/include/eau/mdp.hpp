#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eau {

using StateId = std::uint32_t;
using ActionId = std::uint32_t;

/// Per-state membership flags. `char` rather than `bool` so spans work.
using StateMask = std::vector<char>;

/// Atomic proposition name -> sorted, duplicate-free state ids.
using LabelMap = std::map<std::string, std::vector<StateId>>;

struct Transition {
    StateId target;
    double probability;

    friend bool operator==(const Transition&, const Transition&) = default;
};

/// Row-sum tolerance used by every stochasticity check.
inline constexpr double kStochasticTolerance = 1e-9;

class MdpBuilder;

/**
 * Explicit finite MDP in compressed sparse layout.
 *
 * Actions are dense per state (0..num_actions(s)-1). A (state, action) pair is
 * a "choice"; choices are numbered consecutively state by state, so
 * `choice(s, a) == state_choice_offsets()[s] + a`. State rewards are collected
 * on every step spent in a state, including absorbing self-loops.
 */
class Mdp {
public:
    Mdp() = default;

    std::size_t num_states() const noexcept { return state_rewards_.size(); }
    std::size_t num_choices() const noexcept { return choice_offsets_.empty() ? 0 : choice_offsets_.size() - 1; }
    std::size_t num_transitions() const noexcept { return transitions_.size(); }

    std::size_t num_actions(StateId s) const { return state_offsets_[s + 1] - state_offsets_[s]; }
    std::size_t choice(StateId s, ActionId a) const { return state_offsets_[s] + a; }
    std::span<const std::size_t> state_choice_offsets() const noexcept { return state_offsets_; }

    std::span<const Transition> transitions(StateId s, ActionId a) const { return choice_transitions(choice(s, a)); }
    std::span<const Transition> choice_transitions(std::size_t c) const {
        return {transitions_.data() + choice_offsets_[c], choice_offsets_[c + 1] - choice_offsets_[c]};
    }

    double state_reward(StateId s) const { return state_rewards_[s]; }
    std::span<const double> state_rewards() const noexcept { return state_rewards_; }
    bool has_choice_rewards() const noexcept { return !choice_rewards_.empty(); }
    double choice_reward(std::size_t c) const { return choice_rewards_.empty() ? 0.0 : choice_rewards_[c]; }

    const LabelMap& labels() const noexcept { return labels_; }
    bool has_label(const std::string& name) const { return labels_.contains(name); }
    /// Throws InvalidArgument for an unknown label.
    StateMask label_mask(const std::string& name) const;

    StateId initial_state() const noexcept { return initial_; }
    double discount() const noexcept { return discount_; }

    bool is_absorbing(StateId s) const { return absorbing_mask_[s] != 0; }
    const std::vector<StateId>& absorbing_states() const noexcept { return absorbing_; }

    /// Same dynamics and labels with a different state-reward vector.
    Mdp with_state_rewards(std::vector<double> rewards) const;
    Mdp with_discount(double discount) const;
    Mdp with_initial_state(StateId s) const;

    friend bool operator==(const Mdp&, const Mdp&) = default;

private:
    friend class MdpBuilder;

    std::vector<std::size_t> state_offsets_{0};
    std::vector<std::size_t> choice_offsets_{0};
    std::vector<Transition> transitions_;
    std::vector<double> state_rewards_;
    std::vector<double> choice_rewards_;
    LabelMap labels_;
    StateId initial_ = 0;
    double discount_ = 1.0;
    std::vector<StateId> absorbing_;
    StateMask absorbing_mask_;
};

/**
 * Accumulates an MDP in any order. Ids are range-checked here; stochasticity
 * is not (that is validate_mdp's job, so malformed models can be reported).
 */
class MdpBuilder {
public:
    explicit MdpBuilder(std::size_t num_states);

    MdpBuilder& add_transition(StateId s, ActionId a, StateId target, double probability);
    /// Declares action `a` enabled at `s` without adding a transition.
    MdpBuilder& declare_action(StateId s, ActionId a);
    MdpBuilder& set_state_reward(StateId s, double reward);
    MdpBuilder& set_choice_reward(StateId s, ActionId a, double reward);
    MdpBuilder& add_label(const std::string& name, StateId s);
    /// Registers a label even when it covers no state.
    MdpBuilder& declare_label(const std::string& name);
    MdpBuilder& set_initial_state(StateId s);
    MdpBuilder& set_discount(double discount);
    MdpBuilder& add_absorbing(StateId s);

    Mdp build() &&;

private:
    struct Entry {
        StateId state;
        ActionId action;
        StateId target;
        double probability;
    };
    struct ChoiceReward {
        StateId state;
        ActionId action;
        double reward;
    };

    void check_state(StateId s, const char* what) const;

    std::size_t num_states_;
    std::vector<Entry> entries_;
    std::vector<ActionId> action_count_;
    std::vector<ChoiceReward> choice_rewards_;
    std::vector<double> state_rewards_;
    LabelMap labels_;
    StateId initial_ = 0;
    double discount_ = 1.0;
    std::vector<StateId> absorbing_;
};

/// One failed invariant, naming the state/action involved when there is one.
struct ValidationIssue {
    std::optional<StateId> state;
    std::optional<ActionId> action;
    std::string message;

    std::string to_string() const;
};

using ValidationReport = std::vector<ValidationIssue>;

/// Empty iff every structural invariant of the MDP holds.
ValidationReport validate_mdp(const Mdp& mdp);

/**
 * Probability distribution over enabled actions at every state, stored flat
 * with the same choice layout as the MDP it was created for.
 */
class StochasticPolicy {
public:
    StochasticPolicy() = default;
    /// All-zero policy shaped like `mdp`; fill it with `row()`.
    explicit StochasticPolicy(const Mdp& mdp);
    /// All-zero policy over an explicit choice layout (see Mdp::state_choice_offsets).
    explicit StochasticPolicy(std::span<const std::size_t> choice_offsets);

    static StochasticPolicy uniform(const Mdp& mdp);
    /// `actions[s]` is taken with probability one.
    static StochasticPolicy deterministic(const Mdp& mdp, std::span<const ActionId> actions);

    std::size_t num_states() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t num_actions(StateId s) const { return offsets_[s + 1] - offsets_[s]; }
    std::span<const std::size_t> offsets() const noexcept { return offsets_; }

    double operator()(StateId s, ActionId a) const { return probs_[offsets_[s] + a]; }
    std::span<double> row(StateId s) { return {probs_.data() + offsets_[s], num_actions(s)}; }
    std::span<const double> row(StateId s) const { return {probs_.data() + offsets_[s], num_actions(s)}; }
    std::span<const double> values() const noexcept { return probs_; }
    std::span<double> values() noexcept { return probs_; }

    /// The action played with probability one at `s`, if there is one.
    std::optional<ActionId> deterministic_action(StateId s) const;
    bool is_deterministic() const;

    bool same_shape(const Mdp& mdp) const;
    bool same_shape(const StochasticPolicy& other) const { return offsets_ == other.offsets_; }

    friend bool operator==(const StochasticPolicy&, const StochasticPolicy&) = default;

private:
    std::vector<std::size_t> offsets_{0};
    std::vector<double> probs_;
};

/// Throws InvalidArgument ("undefined-policy-state" / "action-not-enabled" /
/// "invalid-distribution") when `policy` cannot be played on `mdp`.
void validate_policy(const Mdp& mdp, const StochasticPolicy& policy);

/// Markov chain with rewards; the result of fixing an MDP's choices by a policy.
class MarkovChain {
public:
    MarkovChain() = default;

    /// Builds a chain from explicit rows (successor lists).
    static MarkovChain from_rows(const std::vector<std::vector<Transition>>& rows, LabelMap labels,
                                 StateId initial, std::vector<double> rewards = {}, double discount = 1.0);

    std::size_t num_states() const noexcept { return offsets_.size() - 1; }
    std::size_t num_transitions() const noexcept { return transitions_.size(); }
    std::span<const Transition> successors(StateId s) const {
        return {transitions_.data() + offsets_[s], offsets_[s + 1] - offsets_[s]};
    }
    const LabelMap& labels() const noexcept { return labels_; }
    StateMask label_mask(const std::string& name) const;
    StateId initial_state() const noexcept { return initial_; }
    std::span<const double> state_rewards() const noexcept { return rewards_; }
    double discount() const noexcept { return discount_; }

    /// Transitions out of states reachable from the initial state.
    std::size_t reachable_transitions() const;

private:
    friend MarkovChain induce_chain(const Mdp&, const StochasticPolicy&);

    std::vector<std::size_t> offsets_{0};
    std::vector<Transition> transitions_;
    LabelMap labels_;
    StateId initial_ = 0;
    std::vector<double> rewards_;
    double discount_ = 1.0;
};

/**
 * Row s of the result is sum_a policy(a|s) * T(s,a,.), successors merged and
 * sorted by id; zero-weight actions contribute nothing. Rewards become
 * R(s) + sum_a policy(a|s) * R(s,a).
 */
MarkovChain induce_chain(const Mdp& mdp, const StochasticPolicy& policy);

/// (1-t)*p + t*q, row by row. Throws InvalidArgument on shape mismatch or t outside [0,1].
StochasticPolicy interpolate_policies(const StochasticPolicy& p, const StochasticPolicy& q, double t);

}  // namespace eau
