#include "eau/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "eau/error.hpp"

namespace eau {

namespace {

std::string short_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

StateMask mask_from_label(const LabelMap& labels, const std::string& name, std::size_t n) {
    auto it = labels.find(name);
    if (it == labels.end())
        throw InvalidArgument("unknown atomic proposition '" + name + "'");
    StateMask mask(n, 0);
    for (StateId s : it->second)
        mask[s] = 1;
    return mask;
}

}  // namespace

// ---------------------------------------------------------------------------
// Mdp

StateMask Mdp::label_mask(const std::string& name) const {
    return mask_from_label(labels_, name, num_states());
}

Mdp Mdp::with_state_rewards(std::vector<double> rewards) const {
    if (rewards.size() != num_states())
        throw InvalidArgument("reward vector has wrong length");
    Mdp copy = *this;
    copy.state_rewards_ = std::move(rewards);
    return copy;
}

Mdp Mdp::with_discount(double discount) const {
    Mdp copy = *this;
    copy.discount_ = discount;
    return copy;
}

Mdp Mdp::with_initial_state(StateId s) const {
    if (s >= num_states())
        throw InvalidArgument("initial state out of range");
    Mdp copy = *this;
    copy.initial_ = s;
    return copy;
}

// ---------------------------------------------------------------------------
// MdpBuilder

MdpBuilder::MdpBuilder(std::size_t num_states)
    : num_states_(num_states), action_count_(num_states, 0), state_rewards_(num_states, 0.0) {}

void MdpBuilder::check_state(StateId s, const char* what) const {
    if (s >= num_states_)
        throw InvalidArgument(std::string(what) + " state " + std::to_string(s) + " out of range (" +
                              std::to_string(num_states_) + " states)");
}

MdpBuilder& MdpBuilder::add_transition(StateId s, ActionId a, StateId target, double probability) {
    check_state(s, "source");
    check_state(target, "target");
    entries_.push_back({s, a, target, probability});
    action_count_[s] = std::max<ActionId>(action_count_[s], a + 1);
    return *this;
}

MdpBuilder& MdpBuilder::declare_action(StateId s, ActionId a) {
    check_state(s, "source");
    action_count_[s] = std::max<ActionId>(action_count_[s], a + 1);
    return *this;
}

MdpBuilder& MdpBuilder::set_state_reward(StateId s, double reward) {
    check_state(s, "reward");
    state_rewards_[s] = reward;
    return *this;
}

MdpBuilder& MdpBuilder::set_choice_reward(StateId s, ActionId a, double reward) {
    check_state(s, "reward");
    choice_rewards_.push_back({s, a, reward});
    action_count_[s] = std::max<ActionId>(action_count_[s], a + 1);
    return *this;
}

MdpBuilder& MdpBuilder::add_label(const std::string& name, StateId s) {
    check_state(s, "labelled");
    labels_[name].push_back(s);
    return *this;
}

MdpBuilder& MdpBuilder::declare_label(const std::string& name) {
    labels_[name];
    return *this;
}

MdpBuilder& MdpBuilder::set_initial_state(StateId s) {
    check_state(s, "initial");
    initial_ = s;
    return *this;
}

MdpBuilder& MdpBuilder::set_discount(double discount) {
    discount_ = discount;
    return *this;
}

MdpBuilder& MdpBuilder::add_absorbing(StateId s) {
    check_state(s, "absorbing");
    absorbing_.push_back(s);
    return *this;
}

Mdp MdpBuilder::build() && {
    Mdp m;
    const auto by_choice = [](const Entry& x, const Entry& y) {
        return x.state != y.state ? x.state < y.state : x.action < y.action;
    };
    if (!std::is_sorted(entries_.begin(), entries_.end(), by_choice))
        std::stable_sort(entries_.begin(), entries_.end(), by_choice);

    m.state_offsets_.assign(num_states_ + 1, 0);
    for (std::size_t s = 0; s < num_states_; ++s)
        m.state_offsets_[s + 1] = m.state_offsets_[s] + action_count_[s];
    const std::size_t choices = m.state_offsets_.back();

    m.choice_offsets_.assign(choices + 1, 0);
    for (const Entry& e : entries_)
        ++m.choice_offsets_[m.state_offsets_[e.state] + e.action + 1];
    std::partial_sum(m.choice_offsets_.begin(), m.choice_offsets_.end(), m.choice_offsets_.begin());

    m.transitions_.reserve(entries_.size());
    for (const Entry& e : entries_)
        m.transitions_.push_back({e.target, e.probability});
    entries_.clear();
    entries_.shrink_to_fit();

    if (!choice_rewards_.empty()) {
        m.choice_rewards_.assign(choices, 0.0);
        for (const ChoiceReward& r : choice_rewards_)
            m.choice_rewards_[m.state_offsets_[r.state] + r.action] = r.reward;
        if (std::all_of(m.choice_rewards_.begin(), m.choice_rewards_.end(), [](double r) { return r == 0.0; }))
            m.choice_rewards_.clear();
    }

    m.state_rewards_ = std::move(state_rewards_);
    for (auto& [name, states] : labels_) {
        std::sort(states.begin(), states.end());
        states.erase(std::unique(states.begin(), states.end()), states.end());
    }
    m.labels_ = std::move(labels_);
    m.initial_ = initial_;
    m.discount_ = discount_;

    std::sort(absorbing_.begin(), absorbing_.end());
    absorbing_.erase(std::unique(absorbing_.begin(), absorbing_.end()), absorbing_.end());
    m.absorbing_mask_.assign(num_states_, 0);
    for (StateId s : absorbing_)
        m.absorbing_mask_[s] = 1;
    m.absorbing_ = std::move(absorbing_);
    return m;
}

// ---------------------------------------------------------------------------
// Validation

std::string ValidationIssue::to_string() const {
    std::string out;
    if (state) {
        out += "state " + std::to_string(*state);
        if (action)
            out += " action " + std::to_string(*action);
        out += ": ";
    }
    return out + message;
}

ValidationReport validate_mdp(const Mdp& mdp) {
    ValidationReport report;
    const std::size_t n = mdp.num_states();
    if (n == 0) {
        report.push_back({std::nullopt, std::nullopt, "model has no states"});
        return report;
    }
    if (mdp.initial_state() >= n)
        report.push_back({std::nullopt, std::nullopt, "initial state out of range"});
    if (!(mdp.discount() > 0.0 && mdp.discount() <= 1.0))
        report.push_back({std::nullopt, std::nullopt, "discount " + short_real(mdp.discount()) + " not in (0,1]"});

    for (StateId s = 0; s < n; ++s) {
        const std::size_t actions = mdp.num_actions(s);
        if (actions == 0) {
            report.push_back({s, std::nullopt, "no enabled action"});
            continue;
        }
        for (ActionId a = 0; a < actions; ++a) {
            double sum = 0.0;
            bool bad_entry = false;
            for (const Transition& t : mdp.transitions(s, a)) {
                if (!(t.probability >= 0.0 && t.probability <= 1.0))
                    bad_entry = true;
                sum += t.probability;
            }
            if (bad_entry)
                report.push_back({s, a, "probability outside [0,1]"});
            if (!(std::abs(sum - 1.0) <= kStochasticTolerance))
                report.push_back({s, a, "row sum " + short_real(sum) + " ≠ 1"});
        }
        if (mdp.is_absorbing(s)) {
            bool has_self_loop = false;
            for (ActionId a = 0; a < actions; ++a) {
                auto row = mdp.transitions(s, a);
                double self = 0.0;
                for (const Transition& t : row)
                    if (t.target == s)
                        self += t.probability;
                if (std::abs(self - 1.0) <= kStochasticTolerance)
                    has_self_loop = true;
            }
            if (!has_self_loop)
                report.push_back({s, std::nullopt, "absorbing state lacks a probability-1 self-loop"});
        }
    }
    for (const auto& [name, states] : mdp.labels()) {
        if (name.empty())
            report.push_back({std::nullopt, std::nullopt, "empty label name"});
        for (StateId s : states)
            if (s >= n)
                report.push_back({std::nullopt, std::nullopt, "label '" + name + "' names state " +
                                                                  std::to_string(s) + " out of range"});
    }
    return report;
}

// ---------------------------------------------------------------------------
// StochasticPolicy

StochasticPolicy::StochasticPolicy(const Mdp& mdp)
    : offsets_(mdp.state_choice_offsets().begin(), mdp.state_choice_offsets().end()),
      probs_(mdp.num_choices(), 0.0) {}

StochasticPolicy::StochasticPolicy(std::span<const std::size_t> choice_offsets)
    : offsets_(choice_offsets.begin(), choice_offsets.end()),
      probs_(choice_offsets.empty() ? 0 : choice_offsets.back(), 0.0) {
    if (offsets_.empty() || offsets_.front() != 0)
        throw InvalidArgument("choice offsets must start at 0");
}

StochasticPolicy StochasticPolicy::uniform(const Mdp& mdp) {
    StochasticPolicy p(mdp);
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        auto r = p.row(s);
        std::fill(r.begin(), r.end(), 1.0 / static_cast<double>(r.size()));
    }
    return p;
}

StochasticPolicy StochasticPolicy::deterministic(const Mdp& mdp, std::span<const ActionId> actions) {
    if (actions.size() != mdp.num_states())
        throw InvalidArgument("one action per state required");
    StochasticPolicy p(mdp);
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        if (actions[s] >= mdp.num_actions(s))
            throw InvalidArgument("action-not-enabled: state " + std::to_string(s) + " action " +
                                  std::to_string(actions[s]));
        p.row(s)[actions[s]] = 1.0;
    }
    return p;
}

std::optional<ActionId> StochasticPolicy::deterministic_action(StateId s) const {
    auto r = row(s);
    for (ActionId a = 0; a < r.size(); ++a)
        if (r[a] == 1.0)
            return a;
    return std::nullopt;
}

bool StochasticPolicy::is_deterministic() const {
    for (StateId s = 0; s < num_states(); ++s)
        if (!deterministic_action(s))
            return false;
    return true;
}

bool StochasticPolicy::same_shape(const Mdp& mdp) const {
    auto o = mdp.state_choice_offsets();
    return std::equal(offsets_.begin(), offsets_.end(), o.begin(), o.end());
}

void validate_policy(const Mdp& mdp, const StochasticPolicy& policy) {
    if (policy.num_states() != mdp.num_states())
        throw InvalidArgument("undefined-policy-state: policy covers " + std::to_string(policy.num_states()) +
                              " states, model has " + std::to_string(mdp.num_states()));
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        if (policy.num_actions(s) > mdp.num_actions(s))
            throw InvalidArgument("action-not-enabled: state " + std::to_string(s));
        if (policy.num_actions(s) < mdp.num_actions(s))
            throw InvalidArgument("undefined-policy-state: state " + std::to_string(s) +
                                  " has fewer policy entries than enabled actions");
        double sum = 0.0;
        for (double p : policy.row(s)) {
            if (!(p >= 0.0))
                throw InvalidArgument("invalid-distribution: negative probability at state " + std::to_string(s));
            sum += p;
        }
        if (sum == 0.0)
            throw InvalidArgument("undefined-policy-state: state " + std::to_string(s));
        if (std::abs(sum - 1.0) > kStochasticTolerance)
            throw InvalidArgument("invalid-distribution: state " + std::to_string(s) + " sums to " + short_real(sum));
    }
}

// ---------------------------------------------------------------------------
// MarkovChain

MarkovChain MarkovChain::from_rows(const std::vector<std::vector<Transition>>& rows, LabelMap labels,
                                   StateId initial, std::vector<double> rewards, double discount) {
    MarkovChain c;
    c.offsets_.assign(1, 0);
    for (const auto& row : rows) {
        c.transitions_.insert(c.transitions_.end(), row.begin(), row.end());
        c.offsets_.push_back(c.transitions_.size());
    }
    for (const Transition& t : c.transitions_)
        if (t.target >= rows.size())
            throw InvalidArgument("chain successor out of range");
    if (initial >= rows.size())
        throw InvalidArgument("initial state out of range");
    if (rewards.empty())
        rewards.assign(rows.size(), 0.0);
    if (rewards.size() != rows.size())
        throw InvalidArgument("reward vector has wrong length");
    for (auto& [name, states] : labels) {
        std::sort(states.begin(), states.end());
        states.erase(std::unique(states.begin(), states.end()), states.end());
        if (!states.empty() && states.back() >= rows.size())
            throw InvalidArgument("label '" + name + "' out of range");
    }
    c.labels_ = std::move(labels);
    c.initial_ = initial;
    c.rewards_ = std::move(rewards);
    c.discount_ = discount;
    return c;
}

StateMask MarkovChain::label_mask(const std::string& name) const {
    return mask_from_label(labels_, name, num_states());
}

std::size_t MarkovChain::reachable_transitions() const {
    StateMask seen(num_states(), 0);
    std::vector<StateId> stack{initial_};
    seen[initial_] = 1;
    std::size_t count = 0;
    while (!stack.empty()) {
        StateId s = stack.back();
        stack.pop_back();
        for (const Transition& t : successors(s)) {
            ++count;
            if (!seen[t.target]) {
                seen[t.target] = 1;
                stack.push_back(t.target);
            }
        }
    }
    return count;
}

MarkovChain induce_chain(const Mdp& mdp, const StochasticPolicy& policy) {
    validate_policy(mdp, policy);
    const std::size_t n = mdp.num_states();
    MarkovChain c;
    c.offsets_.assign(1, 0);
    c.offsets_.reserve(n + 1);
    c.rewards_.assign(n, 0.0);

    std::vector<Transition> row;
    for (StateId s = 0; s < n; ++s) {
        row.clear();
        double reward = mdp.state_reward(s);
        const std::size_t actions = mdp.num_actions(s);
        for (ActionId a = 0; a < actions; ++a) {
            const double w = policy(s, a);
            if (w == 0.0)
                continue;
            reward += w * mdp.choice_reward(mdp.choice(s, a));
            for (const Transition& t : mdp.transitions(s, a))
                row.push_back({t.target, w * t.probability});
        }
        std::sort(row.begin(), row.end(), [](const Transition& x, const Transition& y) { return x.target < y.target; });
        std::size_t first = c.transitions_.size();
        for (const Transition& t : row) {
            if (c.transitions_.size() > first && c.transitions_.back().target == t.target)
                c.transitions_.back().probability += t.probability;
            else
                c.transitions_.push_back(t);
        }
        c.offsets_.push_back(c.transitions_.size());
        c.rewards_[s] = reward;
    }
    c.labels_ = mdp.labels();
    c.initial_ = mdp.initial_state();
    c.discount_ = mdp.discount();
    return c;
}

StochasticPolicy interpolate_policies(const StochasticPolicy& p, const StochasticPolicy& q, double t) {
    if (!p.same_shape(q))
        throw InvalidArgument("mismatched state/action spaces");
    if (!(t >= 0.0 && t <= 1.0))
        throw InvalidArgument("interpolation weight outside [0,1]");
    StochasticPolicy out = p;
    auto dst = out.values();
    auto src = q.values();
    for (std::size_t i = 0; i < dst.size(); ++i)
        dst[i] = (1.0 - t) * dst[i] + t * src[i];
    return out;
}

}  // namespace eau
