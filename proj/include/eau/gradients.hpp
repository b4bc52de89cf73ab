#pragma once

#include <cstddef>
#include <vector>

#include "eau/formula.hpp"
#include "eau/mdp.hpp"

namespace eau {

enum class Objective { Probability, Utility };

struct GradientEntry {
    StateId state;
    ActionId action;
    double value;

    friend bool operator==(const GradientEntry&, const GradientEntry&) = default;
};

/**
 * Partial derivatives with respect to the raw action probabilities π(a|s),
 * one entry per enabled action of every non-absorbing state, in (state,
 * action) order.
 */
struct GradientVector {
    Objective objective = Objective::Probability;
    std::vector<GradientEntry> entries;

    std::size_t size() const noexcept { return entries.size(); }
    /// Scatter into a flat vector over the MDP's choices (zeros elsewhere).
    std::vector<double> to_choices(const Mdp& mdp) const;
};

/// f(π): probability of `path` from the initial state on the induced chain.
double satisfaction_probability(const Mdp& mdp, const StochasticPolicy& policy, const PathFormula& path);

/**
 * ∂f/∂π(a|s) = y(s) · Σ_s' T(s,a,s') x(s'), where x holds the per-state
 * satisfaction probabilities and y the expected number of visits to s from
 * the initial state before the outcome is decided. Globally is handled as
 * −∇P(F ¬φ). States trapped forever under π get zero entries.
 * Path content must be Prob-free.
 */
GradientVector probability_gradient(const Mdp& mdp, const StochasticPolicy& policy, const PathFormula& path);

/// ∂V(initial)/∂π(a|s) = d(s) · (R(s,a) + γ Σ_s' T(s,a,s') V(s')), d the
/// discounted occupancy from the initial state.
GradientVector utility_gradient(const Mdp& mdp, const StochasticPolicy& policy);

/// Keeps the k entries of largest magnitude (earlier entries win ties) and
/// zeroes the rest. Throws InvalidArgument unless 1 <= k <= size.
GradientVector top_k_mask(const GradientVector& g, std::size_t k);

}  // namespace eau
