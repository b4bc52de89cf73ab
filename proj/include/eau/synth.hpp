#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "eau/formula.hpp"
#include "eau/gradients.hpp"
#include "eau/mdp.hpp"

namespace eau {

/// Obligation content P⋈ρ[ψ]. ≥ and > ask to raise f, ≤ and < to lower it.
class Obligation {
public:
    /// Throws InvalidArgument unless `content` is a Prob node.
    explicit Obligation(StateFormula content);

    const StateFormula& content() const noexcept { return content_; }
    const PathFormula& path() const { return content_.path(); }
    Comparison comparison() const { return content_.comparison(); }
    double threshold() const { return content_.threshold(); }
    bool raises() const { return is_lower_bound(comparison()); }
    bool satisfied_by(double f) const { return compare(f, comparison(), threshold()); }

private:
    StateFormula content_;
};

struct TraceRecord {
    std::size_t iteration;
    double probability;
    double utility;
};

struct SynthesisTrace {
    std::vector<TraceRecord> records;
    /// The returned policy.
    StochasticPolicy policy;
    /// Index into `records` of the returned policy.
    std::size_t selected = 0;
    /// Whether the returned policy satisfies the obligation.
    bool satisfied = false;
};

struct GradientOptions {
    double eta = 1.0;
    std::size_t iterations = 200;
    /// Number of gradient entries kept per step; 0 keeps all of them.
    std::size_t k = 0;
};

/**
 * π^φ: a deterministic policy optimizing f in the obligation's direction.
 * Among f-optimal choices it prefers higher reward, falling back to the plain
 * reachability scheduler when that refinement would lose probability.
 */
StochasticPolicy max_sat_policy(const Mdp& mdp, const Obligation& ob);

/// Evaluates (1 - i/steps)·π^φ + (i/steps)·π* for i = 0..steps and returns the
/// highest-utility interpolant satisfying the obligation (π^φ if none does).
SynthesisTrace line_search(const Mdp& mdp, const Obligation& ob, std::size_t steps = 100);

/// Steps along the mean of the normalized utility and probability gradients.
/// Returns the last iterate.
SynthesisTrace average_gradient(const Mdp& mdp, const Obligation& ob, const GradientOptions& options = {});

/// Follows the probability gradient while the obligation is violated and the
/// utility gradient otherwise. Returns the best-utility satisfying iterate,
/// or the last iterate when none satisfies.
SynthesisTrace alternating_gradient(const Mdp& mdp, const Obligation& ob, const GradientOptions& options = {});

/// One policy-update step shared by the gradient methods: each gradient is
/// centered per state and scaled to unit L2 norm before use.
std::vector<double> normalized_direction(const Mdp& mdp, const GradientVector& g);

/// Reward-optimal policy mixed with `noise` uniform mass.
StochasticPolicy softened_optimal_policy(const Mdp& mdp, double noise = 1e-3);

/// Applies `direction` (over choices) with step `eta` and projects every
/// non-absorbing row back onto the simplex.
StochasticPolicy gradient_step(const Mdp& mdp, const StochasticPolicy& policy, const std::vector<double>& direction,
                               double eta);

/// Euclidean projection onto the probability simplex. Throws InvalidArgument
/// on an empty or non-finite input.
std::vector<double> project_simplex(const std::vector<double>& v);

struct GridResult {
    std::vector<double> etas;
    std::vector<std::size_t> ks;
    /// Row-major |etas| x |ks|; NaN marks a failed cell.
    std::vector<double> probability;
    std::vector<double> utility;

    double probability_at(std::size_t i, std::size_t j) const { return probability[i * ks.size() + j]; }
    double utility_at(std::size_t i, std::size_t j) const { return utility[i * ks.size() + j]; }
};

/// alternating_gradient for every (η, k) cell. `jobs` > 1 runs cells on
/// worker threads; results do not depend on it.
GridResult grid_search(const Mdp& mdp, const Obligation& ob, const std::vector<double>& etas,
                       const std::vector<std::size_t>& ks, std::size_t iterations, std::size_t jobs = 1);

/// `eta,k,final_probability,final_utility`, one row per cell (k=0 printed as the entry count).
std::string format_grid_csv(const GridResult& grid, std::size_t num_parameters);
/// One matrix: rows are η, columns are k.
std::string format_grid_matrix(const GridResult& grid, bool utility, std::size_t num_parameters);

std::string format_trace_csv(const SynthesisTrace& trace);

enum class ImplicationBranch { NegatedAntecedent, Consequent };

struct ImplicationResult {
    ImplicationBranch branch;
    StochasticPolicy policy;
    SynthesisTrace negated_antecedent;
    SynthesisTrace consequent;
};

/**
 * Synthesizes for `antecedent -> consequent` as the better of its disjuncts:
 * ¬antecedent (the negated bound) and the consequent, each by the
 * alternating method. Throws Error when neither disjunct is met.
 */
ImplicationResult synth_implication(const Mdp& mdp, const StateFormula& antecedent, const StateFormula& consequent,
                                    const GradientOptions& options = {});

}  // namespace eau
