#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eau/formula.hpp"
#include "eau/linear.hpp"
#include "eau/mdp.hpp"

namespace eau {

/// Q(s,a) over an MDP's choice layout.
struct QTable {
    std::vector<std::size_t> offsets{0};
    std::vector<double> values;

    std::size_t num_states() const noexcept { return offsets.size() - 1; }
    double operator()(StateId s, ActionId a) const { return values[offsets[s] + a]; }
    std::span<const double> row(StateId s) const {
        return {values.data() + offsets[s], offsets[s + 1] - offsets[s]};
    }
};

struct ValueIterationOptions {
    double tolerance = 1e-10;
    std::size_t max_iterations = 100'000;
};

struct ValueIterationResult {
    std::vector<double> values;
    QTable q;
    std::size_t iterations = 0;
};

/// Gauss-Seidel Bellman iteration: Q(s,a) = R(s) + R(s,a) + γ Σ T(s,a,s') V(s').
/// Throws SolverError if the sup-norm change stays above tolerance.
ValueIterationResult value_iteration(const Mdp& mdp, const ValueIterationOptions& options = {});

/// Lowest-indexed action within `tie_tol` of the row maximum, per state.
StochasticPolicy extract_optimal_policy(const QTable& q, double tie_tol = 1e-9);

/// Tie-broken reward-optimal deterministic policy π*.
StochasticPolicy optimal_policy(const Mdp& mdp);

/// V^π for every state, from V = R_π + γ P_π V.
std::vector<double> evaluate_policy(const Mdp& mdp, const StochasticPolicy& policy, const SolverOptions& options = {});
/// V^π at the initial state.
double expected_utility(const Mdp& mdp, const StochasticPolicy& policy);

struct CheckResult {
    bool verdict = false;
    /// Probability of the outermost path formula; set iff the formula is a Prob node.
    std::optional<double> probability;
    std::optional<StochasticPolicy> witness;
};

// ---------------------------------------------------------------------------
// Markov chains

/**
 * The linear system behind P(lhs U rhs) on a chain after graph precomputation:
 * states surely reaching rhs (`yes`), never reaching it (`no`), and the rest
 * (`maybe`), with x = b + A x over the maybe states in increasing id order.
 */
struct UntilSystem {
    StateMask yes;
    StateMask no;
    std::vector<StateId> maybe;
    /// State id -> row of A, or -1 outside `maybe`.
    std::vector<std::int64_t> index;
    SparseMatrix a;
    std::vector<double> b;
};

UntilSystem build_until_system(const MarkovChain& chain, const StateMask& lhs, const StateMask& rhs);
/// Per-state probabilities: 1 on yes, 0 on no, the solved x elsewhere.
std::vector<double> solve_until(const UntilSystem& system, const SolverOptions& options = {});

/// States of `chain` satisfying `f`, evaluated bottom-up.
StateMask satisfying_states(const MarkovChain& chain, const StateFormula& f);
/// Per-state probability of `path` on `chain`.
std::vector<double> path_probabilities(const MarkovChain& chain, const PathFormula& path);

CheckResult check_pctl_mc(const MarkovChain& chain, const StateFormula& f, StateId state);

// ---------------------------------------------------------------------------
// MDPs

/// Satisfying states of a Prob-free formula over MDP labels.
StateMask propositional_states(const Mdp& mdp, const StateFormula& f);

enum class OptimizationMode { Max, Min };

struct ReachResult {
    std::vector<double> probabilities;
    StochasticPolicy policy;
};

/**
 * Optimal probability of `path` over all schedulers, per state, with a
 * deterministic scheduler attaining it everywhere. Path content must be
 * Prob-free (UnsupportedError otherwise).
 */
ReachResult max_reach_mdp(const Mdp& mdp, const PathFormula& path, OptimizationMode mode);

/// There is a policy making `f` (a Prob node) hold at `state`.
CheckResult check_strategic_stit(const Mdp& mdp, const StateFormula& f, StateId state);

/// `f` holds at `state` on the chain induced by the tie-broken optimal policy.
CheckResult check_strategic_ought(const Mdp& mdp, const StateFormula& f, StateId state);
/// As above with π* supplied by the caller.
CheckResult check_ought_under(const Mdp& mdp, const StochasticPolicy& optimal, const StateFormula& f, StateId state);

struct CtdResult {
    /// Primary obligation checked at the acting state.
    CheckResult duty;
    /// Contrary-to-duty obligation checked at each violation state.
    std::vector<std::pair<StateId, CheckResult>> cases;
    /// Conjunction over `cases`.
    bool verdict = false;
};

/**
 * Checks the contrary-to-duty obligation `ctd` as an ought at every state of
 * `violations`, each of which must be a one-step successor of `state`.
 * Throws InvalidArgument for an empty violation set.
 */
CtdResult check_ctd(const Mdp& mdp, const StateFormula& duty, std::span<const StateId> violations,
                    const StateFormula& ctd, StateId state);

/// Successors of `state` (under any enabled action) that carry `label`.
std::vector<StateId> violation_successors(const Mdp& mdp, StateId state, const std::string& label);

}  // namespace eau
