#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "eau/checker.hpp"
#include "eau/envs.hpp"
#include "eau/error.hpp"
#include "eau/explore.hpp"

using namespace eau;

namespace {

// s0: a0 moves to the safe sink s2, a1 reaches the rewarding but unsafe s1 with probability 0.5.
Mdp risky() {
    MdpBuilder b(3);
    b.add_transition(0, 0, 2, 1.0).add_transition(0, 1, 0, 0.5).add_transition(0, 1, 1, 0.5);
    b.add_transition(1, 0, 1, 1.0).add_absorbing(1).add_label("bad", 1);
    b.add_transition(2, 0, 2, 1.0).add_absorbing(2);
    b.set_state_reward(1, 5.0).set_discount(0.9);
    return std::move(b).build();
}

}  // namespace

TEST_CASE("rng is reproducible and well-formed") {
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i)
        CHECK(a.next() == b.next());
    Rng r(6);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(r.below(7) < 7);
    }
    const auto d = r.dirichlet(4);
    CHECK(std::accumulate(d.begin(), d.end(), 0.0) == doctest::Approx(1.0));
    const auto s = r.sample_distinct(10, 10);
    CHECK(std::set<std::uint64_t>(s.begin(), s.end()).size() == 10);
}

TEST_CASE("shield permits actions by one-step safety") {
    const Mdp m = risky();
    const PathFormula safe = PathFormula::globally(StateFormula::negation(StateFormula::atom("bad")));
    const Shield strict = build_shield(m, safe, 0.9);
    CHECK(strict.permits(0, 0));
    CHECK_FALSE(strict.permits(0, 1));
    CHECK(shielded_step(strict, 0, 1) == 0);
    const Shield loose = build_shield(m, safe, 0.5);
    CHECK(loose.permits(0, 1));
    // No action is safe in the bad state, so its best action is permitted.
    CHECK(strict.permits(1, 0));
    CHECK_THROWS_AS(build_shield(m, safe, 1.5), InvalidArgument);
}

TEST_CASE("shielded episodes never take a forbidden action") {
    const Mdp m = windy_drone();
    const PathFormula safe = PathFormula::globally(StateFormula::negation(StateFormula::atom("playground")));
    const Shield shield = build_shield(m, safe, 0.75);
    Rng rng(3);
    Rng policy_rng(4);
    const StochasticPolicy p = random_policy(m, policy_rng);
    for (int i = 0; i < 200; ++i) {
        const Episode ep = run_episode(m, p, &shield, 0.5, 50, rng);
        CHECK(ep.states.size() == ep.actions.size() + 1);
        CHECK(ep.states.front() == m.initial_state());
        for (std::size_t k = 0; k < ep.actions.size(); ++k)
            CHECK(shield.permits(ep.states[k], ep.actions[k]));
    }
}

TEST_CASE("episodes stop at terminal states and the step cap") {
    const Mdp m = windy_drone();
    Rng rng(9);
    const StochasticPolicy p = StochasticPolicy::uniform(m);
    const StateMask terminal = terminal_states(m);
    CHECK(terminal[4]);
    CHECK_FALSE(terminal[7]);
    for (int i = 0; i < 100; ++i) {
        const Episode ep = run_episode(m, p, nullptr, 0.1, 10, rng);
        CHECK(ep.actions.size() <= 10);
        for (std::size_t k = 0; k + 1 < ep.states.size(); ++k)
            CHECK_FALSE(terminal[ep.states[k]]);
        if (ep.actions.size() < 10)
            CHECK(terminal[ep.states.back()]);
    }
    CHECK_THROWS_AS(run_episode(m, p, nullptr, 1.5, 10, rng), InvalidArgument);
}

TEST_CASE("reward estimates") {
    RewardEstimate e(3, -2.0);
    CHECK(e.value(1) == -2.0);
    CHECK_FALSE(e.known(1));
    e.observe(1, 4.0);
    CHECK(e.known(1));
    CHECK(e.values() == std::vector<double>{-2.0, 4.0, -2.0});
}

TEST_CASE("learning records one row per episode and is seed-deterministic") {
    const Mdp m = windy_drone();
    const Obligation ob{parse_formula("P>=0.75 [ G !playground ]")};
    ExplorationOptions o;
    o.episodes = 15;
    const ExplorationResult a = learn_with_exploration(m, ob, o, 11);
    const ExplorationResult b = learn_with_exploration(m, ob, o, 11);
    REQUIRE(a.records.size() == 16);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].iteration == i);
        CHECK(a.records[i].probability == b.records[i].probability);
        CHECK(a.records[i].utility == b.records[i].utility);
    }
    CHECK(a.policy == b.policy);
    CHECK_NOTHROW(validate_policy(m, a.policy));
    const TraceRecord& last = a.records.back();
    CHECK(last.utility == doctest::Approx(expected_utility(m, a.policy)));

    o.episodes = 0;
    CHECK(learn_with_exploration(m, ob, o, 11).records.size() == 1);
}

TEST_CASE("exploration update picks the gradient by satisfaction") {
    const Mdp m = risky();
    const Obligation ob{parse_formula("P>=0.9 [ G !bad ]")};
    const StochasticPolicy p = StochasticPolicy::uniform(m);
    const double f = satisfaction_probability(m, p, ob.path());
    CHECK_FALSE(ob.satisfied_by(f));
    const StochasticPolicy safer = exploration_update(m, ob, p, f, ExplorationUpdate::Alternating, 0.1, false);
    CHECK(safer(0, 0) > p(0, 0));
    const StochasticPolicy greedy = exploration_update(m, ob, p, f, ExplorationUpdate::UtilityOnly, 0.1, false);
    CHECK(greedy(0, 1) > p(0, 1));
}

TEST_CASE("aggregation uses the Student-t 80% interval") {
    std::vector<ExplorationResult> runs(3);
    const double probs[] = {0.1, 0.2, 0.6};
    for (int i = 0; i < 3; ++i)
        runs[i].records = {{0, probs[i], 1.0}, {1, 0.5, 2.0 * i}};
    const auto rows = aggregate_runs(runs);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].mean_probability == doctest::Approx(0.3));
    // s = sqrt(0.07), t_{0.9, 2} = 1.885618...
    const double half = 1.8856180831641267 * std::sqrt(0.07) / std::sqrt(3.0);
    CHECK(rows[0].ci_high - rows[0].mean_probability == doctest::Approx(half).epsilon(1e-9));
    CHECK(rows[1].ci_low == doctest::Approx(0.5));
    CHECK(rows[1].mean_utility == doctest::Approx(2.0));
    const std::string csv = format_aggregate_csv(rows);
    CHECK(csv.rfind("episode,mean_probability,ci80_low,ci80_high,mean_utility,utility_ci80_low,utility_ci80_high\n",
                    0) == 0);
    CHECK(aggregate_runs({}).empty());
}
