#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "eau/checker.hpp"
#include "eau/envs.hpp"
#include "eau/error.hpp"
#include "eau/synth.hpp"
#include "oracles.hpp"

using namespace eau;

namespace {

const Obligation kSafe{parse_formula("P>=0.75 [ G !playground ]")};

}  // namespace

TEST_CASE("obligations") {
    CHECK_THROWS_AS(Obligation(parse_formula("a")), InvalidArgument);
    const Obligation low{parse_formula("P<0.3 [ F a ]")};
    CHECK_FALSE(low.raises());
    CHECK(low.satisfied_by(0.2));
    CHECK_FALSE(low.satisfied_by(0.3));
    CHECK(kSafe.raises());
    CHECK(kSafe.satisfied_by(0.75));
}

TEST_CASE("simplex projection") {
    CHECK(project_simplex({0.2, 0.3, 0.5}) == std::vector<double>{0.2, 0.3, 0.5});
    const auto p = project_simplex({2.0, 0.0});
    CHECK(p[0] == doctest::Approx(1.0));
    CHECK(p[1] == doctest::Approx(0.0));
    const auto q = project_simplex({0.5, 0.5, 0.5});
    for (double x : q)
        CHECK(x == doctest::Approx(1.0 / 3));
    CHECK_THROWS_AS(project_simplex({}), InvalidArgument);
    CHECK_THROWS_AS(project_simplex({1.0, NAN}), InvalidArgument);

    std::mt19937_64 gen(41);
    std::normal_distribution<double> n(0.0, 2.0);
    for (int i = 0; i < 300; ++i) {
        const std::vector<double> v{n(gen), n(gen), n(gen)};
        const auto got = project_simplex(v);
        CHECK(std::accumulate(got.begin(), got.end(), 0.0) == doctest::Approx(1.0));
        const auto grid = oracle::grid_projection(v, 400);
        for (int k = 0; k < 3; ++k) {
            CHECK(got[k] >= 0.0);
            CHECK(std::abs(got[k] - grid[k]) <= 2.0 / 400);
        }
    }
}

TEST_CASE("normalized directions are centered unit vectors") {
    const Mdp m = windy_drone();
    const GradientVector g = utility_gradient(m, StochasticPolicy::uniform(m));
    const std::vector<double> d = normalized_direction(m, g);
    double norm = 0.0;
    for (double x : d)
        norm += x * x;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0));
    for (StateId s = 0; s < m.num_states(); ++s) {
        double sum = 0.0;
        for (ActionId a = 0; a < m.num_actions(s); ++a)
            sum += d[m.choice(s, a)];
        CHECK(std::abs(sum) < 1e-12);
    }
}

TEST_CASE("gradient steps keep valid policies") {
    const Mdp m = windy_drone();
    std::vector<double> dir(m.num_choices());
    std::mt19937_64 gen(42);
    std::normal_distribution<double> n;
    for (double& x : dir)
        x = n(gen);
    const StochasticPolicy p = gradient_step(m, StochasticPolicy::uniform(m), dir, 5.0);
    CHECK_NOTHROW(validate_policy(m, p));
}

TEST_CASE("max-sat policy attains the optimal probability") {
    const Mdp m = windy_drone();
    const StochasticPolicy p = max_sat_policy(m, kSafe);
    CHECK(p.is_deterministic());
    const double best = max_reach_mdp(m, kSafe.path(), OptimizationMode::Max).probabilities[m.initial_state()];
    CHECK(satisfaction_probability(m, p, kSafe.path()) == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("line search on the windy drone") {
    const Mdp m = windy_drone();
    const SynthesisTrace t = line_search(m, kSafe, 100);
    REQUIRE(t.records.size() == 101);
    CHECK(t.satisfied);
    CHECK(kSafe.satisfied_by(t.records[t.selected].probability));
    CHECK(t.records.back().utility == doctest::Approx(expected_utility(m, optimal_policy(m))).epsilon(1e-9));
    for (const TraceRecord& r : t.records)
        if (kSafe.satisfied_by(r.probability))
            CHECK(r.utility <= t.records[t.selected].utility + 1e-12);
    // The path dips below both endpoints: utility is not concave along the line.
    double lowest = t.records.front().utility;
    for (const TraceRecord& r : t.records)
        lowest = std::min(lowest, r.utility);
    CHECK(lowest < t.records.front().utility - 1.0);
}

TEST_CASE("alternating gradient returns its best satisfying iterate") {
    const Mdp m = windy_drone();
    GradientOptions o;
    o.eta = 0.1;
    o.iterations = 60;
    const SynthesisTrace t = alternating_gradient(m, kSafe, o);
    CHECK(t.records.size() == 61);
    CHECK(t.satisfied);
    const TraceRecord& chosen = t.records[t.selected];
    CHECK(satisfaction_probability(m, t.policy, kSafe.path()) == doctest::Approx(chosen.probability));
    CHECK(expected_utility(m, t.policy) == doctest::Approx(chosen.utility));
    for (const TraceRecord& r : t.records)
        if (kSafe.satisfied_by(r.probability))
            CHECK(r.utility <= chosen.utility + 1e-12);
}

TEST_CASE("average gradient returns the last iterate") {
    const Mdp m = windy_drone();
    GradientOptions o;
    o.iterations = 20;
    const SynthesisTrace t = average_gradient(m, kSafe, o);
    CHECK(t.selected == t.records.size() - 1);
    CHECK(expected_utility(m, t.policy) == doctest::Approx(t.records.back().utility));
}

TEST_CASE("upper-bound obligations drive the probability down") {
    const Mdp m = windy_drone();
    const Obligation ob{parse_formula("P<=0.2 [ F playground ]")};
    GradientOptions o;
    o.iterations = 100;
    const SynthesisTrace t = alternating_gradient(m, ob, o);
    CHECK(t.satisfied);
    CHECK(satisfaction_probability(m, t.policy, ob.path()) <= 0.2 + 1e-12);
}

TEST_CASE("grid search shape and thread independence") {
    const Mdp m = windy_drone();
    const std::vector<double> etas{0.1, 1.0};
    const std::vector<std::size_t> ks{4, 0};
    const GridResult a = grid_search(m, kSafe, etas, ks, 20, 1);
    const GridResult b = grid_search(m, kSafe, etas, ks, 20, 2);
    CHECK(a.probability.size() == 4);
    CHECK(a.probability == b.probability);
    CHECK(a.utility == b.utility);
    GradientOptions o;
    o.eta = 1.0;
    o.iterations = 20;
    const SynthesisTrace direct = alternating_gradient(m, kSafe, o);
    CHECK(a.utility_at(1, 1) == direct.records[direct.selected].utility);
    const std::string csv = format_grid_csv(a, 40);
    CHECK(csv.rfind("eta,k,final_probability,final_utility\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("implication picks the better disjunct") {
    const Mdp m = windy_drone();
    GradientOptions o;
    o.iterations = 60;
    const ImplicationResult r =
        synth_implication(m, parse_formula("P>=0.75 [ F playground ]"), parse_formula("P>=0.75 [ G !playground ]"), o);
    const double neg = r.negated_antecedent.records[r.negated_antecedent.selected].utility;
    const double con = r.consequent.records[r.consequent.selected].utility;
    if (r.branch == ImplicationBranch::NegatedAntecedent)
        CHECK(neg >= con);
    else
        CHECK(con >= neg);
    CHECK(satisfaction_probability(m, r.policy, parse_formula("P>=0.75 [ F playground ]").path()) < 0.75 + 1e-12);
}

TEST_CASE("trace CSV") {
    SynthesisTrace t;
    t.records = {{0, 0.5, 1.25}, {1, 0.75, 2.0}};
    const std::string csv = format_trace_csv(t);
    CHECK(csv.find("iteration") == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
