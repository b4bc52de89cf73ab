// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "eau/checker.hpp"
#include "eau/envs.hpp"
#include "eau/explore.hpp"
#include "eau/gradients.hpp"
#include "eau/mdp_io.hpp"
#include "eau/synth.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace eau;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

std::string fmt(double x, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << x;
    return s.str();
}

// 1 -------------------------------------------------------------------------

void oracle_equivalence(Outcome& out) {
    const auto start = Clock::now();
    std::mt19937_64 gen(20240601);
    oracle::RandomModel spec;
    std::size_t stit_mismatch = 0, ought_mismatch = 0, nested = 0;
    for (int i = 0; i < 500; ++i) {
        const Mdp mdp = oracle::random_mdp(gen, spec);
        const StateId s = mdp.initial_state();

        const StateFormula f = oracle::random_prob(gen);
        const bool maximize = is_lower_bound(f.comparison());
        const double extreme = oracle::extreme_probability(mdp, f.path(), s, maximize);
        if (check_strategic_stit(mdp, f, s).verdict != compare(extreme, f.comparison(), f.threshold()))
            ++stit_mismatch;

        // Ought content may nest probability operators; every other instance does.
        StateFormula g = f;
        if (i % 2) {
            const StateFormula inner = oracle::random_prob(gen);
            g = StateFormula::probability(f.comparison(), f.threshold(),
                                          PathFormula::eventually(StateFormula::conjunction(
                                              inner, oracle::random_atomic(gen))));
            ++nested;
        }
        const StochasticPolicy star = oracle::optimal_policy(mdp);
        const bool expected = oracle::states_of(oracle::dense_chain(mdp, star), g)[s] != 0;
        if (check_strategic_ought(mdp, g, s).verdict != expected)
            ++ought_mismatch;
    }

    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        const oracle::AcyclicChain c = oracle::random_acyclic_chain(gen);
        const PathFormula path = oracle::random_path(gen);
        const double expected = oracle::enumerate_acyclic(c.dense, path, 0);
        const StateFormula f = StateFormula::probability(Comparison::GreaterEqual, 0.5, path);
        const double got = *check_pctl_mc(c.chain, f, 0).probability;
        worst = std::max(worst, std::abs(got - expected));
    }
    const double secs = seconds_since(start);
    out.detail << "stit mismatches " << stit_mismatch << "/500, ought mismatches " << ought_mismatch << "/500 ("
               << nested << " nested), max |reach - enumeration| " << fmt(worst, 3) << ", " << fmt(secs, 3) << " s";
    out.require(stit_mismatch == 0, "stit verdicts");
    out.require(ought_mismatch == 0, "ought verdicts");
    out.require(worst <= 1e-10, "acyclic probabilities within 1e-10");
    out.require(secs < 60, "runtime < 1 min");
}

// 2 -------------------------------------------------------------------------

/// Relative error of one analytic/finite-difference pair. Entries whose
/// magnitude is below the floor are compared against the floor, since the
/// central difference itself carries roughly 1e-10 of rounding noise.
double relative_error(double analytic, double fd, double floor) {
    return std::abs(analytic - fd) / std::max(std::abs(analytic), floor);
}

void gradient_correctness(Outcome& out) {
    const auto start = Clock::now();
    std::mt19937_64 gen(77);
    oracle::RandomModel spec;
    spec.min_states = spec.max_states = 10;
    spec.max_actions = 3;
    spec.max_fanout = 4;
    spec.choice_rewards = true;
    double worst_f = 0.0, worst_v = 0.0;
    std::size_t entries = 0;
    for (int i = 0; i < 200; ++i) {
        const Mdp mdp = oracle::random_mdp(gen, spec);
        const StochasticPolicy pi = oracle::interior_policy(mdp, gen);
        const PathFormula path = oracle::random_path(gen);
        const StateId init = mdp.initial_state();

        auto f = [&](const StochasticPolicy& q) {
            return oracle::path_probabilities(oracle::dense_chain(mdp, q), path)[init];
        };
        auto v = [&](const StochasticPolicy& q) { return oracle::values(oracle::dense_chain(mdp, q))(init); };

        const std::vector<double> gf = probability_gradient(mdp, pi, path).to_choices(mdp);
        const std::vector<double> gv = utility_gradient(mdp, pi).to_choices(mdp);
        for (StateId s = 0; s < mdp.num_states(); ++s) {
            double mean_f = 0.0, mean_v = 0.0;
            for (ActionId a = 0; a < mdp.num_actions(s); ++a) {
                mean_f += pi(s, a) * gf[mdp.choice(s, a)];
                mean_v += pi(s, a) * gv[mdp.choice(s, a)];
            }
            for (ActionId a = 0; a < mdp.num_actions(s); ++a) {
                const double pf = gf[mdp.choice(s, a)] - mean_f;
                const double pv = gv[mdp.choice(s, a)] - mean_v;
                worst_f = std::max(worst_f, relative_error(pf, oracle::finite_difference(f, pi, s, a), 1e-5));
                worst_v = std::max(worst_v, relative_error(pv, oracle::finite_difference(v, pi, s, a), 1e-5));
                ++entries;
            }
        }
    }
    const double secs = seconds_since(start);
    out.detail << entries << " entries per objective, max rel. err. probability " << fmt(worst_f, 3)
               << ", utility " << fmt(worst_v, 3) << ", " << fmt(secs, 3) << " s";
    out.require(worst_f < 1e-4, "probability gradient");
    out.require(worst_v < 1e-4, "utility gradient");
    out.require(secs < 60, "runtime < 1 min");
}

// 3 -------------------------------------------------------------------------

const Obligation& avoid_playground() {
    static const Obligation ob(parse_formula("P>=0.75 [ G !playground ]"));
    return ob;
}

void line_search_shape(Outcome& out) {
    const Mdp mdp = windy_drone();
    const Obligation& ob = avoid_playground();
    const SynthesisTrace t = line_search(mdp, ob, 100);
    const double f_star = satisfaction_probability(mdp, optimal_policy(mdp), ob.path());
    const double f_phi = t.records.front().probability;
    bool monotone = true;
    for (std::size_t i = 1; i < t.records.size(); ++i)
        monotone = monotone && t.records[i].probability <= t.records[i - 1].probability + 1e-9;
    std::size_t argmin = 1;
    for (std::size_t i = 1; i + 1 < t.records.size(); ++i)
        if (t.records[i].utility < t.records[argmin].utility)
            argmin = i;
    const double v0 = t.records.front().utility, v100 = t.records.back().utility;
    const double vmin = t.records[argmin].utility;
    out.detail << "f(pi_phi) " << fmt(f_phi) << ", f(pi*) " << fmt(f_star) << ", V " << fmt(v0) << " -> min "
               << fmt(vmin) << " at i=" << argmin << " -> " << fmt(v100) << ", " << t.records.size() << " points";
    out.require(t.records.size() == 101, "101 points");
    out.require(f_phi >= 0.95, "f(pi_phi) >= 0.95");
    out.require(f_star <= 0.05, "f(pi*) <= 0.05");
    out.require(monotone, "f non-increasing");
    out.require(vmin < std::min(v0, v100), "interior V minimum");
}

// 4 -------------------------------------------------------------------------

void average_vs_alternating(Outcome& out) {
    const Mdp mdp = windy_drone();
    const Obligation& ob = avoid_playground();
    GradientOptions o;
    o.eta = 1.0;
    o.iterations = 200;
    o.k = 0;
    const SynthesisTrace avg = average_gradient(mdp, ob, o);
    const SynthesisTrace alt = alternating_gradient(mdp, ob, o);
    const double v_avg = avg.records[avg.selected].utility;
    const double f_avg = avg.records[avg.selected].probability;
    const double v_alt = alt.records[alt.selected].utility;
    double trailing = 0.0;
    for (std::size_t i = alt.records.size() - 100; i < alt.records.size(); ++i)
        trailing += alt.records[i].probability;
    trailing /= 100.0;
    out.detail << "average: f " << fmt(f_avg) << " V " << fmt(v_avg) << "; alternating: V " << fmt(v_alt)
               << " (iteration " << alt.selected << ", last iterate V " << fmt(alt.records.back().utility)
               << "), ratio " << fmt(v_alt / v_avg) << ", trailing mean f " << fmt(trailing);
    out.require(v_alt >= 1.05 * v_avg, "alternating V >= 1.05 x average V");
    out.require(trailing >= 0.70 && trailing <= 0.80, "trailing mean f in [0.70, 0.80]");
    out.require(f_avg >= 0.95, "average final f >= 0.95");
}

// 5 -------------------------------------------------------------------------

void grid_search_shape(Outcome& out) {
    const Mdp mdp = windy_drone();
    const Obligation& ob = avoid_playground();
    const std::vector<double> etas{0.1, 1.0};
    const std::vector<std::size_t> ks{4, 16, 32, 48, 0};
    const GridResult g = grid_search(mdp, ob, etas, ks, 200);
    const std::size_t full = ks.size() - 1;
    bool full_ok = true, some_under = false;
    for (std::size_t i = 0; i < etas.size(); ++i) {
        out.detail << "eta " << etas[i] << ": f";
        for (std::size_t j = 0; j < ks.size(); ++j)
            out.detail << ' ' << fmt(g.probability_at(i, j), 3);
        out.detail << "; ";
        full_ok = full_ok && g.probability_at(i, full) >= ob.threshold();
        for (std::size_t j = 0; j < full; ++j)
            some_under = some_under || g.probability_at(i, j) < g.probability_at(i, full);
    }
    out.detail << "(k = 4, 16, 32, 48, all)";
    out.require(full_ok, "k=all meets rho");
    out.require(some_under, "a small-k cell underperforms");
}

// 6 -------------------------------------------------------------------------

double mean_final_probability(const Obligation& ob, ExplorationUpdate update) {
    ExplorationOptions o;
    o.episodes = 300;
    o.eta = 0.01;
    o.epsilon = 0.1;
    o.max_steps = 100;
    o.shield = true;
    o.update = update;
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 24; ++seed)
        sum += learn_with_exploration(gen_random_gridworld(seed), ob, o, seed).records.back().probability;
    return sum / 24.0;
}

void exploration(Outcome& out) {
    const auto start = Clock::now();
    const Obligation ob(parse_formula("P>0.75 [ G !coin ]"));
    const double alt = mean_final_probability(ob, ExplorationUpdate::Alternating);
    const double util = mean_final_probability(ob, ExplorationUpdate::UtilityOnly);
    const double secs = seconds_since(start);
    out.detail << "mean final f: alternating+shield " << fmt(alt) << ", utility-only+shield " << fmt(util)
               << ", gap " << fmt(alt - util) << ", " << fmt(secs, 3) << " s";
    out.require(alt - util >= 0.3, "gap >= 0.3");
    out.require(util <= 0.4, "utility-only <= 0.4");
    out.require(secs < 600, "runtime < 10 min");
}

// 7 -------------------------------------------------------------------------

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void performance(Outcome& out) {
    const Mdp mdp = gen_random_mdp(0);
    const char* formulas[] = {"P>=0.2 [ F (aq0 | aq4) ]", "P>=0.00001 [ F (aq0 | aq4) ]", "P>=0.1 [ G aq2 ]",
                              "P<0.7 [ G aq2 ]",          "P<0.7 [ F xq0 ]",              "P>=0.7 [ F xq0 ]",
                              "P>0.7 [ F xq0 ]"};
    std::vector<double> ought_s, stit_s;
    for (const char* text : formulas) {
        const StateFormula f = parse_formula(text);
        auto t = Clock::now();
        check_strategic_stit(mdp, f, mdp.initial_state());
        stit_s.push_back(seconds_since(t));
        t = Clock::now();
        check_strategic_ought(mdp, f, mdp.initial_state());
        ought_s.push_back(seconds_since(t));
    }
    const MarkovChain chain = induce_chain(mdp, optimal_policy(mdp));
    const std::size_t reachable = chain.reachable_transitions();
    const double max_ought = *std::max_element(ought_s.begin(), ought_s.end());
    const double max_stit = *std::max_element(stit_s.begin(), stit_s.end());
    out.detail << mdp.num_transitions() << " transitions; max ought " << fmt(max_ought, 3) << " s, max stit "
               << fmt(max_stit, 3) << " s, median ought " << fmt(median(ought_s), 3) << " s, median stit "
               << fmt(median(stit_s), 3) << " s; induced chain " << chain.num_transitions() << " transitions, "
               << reachable << " reachable";
    out.require(max_ought < 60, "ought < 60 s");
    out.require(max_stit < 180, "stit < 180 s");
    out.require(median(ought_s) < median(stit_s), "median ought < median stit");
    out.require(reachable < 250'000, "induced chain < 250,000 transitions");
}

// 8 -------------------------------------------------------------------------

void ctd_and_implication(Outcome& out) {
    const GridSpec spec = windy_drone_spec(20.0);
    const Mdp mdp = build_gridworld(spec);
    const StateId start = *grid_state(spec, spec.start);
    const std::vector<StateId> violations = violation_successors(mdp, start, "north");
    const CtdResult ctd = check_ctd(mdp, parse_formula("P>=0.7 [ X checkpoint ]"), violations,
                                    parse_formula("P>=0.6 [ F start ]"), start);
    out.detail << "duty " << (ctd.duty.verdict ? "holds" : "fails") << " (" << fmt(*ctd.duty.probability) << "), ";
    for (const auto& [v, r] : ctd.cases)
        out.detail << "CTD at state " << v << ": " << (r.verdict ? "holds" : "fails") << " (" << fmt(*r.probability)
                   << "); ";

    const Mdp windy = windy_drone();
    const ImplicationResult imp = synth_implication(windy, parse_formula("P>=0.75 [ F playground ]"),
                                                    parse_formula("P>=0.9 [ F checkpoint ]"));
    const double v_neg = imp.negated_antecedent.records[imp.negated_antecedent.selected].utility;
    const double v_con = imp.consequent.records[imp.consequent.selected].utility;
    out.detail << "implication: avoid-playground V " << fmt(v_neg) << ", checkpoint V " << fmt(v_con);
    out.require(!violations.empty(), "violation successor exists");
    out.require(ctd.verdict, "CTD holds");
    out.require(imp.branch == ImplicationBranch::NegatedAntecedent, "avoid-playground branch selected");
    out.require(v_neg > v_con, "avoid-playground V higher");
}

// 9 -------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Runs `args` in a fresh directory; returns stdout, exit code and every file written.
std::string run_cli(const std::string& args, const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string cmd = "cd '" + dir.string() + "' && EAU_OUTPUT_DIR=out '" + EAU_CLI_PATH + "' " + args +
                            " > stdout.txt 2> /dev/null";
    const int status = std::system(cmd.c_str());
    std::string all = "status " + std::to_string(status) + "\n" + slurp(dir / "stdout.txt");
    if (fs::exists(dir / "out")) {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(dir / "out"))
            if (e.is_regular_file())
                files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const fs::path& f : files)
            all += "== " + f.filename().string() + "\n" + slurp(f);
    }
    return all;
}

void determinism(Outcome& out) {
    const fs::path root = fs::temp_directory_path() / ("eau_acceptance_" + std::to_string(::getpid()));
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"gen-grid --seed 7", "gen-grid --seed 7"},
        {"gen-mdp --seed 3 --states 2000", "gen-mdp --seed 3 --states 2000"},
        {"check --windy -f 'P>=0.75 [ G !playground ]' --mode stit",
         "check --windy -f 'P>=0.75 [ G !playground ]' --mode stit"},
        {"synthesize --windy -f 'P>=0.75 [ G !playground ]' --method alt",
         "synthesize --windy -f 'P>=0.75 [ G !playground ]' --method alt"},
        {"synthesize --windy -f 'P>=0.75 [ G !playground ]' --method line",
         "synthesize --windy -f 'P>=0.75 [ G !playground ]' --method line"},
        {"synthesize --windy -f 'P>=0.75 [ G !playground ]' --grid-search --etas 0.1,1 --ks 4,all --iters 50",
         "synthesize --windy -f 'P>=0.75 [ G !playground ]' --grid-search --etas 0.1,1 --ks 4,all --iters 50 "
         "--jobs 3"},
        {"explore --worlds 3 --episodes 20", "explore --worlds 3 --episodes 20 --jobs 2"},
    };
    std::size_t differing = 0;
    for (const auto& [a, b] : commands) {
        const std::string first = run_cli(a, root / "a");
        const std::string second = run_cli(b, root / "b");
        if (first != second || first.rfind("status 0", 0) != 0) {
            ++differing;
            out.detail << "differs: " << a << "; ";
        }
    }
    fs::remove_all(root);

    std::mt19937_64 gen(99);
    std::size_t unstable = 0;
    for (int i = 0; i < 100; ++i) {
        const Mdp mdp = oracle::random_mdp(gen, {});
        const StateFormula f = oracle::random_prob(gen);
        const CheckResult o1 = check_strategic_ought(mdp, f, mdp.initial_state());
        const CheckResult o2 = check_strategic_ought(mdp, f, mdp.initial_state());
        const CheckResult s1 = check_strategic_stit(mdp, f, mdp.initial_state());
        const CheckResult s2 = check_strategic_stit(mdp, f, mdp.initial_state());
        if (o1.verdict != o2.verdict || o1.probability != o2.probability || s1.verdict != s2.verdict ||
            s1.probability != s2.probability)
            ++unstable;
    }
    out.detail << commands.size() << " command pairs, " << differing << " differing; " << unstable
               << "/100 unstable checks";
    out.require(differing == 0, "byte-identical reruns");
    out.require(unstable == 0, "stable verdicts");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
        {"oracle equivalence", oracle_equivalence},
        {"gradient correctness", gradient_correctness},
        {"windy-drone line search", line_search_shape},
        {"average vs alternating", average_vs_alternating},
        {"grid search", grid_search_shape},
        {"exploration", exploration},
        {"performance", performance},
        {"CTD and implication", ctd_and_implication},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome out;
        try {
            criteria[i].second(out);
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail << " [exception: " << e.what() << "]";
        }
        failures += out.pass ? 0 : 1;
        std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
                  << "): " << out.detail.str() << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
