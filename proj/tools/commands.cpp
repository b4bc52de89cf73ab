#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <thread>

#include "eau/checker.hpp"
#include "eau/envs.hpp"
#include "eau/error.hpp"
#include "eau/explore.hpp"
#include "eau/formula.hpp"
#include "eau/mdp_io.hpp"
#include "eau/synth.hpp"

namespace eau::cli {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

bool starts_with_grid(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
        if (i < text.size() && text[i] == '#') {
            while (i < text.size() && text[i] != '\n')
                ++i;
            continue;
        }
        break;
    }
    return text.substr(i, 4) == "grid";
}

std::size_t parse_k(const std::string& text) {
    if (text == "all")
        return 0;
    std::size_t pos = 0;
    unsigned long value = 0;
    try {
        value = std::stoul(text, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != text.size() || value == 0)
        throw InvalidArgument("k must be a positive integer or 'all', got '" + text + "'");
    return value;
}

StateFormula with_threshold(const StateFormula& f, std::optional<double> rho) {
    if (!rho)
        return f;
    if (f.kind() != StateFormula::Kind::Prob)
        throw InvalidArgument("--rho needs a formula of the form P~r [ path ]");
    return StateFormula::probability(f.comparison(), *rho, f.path());
}

const char* yes_no(bool b) { return b ? "true" : "false"; }

void print_check(std::ostream& out, const CheckResult& r) {
    out << "verdict " << yes_no(r.verdict) << '\n';
    if (r.probability)
        out << "probability " << format_real(*r.probability) << '\n';
}

std::size_t num_parameters(const Mdp& mdp) {
    std::size_t n = 0;
    for (StateId s = 0; s < mdp.num_states(); ++s)
        if (!mdp.is_absorbing(s))
            n += mdp.num_actions(s);
    return n;
}

void write_output(const std::filesystem::path& path, const std::string& text, std::ostream& out) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    write_text_file(path, text);
    out << "wrote " << path.string() << '\n';
}

}  // namespace

Mdp load_model(const ModelSource& source) {
    Mdp mdp;
    if (source.windy) {
        mdp = windy_drone(source.checkpoint_reward);
    } else {
        if (source.path.empty())
            throw InvalidArgument("no model given (use --model or --windy)");
        const std::string text = read_text_file(source.path);
        if (starts_with_grid(text)) {
            GridSpec spec = parse_grid_spec(text);
            if (source.checkpoint_reward) {
                if (!spec.labels.contains("checkpoint") || spec.labels.at("checkpoint").empty())
                    throw InvalidArgument("grid has no checkpoint label");
                spec.cell_rewards[spec.labels.at("checkpoint").front()] = *source.checkpoint_reward;
            }
            mdp = build_gridworld(spec);
        } else {
            if (source.checkpoint_reward)
                throw InvalidArgument("--checkpoint-reward applies to grid models only");
            mdp = parse_mdp(text);
        }
    }
    if (source.discount)
        mdp = mdp.with_discount(*source.discount);
    return mdp;
}

std::filesystem::path output_dir(const std::string& flag) {
    if (!flag.empty())
        return flag;
    if (const char* env = std::getenv("EAU_OUTPUT_DIR"); env && *env)
        return env;
    return ".";
}

int run_check(const CheckArgs& args, std::ostream& out) {
    const Mdp mdp = load_model(args.model);
    const StateFormula f = parse_formula(args.formula);
    const StateId state = args.state.value_or(mdp.initial_state());
    if (state >= mdp.num_states())
        throw InvalidArgument("state " + std::to_string(state) + " out of range");

    out << "mode " << args.mode << '\n' << "formula " << format_formula(f) << '\n' << "state " << state << '\n';
    const auto start = Clock::now();
    bool verdict = false;
    if (args.mode == "ought") {
        const CheckResult r = check_strategic_ought(mdp, f, state);
        std::cerr << "time_ms " << elapsed_ms(start) << '\n';
        print_check(out, r);
        verdict = r.verdict;
    } else if (args.mode == "stit") {
        const CheckResult r = check_strategic_stit(mdp, f, state);
        std::cerr << "time_ms " << elapsed_ms(start) << '\n';
        print_check(out, r);
        verdict = r.verdict;
    } else if (args.mode == "ctd") {
        if (args.ctd_formula.empty() || args.violation_label.empty())
            throw InvalidArgument("ctd mode needs --ctd and --violation");
        const StateFormula ctd = parse_formula(args.ctd_formula);
        const std::vector<StateId> violations = violation_successors(mdp, state, args.violation_label);
        const CtdResult r = check_ctd(mdp, f, violations, ctd, state);
        std::cerr << "time_ms " << elapsed_ms(start) << '\n';
        out << "duty_verdict " << yes_no(r.duty.verdict) << '\n';
        if (r.duty.probability)
            out << "duty_probability " << format_real(*r.duty.probability) << '\n';
        out << "ctd " << format_formula(ctd) << '\n';
        for (const auto& [v, c] : r.cases)
            out << "violation_state " << v << " verdict " << yes_no(c.verdict) << " probability "
                << (c.probability ? format_real(*c.probability) : "-") << '\n';
        out << "verdict " << yes_no(r.verdict) << '\n';
        verdict = r.verdict;
    } else {
        throw InvalidArgument("unknown mode '" + args.mode + "' (ought, stit or ctd)");
    }
    return verdict ? kHolds : kFails;
}

int run_synthesize(const SynthesizeArgs& args, std::ostream& out) {
    const Mdp mdp = load_model(args.model);
    const std::filesystem::path dir = output_dir(args.out_dir);
    GradientOptions options;
    options.eta = args.eta;
    options.iterations = args.iterations;
    options.k = parse_k(args.k);

    if (args.method == "implication") {
        if (args.antecedent.empty() || args.consequent.empty())
            throw InvalidArgument("implication needs --antecedent and --consequent");
        const ImplicationResult r =
            synth_implication(mdp, parse_formula(args.antecedent), parse_formula(args.consequent), options);
        const SynthesisTrace& na = r.negated_antecedent;
        const SynthesisTrace& co = r.consequent;
        out << "negated_antecedent_satisfied " << yes_no(na.satisfied) << " utility "
            << format_real(na.records[na.selected].utility) << '\n';
        out << "consequent_satisfied " << yes_no(co.satisfied) << " utility "
            << format_real(co.records[co.selected].utility) << '\n';
        out << "branch "
            << (r.branch == ImplicationBranch::NegatedAntecedent ? "negated_antecedent" : "consequent") << '\n';
        write_output(dir / (args.prefix + "_policy.csv"), format_policy_csv(r.policy), out);
        return kHolds;
    }

    const Obligation ob(with_threshold(parse_formula(args.formula), args.rho));
    if (args.grid_search) {
        std::vector<std::size_t> ks;
        for (const std::string& k : args.ks)
            ks.push_back(parse_k(k));
        const GridResult grid = grid_search(mdp, ob, args.etas, ks, args.iterations, args.jobs);
        const std::size_t n = num_parameters(mdp);
        write_output(dir / (args.prefix + "_grid.csv"), format_grid_csv(grid, n), out);
        write_output(dir / (args.prefix + "_grid_probability.csv"), format_grid_matrix(grid, false, n), out);
        write_output(dir / (args.prefix + "_grid_utility.csv"), format_grid_matrix(grid, true, n), out);
        return kHolds;
    }

    SynthesisTrace trace;
    if (args.method == "line")
        trace = line_search(mdp, ob, args.steps);
    else if (args.method == "avg")
        trace = average_gradient(mdp, ob, options);
    else if (args.method == "alt")
        trace = alternating_gradient(mdp, ob, options);
    else
        throw InvalidArgument("unknown method '" + args.method + "' (line, avg, alt or implication)");

    const TraceRecord& sel = trace.records[trace.selected];
    out << "obligation " << format_formula(ob.content()) << '\n';
    out << "selected_iteration " << sel.iteration << '\n';
    out << "final_probability " << format_real(sel.probability) << '\n';
    out << "final_utility " << format_real(sel.utility) << '\n';
    out << "satisfied " << yes_no(trace.satisfied) << '\n';
    write_output(dir / (args.prefix + "_policy.csv"), format_policy_csv(trace.policy), out);
    write_output(dir / (args.prefix + "_trace.csv"), format_trace_csv(trace), out);
    return trace.satisfied ? kHolds : kFails;
}

int run_explore(const ExploreArgs& args, std::ostream& out) {
    const Obligation ob(with_threshold(parse_formula(args.formula), args.rho));
    if (args.shield != "on" && args.shield != "off")
        throw InvalidArgument("--shield must be on or off");
    if (args.grad != "alt" && args.grad != "utility-only")
        throw InvalidArgument("--grad must be alt or utility-only");

    ExplorationOptions options;
    options.episodes = args.episodes;
    options.eta = args.eta;
    options.epsilon = args.epsilon;
    options.max_steps = args.max_steps;
    options.shield = args.shield == "on";
    options.update = args.grad == "alt" ? ExplorationUpdate::Alternating : ExplorationUpdate::UtilityOnly;
    options.default_reward = args.default_reward;
    options.normalize = args.normalize;

    std::vector<ExplorationResult> runs(args.worlds);
    std::vector<std::string> errors(args.worlds);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < args.worlds; i = next++) {
            try {
                const std::uint64_t seed = args.seed + i;
                runs[i] = learn_with_exploration(gen_random_gridworld(seed), ob, options, seed);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::min(args.jobs, args.worlds); ++t)
        pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool)
        t.join();
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!errors[i].empty())
            throw Error("world " + std::to_string(args.seed + i) + ": " + errors[i]);

    const std::vector<AggregateRow> rows = aggregate_runs(runs);
    if (!rows.empty()) {
        out << "initial_mean_probability " << format_real(rows.front().mean_probability) << '\n';
        out << "final_mean_probability " << format_real(rows.back().mean_probability) << '\n';
        out << "final_mean_utility " << format_real(rows.back().mean_utility) << '\n';
    }
    write_output(output_dir(args.out_dir) / args.output, format_aggregate_csv(rows), out);
    return kHolds;
}

int run_gen_grid(const GenGridArgs& args, std::ostream& out) {
    GridSpec spec;
    if (args.windy) {
        spec = windy_drone_spec();
    } else {
        RandomGridOptions o;
        o.width = args.width;
        o.height = args.height;
        o.walls = args.walls;
        o.pits = args.pits;
        o.coins = args.coins;
        spec = random_grid_spec(args.seed, o);
    }
    const std::string text = args.spec ? format_grid_spec(spec) : format_mdp(build_gridworld(spec));
    if (args.out.empty())
        out << text;
    else
        write_output(args.out, text, out);
    return kHolds;
}

int run_gen_mdp(const GenMdpArgs& args, std::ostream& out) {
    RandomMdpOptions o;
    o.states = args.states;
    o.actions = args.actions;
    o.fanout = args.fanout;
    o.discount = args.discount;
    const Mdp mdp = gen_random_mdp(args.seed, o);
    if (args.out.empty()) {
        write_mdp(out, mdp);
    } else {
        if (std::filesystem::path(args.out).has_parent_path())
            std::filesystem::create_directories(std::filesystem::path(args.out).parent_path());
        save_mdp(mdp, args.out);
        out << "wrote " << args.out << '\n';
    }
    return kHolds;
}

std::vector<std::string> default_bench_formulas() {
    return {
        "P>=0.2 [ F (aq0 | aq4) ]", "P>=0.00001 [ F (aq0 | aq4) ]", "P>=0.1 [ G aq2 ]", "P<0.7 [ G aq2 ]",
        "P<0.7 [ F xq0 ]",          "P>=0.7 [ F xq0 ]",             "P>0.7 [ F xq0 ]",
    };
}

int run_bench(const BenchArgs& args, std::ostream& out) {
    if (args.repeats == 0)
        throw InvalidArgument("--repeats must be at least 1");
    std::vector<std::string> texts;
    if (args.formulas.empty()) {
        texts = default_bench_formulas();
    } else {
        std::istringstream in(read_text_file(args.formulas));
        for (std::string line; std::getline(in, line);) {
            const auto first = line.find_first_not_of(" \t\r");
            if (first != std::string::npos && line[first] != '#')
                texts.push_back(line.substr(first));
        }
    }
    std::vector<StateFormula> formulas;
    for (const std::string& t : texts)
        formulas.push_back(parse_formula(t));

    RandomMdpOptions o;
    o.states = args.states;
    o.actions = args.actions;
    o.fanout = args.fanout;
    const Mdp mdp = gen_random_mdp(args.seed, o);

    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };

    std::string csv = "formula,stit_ms,ought_ms,stit_verdict,ought_verdict,stit_probability,ought_probability\n";
    std::vector<double> stit_medians, ought_medians;
    for (const StateFormula& f : formulas) {
        std::vector<double> stit_ms, ought_ms;
        CheckResult stit, ought;
        for (std::size_t r = 0; r < args.repeats; ++r) {
            auto start = Clock::now();
            stit = check_strategic_stit(mdp, f, mdp.initial_state());
            stit_ms.push_back(elapsed_ms(start));
            start = Clock::now();
            ought = check_strategic_ought(mdp, f, mdp.initial_state());
            ought_ms.push_back(elapsed_ms(start));
        }
        stit_medians.push_back(median(stit_ms));
        ought_medians.push_back(median(ought_ms));
        csv += '"' + format_formula(f) + "\"," + format_real(stit_medians.back()) + ',' +
               format_real(ought_medians.back()) + ',' + yes_no(stit.verdict) + ',' + yes_no(ought.verdict) + ',' +
               format_real(*stit.probability) + ',' + format_real(*ought.probability) + '\n';
    }

    const MarkovChain chain = induce_chain(mdp, optimal_policy(mdp));
    std::ostringstream summary;
    summary << "# states " << mdp.num_states() << ", mdp transitions " << mdp.num_transitions()
            << ", induced chain transitions " << chain.num_transitions() << " (" << chain.reachable_transitions()
            << " reachable from the initial state)\n"
            << "# median stit_ms " << format_real(median(stit_medians)) << ", median ought_ms "
            << format_real(median(ought_medians)) << '\n';
    csv += summary.str();
    if (args.out.empty())
        out << csv;
    else
        write_output(args.out, csv, out);
    return kHolds;
}

int run_validate(const ValidateArgs& args, std::ostream& out) {
    Mdp mdp;
    try {
        mdp = load_model(args.model);
    } catch (const ParseError& e) {
        out << "invalid: " << e.what() << '\n';
        return kFails;
    }
    const ValidationReport report = validate_mdp(mdp);
    for (const ValidationIssue& issue : report)
        out << issue.to_string() << '\n';
    if (!report.empty())
        return kFails;
    out << "valid: " << mdp.num_states() << " states, " << mdp.num_choices() << " choices, "
        << mdp.num_transitions() << " transitions\n";
    return kHolds;
}

}  // namespace eau::cli
