#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"

namespace {

using namespace eau::cli;

void add_model_options(CLI::App* cmd, ModelSource& m) {
    cmd->add_option("-m,--model", m.path, "MDP file or grid spec file");
    cmd->add_flag("--windy", m.windy, "Use the bundled windy-drone gridworld");
    cmd->add_option("--checkpoint-reward", m.checkpoint_reward, "Reward on the checkpoint cell (grid models)");
    cmd->add_option("--discount", m.discount, "Override the model's discount factor")->check(CLI::Range(0.0, 1.0));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Strategic obligation checking and obligation-aware policy synthesis for MDPs"};
    app.require_subcommand(1);

    CheckArgs check;
    auto* c = app.add_subcommand("check", "Check an obligation (exit 0 holds, 1 does not, 2 error)");
    add_model_options(c, check.model);
    c->add_option("-f,--formula", check.formula, "PCTL state formula (the duty in ctd mode)")->required();
    c->add_option("--mode", check.mode, "ought, stit or ctd")->check(CLI::IsMember({"ought", "stit", "ctd"}));
    c->add_option("--state", check.state, "State to check at (default: initial)");
    c->add_option("--ctd", check.ctd_formula, "Contrary-to-duty formula (ctd mode)");
    c->add_option("--violation", check.violation_label, "Label marking violation successors (ctd mode)");

    SynthesizeArgs synth;
    auto* s = app.add_subcommand("synthesize", "Modify the reward-optimal policy until it meets an obligation");
    add_model_options(s, synth.model);
    s->add_option("-f,--formula", synth.formula, "Obligation P~r [ path ]");
    s->add_option("--rho", synth.rho, "Replace the formula's threshold")->check(CLI::Range(0.0, 1.0));
    s->add_option("--method", synth.method, "line, avg, alt or implication")
        ->check(CLI::IsMember({"line", "avg", "alt", "implication"}));
    s->add_option("--eta", synth.eta, "Learning rate")->check(CLI::PositiveNumber);
    s->add_option("--k", synth.k, "Gradient entries per step, or 'all'");
    s->add_option("--iters", synth.iterations, "Gradient iterations");
    s->add_option("--steps", synth.steps, "Line-search steps")->check(CLI::PositiveNumber);
    s->add_flag("--grid-search", synth.grid_search, "Run the alternating method over --etas x --ks");
    s->add_option("--etas", synth.etas, "Learning rates for the grid search")->delimiter(',');
    s->add_option("--ks", synth.ks, "Entry counts for the grid search")->delimiter(',');
    s->add_option("--antecedent", synth.antecedent, "Implication antecedent P>=b [ path ]");
    s->add_option("--consequent", synth.consequent, "Implication consequent P>=c [ path ]");
    s->add_option("--jobs", synth.jobs, "Worker threads for the grid search")->check(CLI::PositiveNumber);
    s->add_option("--out-dir", synth.out_dir, "Output directory (default: $EAU_OUTPUT_DIR or .)");
    s->add_option("--prefix", synth.prefix, "Output file name prefix");

    ExploreArgs explore;
    auto* e = app.add_subcommand("explore", "Shielded exploration over seeded random gridworlds");
    e->add_option("--worlds", explore.worlds, "Number of gridworlds");
    e->add_option("--seed", explore.seed, "First world seed");
    e->add_option("-f,--formula", explore.formula, "Obligation");
    e->add_option("--rho", explore.rho, "Replace the formula's threshold")->check(CLI::Range(0.0, 1.0));
    e->add_option("--episodes", explore.episodes, "Runs per world");
    e->add_option("--epsilon", explore.epsilon, "Exploration rate")->check(CLI::Range(0.0, 1.0));
    e->add_option("--eta", explore.eta, "Learning rate")->check(CLI::PositiveNumber);
    e->add_option("--max-steps", explore.max_steps, "Steps per run");
    e->add_option("--shield", explore.shield, "on or off")->check(CLI::IsMember({"on", "off"}));
    e->add_option("--grad", explore.grad, "alt or utility-only")->check(CLI::IsMember({"alt", "utility-only"}));
    e->add_flag("--normalize", explore.normalize, "Normalize gradients as the offline methods do");
    e->add_option("--default-reward", explore.default_reward, "Reward guess for unvisited states");
    e->add_option("--jobs", explore.jobs, "Worker threads")->check(CLI::PositiveNumber);
    e->add_option("--out-dir", explore.out_dir, "Output directory (default: $EAU_OUTPUT_DIR or .)");
    e->add_option("-o,--output", explore.output, "Aggregate CSV file name");

    GenGridArgs gen_grid;
    auto* g = app.add_subcommand("gen-grid", "Generate a random gridworld (or the windy drone)");
    g->add_option("--seed", gen_grid.seed, "Seed");
    g->add_option("--width", gen_grid.width, "Columns")->check(CLI::PositiveNumber);
    g->add_option("--height", gen_grid.height, "Rows")->check(CLI::PositiveNumber);
    g->add_option("--walls", gen_grid.walls, "Wall cells");
    g->add_option("--pits", gen_grid.pits, "Pit cells");
    g->add_option("--coins", gen_grid.coins, "Coin cells");
    g->add_flag("--windy", gen_grid.windy, "Emit the bundled windy drone");
    g->add_flag("--spec", gen_grid.spec, "Write the grid spec instead of the MDP");
    g->add_option("-o,--out", gen_grid.out, "Output file (default: stdout)");

    GenMdpArgs gen_mdp;
    auto* m = app.add_subcommand("gen-mdp", "Generate a random labelled MDP");
    m->add_option("--seed", gen_mdp.seed, "Seed");
    m->add_option("--states", gen_mdp.states, "States")->check(CLI::PositiveNumber);
    m->add_option("--actions", gen_mdp.actions, "Actions per state")->check(CLI::PositiveNumber);
    m->add_option("--fanout", gen_mdp.fanout, "Successors per action")->check(CLI::PositiveNumber);
    m->add_option("--discount", gen_mdp.discount, "Discount factor")->check(CLI::Range(0.0, 1.0));
    m->add_option("-o,--out", gen_mdp.out, "Output file (default: stdout)");

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "Time ought and stit checks on a generated MDP");
    b->add_option("--seed", bench.seed, "Seed");
    b->add_option("--states", bench.states, "States")->check(CLI::PositiveNumber);
    b->add_option("--actions", bench.actions, "Actions per state")->check(CLI::PositiveNumber);
    b->add_option("--fanout", bench.fanout, "Successors per action")->check(CLI::PositiveNumber);
    b->add_option("--formulas", bench.formulas, "File with one formula per line");
    b->add_option("--repeats", bench.repeats, "Timed repetitions per check")->check(CLI::PositiveNumber);
    b->add_option("-o,--out", bench.out, "Output CSV (default: stdout)");

    ValidateArgs validate;
    auto* v = app.add_subcommand("validate", "Check a model file for structural errors");
    add_model_options(v, validate.model);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : kError;
    }

    try {
        if (c->parsed())
            return run_check(check, std::cout);
        if (s->parsed())
            return run_synthesize(synth, std::cout);
        if (e->parsed())
            return run_explore(explore, std::cout);
        if (g->parsed())
            return run_gen_grid(gen_grid, std::cout);
        if (m->parsed())
            return run_gen_mdp(gen_mdp, std::cout);
        if (b->parsed())
            return run_bench(bench, std::cout);
        if (v->parsed())
            return run_validate(validate, std::cout);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kError;
    }
    return kError;
}
