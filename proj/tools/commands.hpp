#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eau/mdp.hpp"

namespace eau::cli {

// Exit codes shared by every subcommand.
inline constexpr int kHolds = 0;
inline constexpr int kFails = 1;
inline constexpr int kError = 2;

/// Where a model comes from: an MDP file, a grid spec file, or the bundled windy drone.
struct ModelSource {
    std::string path;
    bool windy = false;
    std::optional<double> checkpoint_reward;
    std::optional<double> discount;
};

Mdp load_model(const ModelSource& source);

/// `--out-dir`, else $EAU_OUTPUT_DIR, else the working directory.
std::filesystem::path output_dir(const std::string& flag);

struct CheckArgs {
    ModelSource model;
    std::string formula;
    std::string mode = "ought";
    std::optional<StateId> state;
    std::string ctd_formula;
    std::string violation_label;
};

struct SynthesizeArgs {
    ModelSource model;
    std::string formula;
    std::optional<double> rho;
    std::string method = "alt";
    double eta = 1.0;
    std::string k = "all";
    std::size_t iterations = 200;
    std::size_t steps = 100;
    bool grid_search = false;
    std::vector<double> etas{0.01, 0.1, 1.0};
    std::vector<std::string> ks{"4", "16", "32", "48", "all"};
    std::string antecedent;
    std::string consequent;
    std::size_t jobs = 1;
    std::string out_dir;
    std::string prefix = "synth";
};

struct ExploreArgs {
    std::size_t worlds = 24;
    std::uint64_t seed = 0;
    std::string formula = "P>0.75 [ G !coin ]";
    std::optional<double> rho;
    std::size_t episodes = 300;
    double epsilon = 0.1;
    double eta = 0.01;
    std::size_t max_steps = 100;
    std::string shield = "on";
    std::string grad = "alt";
    bool normalize = false;
    double default_reward = 0.0;
    std::size_t jobs = 1;
    std::string out_dir;
    std::string output = "explore.csv";
};

struct GenGridArgs {
    std::uint64_t seed = 0;
    int width = 12;
    int height = 12;
    std::size_t walls = 10;
    std::size_t pits = 10;
    std::size_t coins = 10;
    bool windy = false;
    bool spec = false;
    std::string out;
};

struct GenMdpArgs {
    std::uint64_t seed = 0;
    std::size_t states = 50'000;
    std::size_t actions = 15;
    std::size_t fanout = 5;
    double discount = 0.95;
    std::string out;
};

struct BenchArgs {
    std::uint64_t seed = 0;
    std::size_t states = 50'000;
    std::size_t actions = 15;
    std::size_t fanout = 5;
    std::string formulas;
    std::size_t repeats = 1;
    std::string out;
};

struct ValidateArgs {
    ModelSource model;
};

int run_check(const CheckArgs& args, std::ostream& out);
int run_synthesize(const SynthesizeArgs& args, std::ostream& out);
int run_explore(const ExploreArgs& args, std::ostream& out);
int run_gen_grid(const GenGridArgs& args, std::ostream& out);
int run_gen_mdp(const GenMdpArgs& args, std::ostream& out);
int run_bench(const BenchArgs& args, std::ostream& out);
int run_validate(const ValidateArgs& args, std::ostream& out);

/// The seven benchmark formulas used when no formula file is given.
std::vector<std::string> default_bench_formulas();

}  // namespace eau::cli
