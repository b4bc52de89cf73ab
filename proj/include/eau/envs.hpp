#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eau/mdp.hpp"

namespace eau {

/// Grid coordinate: x is the column, y the row, y = 0 at the top.
struct Cell {
    int x = 0;
    int y = 0;

    friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// How goal and pit cells pay out.
enum class TerminalRewards {
    /// Absorbing; the cell's reward is collected on every step spent there.
    Recurring,
    /// The reward is collected once on entry, then the run moves to a
    /// zero-reward absorbing "done" sink.
    Once,
};

enum Direction : ActionId { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

struct GridSpec {
    int width = 0;
    int height = 0;
    Cell start;
    std::optional<Cell> goal;
    std::vector<Cell> walls;
    std::vector<Cell> pits;
    std::vector<Cell> coins;
    /// Extra atomic propositions on cells (e.g. "playground").
    std::map<std::string, std::vector<Cell>> labels;

    double slip_success = 0.7;
    double discount = 0.95;
    TerminalRewards terminal = TerminalRewards::Once;

    double step_reward = 0.0;
    double goal_reward = 10.0;
    double pit_reward = -10.0;
    double coin_reward = 5.0;
    /// Per-cell overrides, applied last.
    std::map<Cell, double> cell_rewards;
};

/// Empty when `spec` is usable; otherwise one message per problem.
std::vector<std::string> validate_grid_spec(const GridSpec& spec);

/**
 * Gridworld MDP. States are the non-wall cells in row-major order, followed
 * by the "done" sink in TerminalRewards::Once mode. Ordinary cells get the
 * four moves; the chosen direction succeeds with probability slip_success
 * and each other direction gets an equal share of the rest. Moves into walls
 * or off the grid stay put.
 *
 * Labels: start, goal, pit, coin, terminal (goal and pits), done (sink), plus
 * spec.labels. Throws InvalidArgument on an invalid spec.
 */
Mdp build_gridworld(const GridSpec& spec);

/// State id of `cell` in build_gridworld's numbering; nullopt for walls.
std::optional<StateId> grid_state(const GridSpec& spec, Cell cell);

/**
 * Grid spec text format:
 *
 *   grid
 *   size <w> <h>
 *   start <x> <y>
 *   goal <x> <y>
 *   wall|pit|coin <x> <y> [<x> <y> ...]
 *   label <name> <x> <y> [<x> <y> ...]
 *   slip <p>
 *   discount <g>
 *   terminal once|recurring
 *   reward step|goal|pit|coin <v>
 *   reward cell <x> <y> <v>
 *
 * Throws ParseError with a 1-based line number.
 */
GridSpec parse_grid_spec(std::string_view text);
GridSpec load_grid_spec(const std::filesystem::path& path);
std::string format_grid_spec(const GridSpec& spec);

/// The bundled windy-drone layout (identical to data/windy_drone.grid).
std::string_view windy_drone_text();
/// Windy drone spec; `checkpoint_reward` replaces the step penalty on the checkpoint cell.
GridSpec windy_drone_spec(std::optional<double> checkpoint_reward = std::nullopt);
Mdp windy_drone(std::optional<double> checkpoint_reward = std::nullopt);

struct RandomGridOptions {
    int width = 12;
    int height = 12;
    std::size_t walls = 10;
    std::size_t pits = 10;
    std::size_t coins = 10;
    double slip_success = 0.7;
    double discount = 0.95;
    std::size_t max_attempts = 1000;
};

/// Random placement with the start at the bottom-left cell, redrawn until
/// the goal is reachable without crossing walls or pits.
GridSpec random_grid_spec(std::uint64_t seed, const RandomGridOptions& options = {});
Mdp gen_random_gridworld(std::uint64_t seed, const RandomGridOptions& options = {});

struct RandomMdpOptions {
    std::size_t states = 50'000;
    std::size_t actions = 15;
    std::size_t fanout = 5;
    double discount = 0.95;
};

/**
 * Each (s, a) gets `fanout` distinct uniformly chosen successors with flat
 * Dirichlet probabilities; rewards are uniform in [-1, 1]; labels aq0..aq4
 * and xq0..xq4 are two independent partitions into fifths. Initial state 0.
 */
Mdp gen_random_mdp(std::uint64_t seed, const RandomMdpOptions& options = {});

}  // namespace eau
