#include "eau/envs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include "eau/error.hpp"
#include "eau/mdp_io.hpp"
#include "eau/rng.hpp"

namespace eau {

namespace {

constexpr std::array<std::array<int, 2>, 4> kMoves{{{0, -1}, {0, 1}, {-1, 0}, {1, 0}}};

bool inside(const GridSpec& spec, Cell c) { return c.x >= 0 && c.y >= 0 && c.x < spec.width && c.y < spec.height; }

std::string cell_text(Cell c) { return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; }

/// Row-major index -> state id (-1 for walls), plus the state count.
std::vector<std::int64_t> number_cells(const GridSpec& spec, std::size_t& count) {
    std::vector<std::int64_t> ids(static_cast<std::size_t>(spec.width * spec.height), 0);
    for (const Cell& w : spec.walls)
        if (inside(spec, w))
            ids[static_cast<std::size_t>(w.y * spec.width + w.x)] = -1;
    count = 0;
    for (auto& id : ids)
        if (id == 0)
            id = static_cast<std::int64_t>(count++);
        else
            id = -1;
    return ids;
}

}  // namespace

std::vector<std::string> validate_grid_spec(const GridSpec& spec) {
    std::vector<std::string> issues;
    if (spec.width <= 0 || spec.height <= 0) {
        issues.push_back("grid size must be positive");
        return issues;
    }
    std::set<Cell> walls, taken;
    auto check = [&](const Cell& c, const char* what) {
        if (!inside(spec, c)) {
            issues.push_back(std::string(what) + " " + cell_text(c) + " outside the grid");
            return false;
        }
        return true;
    };
    for (const Cell& c : spec.walls)
        if (check(c, "wall") && !walls.insert(c).second)
            issues.push_back("duplicate wall " + cell_text(c));
    auto claim = [&](const Cell& c, const char* what) {
        if (!check(c, what))
            return;
        if (walls.contains(c))
            issues.push_back(std::string(what) + " " + cell_text(c) + " is a wall");
        else if (!taken.insert(c).second)
            issues.push_back(std::string(what) + " " + cell_text(c) + " overlaps another special cell");
    };
    for (const Cell& c : spec.pits)
        claim(c, "pit");
    for (const Cell& c : spec.coins)
        claim(c, "coin");
    if (spec.goal)
        claim(*spec.goal, "goal");
    if (check(spec.start, "start")) {
        if (walls.contains(spec.start))
            issues.push_back("start " + cell_text(spec.start) + " is a wall");
        else if (taken.contains(spec.start) && !(spec.goal && *spec.goal == spec.start))
            issues.push_back("start " + cell_text(spec.start) + " is a pit or coin");
    }
    for (const auto& [name, cells] : spec.labels)
        for (const Cell& c : cells)
            if (check(c, "labelled cell") && walls.contains(c))
                issues.push_back("label '" + name + "' on wall " + cell_text(c));
    for (const auto& [c, r] : spec.cell_rewards)
        if (check(c, "reward cell") && walls.contains(c))
            issues.push_back("reward on wall " + cell_text(c));
    if (!(spec.slip_success > 0.0 && spec.slip_success <= 1.0))
        issues.push_back("slip_success must lie in (0,1]");
    if (!(spec.discount > 0.0 && spec.discount <= 1.0))
        issues.push_back("discount must lie in (0,1]");
    return issues;
}

std::optional<StateId> grid_state(const GridSpec& spec, Cell cell) {
    if (!inside(spec, cell))
        return std::nullopt;
    std::size_t count = 0;
    const auto ids = number_cells(spec, count);
    const std::int64_t id = ids[static_cast<std::size_t>(cell.y * spec.width + cell.x)];
    if (id < 0)
        return std::nullopt;
    return static_cast<StateId>(id);
}

Mdp build_gridworld(const GridSpec& spec) {
    if (auto issues = validate_grid_spec(spec); !issues.empty())
        throw InvalidArgument("invalid grid: " + issues.front());

    std::size_t cells = 0;
    const auto ids = number_cells(spec, cells);
    const bool once = spec.terminal == TerminalRewards::Once;
    const std::size_t n = cells + (once ? 1 : 0);
    const auto done = static_cast<StateId>(cells);
    auto id_of = [&](Cell c) { return static_cast<StateId>(ids[static_cast<std::size_t>(c.y * spec.width + c.x)]); };

    std::set<Cell> pits(spec.pits.begin(), spec.pits.end());
    std::set<Cell> coins(spec.coins.begin(), spec.coins.end());
    auto is_terminal = [&](Cell c) { return pits.contains(c) || (spec.goal && *spec.goal == c); };

    MdpBuilder b(n);
    for (const char* name : {"start", "goal", "pit", "coin", "terminal"})
        b.declare_label(name);
    if (once)
        b.declare_label("done");

    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            const Cell c{x, y};
            if (ids[static_cast<std::size_t>(y * spec.width + x)] < 0)
                continue;
            const StateId s = id_of(c);
            double reward = spec.step_reward;
            if (coins.contains(c))
                reward = spec.coin_reward;
            if (pits.contains(c))
                reward = spec.pit_reward;
            if (spec.goal && *spec.goal == c)
                reward = spec.goal_reward;
            if (auto it = spec.cell_rewards.find(c); it != spec.cell_rewards.end())
                reward = it->second;
            b.set_state_reward(s, reward);

            if (is_terminal(c)) {
                b.add_label("terminal", s);
                if (once) {
                    b.add_transition(s, 0, done, 1.0);
                } else {
                    b.add_transition(s, 0, s, 1.0);
                    b.add_absorbing(s);
                }
                continue;
            }
            for (ActionId a = 0; a < 4; ++a) {
                std::map<StateId, double> outcome;
                for (ActionId d = 0; d < 4; ++d) {
                    const double p = d == a ? spec.slip_success : (1.0 - spec.slip_success) / 3.0;
                    if (p <= 0.0)
                        continue;
                    const Cell to{x + kMoves[d][0], y + kMoves[d][1]};
                    const bool blocked = !inside(spec, to) || ids[static_cast<std::size_t>(to.y * spec.width + to.x)] < 0;
                    outcome[blocked ? s : id_of(to)] += p;
                }
                for (const auto& [t, p] : outcome)
                    b.add_transition(s, a, t, p);
            }
        }
    if (once) {
        b.add_transition(done, 0, done, 1.0);
        b.add_absorbing(done);
        b.add_label("done", done);
    }

    b.add_label("start", id_of(spec.start));
    if (spec.goal)
        b.add_label("goal", id_of(*spec.goal));
    for (const Cell& c : spec.pits)
        b.add_label("pit", id_of(c));
    for (const Cell& c : spec.coins)
        b.add_label("coin", id_of(c));
    for (const auto& [name, list] : spec.labels) {
        b.declare_label(name);
        for (const Cell& c : list)
            b.add_label(name, id_of(c));
    }
    b.set_initial_state(id_of(spec.start));
    b.set_discount(spec.discount);
    return std::move(b).build();
}

// ---------------------------------------------------------------------------
// Text format

namespace {

std::vector<std::string_view> tokens_of(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
            ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r')
            ++j;
        if (j > i)
            out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

[[noreturn]] void grid_fail(const std::string& msg, std::size_t line) {
    throw ParseError("line " + std::to_string(line) + ": " + msg, line);
}

int to_int(std::string_view t, std::size_t line) {
    double v = 0;
    if (!parse_real(t, v) || v != std::floor(v) || std::abs(v) > 1e6)
        grid_fail("invalid integer '" + std::string(t) + "'", line);
    return static_cast<int>(v);
}

double to_real(std::string_view t, std::size_t line) {
    double v = 0;
    if (!parse_real(t, v))
        grid_fail("invalid number '" + std::string(t) + "'", line);
    return v;
}

std::vector<Cell> cells_from(const std::vector<std::string_view>& tok, std::size_t first, std::size_t line) {
    if ((tok.size() - first) % 2 != 0 || tok.size() == first)
        grid_fail("expected x y coordinate pairs", line);
    std::vector<Cell> out;
    for (std::size_t i = first; i < tok.size(); i += 2)
        out.push_back({to_int(tok[i], line), to_int(tok[i + 1], line)});
    return out;
}

void append_cells(std::string& out, const std::vector<Cell>& cells) {
    for (const Cell& c : cells)
        out += ' ' + std::to_string(c.x) + ' ' + std::to_string(c.y);
}

}  // namespace

GridSpec parse_grid_spec(std::string_view text) {
    GridSpec spec;
    bool header = false;
    bool sized = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (auto h = line.find('#'); h != std::string_view::npos)
            line = line.substr(0, h);
        const auto tok = tokens_of(line);
        if (tok.empty())
            continue;
        if (!header) {
            if (tok.size() != 1 || tok[0] != "grid")
                grid_fail("expected 'grid' header", line_no);
            header = true;
            continue;
        }
        const std::string_view kw = tok[0];
        if (kw == "size" && tok.size() == 3) {
            spec.width = to_int(tok[1], line_no);
            spec.height = to_int(tok[2], line_no);
            sized = true;
        } else if (kw == "start" && tok.size() == 3) {
            spec.start = {to_int(tok[1], line_no), to_int(tok[2], line_no)};
        } else if (kw == "goal" && tok.size() == 3) {
            spec.goal = Cell{to_int(tok[1], line_no), to_int(tok[2], line_no)};
        } else if (kw == "wall" || kw == "pit" || kw == "coin") {
            auto cells = cells_from(tok, 1, line_no);
            auto& dst = kw == "wall" ? spec.walls : kw == "pit" ? spec.pits : spec.coins;
            dst.insert(dst.end(), cells.begin(), cells.end());
        } else if (kw == "label" && tok.size() >= 2) {
            auto& dst = spec.labels[std::string(tok[1])];
            if (tok.size() > 2) {
                auto cells = cells_from(tok, 2, line_no);
                dst.insert(dst.end(), cells.begin(), cells.end());
            }
        } else if (kw == "slip" && tok.size() == 2) {
            spec.slip_success = to_real(tok[1], line_no);
        } else if (kw == "discount" && tok.size() == 2) {
            spec.discount = to_real(tok[1], line_no);
        } else if (kw == "terminal" && tok.size() == 2 && (tok[1] == "once" || tok[1] == "recurring")) {
            spec.terminal = tok[1] == "once" ? TerminalRewards::Once : TerminalRewards::Recurring;
        } else if (kw == "reward" && tok.size() == 3) {
            const double v = to_real(tok[2], line_no);
            if (tok[1] == "step")
                spec.step_reward = v;
            else if (tok[1] == "goal")
                spec.goal_reward = v;
            else if (tok[1] == "pit")
                spec.pit_reward = v;
            else if (tok[1] == "coin")
                spec.coin_reward = v;
            else
                grid_fail("unknown reward class '" + std::string(tok[1]) + "'", line_no);
        } else if (kw == "reward" && tok.size() == 5 && tok[1] == "cell") {
            spec.cell_rewards[{to_int(tok[2], line_no), to_int(tok[3], line_no)}] = to_real(tok[4], line_no);
        } else {
            grid_fail("unrecognised line '" + std::string(kw) + "'", line_no);
        }
    }
    if (!header)
        grid_fail("expected 'grid' header", line_no);
    if (!sized)
        grid_fail("missing 'size' line", line_no);
    if (auto issues = validate_grid_spec(spec); !issues.empty())
        grid_fail(issues.front(), line_no);
    return spec;
}

GridSpec load_grid_spec(const std::filesystem::path& path) { return parse_grid_spec(read_text_file(path)); }

std::string format_grid_spec(const GridSpec& spec) {
    std::string out = "grid\n";
    out += "size " + std::to_string(spec.width) + ' ' + std::to_string(spec.height) + '\n';
    out += "start " + std::to_string(spec.start.x) + ' ' + std::to_string(spec.start.y) + '\n';
    if (spec.goal)
        out += "goal " + std::to_string(spec.goal->x) + ' ' + std::to_string(spec.goal->y) + '\n';
    auto group = [&](const char* kw, const std::vector<Cell>& cells) {
        if (cells.empty())
            return;
        out += kw;
        append_cells(out, cells);
        out += '\n';
    };
    group("wall", spec.walls);
    group("pit", spec.pits);
    group("coin", spec.coins);
    for (const auto& [name, cells] : spec.labels) {
        out += "label " + name;
        append_cells(out, cells);
        out += '\n';
    }
    out += "slip " + format_real(spec.slip_success) + '\n';
    out += "discount " + format_real(spec.discount) + '\n';
    out += std::string("terminal ") + (spec.terminal == TerminalRewards::Once ? "once" : "recurring") + '\n';
    out += "reward step " + format_real(spec.step_reward) + '\n';
    out += "reward goal " + format_real(spec.goal_reward) + '\n';
    out += "reward pit " + format_real(spec.pit_reward) + '\n';
    out += "reward coin " + format_real(spec.coin_reward) + '\n';
    for (const auto& [c, r] : spec.cell_rewards)
        out += "reward cell " + std::to_string(c.x) + ' ' + std::to_string(c.y) + ' ' + format_real(r) + '\n';
    return out;
}

// ---------------------------------------------------------------------------
// Windy drone

std::string_view windy_drone_text() {
    // Layout (x right, y down), '#' = wall:
    //
    //   . P . . H      P playground, H hospital
    //   N # # # .      N north of the start
    //   S C # # .      S start, C checkpoint
    //   . . # # .
    //   # . . . .
    static constexpr std::string_view text = R"(grid
size 5 5
start 0 2
goal 4 0
wall 1 1 2 1 3 1 2 2 3 2 2 3 3 3 0 4
label hospital 4 0
label playground 1 0
label checkpoint 1 2
label north 0 1
slip 0.7
discount 0.93
terminal recurring
reward step -1
reward goal 10
)";
    return text;
}

GridSpec windy_drone_spec(std::optional<double> checkpoint_reward) {
    GridSpec spec = parse_grid_spec(windy_drone_text());
    if (checkpoint_reward)
        spec.cell_rewards[spec.labels.at("checkpoint").front()] = *checkpoint_reward;
    return spec;
}

Mdp windy_drone(std::optional<double> checkpoint_reward) { return build_gridworld(windy_drone_spec(checkpoint_reward)); }

// ---------------------------------------------------------------------------
// Generators

namespace {

bool goal_reachable(const GridSpec& spec) {
    std::set<Cell> blocked(spec.walls.begin(), spec.walls.end());
    blocked.insert(spec.pits.begin(), spec.pits.end());
    std::set<Cell> seen{spec.start};
    std::vector<Cell> stack{spec.start};
    while (!stack.empty()) {
        Cell c = stack.back();
        stack.pop_back();
        if (c == *spec.goal)
            return true;
        for (const auto& m : kMoves) {
            Cell to{c.x + m[0], c.y + m[1]};
            if (inside(spec, to) && !blocked.contains(to) && seen.insert(to).second)
                stack.push_back(to);
        }
    }
    return false;
}

}  // namespace

GridSpec random_grid_spec(std::uint64_t seed, const RandomGridOptions& options) {
    if (options.width <= 0 || options.height <= 0)
        throw InvalidArgument("grid size must be positive");
    const std::size_t cells = static_cast<std::size_t>(options.width) * static_cast<std::size_t>(options.height);
    const std::size_t special = options.walls + options.pits + options.coins + 1;
    if (special + 1 > cells)
        throw InvalidArgument("infeasible counts: " + std::to_string(special) + " special cells on a grid of " +
                              std::to_string(cells));

    Rng rng(seed);
    const Cell start{0, options.height - 1};
    const std::size_t start_index = static_cast<std::size_t>(start.y * options.width + start.x);
    for (std::size_t attempt = 0; attempt < options.max_attempts; ++attempt) {
        GridSpec spec;
        spec.width = options.width;
        spec.height = options.height;
        spec.start = start;
        spec.slip_success = options.slip_success;
        spec.discount = options.discount;
        spec.terminal = TerminalRewards::Once;

        std::vector<std::uint64_t> picks = rng.sample_distinct(cells - 1, special);
        std::size_t i = 0;
        auto next_cell = [&] {
            std::size_t idx = static_cast<std::size_t>(picks[i++]);
            if (idx >= start_index)
                ++idx;
            return Cell{static_cast<int>(idx % static_cast<std::size_t>(options.width)),
                        static_cast<int>(idx / static_cast<std::size_t>(options.width))};
        };
        for (std::size_t k = 0; k < options.walls; ++k)
            spec.walls.push_back(next_cell());
        for (std::size_t k = 0; k < options.pits; ++k)
            spec.pits.push_back(next_cell());
        for (std::size_t k = 0; k < options.coins; ++k)
            spec.coins.push_back(next_cell());
        spec.goal = next_cell();
        std::sort(spec.walls.begin(), spec.walls.end(), [](Cell a, Cell b) { return std::tie(a.y, a.x) < std::tie(b.y, b.x); });
        std::sort(spec.pits.begin(), spec.pits.end(), [](Cell a, Cell b) { return std::tie(a.y, a.x) < std::tie(b.y, b.x); });
        std::sort(spec.coins.begin(), spec.coins.end(), [](Cell a, Cell b) { return std::tie(a.y, a.x) < std::tie(b.y, b.x); });
        if (goal_reachable(spec))
            return spec;
    }
    throw InvalidArgument("no placement with a reachable goal after " + std::to_string(options.max_attempts) +
                          " attempts");
}

Mdp gen_random_gridworld(std::uint64_t seed, const RandomGridOptions& options) {
    return build_gridworld(random_grid_spec(seed, options));
}

Mdp gen_random_mdp(std::uint64_t seed, const RandomMdpOptions& options) {
    const std::size_t n = options.states;
    if (n == 0 || options.actions == 0 || options.fanout == 0)
        throw InvalidArgument("random MDP dimensions must be positive");
    if (options.fanout > n)
        throw InvalidArgument("fanout exceeds the number of states");
    if (n > std::numeric_limits<StateId>::max() || n * options.actions > (std::size_t{1} << 40) / options.fanout)
        throw InvalidArgument("random MDP parameters overflow");

    Rng rng(seed);
    MdpBuilder b(n);
    std::vector<std::pair<StateId, double>> row(options.fanout);
    for (StateId s = 0; s < n; ++s)
        for (ActionId a = 0; a < options.actions; ++a) {
            const auto targets = rng.sample_distinct(n, options.fanout);
            const auto probs = rng.dirichlet(options.fanout);
            for (std::size_t i = 0; i < options.fanout; ++i)
                row[i] = {static_cast<StateId>(targets[i]), probs[i]};
            std::sort(row.begin(), row.end());
            for (const auto& [t, p] : row)
                b.add_transition(s, a, t, p);
        }
    for (StateId s = 0; s < n; ++s)
        b.set_state_reward(s, 2.0 * rng.uniform() - 1.0);
    for (const char* prefix : {"aq", "xq"}) {
        std::vector<StateId> order(n);
        std::iota(order.begin(), order.end(), StateId{0});
        rng.shuffle(order);
        for (int q = 0; q < 5; ++q)
            b.declare_label(prefix + std::to_string(q));
        for (std::size_t i = 0; i < n; ++i)
            b.add_label(prefix + std::to_string(i * 5 / n), order[i]);
    }
    b.set_initial_state(0);
    b.set_discount(options.discount);
    return std::move(b).build();
}

}  // namespace eau
