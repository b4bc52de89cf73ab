#include <doctest.h>

#include <fstream>
#include <sstream>

#include "eau/envs.hpp"
#include "eau/mdp_io.hpp"

using namespace eau;

namespace {

std::string golden(const std::string& name) {
    std::ifstream in(std::string(EAU_GOLDEN_DIR) + "/" + name, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

// Regenerate with: eau gen-grid --windy -o windy_drone.mdp, eau gen-grid --seed 1 --spec -o grid_seed1.grid,
// eau gen-grid --seed 1 -o grid_seed1.mdp, eau gen-mdp --seed 3 --states 12 --actions 3 --fanout 2 -o mdp_seed3.mdp

TEST_CASE("windy drone model text is stable") {
    CHECK(format_mdp(windy_drone()) == golden("windy_drone.mdp"));
}

TEST_CASE("bundled windy grid file matches the built-in layout") {
    CHECK(golden("../../data/windy_drone.grid") == std::string(windy_drone_text()));
}

TEST_CASE("seeded gridworld is stable") {
    CHECK(format_grid_spec(random_grid_spec(1)) == golden("grid_seed1.grid"));
    CHECK(format_mdp(gen_random_gridworld(1)) == golden("grid_seed1.mdp"));
}

TEST_CASE("seeded random MDP is stable") {
    RandomMdpOptions o;
    o.states = 12;
    o.actions = 3;
    o.fanout = 2;
    CHECK(format_mdp(gen_random_mdp(3, o)) == golden("mdp_seed3.mdp"));
}

TEST_CASE("golden models parse back to themselves") {
    for (const char* name : {"windy_drone.mdp", "grid_seed1.mdp", "mdp_seed3.mdp"}) {
        const std::string text = golden(name);
        CHECK(format_mdp(parse_mdp(text)) == text);
    }
}
