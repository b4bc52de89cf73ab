#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Scratch {
    fs::path dir;
    Scratch() {
        dir = fs::temp_directory_path() / ("eau_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    static int& counter() {
        static int n = 0;
        return n;
    }
};

int run(const std::string& args, const fs::path& dir, std::string* out = nullptr) {
    const fs::path log = dir / "stdout.txt";
    const std::string cmd =
        "cd '" + dir.string() + "' && '" + EAU_CLI_PATH + "' " + args + " > '" + log.string() + "' 2> /dev/null";
    const int status = std::system(cmd.c_str());
    if (out) {
        std::ifstream in(log);
        std::ostringstream s;
        s << in.rdbuf();
        *out = s.str();
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

long lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

}  // namespace

TEST_CASE("check exit codes") {
    Scratch t;
    CHECK(run("check --windy -f 'P>=0.75 [ G !playground ]' --mode stit", t.dir) == 0);
    CHECK(run("check --windy -f 'P>=0.75 [ G !playground ]'", t.dir) == 1);
    CHECK(run("check --windy -f 'P>=0.75 [ G !playground'", t.dir) == 2);
    CHECK(run("check --windy -f 'P>=0.75 [ F nowhere ]'", t.dir) == 2);
    CHECK(run("check -m missing.mdp -f 'P>=0.5 [ F a ]'", t.dir) == 2);
    CHECK(run("frobnicate", t.dir) == 2);
    CHECK(run("--help", t.dir) == 0);
}

TEST_CASE("check output is reproducible") {
    Scratch t;
    std::string a, b;
    run("check --windy -f 'P>=0.5 [ F hospital ]'", t.dir, &a);
    run("check --windy -f 'P>=0.5 [ F hospital ]'", t.dir, &b);
    CHECK(!a.empty());
    CHECK(a == b);
}

TEST_CASE("ctd check on the windy drone") {
    Scratch t;
    CHECK(run("check --windy --checkpoint-reward 20 --mode ctd -f 'P>=0.7 [ X checkpoint ]' "
              "--ctd 'P>=0.6 [ F start ]' --violation north",
              t.dir) == 0);
    CHECK(run("check --windy --mode ctd -f 'P>=0.7 [ X checkpoint ]' --ctd 'P>=0.6 [ F start ]' "
              "--violation hospital",
              t.dir) == 2);
}

TEST_CASE("line search writes a policy and a full trace") {
    Scratch t;
    CHECK(run("synthesize --windy -f 'P>=0.75 [ G !playground ]' --method line --out-dir out", t.dir) == 0);
    const std::string trace = slurp(t.dir / "out" / "synth_trace.csv");
    CHECK(lines(trace) == 102);
    CHECK(trace.rfind("iteration,", 0) == 0);
    CHECK(fs::exists(t.dir / "out" / "synth_policy.csv"));
}

TEST_CASE("output directory falls back to the environment") {
    Scratch t;
    CHECK(run("synthesize --windy -f 'P>=0.75 [ G !playground ]' --method avg --iters 5 --prefix a", t.dir) != 2);
    CHECK(fs::exists(t.dir / "a_trace.csv"));
    const std::string env_cmd = "cd '" + t.dir.string() + "' && EAU_OUTPUT_DIR=envdir '" + EAU_CLI_PATH +
                                "' synthesize --windy -f 'P>=0.75 [ G !playground ]' --method avg --iters 5 "
                                "> /dev/null 2>&1";
    const int status = std::system(env_cmd.c_str());
    CHECK(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) != 2);
    CHECK(fs::exists(t.dir / "envdir" / "synth_trace.csv"));
}

TEST_CASE("grid search output shape") {
    Scratch t;
    CHECK(run("synthesize --windy -f 'P>=0.75 [ G !playground ]' --grid-search --etas 0.1,1 --ks 4,all "
              "--iters 10 --jobs 2",
              t.dir) == 0);
    const std::string grid = slurp(t.dir / "synth_grid.csv");
    CHECK(grid.rfind("eta,k,final_probability,final_utility\n", 0) == 0);
    CHECK(lines(grid) == 5);
    CHECK(lines(slurp(t.dir / "synth_grid_probability.csv")) >= 2);
    CHECK(lines(slurp(t.dir / "synth_grid_utility.csv")) >= 2);
    CHECK(run("synthesize --windy -f 'P>=0.75 [ G !playground ]' --grid-search --ks 0", t.dir) == 2);
}

TEST_CASE("explore with zero episodes records only the initial policy") {
    Scratch t;
    CHECK(run("explore --worlds 2 --episodes 0", t.dir) == 0);
    const std::string csv = slurp(t.dir / "explore.csv");
    CHECK(csv.rfind("episode,mean_probability,", 0) == 0);
    CHECK(lines(csv) == 2);
}

TEST_CASE("explore is independent of the worker count") {
    Scratch t;
    REQUIRE(run("explore --worlds 3 --episodes 4 -o one.csv", t.dir) == 0);
    REQUIRE(run("explore --worlds 3 --episodes 4 --jobs 3 -o three.csv", t.dir) == 0);
    CHECK(slurp(t.dir / "one.csv") == slurp(t.dir / "three.csv"));
}

TEST_CASE("generators and validation") {
    Scratch t;
    CHECK(run("gen-mdp --seed 1 --states 30 --actions 2 --fanout 2 -o m.mdp", t.dir) == 0);
    CHECK(run("validate -m m.mdp", t.dir) == 0);
    CHECK(run("check -m m.mdp -f 'P>=0 [ F aq0 ]' --mode stit", t.dir) == 0);
    CHECK(run("gen-grid --seed 2 --spec -o g.grid", t.dir) == 0);
    CHECK(run("validate -m g.grid", t.dir) == 0);
    std::ofstream(t.dir / "bad.mdp") << "mdp\nstates 2\ninitial 0\ndiscount 0.9\ntransition 0 0 1 0.9\n";
    CHECK(run("validate -m bad.mdp", t.dir) != 0);
}
