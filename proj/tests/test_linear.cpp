#include <doctest.h>

#include <random>

#include "eau/error.hpp"
#include "eau/linear.hpp"

using namespace eau;

namespace {

SparseMatrix random_substochastic(std::mt19937_64& gen, std::size_t n, double mass) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SparseMatrix a;
    a.cols = n;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<std::uint32_t, double>> row;
        double sum = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (u(gen) < 4.0 / static_cast<double>(n)) {
                row.push_back({static_cast<std::uint32_t>(j), u(gen)});
                sum += row.back().second;
            }
        for (auto& [j, v] : row)
            a.push_entry(j, v / sum * mass);
        a.end_row();
    }
    return a;
}

}  // namespace

TEST_CASE("direct and iterative paths solve the same system") {
    std::mt19937_64 gen(1);
    for (std::size_t n : {5u, 50u, 300u}) {
        const SparseMatrix a = random_substochastic(gen, n, 0.9);
        std::vector<double> b(n);
        for (double& x : b)
            x = std::uniform_real_distribution<double>(0, 0.1)(gen);
        SolverOptions direct;
        SolverOptions iterative;
        iterative.direct_limit = 0;
        const auto x1 = solve_fixed_point(a, b, direct);
        const auto x2 = solve_fixed_point(a, b, iterative);
        CHECK(fixed_point_residual(a, b, x1) < 1e-10);
        CHECK(fixed_point_residual(a, b, x2) < 1e-10);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(x1[i] == doctest::Approx(x2[i]).epsilon(1e-8));
    }
}

TEST_CASE("iterative solver reports non-convergence") {
    SparseMatrix a;
    a.cols = 1;
    a.push_entry(0, 1.0);
    a.end_row();
    SolverOptions o;
    o.direct_limit = 0;
    o.max_sweeps = 100;
    CHECK_THROWS_AS(solve_fixed_point(a, std::vector<double>{1.0}, o), SolverError);
    CHECK_THROWS_AS(solve_fixed_point(a, std::vector<double>{1.0}, SolverOptions{}), SolverError);
}

TEST_CASE("transpose and multiply agree") {
    std::mt19937_64 gen(2);
    const SparseMatrix a = random_substochastic(gen, 20, 1.0);
    const SparseMatrix t = transpose(a);
    CHECK(t.rows == 20);
    std::vector<double> e(20, 0.0);
    for (std::size_t j = 0; j < 20; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1.0;
        std::vector<double> tj(20);
        multiply(t, e, tj);
        for (std::size_t i = 0; i < 20; ++i) {
            std::vector<double> ei(20, 0.0), ai(20);
            ei[i] = 1.0;
            multiply(a, ei, ai);
            CHECK(tj[i] == ai[j]);
        }
    }
    CHECK(a.nonzeros() == t.nonzeros());
}
