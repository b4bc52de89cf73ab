#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace eau {

/// Row-compressed sparse matrix.
struct SparseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> offsets{0};
    std::vector<std::uint32_t> columns;
    std::vector<double> values;

    std::size_t nonzeros() const noexcept { return values.size(); }

    /// Appends one row; entries need not be sorted.
    void push_row(std::span<const std::uint32_t> cols_in, std::span<const double> vals_in);
    void push_entry(std::uint32_t col, double value);
    void end_row() { offsets.push_back(values.size()); ++rows; }
};

SparseMatrix transpose(const SparseMatrix& a);

/// y = A x
void multiply(const SparseMatrix& a, std::span<const double> x, std::span<double> y);

struct SolverOptions {
    double tolerance = 1e-10;
    std::size_t max_sweeps = 1'000'000;
    /// Systems with at most this many unknowns are factorized directly.
    std::size_t direct_limit = 4096;
};

/**
 * Solves x = b + A x, i.e. (I - A) x = b, for a square substochastic A whose
 * spectral radius is below one. Small systems use sparse LU; larger ones use
 * Gauss-Seidel sweeps until the residual max|b + A x - x| drops below the
 * tolerance. `guess` seeds the iteration when non-empty.
 *
 * Throws SolverError when the sweep limit is hit or factorization fails.
 */
std::vector<double> solve_fixed_point(const SparseMatrix& a, std::span<const double> b,
                                      const SolverOptions& options = {}, std::span<const double> guess = {});

/// max_i |b_i + (A x)_i - x_i|
double fixed_point_residual(const SparseMatrix& a, std::span<const double> b, std::span<const double> x);

}  // namespace eau
