#include "eau/linear.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "eau/error.hpp"

namespace eau {

void SparseMatrix::push_row(std::span<const std::uint32_t> cols_in, std::span<const double> vals_in) {
    columns.insert(columns.end(), cols_in.begin(), cols_in.end());
    values.insert(values.end(), vals_in.begin(), vals_in.end());
    end_row();
}

void SparseMatrix::push_entry(std::uint32_t col, double value) {
    columns.push_back(col);
    values.push_back(value);
}

SparseMatrix transpose(const SparseMatrix& a) {
    SparseMatrix t;
    t.rows = a.cols;
    t.cols = a.rows;
    t.offsets.assign(a.cols + 1, 0);
    for (std::uint32_t c : a.columns)
        ++t.offsets[c + 1];
    for (std::size_t i = 0; i < a.cols; ++i)
        t.offsets[i + 1] += t.offsets[i];
    t.columns.resize(a.nonzeros());
    t.values.resize(a.nonzeros());
    std::vector<std::size_t> fill(t.offsets.begin(), t.offsets.end() - 1);
    for (std::size_t r = 0; r < a.rows; ++r)
        for (std::size_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k) {
            std::size_t dst = fill[a.columns[k]]++;
            t.columns[dst] = static_cast<std::uint32_t>(r);
            t.values[dst] = a.values[k];
        }
    return t;
}

void multiply(const SparseMatrix& a, std::span<const double> x, std::span<double> y) {
    for (std::size_t r = 0; r < a.rows; ++r) {
        double acc = 0.0;
        for (std::size_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k)
            acc += a.values[k] * x[a.columns[k]];
        y[r] = acc;
    }
}

double fixed_point_residual(const SparseMatrix& a, std::span<const double> b, std::span<const double> x) {
    double worst = 0.0;
    for (std::size_t r = 0; r < a.rows; ++r) {
        double acc = b[r];
        for (std::size_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k)
            acc += a.values[k] * x[a.columns[k]];
        worst = std::max(worst, std::abs(acc - x[r]));
    }
    return worst;
}

namespace {

std::vector<double> solve_direct(const SparseMatrix& a, std::span<const double> b) {
    const auto n = static_cast<Eigen::Index>(a.rows);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(a.nonzeros() + a.rows);
    for (std::size_t r = 0; r < a.rows; ++r) {
        triplets.emplace_back(r, r, 1.0);
        for (std::size_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k)
            triplets.emplace_back(r, a.columns[k], -a.values[k]);
    }
    Eigen::SparseMatrix<double> m(n, n);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(m);
    if (lu.info() != Eigen::Success)
        throw SolverError("sparse LU factorization failed (singular system)");
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i)
        rhs[i] = b[static_cast<std::size_t>(i)];
    Eigen::VectorXd sol = lu.solve(rhs);
    if (lu.info() != Eigen::Success)
        throw SolverError("sparse LU solve failed");
    return {sol.data(), sol.data() + n};
}

std::vector<double> solve_gauss_seidel(const SparseMatrix& a, std::span<const double> b, const SolverOptions& options,
                                       std::span<const double> guess) {
    const std::size_t n = a.rows;
    std::vector<double> x = guess.size() == n ? std::vector<double>(guess.begin(), guess.end()) : std::vector<double>(b.begin(), b.end());
    std::vector<double> diag(n, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k)
            if (a.columns[k] == r)
                diag[r] += a.values[k];

    for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
        double change = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            double acc = b[r];
            for (std::size_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k)
                if (a.columns[k] != r)
                    acc += a.values[k] * x[a.columns[k]];
            const double next = acc / (1.0 - diag[r]);
            change = std::max(change, std::abs(next - x[r]));
            x[r] = next;
        }
        if (change < options.tolerance && fixed_point_residual(a, b, x) < options.tolerance)
            return x;
        if (!std::isfinite(change))
            break;
    }
    throw SolverError("Gauss-Seidel did not reach residual " + std::to_string(options.tolerance) + " within " +
                      std::to_string(options.max_sweeps) + " sweeps");
}

}  // namespace

std::vector<double> solve_fixed_point(const SparseMatrix& a, std::span<const double> b, const SolverOptions& options,
                                      std::span<const double> guess) {
    if (a.rows != a.cols || b.size() != a.rows)
        throw InvalidArgument("solve_fixed_point: dimension mismatch");
    if (a.rows == 0)
        return {};
    if (a.rows <= options.direct_limit) {
        std::vector<double> x = solve_direct(a, b);
        for (double v : x)
            if (!std::isfinite(v))
                throw SolverError("direct solve produced a non-finite value");
        return x;
    }
    return solve_gauss_seidel(a, b, options, guess);
}

}  // namespace eau
