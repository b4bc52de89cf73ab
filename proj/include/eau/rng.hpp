#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace eau {

/**
 * Seedable generator used by every randomized component.
 *
 * The engine is std::mt19937_64 (a twisted generalized feedback shift
 * register whose output sequence the C++ standard fixes). All conversions to
 * doubles, integers and distributions are done here rather than with the
 * standard distribution classes, whose algorithms are implementation-defined,
 * so seeded output is identical across platforms and standard libraries.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    /// Uniform integer in [0, n); n > 0.
    std::uint64_t below(std::uint64_t n);
    /// Index drawn with probability proportional to `weights`.
    std::size_t categorical(std::span<const double> weights);
    /// Flat Dirichlet sample of length k (uniform spacings).
    std::vector<double> dirichlet(std::size_t k);
    /// k distinct values from [0, n) in selection order (Floyd's algorithm, then shuffled).
    std::vector<std::uint64_t> sample_distinct(std::uint64_t n, std::size_t k);

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace eau
