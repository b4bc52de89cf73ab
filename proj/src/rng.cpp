#include "eau/rng.hpp"

#include <algorithm>
#include <unordered_set>

#include "eau/error.hpp"

namespace eau {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0)
        throw InvalidArgument("Rng::below(0)");
    const std::uint64_t threshold = (0 - n) % n;
    std::uint64_t x = engine_();
    while (x < threshold)
        x = engine_();
    return x % n;
}

std::size_t Rng::categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights)
        total += w;
    if (!(total > 0.0))
        throw InvalidArgument("categorical weights must have positive sum");
    const double u = uniform() * total;
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0)
            continue;
        acc += weights[i];
        last = i;
        if (u < acc)
            return i;
    }
    return last;
}

std::vector<double> Rng::dirichlet(std::size_t k) {
    if (k == 0)
        return {};
    std::vector<double> cuts(k - 1);
    for (double& c : cuts)
        c = uniform();
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> out(k);
    double prev = 0.0;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        out[i] = cuts[i] - prev;
        prev = cuts[i];
    }
    out[k - 1] = 1.0 - prev;
    return out;
}

std::vector<std::uint64_t> Rng::sample_distinct(std::uint64_t n, std::size_t k) {
    if (k > n)
        throw InvalidArgument("cannot draw more distinct values than the range holds");
    std::vector<std::uint64_t> out;
    out.reserve(k);
    if (k <= 16) {
        for (std::uint64_t j = n - k; j < n; ++j) {
            std::uint64_t t = below(j + 1);
            if (std::find(out.begin(), out.end(), t) != out.end())
                t = j;
            out.push_back(t);
        }
    } else if (k * 4 > n) {
        std::vector<char> taken(n, 0);
        for (std::uint64_t j = n - k; j < n; ++j) {
            std::uint64_t t = below(j + 1);
            if (taken[t])
                t = j;
            taken[t] = 1;
            out.push_back(t);
        }
    } else {
        std::unordered_set<std::uint64_t> taken;
        for (std::uint64_t j = n - k; j < n; ++j) {
            std::uint64_t t = below(j + 1);
            if (!taken.insert(t).second) {
                t = j;
                taken.insert(t);
            }
            out.push_back(t);
        }
    }
    shuffle(out);
    return out;
}

}  // namespace eau
