#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ser3d {

// mt19937 with hand-rolled draw methods so that sequences are identical
// across standard libraries (std::uniform_real_distribution is not
// portable between implementations).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(static_cast<std::uint32_t>(seed ^ (seed >> 32))) {}

    std::uint32_t next_u32() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_()) * (1.0 / 4294967296.0); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; one value per call, the paired value is discarded.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        return mean + stddev * z;
    }

    // Uniform integer in [0, n).
    std::uint32_t below(std::uint32_t n) { return static_cast<std::uint32_t>(uniform() * n); }

    // Fisher-Yates.
    template <typename Container>
    void shuffle(Container& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = below(static_cast<std::uint32_t>(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    // Derive an independent stream, e.g. one per fold or per epoch.
    Rng fork(std::uint64_t salt) {
        return Rng((static_cast<std::uint64_t>(next_u32()) << 32) ^ salt);
    }

private:
    std::mt19937 engine_;
};

}  // namespace ser3d
