#pragma once

#include <cmath>
#include <cstdint>

namespace setflow {

/// splitmix64 stream; identical on every platform, which keeps randomized
/// reports byte-reproducible from the printed seed alone.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    int uniform_int(int a, int b) { // inclusive bounds
        return a + static_cast<int>(next_u64() % static_cast<std::uint64_t>(b - a + 1));
    }

    double log_uniform(double a, double b) {
        return std::exp(uniform(std::log(a), std::log(b)));
    }

private:
    std::uint64_t state_;
};

} // namespace setflow
