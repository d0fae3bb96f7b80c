#pragma once

#include <cstdint>
#include <random>

namespace ibr {

// Deterministic uniform doubles straight from the mt19937_64 stream; avoids
// std::uniform_real_distribution so identical seeds give identical output on
// every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::uint64_t next_u64() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

}  // namespace ibr
