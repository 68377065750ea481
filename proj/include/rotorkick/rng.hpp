#pragma once

#include <cmath>
#include <cstdint>

#include "rotorkick/common.hpp"

namespace rotorkick {

// splitmix64 step: advances the state and returns a mixed 64-bit word.
// Chosen over std::mt19937_64 + std::normal_distribution because the
// standard normal_distribution sequence is implementation-defined; this
// stream is identical on every platform.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Independent stream id for a (realisation, member) task.  Each component is
// funneled through the mixer so low-entropy user seeds (0, 1, 2, ...) still
// produce uncorrelated streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64(s);
    s = h ^ (a + 0x9e3779b97f4a7c15ULL);
    h = splitmix64(s);
    s = h ^ (b + 0xbf58476d1ce4e5b9ULL);
    return splitmix64(s);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // uniform in [0, 1) with 53 random bits
    double uniform() { return static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53; }

    // standard normal via Box-Muller; the paired draw is cached
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform(); // (0, 1], keeps the log finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * pi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * pi * u2);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace rotorkick
