// Counter-based random numbers: every draw is a pure hash of
// (seed, stream, counter), so particle loops are reproducible bit-for-bit
// regardless of evaluation order. SplitMix64 finalizer as the mixing function.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace wfpc {

namespace detail {
inline uint64_t splitmix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

struct CounterRng {
    uint64_t seed = 0;

    // uniform in (0, 1); never returns exactly 0 (log-safe)
    double uniform(uint64_t stream, uint64_t counter) const {
        uint64_t h = detail::splitmix64(seed ^ detail::splitmix64(stream ^ detail::splitmix64(counter)));
        return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
    }

    // standard normal via Box-Muller on two counter slots
    double normal(uint64_t stream, uint64_t counter) const {
        const double u1 = uniform(stream, 2 * counter);
        const double u2 = uniform(stream, 2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
};

}  // namespace wfpc
