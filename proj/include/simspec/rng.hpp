#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace simspec {

/// SplitMix64 finalizer: a bijective 64-bit mixing function.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based generator ("SplitMix64 counter mode"): draw i of stream s
/// under seed k is splitmix64(splitmix64(k ^ splitmix64(s)) + i). Any draw can
/// be recomputed from (seed, stream, counter) alone, so results do not depend
/// on platform, thread schedule or the standard library's distributions.
class CounterRng {
public:
    constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : m_key(splitmix64(seed ^ splitmix64(stream))) {}

    /// Independent child stream, e.g. one per simulation index.
    constexpr CounterRng split(std::uint64_t index) const {
        CounterRng child(0);
        child.m_key = splitmix64(m_key ^ splitmix64(index + 0x632be59bd9b4e019ULL));
        return child;
    }

    constexpr std::uint64_t next_u64() { return splitmix64(m_key + m_counter++); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; consumes two draws per call.
    double normal() {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t counter() const { return m_counter; }

private:
    std::uint64_t m_key;
    std::uint64_t m_counter = 0;
};

} // namespace simspec
