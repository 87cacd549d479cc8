#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace emqm {

// Counter-based generator: each output is a SplitMix64-style hash of an
// incrementing counter offset by a stream key.  Trajectories address their
// randomness as (seed, realization, time step), so replaying a run is
// independent of thread scheduling and of how many draws earlier steps made.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng() = default;
    CounterRng(std::uint64_t key, std::uint64_t counter = 0) : key_(key), ctr_(counter) {}

    static constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ULL;

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    // Derive an independent stream key, e.g. per realization or per time step.
    static std::uint64_t derive(std::uint64_t key, std::uint64_t tag) {
        return mix(mix(key + golden) ^ (tag * 0xda942042e4dd58b5ULL + golden));
    }

    std::uint64_t next() { return mix(key_ + golden * ++ctr_); }

    // UniformRandomBitGenerator interface (used by std:: distributions).
    std::uint64_t operator()() { return next(); }
    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return std::numeric_limits<std::uint64_t>::max(); }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Unbiased-enough integer in [0, bound) via 128-bit multiply-shift.
    std::uint64_t below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return ctr_; }
    void set_counter(std::uint64_t c) { ctr_ = c; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t ctr_ = 0;
};

} // namespace emqm
