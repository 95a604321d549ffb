#pragma once

#include <cmath>
#include <cstdint>

namespace rnr {

/// Counter-based pseudo-random generator. A draw is a pure function of
/// (seed, stream, counter), so forked streams can be consumed in parallel
/// and any draw sequence can be resumed from a serialized (seed, stream,
/// counter) triple. Copying an Rng copies its position; instances are
/// cheap value types and must not be shared mutably across threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream), key_(mix(mix(seed, 0x243f6a8885a308d3ull), stream)), counter_(0) {}

    static Rng resume(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
        Rng r(seed, stream);
        r.counter_ = counter;
        return r;
    }

    /// Derived generator with an independent draw sequence. fork(i) != fork(j)
    /// for i != j, and the parent's position is unaffected.
    Rng fork(std::uint64_t substream) const {
        return Rng(mix(key_, 0x9e3779b97f4a7c15ull), substream ^ mix(stream_, substream));
    }

    std::uint64_t next_u64() { return mix(key_, counter_++); }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be >= 1.
    std::uint64_t uniform_int(std::uint64_t n) {
        // Rejection-free modulo bias is negligible for the small n used here,
        // but keep the draw stable: one u64 per call.
        return next_u64() % n;
    }

    /// Standard normal via Box-Muller; always consumes exactly two draws.
    double normal() {
        const double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; // (0,1)
        const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;         // [0,1)
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }
    std::uint64_t counter() const { return counter_; }

private:
    static std::uint64_t mix(std::uint64_t key, std::uint64_t ctr) {
        std::uint64_t z = key + 0x9e3779b97f4a7c15ull * (ctr + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_;
};

} // namespace rnr
