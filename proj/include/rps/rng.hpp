#pragma once
// Counter-based deterministic PRNG with independent substreams.
//
// Every stochastic routine in the library takes a RandomSource (or derives one
// via sub()). Identical (seed, stream) pairs give identical draw sequences on
// every run, independent of thread count, because each logical work item owns
// its own stream.

#include <cstdint>
#include <cmath>
#include <cassert>

namespace rps {

namespace detail {
// SplitMix64 output mixer. Statistically solid for counter-mode use.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
} // namespace detail

class RandomSource {
public:
    RandomSource(std::uint64_t seed, std::uint64_t stream_id = 0)
        : key_(derive_key(seed, stream_id)), seed_(seed), counter_(0),
          have_spare_(false), spare_(0.0) {}

    std::uint64_t seed() const { return seed_; }

    // Derive an independent substream. Stream ids form a tree: the child key
    // is mixed from the parent key, so sub(a).sub(b) != sub(b).sub(a).
    RandomSource sub(std::uint64_t stream_id) const {
        RandomSource r(0, 0);
        r.key_ = detail::mix64(key_ ^ detail::mix64(stream_id ^ 0x5851f42d4c957f2dULL));
        r.seed_ = seed_;
        r.counter_ = 0;
        r.have_spare_ = false;
        return r;
    }

    std::uint64_t next_u64() {
        return detail::mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_);
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        assert(n > 0);
        // Rejection-free would bias for huge n; rejection loop is cheap here.
        std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
        std::uint64_t v;
        do { v = next_u64(); } while (v >= limit);
        return v % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    int bit() { return int(next_u64() >> 63); }

    // Standard normal via Box-Muller (no std::normal_distribution so the
    // stream is fully specified by this header, not the stdlib vendor).
    double normal() {
        if (have_spare_) { have_spare_ = false; return spare_; }
        double u1, u2;
        do { u1 = uniform(); } while (u1 <= 0.0);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
        return detail::mix64(detail::mix64(seed) ^ detail::mix64(stream ^ 0xda3e39cb94b95bdbULL));
    }

    std::uint64_t key_;
    std::uint64_t seed_;
    std::uint64_t counter_;
    bool have_spare_;
    double spare_;
};

} // namespace rps
