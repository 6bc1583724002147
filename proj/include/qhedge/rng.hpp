#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

namespace qhedge {

// splitmix64; used both as a mixer and as the per-stream generator core so
// that stream assignment is independent of thread scheduling.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
    std::uint64_t s = seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
    return splitmix64(s);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::string_view purpose, std::uint64_t index) {
    std::uint64_t h = seed;
    for (char c : purpose) h = hash_combine(h, static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    return hash_combine(h, index);
}

/// Deterministic per-path random stream keyed by (seed, purpose, path index).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed), cached_(false), cache_(0.0) {}
    Rng(std::uint64_t seed, std::string_view purpose, std::uint64_t index)
        : Rng(stream_seed(seed, purpose, index)) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    double uniform() {
        // 53-bit mantissa in (0,1)
        return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double normal() {
        if (cached_) {
            cached_ = false;
            return cache_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        cache_ = r * std::sin(6.283185307179586477 * u2);
        cached_ = true;
        return r * std::cos(6.283185307179586477 * u2);
    }

    /// Bernoulli(p) as an up/down move indicator.
    bool bernoulli(double p) { return uniform() < p; }

    /// Knuth Poisson; intended for small mean (one Euler step).
    int poisson(double mean) {
        double l = std::exp(-mean);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > l);
        return k - 1;
    }

private:
    std::uint64_t state_;
    bool cached_;
    double cache_;
};

}  // namespace qhedge
