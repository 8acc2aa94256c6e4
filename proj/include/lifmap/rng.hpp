#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace lifmap {

// splitmix64: tiny, portable, well-mixed. All randomness in the project flows
// through this generator so that runs are reproducible across platforms and
// standard-library versions (std::* distributions are not portable).
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Independent stream for (seed, stream_id); used to split one spec-level seed
// into per-component seeds without correlation.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t s = seed ^ (stream_id * 0xD6E8FEB86659FD93ULL);
    return splitmix64_next(s);
}

class rng {
public:
    explicit rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    // uniform in [0, 1) with 53 random bits
    double uniform() { return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t state_;
};

// Homogeneous Poisson process on [0, T_ms); times in ms, sorted.
inline std::vector<double> poisson_train(double rate_hz, double T_ms, std::uint64_t seed) {
    std::vector<double> out;
    if (rate_hz <= 0.0) return out;
    rng r(seed);
    double t = 0.0;
    for (;;) {
        t += -std::log(1.0 - r.uniform()) * 1000.0 / rate_hz;
        if (t >= T_ms) break;
        out.push_back(t);
    }
    return out;
}

}  // namespace lifmap
