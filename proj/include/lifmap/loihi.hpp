#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "params.hpp"

namespace lifmap {

// Fixed-point compartment registers. 32-bit signed with saturating
// arithmetic; 64-bit intermediates in the decay datapath. These choices are
// pinned by tests as the emulator's definition.
struct compartment_state {
    std::int32_t v = 0;
    std::int32_t u = 0;
};

inline std::int32_t sat32(std::int64_t x) {
    constexpr std::int64_t hi = std::numeric_limits<std::int32_t>::max();
    constexpr std::int64_t lo = std::numeric_limits<std::int32_t>::min();
    if (x > hi) return static_cast<std::int32_t>(hi);
    if (x < lo) return static_cast<std::int32_t>(lo);
    return static_cast<std::int32_t>(x);
}

// floor((x * m) / 2^12) toward negative infinity; arithmetic shift semantics.
inline std::int64_t mul_shift(std::int64_t x, std::int64_t m) {
    return (x * m) >> 12;
}

// Integer compartment parameters as consumed per step. theta and bias are
// rounded once here; bias_b itself stays real in loihi_params.
struct compartment_config {
    std::int32_t decay_v = 0;
    std::int32_t decay_u = 0;
    std::int32_t bias = 0;        // round(bias_b)
    std::int32_t theta = 0;       // round(threshold_theta)
};

inline compartment_config make_compartment_config(const loihi_params& p) {
    compartment_config c;
    c.decay_v = p.decay_v;
    c.decay_u = p.decay_u;
    c.bias = sat32(static_cast<std::int64_t>(std::llround(p.bias_b)));
    c.theta = sat32(static_cast<std::int64_t>(std::llround(p.threshold_theta)));
    if (c.theta < 1)
        throw config_error("threshold quantizes below one level; V_s too coarse");
    return c;
}

// One synchronous update, ordering SYNAPSE -> DENDRITE -> threshold -> AXON:
//   u' = sat32(mul_shift(u, 4096 - decay_u) + weighted_spike_sum)
//   v' = sat32(mul_shift(v, 4096 - decay_v) + bias + u')
//   fired iff v' > theta (strict); on fire v' <- 0
// Traces record post-reset values.
inline bool loihi_step(compartment_state& s, const compartment_config& c,
                       std::int32_t weighted_spike_sum) {
    std::int64_t u = mul_shift(s.u, 4096 - c.decay_u);
    u = static_cast<std::int64_t>(sat32(u)) + weighted_spike_sum;
    std::int32_t u32 = sat32(u);
    std::int64_t v = mul_shift(s.v, 4096 - c.decay_v) +
                     static_cast<std::int64_t>(c.bias) + static_cast<std::int64_t>(u32);
    std::int32_t v32 = sat32(v);
    bool fired = v32 > c.theta;
    if (fired) v32 = 0;
    s.u = u32;
    s.v = v32;
    return fired;
}

// Per-core compartment capacity accounting. 1024 compartments per core, fixed.
struct core_layout {
    static constexpr std::size_t compartments_per_core = 1024;
    std::size_t n_cores = 0;
    // neuron i lives on core assignment(i).first, slot assignment(i).second
    std::pair<std::size_t, std::size_t> assignment(std::size_t neuron) const {
        return {neuron / compartments_per_core, neuron % compartments_per_core};
    }
    std::size_t n_neurons = 0;
};

inline core_layout assign_cores(std::size_t n_neurons, std::size_t n_cores) {
    if (n_neurons > n_cores * core_layout::compartments_per_core)
        throw capacity_error("capacity-exceeded: " + std::to_string(n_neurons) +
                             " neurons on " + std::to_string(n_cores) +
                             " core(s) of 1024 compartments");
    core_layout l;
    l.n_cores = n_cores;
    l.n_neurons = n_neurons;
    return l;
}

struct loihi_trace {
    std::vector<std::int32_t> v;       // raw levels, post-reset, one per step
    std::vector<std::int32_t> u;       // raw levels after accumulation
    std::vector<std::int64_t> spikes;  // step indices
};

// Single-compartment run. kicks[k] is the integer weighted spike sum
// accumulated into u at step k (callers apply the one-step external
// delivery shift; see network.hpp).
inline loihi_trace loihi_run_single(const compartment_config& c, std::int64_t steps,
                                    const std::vector<std::pair<std::int64_t, std::int32_t>>& kicks,
                                    std::int32_t v0 = 0) {
    std::vector<std::int32_t> dense(static_cast<std::size_t>(steps), 0);
    for (const auto& [k, w] : kicks)
        if (k >= 0 && k < steps) dense[static_cast<std::size_t>(k)] = sat32(
            static_cast<std::int64_t>(dense[static_cast<std::size_t>(k)]) + w);
    compartment_state s;
    s.v = v0;
    loihi_trace out;
    out.v.reserve(static_cast<std::size_t>(steps));
    out.u.reserve(static_cast<std::size_t>(steps));
    for (std::int64_t k = 0; k < steps; ++k) {
        bool fired = loihi_step(s, c, dense[static_cast<std::size_t>(k)]);
        if (fired) out.spikes.push_back(k);
        out.v.push_back(s.v);
        out.u.push_back(s.u);
    }
    return out;
}

}  // namespace lifmap
