#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "loihi.hpp"
#include "params.hpp"
#include "reference.hpp"
#include "rng.hpp"

namespace lifmap {

// Synaptic weight convention: physical weight is the charge delivered per
// spike; the postsynaptic current amplitude jump is weight/tau_u folded in by
// the stimulus builders, so the graph carries the raw per-event current jump
// consumed by both engines. Delays are in whole steps, >= 1.
struct synapse {
    std::size_t pre = 0;
    std::size_t post = 0;
    double weight = 0.0;           // current-jump units (nA added to I_syn per event)
    std::int64_t delay_steps = 1;
};

struct network_graph {
    std::vector<neuron_params> neurons;
    std::vector<synapse> synapses;

    void validate() const {
        for (const auto& s : synapses) {
            if (s.pre >= neurons.size() || s.post >= neurons.size())
                throw config_error("synapse index out of range");
            if (s.delay_steps < 1) throw config_error("synapse delay must be >= 1 step");
        }
    }
};

// Per-neuron external drive. Spike event times are physical ms; they are
// discretized to steps by floor(t/dt), collisions within a step accumulate.
struct stimulus_program {
    std::vector<double> bias_nA;                                  // per neuron
    std::vector<std::vector<std::pair<double, double>>> events;   // per neuron (t_ms, weight)

    void resize(std::size_t n) {
        bias_nA.resize(n, 0.0);
        events.resize(n);
    }
};

struct random_connectivity {
    double p = 0.0;
    double weight_lo = 0.0;
    double weight_hi = 0.0;
    std::int64_t delay_steps = 1;
    std::uint64_t seed = 0;
};

// Seeded Erdos-Renyi edges, no self-loops. Iteration order (post-major) is
// part of the determinism contract.
inline std::vector<synapse> build_random_edges(std::size_t n_neurons,
                                               const random_connectivity& rc) {
    if (rc.p < 0.0 || rc.p > 1.0) throw config_error("connectivity p must be in [0, 1]");
    if (rc.delay_steps < 1) throw config_error("connectivity delay must be >= 1 step");
    std::vector<synapse> out;
    rng r(rc.seed);
    for (std::size_t post = 0; post < n_neurons; ++post) {
        for (std::size_t pre = 0; pre < n_neurons; ++pre) {
            if (pre == post) continue;
            if (r.uniform() < rc.p) {
                synapse s;
                s.pre = pre;
                s.post = post;
                s.weight = r.uniform(rc.weight_lo, rc.weight_hi);
                s.delay_steps = rc.delay_steps;
                out.push_back(s);
            }
        }
    }
    return out;
}

struct loihi_network {
    std::vector<loihi_params> params;
    std::vector<compartment_config> configs;
    std::vector<synapse> synapses;           // weight holds the integer level value
    std::vector<std::int32_t> weights_lvl;   // parallel to synapses
    core_layout layout;
    std::vector<std::string> warnings;       // e.g. weights that rounded to zero
};

// Maps every neuron and converts synapse weights to integer levels via the
// postsynaptic neuron's weight_scale. A weight that rounds to zero levels is
// kept (it is what the hardware would do) but reported in warnings; silent
// drops are forbidden.
inline loihi_network translate_network(const network_graph& g, const mapping_config& cfg,
                                       const std::vector<double>& bias_nA,
                                       std::size_t n_cores) {
    g.validate();
    loihi_network out;
    out.layout = assign_cores(g.neurons.size(), n_cores);
    out.params.reserve(g.neurons.size());
    out.configs.reserve(g.neurons.size());
    for (std::size_t i = 0; i < g.neurons.size(); ++i) {
        double bias = i < bias_nA.size() ? bias_nA[i] : 0.0;
        try {
            out.params.push_back(derive_loihi_params(g.neurons[i], cfg, bias));
            out.configs.push_back(make_compartment_config(out.params.back()));
        } catch (const sim_error& e) {
            throw mapping_error("neuron " + std::to_string(i) + ": " + e.what());
        }
    }
    out.synapses = g.synapses;
    out.weights_lvl.reserve(g.synapses.size());
    for (std::size_t k = 0; k < g.synapses.size(); ++k) {
        const auto& s = g.synapses[k];
        double scaled = s.weight * out.params[s.post].weight_scale;
        auto lvl = sat32(static_cast<std::int64_t>(std::llround(scaled)));
        if (lvl == 0 && s.weight != 0.0)
            out.warnings.push_back("synapse " + std::to_string(k) + " (" +
                                   std::to_string(s.pre) + "->" + std::to_string(s.post) +
                                   ") weight rounds to 0 levels");
        out.weights_lvl.push_back(lvl);
    }
    return out;
}

struct network_run_result {
    std::vector<std::vector<double>> V;             // [neuron][step], mV (reference)
    std::vector<std::vector<double>> I;             // [neuron][step], nA (reference)
    std::vector<std::vector<std::int32_t>> v_lvl;   // [neuron][step] (emulator)
    std::vector<std::vector<std::int32_t>> u_lvl;   // [neuron][step] (emulator)
    std::vector<std::vector<std::int64_t>> spikes;  // [neuron] step indices
    bool record_traces = true;
};

// Reference network run at h = dt. Internal spikes fired at step k arrive at
// the target in step k + delay (mid-step injection); external events land in
// the step containing their timestamp.
namespace detail {

// Per-neuron external events aggregated per step, sorted, consumed with a
// cursor. Keeps the hot loop free of associative containers.
inline std::vector<std::vector<std::pair<std::int64_t, double>>> sorted_externals(
    const stimulus_program& stim, std::size_t N, double dt, std::int64_t steps,
    std::int64_t step_shift) {
    std::vector<std::vector<std::pair<std::int64_t, double>>> out(N);
    for (std::size_t i = 0; i < N && i < stim.events.size(); ++i) {
        auto& ev = out[i];
        for (const auto& [t, w] : stim.events[i]) {
            auto s = static_cast<std::int64_t>(std::floor(t / dt)) + step_shift;
            if (t >= 0.0 && s < steps) ev.emplace_back(s, w);
        }
        std::sort(ev.begin(), ev.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
    }
    return out;
}

inline std::int64_t ring_depth(const std::vector<synapse>& synapses) {
    std::int64_t d = 1;
    for (const auto& s : synapses) d = std::max(d, s.delay_steps + 1);
    return d;
}

}  // namespace detail

inline network_run_result run_reference_network(const network_graph& g,
                                                const stimulus_program& stim,
                                                double dt, std::int64_t steps,
                                                bool record_traces = true) {
    g.validate();
    const std::size_t N = g.neurons.size();
    std::vector<propagator> props;
    props.reserve(N);
    for (const auto& n : g.neurons) props.push_back(build_propagator(n, dt));

    auto ext = detail::sorted_externals(stim, N, dt, steps, 0);
    std::vector<std::size_t> cursor(N, 0);

    // spike ring buffer: slot (k mod D)*N + i holds the summed weight due at
    // step k, zeroed after consumption
    const std::int64_t D = detail::ring_depth(g.synapses);
    std::vector<double> ring(static_cast<std::size_t>(D) * N, 0.0);

    std::vector<std::vector<std::size_t>> fan(N);
    for (std::size_t k = 0; k < g.synapses.size(); ++k) fan[g.synapses[k].pre].push_back(k);

    std::vector<ref_state> st(N);
    for (std::size_t i = 0; i < N; ++i) st[i].V = g.neurons[i].resting_E_L;

    network_run_result out;
    out.record_traces = record_traces;
    out.spikes.resize(N);
    if (record_traces) {
        out.V.assign(N, {});
        out.I.assign(N, {});
        for (std::size_t i = 0; i < N; ++i) {
            out.V[i].reserve(static_cast<std::size_t>(steps));
            out.I[i].reserve(static_cast<std::size_t>(steps));
        }
    }
    for (std::int64_t k = 0; k < steps; ++k) {
        double* slot = ring.data() + static_cast<std::size_t>(k % D) * N;
        for (std::size_t i = 0; i < N; ++i) {
            double kick = slot[i];
            slot[i] = 0.0;
            while (cursor[i] < ext[i].size() && ext[i][cursor[i]].first == k)
                kick += ext[i][cursor[i]++].second;
            double bias = i < stim.bias_nA.size() ? stim.bias_nA[i] : 0.0;
            bool fired = ref_step(st[i], props[i], g.neurons[i], bias, kick);
            if (fired) {
                out.spikes[i].push_back(k);
                for (std::size_t e : fan[i]) {
                    const auto& syn = g.synapses[e];
                    std::int64_t arrive = k + syn.delay_steps;
                    if (arrive < steps)
                        ring[static_cast<std::size_t>(arrive % D) * N + syn.post] += syn.weight;
                }
            }
            if (record_traces) {
                out.V[i].push_back(st[i].V);
                out.I[i].push_back(st[i].I_syn);
            }
        }
    }
    return out;
}

// Emulator network run. External events discretized to floor(t/dt) are
// accumulated one step later (uniform one-step delivery, matching the
// minimum synaptic delay); internal spikes at step k arrive at k + delay.
// Bit-deterministic: integer state only, fixed iteration order.
inline network_run_result run_loihi_network(const network_graph& g, const loihi_network& net,
                                            const stimulus_program& stim,
                                            double dt, std::int64_t steps,
                                            bool record_traces = true) {
    const std::size_t N = g.neurons.size();
    // External weights accumulate physically per step and are rounded once;
    // internal spikes carry pre-rounded integer levels in a ring buffer.
    auto ext = detail::sorted_externals(stim, N, dt, steps, 1);
    std::vector<std::size_t> cursor(N, 0);
    const std::int64_t D = detail::ring_depth(net.synapses);
    std::vector<std::int64_t> ring(static_cast<std::size_t>(D) * N, 0);
    std::vector<std::vector<std::size_t>> fan(N);
    for (std::size_t k = 0; k < net.synapses.size(); ++k) fan[net.synapses[k].pre].push_back(k);

    std::vector<compartment_state> st(N);
    for (std::size_t i = 0; i < N; ++i)
        st[i].v = sat32(std::llround(
            forward_transform(g.neurons[i].resting_E_L, g.neurons[i].reset_V_r,
                              net.params[i].source_V_s)));

    network_run_result out;
    out.record_traces = record_traces;
    out.spikes.resize(N);
    if (record_traces) {
        out.v_lvl.assign(N, {});
        out.u_lvl.assign(N, {});
        for (std::size_t i = 0; i < N; ++i) {
            out.v_lvl[i].reserve(static_cast<std::size_t>(steps));
            out.u_lvl[i].reserve(static_cast<std::size_t>(steps));
        }
    }
    for (std::int64_t k = 0; k < steps; ++k) {
        std::int64_t* slot = ring.data() + static_cast<std::size_t>(k % D) * N;
        for (std::size_t i = 0; i < N; ++i) {
            std::int64_t acc = slot[i];
            slot[i] = 0;
            if (cursor[i] < ext[i].size() && ext[i][cursor[i]].first == k) {
                double sum = 0.0;
                while (cursor[i] < ext[i].size() && ext[i][cursor[i]].first == k)
                    sum += ext[i][cursor[i]++].second;
                acc += std::llround(sum * net.params[i].weight_scale);
            }
            bool fired = loihi_step(st[i], net.configs[i], sat32(acc));
            if (fired) {
                out.spikes[i].push_back(k);
                for (std::size_t e : fan[i]) {
                    const auto& syn = net.synapses[e];
                    std::int64_t arrive = k + syn.delay_steps;
                    if (arrive < steps)
                        ring[static_cast<std::size_t>(arrive % D) * N + syn.post] +=
                            net.weights_lvl[e];
                }
            }
            if (record_traces) {
                out.v_lvl[i].push_back(st[i].v);
                out.u_lvl[i].push_back(st[i].u);
            }
        }
    }
    return out;
}

// Poisson stimulus helper mirroring generate_poisson_stimulus.
inline std::vector<std::pair<double, double>> poisson_events(double rate_hz, double T_ms,
                                                             std::uint64_t seed, double weight) {
    if (rate_hz < 0.0) throw config_error("poisson rate must be >= 0");
    std::vector<std::pair<double, double>> out;
    for (double t : poisson_train(rate_hz, T_ms, seed)) out.emplace_back(t, weight);
    return out;
}

}  // namespace lifmap
