#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <ctime>
#include <limits>
#include <set>
#include <vector>

#include "errors.hpp"
#include "loihi.hpp"
#include "network.hpp"
#include "params.hpp"
#include "reference.hpp"

namespace lifmap {

inline double rmse(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw config_error("rmse: length mismatch");
    if (a.empty()) throw config_error("rmse: empty series");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw config_error("pearson: length mismatch");
    if (a.size() < 2) throw config_error("pearson: need at least 2 samples");
    // exact constancy check: the mean of identical doubles is not bit-exact,
    // so a variance test alone can miss a degenerate series
    bool a_const = true, b_const = true;
    for (std::size_t i = 1; i < a.size(); ++i) {
        if (a[i] != a[0]) a_const = false;
        if (b[i] != b[0]) b_const = false;
    }
    if (a_const || b_const) throw undefined_correlation();
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sa = 0.0, sb = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double da = a[i] - ma, db = b[i] - mb;
        sa += da * da;
        sb += db * db;
        cov += da * db;
    }
    if (sa == 0.0 || sb == 0.0) throw undefined_correlation();
    return cov / std::sqrt(sa * sb);
}

// Sample indices at least 2 steps away from every spike in any of the given
// trains; used to separate subthreshold fidelity from spike-time jitter.
inline std::vector<std::size_t> spike_exclusion_mask(
    std::size_t n_samples, const std::vector<const std::vector<std::int64_t>*>& trains) {
    std::set<std::int64_t> bad;
    for (const auto* t : trains)
        for (std::int64_t s : *t) {
            bad.insert(s - 1);
            bad.insert(s);
            bad.insert(s + 1);
        }
    std::vector<std::size_t> out;
    out.reserve(n_samples);
    for (std::size_t k = 0; k < n_samples; ++k)
        if (!bad.count(static_cast<std::int64_t>(k))) out.push_back(k);
    return out;
}

template <typename T>
inline std::vector<double> select(const std::vector<T>& src, const std::vector<std::size_t>& idx) {
    std::vector<double> out;
    out.reserve(idx.size());
    for (std::size_t k : idx) out.push_back(static_cast<double>(src[k]));
    return out;
}

struct histogram {
    double lo = 0.0, hi = 0.0;
    std::array<std::int64_t, 100> ref_counts{};
    std::array<std::int64_t, 100> emu_counts{};
};

inline histogram make_histogram(const std::vector<double>& a, const std::vector<double>& b) {
    histogram h;
    double lo = a[0], hi = a[0];
    for (double x : a) { lo = std::min(lo, x); hi = std::max(hi, x); }
    for (double x : b) { lo = std::min(lo, x); hi = std::max(hi, x); }
    if (hi <= lo) hi = lo + 1.0;
    h.lo = lo;
    h.hi = hi;
    auto bin = [&](double x) {
        auto i = static_cast<std::int64_t>(std::floor((x - lo) / (hi - lo) * 100.0));
        return static_cast<std::size_t>(std::clamp<std::int64_t>(i, 0, 99));
    };
    for (double x : a) h.ref_counts[bin(x)]++;
    for (double x : b) h.emu_counts[bin(x)]++;
    return h;
}

struct validation_report {
    double rmse_v = 0.0;            // mV, over all samples
    double rmse_v_masked = 0.0;     // mV, spikes excluded (+-1 sample)
    double pearson_r = 0.0;         // over masked samples
    bool pearson_defined = true;
    std::size_t n_samples = 0;
    std::size_t spike_count_ref = 0;
    std::size_t spike_count_emu = 0;
    std::int64_t max_spike_time_offset = 0;  // steps, over index-matched pairs
    std::vector<double> t_ms;
    std::vector<double> V_ref;
    std::vector<double> V_emu;      // inverse-mapped to mV
    std::vector<double> I_ref;      // nA
    std::vector<double> I_emu;      // nA, u mapped back (one-step aligned)
    std::vector<std::int64_t> spikes_ref;
    std::vector<std::int64_t> spikes_emu;
    histogram hist;
};

inline std::vector<std::int64_t> spike_steps_from_times(const std::vector<double>& spike_t,
                                                        double dt) {
    std::vector<std::int64_t> out;
    out.reserve(spike_t.size());
    for (double t : spike_t) out.push_back(std::llround(t / dt) - 1);
    return out;
}

// Runs both engines on the same single-neuron stimulus and compares.
// The emulator receives each external event one step after the reference's
// floor(t/dt) slot (uniform one-step delivery); the reference injects events
// at the step midpoint. The pair of conventions keeps the engines aligned in
// group delay, so no further trace shifting is applied before comparison.
inline validation_report compare_single_neuron(const neuron_params& n, const mapping_config& cfg,
                                               const single_stim& stim, double T_ms) {
    const auto steps = static_cast<std::int64_t>(std::llround(T_ms / cfg.dt));
    // reference gets each event at the midpoint of its comparison step
    single_stim centered;
    centered.bias_nA = stim.bias_nA;
    centered.events.reserve(stim.events.size());
    for (const auto& [t, w] : stim.events)
        centered.events.emplace_back((std::floor(t / cfg.dt) + 0.5) * cfg.dt, w);
    ref_trace ref = ref_run(n, centered, T_ms, cfg.dt, cfg.dt);

    loihi_params lp = derive_loihi_params(n, cfg, stim.bias_nA);
    compartment_config cc = make_compartment_config(lp);
    std::vector<std::pair<std::int64_t, std::int32_t>> kicks;
    kicks.reserve(stim.events.size());
    for (const auto& [t, w] : stim.events) {
        auto s = static_cast<std::int64_t>(std::floor(t / cfg.dt)) + 1;
        if (t >= 0.0 && s < steps)
            kicks.emplace_back(s, sat32(std::llround(w * lp.weight_scale)));
    }
    auto v0 = sat32(std::llround(forward_transform(n.resting_E_L, n.reset_V_r, cfg.V_s)));
    loihi_trace emu = loihi_run_single(cc, steps, kicks, v0);

    validation_report r;
    r.n_samples = ref.V.size();
    r.t_ms.reserve(r.n_samples);
    for (std::size_t k = 0; k < r.n_samples; ++k)
        r.t_ms.push_back(static_cast<double>(k + 1) * cfg.dt);
    r.V_ref = ref.V;
    r.V_emu.reserve(r.n_samples);
    for (auto v : emu.v) r.V_emu.push_back(inverse_transform(v, n.reset_V_r, cfg.V_s));
    r.I_ref = ref.I_syn;
    r.I_emu.reserve(r.n_samples);
    const double u_to_nA = n.capacitance_C * cfg.V_s / cfg.dt;
    for (auto u : emu.u) r.I_emu.push_back(static_cast<double>(u) * u_to_nA);

    r.spikes_ref = spike_steps_from_times(ref.spike_t, cfg.dt);
    r.spikes_emu = emu.spikes;
    r.spike_count_ref = r.spikes_ref.size();
    r.spike_count_emu = r.spikes_emu.size();
    std::size_t matched = std::min(r.spike_count_ref, r.spike_count_emu);
    for (std::size_t i = 0; i < matched; ++i)
        r.max_spike_time_offset =
            std::max(r.max_spike_time_offset, std::abs(r.spikes_ref[i] - r.spikes_emu[i]));

    r.rmse_v = rmse(r.V_ref, r.V_emu);
    auto mask = spike_exclusion_mask(r.n_samples, {&r.spikes_ref, &r.spikes_emu});
    auto a = select(r.V_ref, mask);
    auto b = select(r.V_emu, mask);
    r.rmse_v_masked = a.empty() ? r.rmse_v : rmse(a, b);
    try {
        r.pearson_r = pearson(a, b);
    } catch (const undefined_correlation&) {
        r.pearson_defined = false;
        r.pearson_r = std::numeric_limits<double>::quiet_NaN();
    }
    r.hist = make_histogram(r.V_ref, r.V_emu);
    return r;
}

struct sweep_result {
    std::vector<double> axis;
    std::vector<double> rmse_v;  // NaN where the point is unrepresentable
    std::vector<double> rmse_u;
    std::vector<bool> representable;
};

// Current-trace comparison: emulator u at step k+1 holds the events the
// reference integrated during step k, so the series are compared with that
// one-step alignment.
inline double rmse_u_aligned(const validation_report& r) {
    if (r.n_samples < 2) return 0.0;
    std::vector<double> a(r.I_ref.begin(), r.I_ref.end() - 1);
    std::vector<double> b(r.I_emu.begin() + 1, r.I_emu.end());
    return rmse(a, b);
}

inline sweep_result sweep_temporal(const neuron_params& n, const single_stim& stim, double T_ms,
                                   const std::vector<double>& dts = {0.1, 1.0, 10.0},
                                   double V_s = 1e-4) {
    sweep_result out;
    for (double dt : dts) {
        out.axis.push_back(dt);
        if (dt > n.tau_v() || dt > n.syn_tau_u) {
            // recorded as unrepresentable rather than aborting the sweep
            out.rmse_v.push_back(std::numeric_limits<double>::quiet_NaN());
            out.rmse_u.push_back(std::numeric_limits<double>::quiet_NaN());
            out.representable.push_back(false);
            continue;
        }
        mapping_config cfg{dt, V_s};
        auto r = compare_single_neuron(n, cfg, stim, T_ms);
        out.rmse_v.push_back(r.rmse_v_masked);
        out.rmse_u.push_back(rmse_u_aligned(r));
        out.representable.push_back(true);
    }
    return out;
}

inline sweep_result sweep_voltage(const neuron_params& n, const single_stim& stim, double T_ms,
                                  const std::vector<double>& scales = {1e-3, 1e-4, 1e-5},
                                  double dt = 1.0) {
    sweep_result out;
    for (double V_s : scales) {
        out.axis.push_back(V_s);
        mapping_config cfg{dt, V_s};
        auto r = compare_single_neuron(n, cfg, stim, T_ms);
        out.rmse_v.push_back(r.rmse_v_masked);
        out.rmse_u.push_back(rmse_u_aligned(r));
        out.representable.push_back(true);
    }
    return out;
}

struct bench_row {
    std::size_t size = 0;
    double ref_cpu_s = 0.0;
    double emu_cpu_s = 0.0;
};

inline double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

// Pooled metrics over a multi-neuron run: metric over the concatenation of
// per-neuron spike-excluded series.
struct pooled_metrics {
    double pearson_r = 0.0;
    bool pearson_defined = true;
    double rmse_v = 0.0;
};

inline pooled_metrics pooled_compare(const network_run_result& ref,
                                     const network_run_result& emu,
                                     const network_graph& g, const loihi_network& net) {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < g.neurons.size(); ++i) {
        auto mask = spike_exclusion_mask(ref.V[i].size(), {&ref.spikes[i], &emu.spikes[i]});
        const double V_s = net.params[i].source_V_s;
        const double V_r = g.neurons[i].reset_V_r;
        for (std::size_t k : mask) {
            a.push_back(ref.V[i][k]);
            b.push_back(inverse_transform(emu.v_lvl[i][k], V_r, V_s));
        }
    }
    pooled_metrics m;
    m.rmse_v = rmse(a, b);
    try {
        m.pearson_r = pearson(a, b);
    } catch (const undefined_correlation&) {
        m.pearson_defined = false;
        m.pearson_r = std::numeric_limits<double>::quiet_NaN();
    }
    return m;
}

}  // namespace lifmap
