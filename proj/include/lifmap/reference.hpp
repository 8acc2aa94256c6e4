#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

#include "errors.hpp"
#include "params.hpp"

namespace lifmap {

// Closed-form propagator for the linear LIF + exponential-synapse system
//   V' = (1/C)[I_bias + I_syn - (V - E_L)/R],   I_syn' = -I_syn/tau_u
// over a step h. Exact for any h, so traces are step-size independent
// between threshold crossings.
//
// Input spikes are treated as arriving half a step into the update interval:
// a spike listed in step k contributes p_vi_half / p_ii_half over the
// remainder of that step. This centers the impulse within the interval and
// is what lines the reference up, step for step, with the fixed-point
// engine's accumulate-then-integrate pipeline (which delivers external
// events on the following step). The residual cross-engine group delay
// measures < 0.02 steps with this pairing.
struct propagator {
    double h = 0.0;
    double p_vv = 1.0;       // exp(-h/tau_v)
    double p_ii = 1.0;       // exp(-h/tau_u)
    double p_vi = 0.0;       // current -> voltage coupling over a full step
    double p_vi_half = 0.0;  // same, for an impulse at the step midpoint
    double p_ii_half = 1.0;  // current decay over half a step
};

inline propagator build_propagator(const neuron_params& n, double h) {
    if (!(h > 0.0)) throw config_error("build_propagator: h must be > 0");
    const double tv = n.tau_v();
    const double tu = n.syn_tau_u;
    propagator p;
    p.h = h;
    p.p_vv = std::exp(-h / tv);
    p.p_ii = std::exp(-h / tu);
    p.p_ii_half = std::exp(-0.5 * h / tu);
    if (std::abs(tu - tv) < 1e-9 * tv) {
        // removable singularity at tau_u == tau_v
        p.p_vi = h / n.capacitance_C * std::exp(-h / tv);
        p.p_vi_half = 0.5 * h / n.capacitance_C * std::exp(-0.5 * h / tv);
    } else {
        const double inv = 1.0 / tu - 1.0 / tv;
        p.p_vi = (1.0 / n.capacitance_C) * (p.p_vv - p.p_ii) / inv;
        p.p_vi_half =
            (1.0 / n.capacitance_C) *
            (std::exp(-0.5 * h / tv) - std::exp(-0.5 * h / tu)) / inv;
    }
    return p;
}

struct ref_state {
    double V = 0.0;      // mV
    double I_syn = 0.0;  // nA
    double t = 0.0;      // ms
};

// One exact-integration step. spike_input is the summed synaptic weight
// (charge-units) landing in this step. Threshold is checked at the end of
// the step; on a crossing, V resets to V_r (no refractory period).
inline bool ref_step(ref_state& s, const propagator& p, const neuron_params& n,
                     double ext_current_nA, double spike_input) {
    const double SS = n.resting_E_L + n.resistance_R * ext_current_nA;
    double Vn = SS + (s.V - SS) * p.p_vv + p.p_vi * s.I_syn + p.p_vi_half * spike_input;
    s.I_syn = s.I_syn * p.p_ii + spike_input * p.p_ii_half;
    s.t += p.h;
    bool fired = Vn > n.threshold_Theta;
    if (fired) Vn = n.reset_V_r;
    s.V = Vn;
    return fired;
}

struct ref_trace {
    std::vector<double> V;       // mV, one sample per output interval, post-reset
    std::vector<double> I_syn;   // nA, same sampling
    std::vector<double> spike_t; // ms, end of the step in which the crossing occurred
};

// Stimulus for a single-neuron run: constant bias plus spike events.
// Event times are physical ms; each event is injected exactly at its
// timestamp (arbitrary sub-step placement), so the trace between threshold
// crossings does not depend on the internal step size h. Colliding events
// accumulate linearly.
struct single_stim {
    double bias_nA = 0.0;
    std::vector<std::pair<double, double>> events;  // (time ms, weight)
};

// Response factors at the end of a step for a unit impulse injected with
// residual time r remaining in that step.
inline void impulse_response(const neuron_params& n, double r, double& dV, double& dI) {
    const double tv = n.tau_v();
    const double tu = n.syn_tau_u;
    dI = std::exp(-r / tu);
    if (std::abs(tu - tv) < 1e-9 * tv)
        dV = r / n.capacitance_C * std::exp(-r / tv);
    else
        dV = (1.0 / n.capacitance_C) * (std::exp(-r / tv) - std::exp(-r / tu)) /
             (1.0 / tu - 1.0 / tv);
}

inline ref_trace ref_run(const neuron_params& n, const single_stim& stim, double T_ms,
                         double h, double output_interval_ms = 1.0, double V0 = NAN) {
    if (!(T_ms > 0.0)) throw config_error("ref_run: T must be > 0");
    if (!(h > 0.0)) throw config_error("ref_run: h must be > 0");
    const double sub_f = output_interval_ms / h;
    const auto substeps = static_cast<std::size_t>(std::llround(sub_f));
    if (substeps < 1 || std::abs(sub_f - static_cast<double>(substeps)) > 1e-9)
        throw config_error("ref_run: h must divide the output interval");
    const auto out_samples = static_cast<std::size_t>(std::llround(T_ms / output_interval_ms));
    const std::size_t total_steps = out_samples * substeps;

    // per-step end-of-step increments from all events landing in that step
    std::map<std::size_t, std::pair<double, double>> kick;  // step -> (dV, dI)
    for (const auto& [t, w] : stim.events) {
        if (t < 0.0) continue;
        auto s = static_cast<std::size_t>(std::floor(t / h));
        if (s >= total_steps) continue;
        double r = (static_cast<double>(s) + 1.0) * h - t;
        double dV = 0.0, dI = 0.0;
        impulse_response(n, r, dV, dI);
        kick[s].first += w * dV;
        kick[s].second += w * dI;
    }

    propagator p = build_propagator(n, h);
    const double SS = n.resting_E_L + n.resistance_R * stim.bias_nA;
    ref_state st;
    st.V = std::isnan(V0) ? n.resting_E_L : V0;
    ref_trace out;
    out.V.reserve(out_samples);
    out.I_syn.reserve(out_samples);
    for (std::size_t k = 0; k < total_steps; ++k) {
        double addV = 0.0, addI = 0.0;
        auto it = kick.find(k);
        if (it != kick.end()) {
            addV = it->second.first;
            addI = it->second.second;
        }
        double Vn = SS + (st.V - SS) * p.p_vv + p.p_vi * st.I_syn + addV;
        st.I_syn = st.I_syn * p.p_ii + addI;
        st.t += h;
        bool fired = Vn > n.threshold_Theta;
        if (fired) Vn = n.reset_V_r;
        st.V = Vn;
        if (fired) out.spike_t.push_back(static_cast<double>(k + 1) * h);
        if ((k + 1) % substeps == 0) {
            out.V.push_back(st.V);
            out.I_syn.push_back(st.I_syn);
        }
    }
    return out;
}

}  // namespace lifmap
