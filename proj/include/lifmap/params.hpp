#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "errors.hpp"

namespace lifmap {

// Physical-unit LIF parameters for one cell. Unit conventions throughout:
// capacitance nF, resistance MOhm, time ms, voltage mV, current nA.
// With these, R*C is in ms, I*R in mV, I/C in mV/ms.
struct neuron_params {
    double capacitance_C = 0.0;   // nF
    double resistance_R = 0.0;    // MOhm
    double resting_E_L = 0.0;     // mV
    double reset_V_r = 0.0;       // mV
    double threshold_Theta = 0.0; // mV
    double syn_tau_u = 2.0;       // ms, synaptic current decay

    double tau_v() const { return resistance_R * capacitance_C; }

    void validate(const std::string& who = "neuron") const {
        if (!(capacitance_C > 0.0)) throw config_error(who + ": capacitance_C must be > 0");
        if (!(resistance_R > 0.0)) throw config_error(who + ": resistance_R must be > 0");
        if (!(syn_tau_u > 0.0)) throw config_error(who + ": syn_tau_u must be > 0");
        if (!(threshold_Theta > reset_V_r))
            throw config_error(who + ": threshold_Theta must exceed reset_V_r");
        if (!std::isfinite(tau_v()) || !(tau_v() > 0.0))
            throw config_error(who + ": tau_v = R*C must be finite and > 0");
    }
};

struct mapping_config {
    double dt = 1.0;    // ms per discrete step
    double V_s = 1e-4;  // mV per state level

    void validate() const {
        if (!(dt > 0.0)) throw config_error("mapping: dt must be > 0");
        if (!(V_s > 0.0)) throw config_error("mapping: V_s must be > 0");
    }
};

// Unit-less quantized compartment parameters.
// bias_b and weight_scale stay real-valued; quantization to integer levels
// happens at injection time inside the fixed-point engine.
struct loihi_params {
    std::int32_t decay_v = 0;   // delta_v mantissa in [0, 4096]
    std::int32_t decay_u = 0;   // delta_u mantissa in [0, 4096]
    double bias_b = 0.0;        // state-levels per step
    double threshold_theta = 0.0;  // state levels
    double weight_scale = 0.0;  // state-levels per unit physical weight
    double source_dt = 0.0;
    double source_V_s = 0.0;
};

inline double forward_transform(double V_mV, double V_r, double V_s) {
    if (!(V_s > 0.0)) throw config_error("forward_transform: V_s must be > 0");
    return (V_mV - V_r) / V_s;
}

inline double inverse_transform(double v_levels, double V_r, double V_s) {
    return v_levels * V_s + V_r;
}

// Round half to even, the unbiased choice over parameter sweeps.
inline std::int32_t quantize_decay(double raw) {
    if (!(raw >= 0.0) || !(raw <= 4096.0))
        throw mapping_error("decay-out-of-range: raw mantissa " + std::to_string(raw) +
                            " outside [0, 4096]");
    double f = std::floor(raw);
    double d = raw - f;
    double q;
    if (d > 0.5) q = f + 1.0;
    else if (d < 0.5) q = f;
    else q = (std::fmod(f, 2.0) == 0.0) ? f : f + 1.0;
    return static_cast<std::int32_t>(q);
}

// bias_b carries the resting drive (E_L - V_r)/tau_v plus any constant bias
// current R*I/tau_v, integrated over one step and rescaled to levels.
// dt == tau_v is allowed (full one-step decay); dt > tau_v is not representable.
inline loihi_params derive_loihi_params(const neuron_params& n, const mapping_config& cfg,
                                        double bias_current_nA = 0.0) {
    n.validate();
    cfg.validate();
    const double tau_v = n.tau_v();
    if (cfg.dt > tau_v)
        throw mapping_error("decay-out-of-range: dt = " + std::to_string(cfg.dt) +
                            " exceeds tau_v = " + std::to_string(tau_v));
    if (cfg.dt > n.syn_tau_u)
        throw mapping_error("decay-out-of-range: dt = " + std::to_string(cfg.dt) +
                            " exceeds syn_tau_u = " + std::to_string(n.syn_tau_u));
    loihi_params p;
    p.decay_v = quantize_decay(cfg.dt / tau_v * 4096.0);
    p.decay_u = quantize_decay(cfg.dt / n.syn_tau_u * 4096.0);
    p.bias_b = cfg.dt * ((n.resting_E_L - n.reset_V_r) / tau_v +
                         n.resistance_R * bias_current_nA / tau_v) / cfg.V_s;
    p.threshold_theta = forward_transform(n.threshold_Theta, n.reset_V_r, cfg.V_s);
    p.weight_scale = cfg.dt / (n.capacitance_C * cfg.V_s);
    p.source_dt = cfg.dt;
    p.source_V_s = cfg.V_s;
    return p;
}

}  // namespace lifmap
