#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "network.hpp"
#include "params.hpp"
#include "rng.hpp"

namespace lifmap {

inline constexpr const char* kToolVersion = "1.0.0";

// Deterministic numeric formatting: %.9g everywhere, so identical runs give
// byte-identical files on any platform with IEEE doubles.
inline std::string fmt_g9(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

// ---------------------------------------------------------------- spec ----

struct spec_stim_spikes {
    std::size_t neuron = 0;
    std::vector<double> times_ms;
    double weight_nA = 0.0;
};

struct spec_stim_poisson {
    std::size_t neuron = 0;
    double rate_hz = 0.0;
    double weight_nA = 0.0;
};

struct net_spec {
    int version = 1;
    std::vector<neuron_params> neurons;
    std::vector<synapse> synapses;              // delay filled from delay_ms at parse
    bool has_random = false;
    double random_p = 0.0;
    double random_weight_lo = 0.0;
    double random_weight_hi = 0.0;
    double random_delay_ms = 1.0;
    std::vector<double> bias_nA;                // resized to neuron count
    std::vector<spec_stim_spikes> spikes;
    std::vector<spec_stim_poisson> poisson;
    mapping_config mapping;
    std::size_t cores = 1;
    double T_ms = 500.0;
    double output_interval_ms = 1.0;
    std::uint64_t seed = 0;
};

namespace detail {

inline void require_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                         const std::string& path) {
    if (!j.is_object()) throw config_error(path + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw config_error(path + ": unknown key '" + it.key() + "'");
}

inline double num(const nlohmann::json& j, const std::string& key, const std::string& path,
                  bool required = true, double fallback = 0.0) {
    if (!j.contains(key)) {
        if (required) throw config_error(path + ": missing key '" + key + "'");
        return fallback;
    }
    if (!j[key].is_number()) throw config_error(path + "." + key + ": expected a number");
    return j[key].get<double>();
}

}  // namespace detail

inline net_spec parse_net_spec(const nlohmann::json& j) {
    using detail::num;
    using detail::require_keys;
    net_spec s;
    require_keys(j, {"version", "neurons", "synapses", "random_connectivity", "stimulus",
                     "mapping", "run"}, "spec");
    if (!j.contains("version") || !j["version"].is_number_integer())
        throw config_error("spec: missing integer 'version'");
    s.version = j["version"].get<int>();
    if (s.version != 1) throw config_error("spec: unsupported version");

    if (!j.contains("neurons") || !j["neurons"].is_array() || j["neurons"].empty())
        throw config_error("spec.neurons: need a non-empty array");
    std::size_t ni = 0;
    for (const auto& jn : j["neurons"]) {
        std::string path = "spec.neurons[" + std::to_string(ni) + "]";
        require_keys(jn, {"capacitance_nF", "resistance_MOhm", "resting_E_L_mV",
                          "reset_V_r_mV", "threshold_Theta_mV", "syn_tau_u_ms"}, path);
        neuron_params n;
        n.capacitance_C = num(jn, "capacitance_nF", path);
        n.resistance_R = num(jn, "resistance_MOhm", path);
        n.resting_E_L = num(jn, "resting_E_L_mV", path);
        n.reset_V_r = num(jn, "reset_V_r_mV", path);
        n.threshold_Theta = num(jn, "threshold_Theta_mV", path);
        n.syn_tau_u = num(jn, "syn_tau_u_ms", path, false, 2.0);
        n.validate(path);
        s.neurons.push_back(n);
        ++ni;
    }

    if (j.contains("mapping")) {
        require_keys(j["mapping"], {"dt_ms", "V_s_mV", "cores"}, "spec.mapping");
        s.mapping.dt = num(j["mapping"], "dt_ms", "spec.mapping", false, 1.0);
        s.mapping.V_s = num(j["mapping"], "V_s_mV", "spec.mapping", false, 1e-4);
        s.cores = static_cast<std::size_t>(num(j["mapping"], "cores", "spec.mapping", false, 1.0));
        s.mapping.validate();
        if (s.cores < 1) throw config_error("spec.mapping.cores: must be >= 1");
    }
    if (j.contains("run")) {
        require_keys(j["run"], {"T_ms", "output_interval_ms", "seed"}, "spec.run");
        s.T_ms = num(j["run"], "T_ms", "spec.run", false, 500.0);
        s.output_interval_ms = num(j["run"], "output_interval_ms", "spec.run", false, 1.0);
        s.seed = static_cast<std::uint64_t>(num(j["run"], "seed", "spec.run", false, 0.0));
        if (!(s.T_ms > 0.0)) throw config_error("spec.run.T_ms: must be > 0");
    }

    auto to_delay_steps = [&](double delay_ms, const std::string& path) {
        auto d = static_cast<std::int64_t>(std::llround(delay_ms / s.mapping.dt));
        if (d < 1) d = 1;  // delay floor: minimum one step
        (void)path;
        return d;
    };
    if (j.contains("synapses")) {
        if (!j["synapses"].is_array()) throw config_error("spec.synapses: expected an array");
        std::size_t si = 0;
        for (const auto& js : j["synapses"]) {
            std::string path = "spec.synapses[" + std::to_string(si) + "]";
            require_keys(js, {"pre", "post", "weight_nA", "delay_ms"}, path);
            synapse e;
            e.pre = static_cast<std::size_t>(num(js, "pre", path));
            e.post = static_cast<std::size_t>(num(js, "post", path));
            e.weight = num(js, "weight_nA", path);
            e.delay_steps = to_delay_steps(num(js, "delay_ms", path, false, s.mapping.dt), path);
            if (e.pre >= s.neurons.size() || e.post >= s.neurons.size())
                throw config_error(path + ": neuron index out of range");
            s.synapses.push_back(e);
            ++si;
        }
    }
    if (j.contains("random_connectivity")) {
        require_keys(j["random_connectivity"],
                     {"p", "weight_lo_nA", "weight_hi_nA", "delay_ms"}, "spec.random_connectivity");
        s.has_random = true;
        s.random_p = num(j["random_connectivity"], "p", "spec.random_connectivity");
        s.random_weight_lo = num(j["random_connectivity"], "weight_lo_nA", "spec.random_connectivity");
        s.random_weight_hi = num(j["random_connectivity"], "weight_hi_nA", "spec.random_connectivity");
        s.random_delay_ms = num(j["random_connectivity"], "delay_ms", "spec.random_connectivity",
                                false, s.mapping.dt);
        if (s.random_p < 0.0 || s.random_p > 1.0)
            throw config_error("spec.random_connectivity.p: must be in [0, 1]");
    }

    s.bias_nA.assign(s.neurons.size(), 0.0);
    if (j.contains("stimulus")) {
        require_keys(j["stimulus"], {"bias_nA", "spikes", "poisson"}, "spec.stimulus");
        const auto& jst = j["stimulus"];
        if (jst.contains("bias_nA")) {
            if (!jst["bias_nA"].is_array() || jst["bias_nA"].size() != s.neurons.size())
                throw config_error("spec.stimulus.bias_nA: expected an array of one value per neuron");
            for (std::size_t i = 0; i < s.neurons.size(); ++i) {
                if (!jst["bias_nA"][i].is_number())
                    throw config_error("spec.stimulus.bias_nA: expected numbers");
                s.bias_nA[i] = jst["bias_nA"][i].get<double>();
            }
        }
        if (jst.contains("spikes")) {
            std::size_t si = 0;
            for (const auto& je : jst["spikes"]) {
                std::string path = "spec.stimulus.spikes[" + std::to_string(si) + "]";
                require_keys(je, {"neuron", "times_ms", "weight_nA"}, path);
                spec_stim_spikes e;
                e.neuron = static_cast<std::size_t>(num(je, "neuron", path));
                if (e.neuron >= s.neurons.size())
                    throw config_error(path + ": neuron index out of range");
                if (!je.contains("times_ms") || !je["times_ms"].is_array())
                    throw config_error(path + ".times_ms: expected an array");
                double prev = -1.0;
                for (const auto& jt : je["times_ms"]) {
                    if (!jt.is_number()) throw config_error(path + ".times_ms: expected numbers");
                    double t = jt.get<double>();
                    if (t < 0.0) throw config_error(path + ".times_ms: times must be >= 0");
                    if (t <= prev)
                        throw config_error(path + ".times_ms: times must be strictly increasing");
                    prev = t;
                    e.times_ms.push_back(t);
                }
                e.weight_nA = num(je, "weight_nA", path);
                s.spikes.push_back(e);
                ++si;
            }
        }
        if (jst.contains("poisson")) {
            std::size_t si = 0;
            for (const auto& je : jst["poisson"]) {
                std::string path = "spec.stimulus.poisson[" + std::to_string(si) + "]";
                require_keys(je, {"neuron", "rate_hz", "weight_nA"}, path);
                spec_stim_poisson e;
                e.neuron = static_cast<std::size_t>(num(je, "neuron", path));
                if (e.neuron >= s.neurons.size())
                    throw config_error(path + ": neuron index out of range");
                e.rate_hz = num(je, "rate_hz", path);
                if (e.rate_hz < 0.0) throw config_error(path + ".rate_hz: must be >= 0");
                e.weight_nA = num(je, "weight_nA", path);
                s.poisson.push_back(e);
                ++si;
            }
        }
    }
    return s;
}

inline net_spec load_net_spec(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw io_error("cannot read spec file: " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw config_error("spec parse error: " + std::string(e.what()));
    }
    return parse_net_spec(j);
}

// Fully-resolved spec back to JSON; embedded in the manifest so that a run
// is reproducible from the manifest alone.
inline nlohmann::json net_spec_to_json(const net_spec& s) {
    nlohmann::json j;
    j["version"] = s.version;
    j["neurons"] = nlohmann::json::array();
    for (const auto& n : s.neurons)
        j["neurons"].push_back({{"capacitance_nF", n.capacitance_C},
                                {"resistance_MOhm", n.resistance_R},
                                {"resting_E_L_mV", n.resting_E_L},
                                {"reset_V_r_mV", n.reset_V_r},
                                {"threshold_Theta_mV", n.threshold_Theta},
                                {"syn_tau_u_ms", n.syn_tau_u}});
    j["synapses"] = nlohmann::json::array();
    for (const auto& e : s.synapses)
        j["synapses"].push_back({{"pre", e.pre},
                                 {"post", e.post},
                                 {"weight_nA", e.weight},
                                 {"delay_ms", static_cast<double>(e.delay_steps) * s.mapping.dt}});
    if (s.has_random)
        j["random_connectivity"] = {{"p", s.random_p},
                                    {"weight_lo_nA", s.random_weight_lo},
                                    {"weight_hi_nA", s.random_weight_hi},
                                    {"delay_ms", s.random_delay_ms}};
    nlohmann::json st;
    st["bias_nA"] = s.bias_nA;
    st["spikes"] = nlohmann::json::array();
    for (const auto& e : s.spikes)
        st["spikes"].push_back({{"neuron", e.neuron}, {"times_ms", e.times_ms},
                                {"weight_nA", e.weight_nA}});
    st["poisson"] = nlohmann::json::array();
    for (const auto& e : s.poisson)
        st["poisson"].push_back({{"neuron", e.neuron}, {"rate_hz", e.rate_hz},
                                 {"weight_nA", e.weight_nA}});
    j["stimulus"] = st;
    j["mapping"] = {{"dt_ms", s.mapping.dt}, {"V_s_mV", s.mapping.V_s},
                    {"cores", s.cores}};
    j["run"] = {{"T_ms", s.T_ms}, {"output_interval_ms", s.output_interval_ms},
                {"seed", s.seed}};
    return j;
}

// Materialize graph + stimulus. Random edges and Poisson trains draw from
// streams split off the spec seed, so the whole build is reproducible.
inline network_graph build_network(const net_spec& s) {
    network_graph g;
    g.neurons = s.neurons;
    g.synapses = s.synapses;
    if (s.has_random) {
        random_connectivity rc;
        rc.p = s.random_p;
        rc.weight_lo = s.random_weight_lo;
        rc.weight_hi = s.random_weight_hi;
        rc.delay_steps = std::max<std::int64_t>(1, std::llround(s.random_delay_ms / s.mapping.dt));
        rc.seed = derive_seed(s.seed, 2);
        auto extra = build_random_edges(g.neurons.size(), rc);
        g.synapses.insert(g.synapses.end(), extra.begin(), extra.end());
    }
    g.validate();
    return g;
}

inline stimulus_program build_stimulus(const net_spec& s) {
    stimulus_program st;
    st.resize(s.neurons.size());
    st.bias_nA = s.bias_nA;
    for (const auto& e : s.spikes)
        for (double t : e.times_ms) st.events[e.neuron].emplace_back(t, e.weight_nA);
    std::uint64_t pid = 0;
    for (const auto& e : s.poisson) {
        for (double t : poisson_train(e.rate_hz, s.T_ms, derive_seed(s.seed, 3000 + pid)))
            st.events[e.neuron].emplace_back(t, e.weight_nA);
        ++pid;
    }
    return st;
}

// ----------------------------------------------------------------- csv ----

class csv_writer {
public:
    explicit csv_writer(const std::filesystem::path& file) : path_(file), out_(file) {
        if (!out_) throw io_error("cannot open for writing: " + file.string());
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }
    void close() {
        out_.flush();
        if (!out_) throw io_error("write failed: " + path_.string());
        out_.close();
    }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

inline void write_manifest(const std::filesystem::path& file, const net_spec& spec,
                           const std::string& command,
                           const std::vector<std::string>& outputs) {
    nlohmann::json m;
    m["tool_version"] = kToolVersion;
    m["command"] = command;
    m["spec"] = net_spec_to_json(spec);
    m["outputs"] = outputs;
    std::ofstream out(file);
    if (!out) throw io_error("cannot open for writing: " + file.string());
    out << m.dump(2) << '\n';
    if (!out) throw io_error("write failed: " + file.string());
}

}  // namespace lifmap
