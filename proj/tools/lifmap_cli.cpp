// lifmap command-line driver: simulate / validate / sweep / bench / map-params.
// All numeric output is %.9g CSV; identical invocations give byte-identical
// files. Exit codes: 0 ok, 2 config, 3 mapping, 4 capacity, 5 io.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lifmap/io.hpp"
#include "lifmap/network.hpp"
#include "lifmap/params.hpp"
#include "lifmap/suite.hpp"
#include "lifmap/validation.hpp"

namespace fs = std::filesystem;
using namespace lifmap;

namespace {

fs::path default_out_dir() {
    if (const char* env = std::getenv("LIFMAP_OUT_DIR")) return env;
    return fs::current_path();
}

// A manifest is a valid input: replaying it reproduces the original outputs.
net_spec load_spec_or_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot read spec file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw config_error("spec parse error: " + std::string(e.what()));
    }
    if (j.is_object() && j.contains("tool_version") && j.contains("spec"))
        return parse_net_spec(j["spec"]);
    return parse_net_spec(j);
}

struct run_setup {
    net_spec spec;
    network_graph graph;
    stimulus_program stim;
    std::int64_t steps = 0;
};

run_setup prepare(const std::string& spec_path, std::uint64_t* seed_override) {
    run_setup s;
    s.spec = load_spec_or_manifest(spec_path);
    if (seed_override) s.spec.seed = *seed_override;
    s.graph = build_network(s.spec);
    s.stim = build_stimulus(s.spec);
    s.steps = static_cast<std::int64_t>(std::llround(s.spec.T_ms / s.spec.mapping.dt));
    if (s.steps < 1) throw config_error("spec.run: T_ms shorter than one step");
    return s;
}

void write_reference_outputs(const fs::path& out, const run_setup& s,
                             const network_run_result& res,
                             std::vector<std::string>& written) {
    const std::size_t N = s.graph.neurons.size();
    {
        csv_writer w(out / "reference_trace.csv");
        std::vector<std::string> head{"t_ms"};
        for (std::size_t i = 0; i < N; ++i) head.push_back("V_mV_n" + std::to_string(i));
        w.row(head);
        for (std::int64_t k = 0; k < s.steps; ++k) {
            std::vector<std::string> row{fmt_g9(static_cast<double>(k + 1) * s.spec.mapping.dt)};
            for (std::size_t i = 0; i < N; ++i)
                row.push_back(fmt_g9(res.V[i][static_cast<std::size_t>(k)]));
            w.row(row);
        }
        w.close();
        written.push_back("reference_trace.csv");
    }
    {
        csv_writer w(out / "reference_spikes.csv");
        w.row({"neuron_id", "t_ms"});
        for (std::size_t i = 0; i < N; ++i)
            for (std::int64_t k : res.spikes[i])
                w.row({std::to_string(i), fmt_g9(static_cast<double>(k + 1) * s.spec.mapping.dt)});
        w.close();
        written.push_back("reference_spikes.csv");
    }
}

void write_loihi_outputs(const fs::path& out, const run_setup& s, const loihi_network& net,
                         const network_run_result& res, std::vector<std::string>& written) {
    const std::size_t N = s.graph.neurons.size();
    {
        csv_writer w(out / "loihi_trace.csv");
        std::vector<std::string> head{"t_ms"};
        for (std::size_t i = 0; i < N; ++i) {
            head.push_back("v_levels_n" + std::to_string(i));
            head.push_back("V_mV_mapped_n" + std::to_string(i));
        }
        w.row(head);
        for (std::int64_t k = 0; k < s.steps; ++k) {
            std::vector<std::string> row{fmt_g9(static_cast<double>(k + 1) * s.spec.mapping.dt)};
            for (std::size_t i = 0; i < N; ++i) {
                auto v = res.v_lvl[i][static_cast<std::size_t>(k)];
                row.push_back(std::to_string(v));
                row.push_back(fmt_g9(inverse_transform(v, s.graph.neurons[i].reset_V_r,
                                                       net.params[i].source_V_s)));
            }
            w.row(row);
        }
        w.close();
        written.push_back("loihi_trace.csv");
    }
    {
        csv_writer w(out / "loihi_spikes.csv");
        w.row({"neuron_id", "t_ms"});
        for (std::size_t i = 0; i < N; ++i)
            for (std::int64_t k : res.spikes[i])
                w.row({std::to_string(i), fmt_g9(static_cast<double>(k + 1) * s.spec.mapping.dt)});
        w.close();
        written.push_back("loihi_spikes.csv");
    }
}

int cmd_simulate(const std::string& spec_path, const std::string& engine, const fs::path& out,
                 std::uint64_t* seed_override) {
    run_setup s = prepare(spec_path, seed_override);
    fs::create_directories(out);
    if (engine == "reference" || engine == "both") {
        auto res = run_reference_network(s.graph, s.stim, s.spec.mapping.dt, s.steps);
        std::vector<std::string> written;
        write_reference_outputs(out, s, res, written);
        write_manifest(out / "reference_manifest.json", s.spec, "simulate --engine reference",
                       written);
    }
    if (engine == "loihi" || engine == "both") {
        auto net = translate_network(s.graph, s.spec.mapping, s.stim.bias_nA, s.spec.cores);
        for (const auto& wmsg : net.warnings) std::cerr << "warning: " << wmsg << "\n";
        auto res = run_loihi_network(s.graph, net, s.stim, s.spec.mapping.dt, s.steps);
        std::vector<std::string> written;
        write_loihi_outputs(out, s, net, res, written);
        write_manifest(out / "loihi_manifest.json", s.spec, "simulate --engine loihi", written);
    }
    return 0;
}

int cmd_validate(const std::string& spec_path, const fs::path& out,
                 std::uint64_t* seed_override) {
    run_setup s = prepare(spec_path, seed_override);
    fs::create_directories(out);
    auto net = translate_network(s.graph, s.spec.mapping, s.stim.bias_nA, s.spec.cores);
    auto ref = run_reference_network(s.graph, s.stim, s.spec.mapping.dt, s.steps);
    auto emu = run_loihi_network(s.graph, net, s.stim, s.spec.mapping.dt, s.steps);
    const std::size_t N = s.graph.neurons.size();

    csv_writer rep(out / "report.csv");
    rep.row({"neuron", "rmse_mV", "rmse_masked_mV", "pearson_r", "pearson_defined",
             "spikes_ref", "spikes_emu", "max_offset_steps"});
    csv_writer scat(out / "scatter_pairs.csv");
    scat.row({"neuron", "V_ref_mV", "V_emu_mV"});
    csv_writer rast(out / "raster_events.csv");
    rast.row({"engine", "neuron", "t_ms"});

    std::vector<double> pooled_a, pooled_b;
    bool any_undefined = false;
    for (std::size_t i = 0; i < N; ++i) {
        std::vector<double> vemu;
        vemu.reserve(static_cast<std::size_t>(s.steps));
        for (auto v : emu.v_lvl[i])
            vemu.push_back(inverse_transform(v, s.graph.neurons[i].reset_V_r,
                                             net.params[i].source_V_s));
        double full = rmse(ref.V[i], vemu);
        auto mask = spike_exclusion_mask(ref.V[i].size(), {&ref.spikes[i], &emu.spikes[i]});
        auto a = select(ref.V[i], mask);
        auto b = select(vemu, mask);
        double masked = a.empty() ? full : rmse(a, b);
        double r_val = 0.0;
        bool r_def = true;
        try {
            r_val = a.empty() ? throw undefined_correlation() : pearson(a, b);
        } catch (const undefined_correlation&) {
            r_def = false;
            any_undefined = true;
        }
        std::int64_t off = 0;
        std::size_t matched = std::min(ref.spikes[i].size(), emu.spikes[i].size());
        for (std::size_t k = 0; k < matched; ++k)
            off = std::max(off, std::abs(ref.spikes[i][k] - emu.spikes[i][k]));
        rep.row({std::to_string(i), fmt_g9(full), fmt_g9(masked),
                 r_def ? fmt_g9(r_val) : "undefined", r_def ? "1" : "0",
                 std::to_string(ref.spikes[i].size()), std::to_string(emu.spikes[i].size()),
                 std::to_string(off)});
        for (std::size_t k = 0; k < a.size(); ++k) {
            scat.row({std::to_string(i), fmt_g9(a[k]), fmt_g9(b[k])});
            pooled_a.push_back(a[k]);
            pooled_b.push_back(b[k]);
        }
        for (std::int64_t k : ref.spikes[i])
            rast.row({"reference", std::to_string(i),
                      fmt_g9(static_cast<double>(k + 1) * s.spec.mapping.dt)});
        for (std::int64_t k : emu.spikes[i])
            rast.row({"loihi", std::to_string(i),
                      fmt_g9(static_cast<double>(k + 1) * s.spec.mapping.dt)});
    }
    double pooled_rmse = rmse(pooled_a, pooled_b);
    double pooled_r = 0.0;
    bool pooled_def = true;
    try {
        pooled_r = pearson(pooled_a, pooled_b);
    } catch (const undefined_correlation&) {
        pooled_def = false;
        any_undefined = true;
    }
    rep.row({"pooled", fmt_g9(pooled_rmse), fmt_g9(pooled_rmse),
             pooled_def ? fmt_g9(pooled_r) : "undefined", pooled_def ? "1" : "0",
             "", "", ""});
    rep.close();
    scat.close();
    rast.close();

    auto hist = make_histogram(pooled_a, pooled_b);
    csv_writer hw(out / "histogram.csv");
    hw.row({"bin_lo_mV", "bin_hi_mV", "ref_count", "emu_count"});
    for (std::size_t k = 0; k < 100; ++k) {
        double lo = hist.lo + (hist.hi - hist.lo) * static_cast<double>(k) / 100.0;
        double hi = hist.lo + (hist.hi - hist.lo) * static_cast<double>(k + 1) / 100.0;
        hw.row({fmt_g9(lo), fmt_g9(hi), std::to_string(hist.ref_counts[k]),
                std::to_string(hist.emu_counts[k])});
    }
    hw.close();
    write_manifest(out / "validate_manifest.json", s.spec, "validate",
                   {"report.csv", "scatter_pairs.csv", "raster_events.csv", "histogram.csv"});

    if (pooled_def)
        std::cout << "pooled r = " << fmt_g9(pooled_r) << ", rmse = " << fmt_g9(pooled_rmse)
                  << " mV\n";
    else
        std::cout << "pooled r = undefined (constant series), rmse = " << fmt_g9(pooled_rmse)
                  << " mV\n";
    if (any_undefined) std::cout << "note: some correlations undefined; metric flagged\n";
    return 0;
}

struct sweep_point {
    double axis = 0.0;
    double rmse_v = 0.0;
    double rmse_u = 0.0;
    bool representable = true;
};

// Sweeps use neuron 0 of the spec with its bias plus external events folded
// into a single-neuron stimulus.
single_stim to_single_stim(const run_setup& s) {
    single_stim st;
    st.bias_nA = s.stim.bias_nA.empty() ? 0.0 : s.stim.bias_nA[0];
    if (!s.stim.events.empty()) st.events = s.stim.events[0];
    return st;
}

sweep_point eval_point(const neuron_params& n, const single_stim& stim, double T_ms,
                       double dt, double V_s, double axis_value) {
    sweep_point p;
    p.axis = axis_value;
    if (dt > n.tau_v() || dt > n.syn_tau_u) {
        p.rmse_v = std::numeric_limits<double>::quiet_NaN();
        p.rmse_u = std::numeric_limits<double>::quiet_NaN();
        p.representable = false;
        return p;
    }
    mapping_config cfg{dt, V_s};
    auto r = compare_single_neuron(n, cfg, stim, T_ms);
    p.rmse_v = r.rmse_v_masked;
    p.rmse_u = rmse_u_aligned(r);
    return p;
}

int cmd_sweep(const std::string& spec_path, const std::string& axis, const fs::path& out,
              std::uint64_t* seed_override) {
    run_setup s = prepare(spec_path, seed_override);
    fs::create_directories(out);
    const neuron_params& n = s.graph.neurons[0];
    single_stim stim = to_single_stim(s);

    std::vector<double> values = axis == "dt" ? std::vector<double>{0.1, 1.0, 10.0}
                                              : std::vector<double>{1e-3, 1e-4, 1e-5};
    std::vector<sweep_point> pts(values.size());
    // points are independent; one thread per point, distinct point files,
    // then a single-writer merge in axis order
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < values.size(); ++i)
        workers.emplace_back([&, i] {
            double dt = axis == "dt" ? values[i] : s.spec.mapping.dt;
            double V_s = axis == "dt" ? s.spec.mapping.V_s : values[i];
            pts[i] = eval_point(n, stim, s.spec.T_ms, dt, V_s, values[i]);
            csv_writer w(out / ("sweep_point_" + std::to_string(i) + ".csv"));
            w.row({fmt_g9(pts[i].axis), fmt_g9(pts[i].rmse_v), fmt_g9(pts[i].rmse_u),
                   pts[i].representable ? "1" : "0"});
            w.close();
        });
    for (auto& t : workers) t.join();

    std::string fname = axis == "dt" ? "sweep_dt.csv" : "sweep_vs.csv";
    csv_writer w(out / fname);
    w.row({axis == "dt" ? "dt_ms" : "V_s_mV", "rmse_v_mV", "rmse_u_nA", "representable"});
    for (const auto& p : pts)
        w.row({fmt_g9(p.axis), fmt_g9(p.rmse_v), fmt_g9(p.rmse_u),
               p.representable ? "1" : "0"});
    w.close();
    write_manifest(out / "sweep_manifest.json", s.spec, "sweep --axis " + axis, {fname});
    std::cout << "wrote " << (out / fname).string() << "\n";
    return 0;
}

int cmd_bench(const std::vector<std::size_t>& sizes, const fs::path& out, std::uint64_t seed) {
    fs::create_directories(out);
    csv_writer w(out / "bench.csv");
    w.row({"size", "engine", "cpu_seconds"});
    for (std::size_t n : sizes) {
        auto setup = suite::make_bench_network(n, seed);
        auto steps = static_cast<std::int64_t>(suite::kT / suite::kDt);
        std::size_t cores = (n + core_layout::compartments_per_core - 1) /
                            core_layout::compartments_per_core;
        auto net = translate_network(setup.graph, {suite::kDt, suite::kVs},
                                     setup.stim.bias_nA, cores);
        double t0 = cpu_seconds();
        run_reference_network(setup.graph, setup.stim, suite::kDt, steps, false);
        double t1 = cpu_seconds();
        run_loihi_network(setup.graph, net, setup.stim, suite::kDt, steps, false);
        double t2 = cpu_seconds();
        w.row({std::to_string(n), "reference", fmt_g9(t1 - t0)});
        w.row({std::to_string(n), "loihi", fmt_g9(t2 - t1)});
        std::cout << "size " << n << ": reference " << fmt_g9(t1 - t0) << " s, loihi "
                  << fmt_g9(t2 - t1) << " s\n";
    }
    w.close();
    return 0;
}

int cmd_map_params(const std::string& spec_path, std::uint64_t* seed_override) {
    run_setup s = prepare(spec_path, seed_override);
    for (std::size_t i = 0; i < s.graph.neurons.size(); ++i) {
        auto p = derive_loihi_params(s.graph.neurons[i], s.spec.mapping,
                                     i < s.stim.bias_nA.size() ? s.stim.bias_nA[i] : 0.0);
        auto c = make_compartment_config(p);
        std::cout << "neuron " << i << ": decay_v=" << p.decay_v << " decay_u=" << p.decay_u
                  << " bias_b=" << fmt_g9(p.bias_b) << " (bias=" << c.bias << ")"
                  << " theta=" << fmt_g9(p.threshold_theta) << " (theta_int=" << c.theta << ")"
                  << " weight_scale=" << fmt_g9(p.weight_scale) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LIF-to-fixed-point mapping and validation toolkit"};
    app.require_subcommand(1);

    std::string spec_path, engine = "both", axis = "dt";
    std::string out_str = default_out_dir().string();
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::vector<std::size_t> sizes{20, 100, 500, 1000, 5000, 10000};

    auto add_common = [&](CLI::App* c, bool needs_spec) {
        if (needs_spec) c->add_option("spec", spec_path, "network spec (JSON)")->required();
        c->add_option("--out", out_str, "output directory (default $LIFMAP_OUT_DIR or cwd)");
        c->add_option("--seed", seed, "override the spec seed")
            ->each([&](const std::string&) { seed_set = true; });
    };

    auto* sim = app.add_subcommand("simulate", "run one or both engines, write traces");
    add_common(sim, true);
    sim->add_option("--engine", engine, "reference|loihi|both")
        ->check(CLI::IsMember({"reference", "loihi", "both"}));

    auto* val = app.add_subcommand("validate", "run both engines and compare");
    add_common(val, true);

    auto* swp = app.add_subcommand("sweep", "precision sweep on neuron 0");
    add_common(swp, true);
    swp->add_option("--axis", axis, "dt|vs")->check(CLI::IsMember({"dt", "vs"}));

    auto* ben = app.add_subcommand("bench", "timing benchmark over network sizes");
    add_common(ben, false);
    ben->add_option("--sizes", sizes, "network sizes");

    auto* mp = app.add_subcommand("map-params", "print derived fixed-point parameters");
    add_common(mp, true);

    CLI11_PARSE(app, argc, argv);

    try {
        std::uint64_t* seed_ptr = seed_set ? &seed : nullptr;
        fs::path out(out_str);
        if (sim->parsed()) return cmd_simulate(spec_path, engine, out, seed_ptr);
        if (val->parsed()) return cmd_validate(spec_path, out, seed_ptr);
        if (swp->parsed()) return cmd_sweep(spec_path, axis, out, seed_ptr);
        if (ben->parsed()) return cmd_bench(sizes, out, seed_set ? seed : 42);
        if (mp->parsed()) return cmd_map_params(spec_path, seed_ptr);
    } catch (const sim_error& e) {
        std::cerr << "error [" << category_name(e.category()) << "]: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error [config]: " << e.what() << "\n";
        return static_cast<int>(error_category::config);
    }
    return 0;
}
