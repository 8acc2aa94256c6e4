// Acceptance gate: one line per criterion, PASS or FAIL, nonzero exit if any
// criterion fails. Usage: acceptance <path-to-lifmap-cli-binary>
// Criteria 7-9 exercise the CLI through real subprocess invocations; the rest
// run in-process against the library.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lifmap/io.hpp"
#include "lifmap/suite.hpp"
#include "lifmap/validation.hpp"

namespace fs = std::filesystem;
using namespace lifmap;
using json = nlohmann::json;

namespace {

int g_failures = 0;
std::string g_cli;
fs::path g_work;

void report(int criterion, bool pass, const std::string& what) {
    std::cout << "criterion " << criterion << ": " << (pass ? "PASS" : "FAIL") << " - " << what
              << std::endl;
    if (!pass) ++g_failures;
}

double wall_seconds() {
    using clk = std::chrono::steady_clock;
    static const clk::time_point t0 = clk::now();
    return std::chrono::duration<double>(clk::now() - t0).count();
}

int run_cli(const std::string& args) {
    std::string cmd = g_cli + " " + args + " > " + (g_work / "cli_stdout.txt").string() +
                      " 2> " + (g_work / "cli_stderr.txt").string();
    int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json neuron_json(const neuron_params& n) {
    return json{{"capacitance_nF", n.capacitance_C},   {"resistance_MOhm", n.resistance_R},
                {"resting_E_L_mV", n.resting_E_L},     {"reset_V_r_mV", n.reset_V_r},
                {"threshold_Theta_mV", n.threshold_Theta}, {"syn_tau_u_ms", n.syn_tau_u}};
}

void write_json(const fs::path& p, const json& j) {
    std::ofstream out(p);
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------

void criterion_1_and_2(const std::vector<neuron_params>& suite_sets) {
    mapping_config cfg{suite::kDt, suite::kVs};
    double t_start = wall_seconds();
    bool fidelity_ok = true;
    double worst_r = 1.0, worst_rmse = 0.0;
    bool spikes_ok = true;
    std::string spike_fail;

    for (std::size_t i = 0; i < suite_sets.size(); ++i) {
        const auto& n = suite_sets[i];
        for (int fam = 0; fam < 2; ++fam) {
            single_stim stim = fam == 0 ? suite::bias_sub_stim(n) : suite::spike_sub_stim(n);
            auto r = compare_single_neuron(n, cfg, stim, suite::kT);
            if (!r.pearson_defined || r.pearson_r < 0.9999 || r.rmse_v_masked > 0.05)
                fidelity_ok = false;
            if (r.pearson_defined) worst_r = std::min(worst_r, r.pearson_r);
            worst_rmse = std::max(worst_rmse, r.rmse_v_masked);
            // criterion 2 on the subthreshold families: both silent
            if (r.spike_count_ref != 0 || r.spike_count_emu != 0) {
                spikes_ok = false;
                spike_fail = "unexpected spikes in subthreshold run, member " + std::to_string(i);
            }
        }
        // criterion 2 on the calibrated suprathreshold families
        auto tonic = suite::bias_supra_stim(n, cfg);
        auto volley = suite::spike_supra_stim(n, cfg);
        if (!tonic || !volley) {
            spikes_ok = false;
            spike_fail = "suprathreshold calibration failed, member " + std::to_string(i);
            continue;
        }
        for (const auto& stim : {*tonic, *volley}) {
            auto r = compare_single_neuron(n, cfg, stim, suite::kT);
            auto diff = static_cast<std::int64_t>(r.spike_count_ref) -
                        static_cast<std::int64_t>(r.spike_count_emu);
            if (std::llabs(diff) > 1 || r.max_spike_time_offset > 1 || r.spike_count_ref < 3) {
                spikes_ok = false;
                spike_fail = "spike mismatch, member " + std::to_string(i);
            }
        }
    }
    double elapsed = wall_seconds() - t_start;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "single-neuron fidelity: worst r = %.7f, worst rmse = %.4f mV, %.1f s",
                  worst_r, worst_rmse, elapsed);
    report(1, fidelity_ok && elapsed < 10.0, buf);
    report(2, spikes_ok,
           spikes_ok ? "spike equivalence: counts within 1, offsets <= 1 step on all members"
                     : "spike equivalence: " + spike_fail);
}

void criterion_3() {
    neuron_params n;
    n.capacitance_C = 0.5;
    n.resistance_R = 20.0;  // tau_v = 10
    n.resting_E_L = -70.0;
    n.reset_V_r = -75.0;
    n.threshold_Theta = -50.0;
    n.syn_tau_u = 4.0;
    bool ok = true;
    std::string what = "exact-integration oracles within 1e-9 mV";

    single_stim none;
    auto relax = ref_run(n, none, 50.0, 1.0, 1.0, n.resting_E_L + 10.0);
    for (std::size_t k = 0; k < relax.V.size(); ++k) {
        double expect = n.resting_E_L + 10.0 * std::exp(-static_cast<double>(k + 1) / 10.0);
        if (std::abs(relax.V[k] - expect) > 1e-9) ok = false;
    }

    single_stim bias;
    bias.bias_nA = 0.4;
    auto ss_run = ref_run(n, bias, 300.0, 1.0);
    if (std::abs(ss_run.V.back() - (n.resting_E_L + n.resistance_R * 0.4)) > 1e-9) ok = false;

    single_stim drive;
    drive.bias_nA = 1.5;
    auto tonic = ref_run(n, drive, 400.0, 0.01, 1.0);
    double SS = n.resting_E_L + n.resistance_R * 1.5;
    double isi = 10.0 * std::log((SS - n.reset_V_r) / (SS - n.threshold_Theta));
    if (tonic.spike_t.size() < 3) ok = false;
    for (std::size_t k = 1; k < tonic.spike_t.size(); ++k)
        if (std::abs(tonic.spike_t[k] - tonic.spike_t[k - 1] - isi) > 0.01 + 1e-12) ok = false;

    single_stim mixed;
    mixed.bias_nA = 0.3;
    for (double t : {17.3, 99.55, 333.7}) mixed.events.emplace_back(t, 0.8);
    auto coarse = ref_run(n, mixed, 400.0, 1.0, 1.0);
    auto fine = ref_run(n, mixed, 400.0, 0.01, 1.0);
    for (std::size_t k = 0; k < coarse.V.size(); ++k)
        if (std::abs(coarse.V[k] - fine.V[k]) > 1e-9) ok = false;

    report(3, ok, what);
}

void criterion_4(const std::vector<neuron_params>& suite_sets) {
    bool ok = true;
    rng r(777777);
    for (int i = 0; i < 1000000; ++i) {
        double V = r.uniform(-120.0, 40.0);
        double V_r = r.uniform(-80.0, -60.0);
        double V_s = std::pow(10.0, r.uniform(-5.0, -3.0));
        double back = inverse_transform(forward_transform(V, V_r, V_s), V_r, V_s);
        if (std::abs(back - V) > 1e-12 * std::max(1.0, std::abs(V))) ok = false;
    }
    for (const auto& n : suite_sets) {
        auto p = derive_loihi_params(n, {suite::kDt, suite::kVs});
        if (p.threshold_theta != forward_transform(n.threshold_Theta, n.reset_V_r, suite::kVs))
            ok = false;
    }
    report(4, ok, "transform roundtrip within 1e-12 over 1e6 values; forward(Theta) == theta");
}

void criterion_5(const std::vector<neuron_params>& suite_sets) {
    const std::vector<double> scales{1e-3, 1e-4, 1e-5};
    bool mono_ok = true;
    double pool_mid = 0.0, pool_fine = 0.0;
    for (const auto& n : suite_sets) {
        auto sv = sweep_voltage(n, suite::sweep_v_stim(n), suite::kT, scales, suite::kSweepVDt);
        if (!(sv.rmse_v[0] >= sv.rmse_v[1] && sv.rmse_v[1] >= sv.rmse_v[2])) mono_ok = false;
        auto su = sweep_voltage(n, suite::sweep_u_stim(n), suite::kT, scales, suite::kDt);
        pool_mid += su.rmse_u[1] * su.rmse_u[1];
        pool_fine += su.rmse_u[2] * su.rmse_u[2];
    }
    double ratio = std::sqrt(pool_mid / pool_fine);
    bool ratio_ok = ratio > 0.9 && ratio < 1.1;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "voltage-precision trend: rmse monotone in V_s on all members; "
                  "pooled u-rmse ratio 1e-4/1e-5 = %.4f",
                  ratio);
    report(5, mono_ok && ratio_ok, buf);
}

void criterion_6(const std::vector<neuron_params>& suite_sets) {
    bool ok = true;
    double worst_ratio = 1e30;
    for (const auto& n : suite_sets) {
        single_stim stim = suite::sweep_dt_stim(n);
        auto fine = compare_single_neuron(n, {0.1, suite::kVs}, stim, suite::kT);
        auto coarse = compare_single_neuron(n, {10.0, suite::kVs}, stim, suite::kT);
        if (fine.n_samples != 5000 || coarse.n_samples != 50) ok = false;
        if (!(fine.rmse_v_masked < coarse.rmse_v_masked)) ok = false;
        if (fine.rmse_v_masked > 0.0)
            worst_ratio = std::min(worst_ratio, coarse.rmse_v_masked / fine.rmse_v_masked);
        auto mid = compare_single_neuron(n, {1.0, suite::kVs}, stim, suite::kT);
        if (mid.n_samples != 500) ok = false;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "temporal convergence: rmse(dt=0.1) < rmse(dt=10) on all members "
                  "(worst coarse/fine ratio %.2f); step counts 5000/500/50",
                  worst_ratio);
    report(6, ok, buf);
}

json demo_spec(const neuron_params& n, double T_ms, std::uint64_t seed) {
    json j;
    j["version"] = 1;
    j["neurons"] = json::array({neuron_json(n)});
    double bias = 0.4 * (n.threshold_Theta - n.resting_E_L) / n.resistance_R;
    double w = 0.3 * (n.threshold_Theta - n.resting_E_L) / n.resistance_R *
               (1.0 - std::exp(-1.0 / n.syn_tau_u));
    j["stimulus"] = json{{"bias_nA", json::array({bias})},
                         {"spikes", json::array({json{{"neuron", 0},
                                                      {"times_ms", json::array({60.0, 61.0, 250.0})},
                                                      {"weight_nA", w}}})},
                         {"poisson", json::array({json{{"neuron", 0},
                                                       {"rate_hz", 40.0},
                                                       {"weight_nA", w * 0.5}}})}};
    j["mapping"] = json{{"dt_ms", 1.0}, {"V_s_mV", 1e-4}, {"cores", 1}};
    j["run"] = json{{"T_ms", T_ms}, {"output_interval_ms", 1.0}, {"seed", seed}};
    return j;
}

void criterion_7(const std::vector<neuron_params>& suite_sets) {
    bool ok = true;
    std::string what = "fixed-point determinism: byte-identical CSVs, pinned vectors exact";
    if (mul_shift(4096, 3686) != 3686) ok = false;
    if (mul_shift(-4096, 3686) != -3686) ok = false;

    fs::path spec = g_work / "det_spec.json";
    write_json(spec, demo_spec(suite_sets[0], 300.0, 2026));
    for (const char* sub : {"a", "b"}) {
        int rc = run_cli("simulate " + spec.string() + " --engine both --out " +
                         (g_work / ("det_" + std::string(sub))).string());
        if (rc != 0) {
            ok = false;
            what = "fixed-point determinism: simulate exited " + std::to_string(rc);
        }
    }
    for (const char* f : {"reference_trace.csv", "reference_spikes.csv", "loihi_trace.csv",
                          "loihi_spikes.csv"}) {
        auto a = slurp(g_work / "det_a" / f);
        auto b = slurp(g_work / "det_b" / f);
        if (a.empty() || a != b) {
            ok = false;
            what = "fixed-point determinism: mismatch or empty file " + std::string(f);
        }
    }
    // sweeps run their points in parallel; the merged file must still be stable
    for (const char* sub : {"sa", "sb"}) {
        int rc = run_cli("sweep " + spec.string() + " --axis dt --out " +
                         (g_work / ("det_" + std::string(sub))).string());
        if (rc != 0) ok = false;
    }
    {
        auto a = slurp(g_work / "det_sa" / "sweep_dt.csv");
        auto b = slurp(g_work / "det_sb" / "sweep_dt.csv");
        if (a.empty() || a != b) {
            ok = false;
            what = "fixed-point determinism: parallel sweep output not stable";
        }
    }
    report(7, ok, what);
}

void criterion_8() {
    bool ok = true;
    std::string note;

    auto setup = suite::make_validation_network();
    auto steps = static_cast<std::int64_t>(suite::kT / suite::kDt);
    mapping_config cfg{suite::kDt, suite::kVs};
    auto net = translate_network(setup.graph, cfg, setup.stim.bias_nA, 1);
    auto ref = run_reference_network(setup.graph, setup.stim, cfg.dt, steps);
    auto emu = run_loihi_network(setup.graph, net, setup.stim, cfg.dt, steps);
    auto pooled = pooled_compare(ref, emu, setup.graph, net);
    if (!pooled.pearson_defined || pooled.pearson_r < 0.999) ok = false;

    // 10k neurons need 10 cores of 1024 compartments
    bool layout_ok = false;
    try {
        auto l = assign_cores(10000, 10);
        layout_ok = l.n_cores == 10 && l.assignment(9999).first == 9;
    } catch (...) {
    }
    if (!layout_ok) ok = false;

    int rc = run_cli("bench --sizes 20 100 500 1000 5000 10000 --seed 42 --out " +
                     (g_work / "bench").string());
    if (rc != 0) ok = false;
    double t_1k = 0.0, t_10k = 0.0;
    int rows = 0;
    {
        std::ifstream in(g_work / "bench" / "bench.csv");
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            ++rows;
            std::istringstream ls(line);
            std::string size, engine, secs;
            std::getline(ls, size, ',');
            std::getline(ls, engine, ',');
            std::getline(ls, secs, ',');
            if (engine == "loihi" && size == "1000") t_1k = std::stod(secs);
            if (engine == "loihi" && size == "10000") t_10k = std::stod(secs);
        }
    }
    if (rows != 12) ok = false;
    double ratio = t_1k > 0.0 ? t_10k / t_1k : 1e30;
    if (!(ratio <= 15.0)) ok = false;

    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "network scale: pooled r = %.6f over 20 neurons; 10k-neuron run on 10 cores, "
                  "time(10k)/time(1k) = %.2f; bench grid %d rows",
                  pooled.pearson_r, ratio, rows);
    report(8, ok, buf);
}

void criterion_9(const std::vector<neuron_params>& suite_sets) {
    bool ok = true;
    std::string what = "error surfacing: mapping / capacity / undefined-correlation categories";

    neuron_params bad = suite_sets[0];
    try {
        derive_loihi_params(bad, {bad.tau_v() * 2.0, suite::kVs});
        ok = false;
    } catch (const mapping_error& e) {
        if (std::string(e.what()).find("decay-out-of-range") == std::string::npos) ok = false;
        if (e.exit_code() != 3) ok = false;
    }
    try {
        assign_cores(1025, 1);
        ok = false;
    } catch (const capacity_error& e) {
        if (e.exit_code() != 4) ok = false;
    }
    try {
        pearson({1.0, 1.0, 1.0}, {2.0, 2.0, 2.0});
        ok = false;
    } catch (const undefined_correlation&) {
    }

    // same contract through the CLI: exit codes 3, 4, and 0
    json j = demo_spec(suite_sets[0], 100.0, 1);
    j["mapping"]["dt_ms"] = suite_sets[0].tau_v() * 2.0;
    write_json(g_work / "bad_map.json", j);
    if (run_cli("simulate " + (g_work / "bad_map.json").string() + " --engine loihi --out " +
                (g_work / "e1").string()) != 3)
        ok = false;

    j = demo_spec(suite_sets[0], 100.0, 1);
    j["neurons"] = json::array();
    for (int i = 0; i < 1025; ++i) j["neurons"].push_back(neuron_json(suite_sets[0]));
    j["stimulus"] = json{{"bias_nA", json::array()}};
    for (int i = 0; i < 1025; ++i) j["stimulus"]["bias_nA"].push_back(0.0);
    write_json(g_work / "bad_cap.json", j);
    if (run_cli("simulate " + (g_work / "bad_cap.json").string() + " --engine loihi --out " +
                (g_work / "e2").string()) != 4)
        ok = false;

    // degenerate constant trace: E_L == V_r, no drive; correlation undefined
    // but the run itself succeeds
    neuron_params flat = suite_sets[0];
    flat.resting_E_L = flat.reset_V_r;
    json jd;
    jd["version"] = 1;
    jd["neurons"] = json::array({neuron_json(flat)});
    jd["mapping"] = json{{"dt_ms", 1.0}, {"V_s_mV", 1e-4}, {"cores", 1}};
    jd["run"] = json{{"T_ms", 100.0}, {"output_interval_ms", 1.0}, {"seed", 1}};
    write_json(g_work / "flat.json", jd);
    if (run_cli("validate " + (g_work / "flat.json").string() + " --out " +
                (g_work / "e3").string()) != 0)
        ok = false;
    if (slurp(g_work / "cli_stdout.txt").find("undefined") == std::string::npos) ok = false;

    report(9, ok, what);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <path-to-lifmap-binary>\n";
        return 2;
    }
    g_cli = argv[1];
    g_work = fs::current_path() / "acceptance_work";
    fs::create_directories(g_work);

    auto suite_sets = suite::generate();
    criterion_1_and_2(suite_sets);
    criterion_3();
    criterion_4(suite_sets);
    criterion_5(suite_sets);
    criterion_6(suite_sets);
    criterion_7(suite_sets);
    criterion_8();
    criterion_9(suite_sets);

    if (g_failures) {
        std::cout << g_failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
