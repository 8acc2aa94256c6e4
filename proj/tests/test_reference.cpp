#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lifmap/reference.hpp"

using namespace lifmap;

namespace {
neuron_params demo_neuron() {
    neuron_params n;
    n.capacitance_C = 0.5;
    n.resistance_R = 20.0;   // tau_v = 10 ms
    n.resting_E_L = -70.0;
    n.reset_V_r = -75.0;
    n.threshold_Theta = -50.0;
    n.syn_tau_u = 4.0;
    return n;
}
}  // namespace

TEST_CASE("propagator entries") {
    auto n = demo_neuron();
    auto p = build_propagator(n, 1.0);
    CHECK(p.p_vv == Catch::Approx(std::exp(-0.1)).epsilon(1e-14));
    CHECK(p.p_ii == Catch::Approx(std::exp(-0.25)).epsilon(1e-14));
    double inv = 1.0 / 4.0 - 1.0 / 10.0;
    CHECK(p.p_vi == Catch::Approx((1.0 / 0.5) * (p.p_vv - p.p_ii) / inv).epsilon(1e-14));
}

TEST_CASE("equal time-constant limit is continuous") {
    auto n = demo_neuron();
    n.syn_tau_u = 10.0;  // == tau_v, removable singularity branch
    auto p_eq = build_propagator(n, 1.0);
    CHECK(p_eq.p_vi == Catch::Approx(1.0 / 0.5 * std::exp(-0.1)).epsilon(1e-14));
    n.syn_tau_u = 10.0 * (1.0 + 1e-7);  // just off the branch
    auto p_near = build_propagator(n, 1.0);
    CHECK(p_near.p_vi == Catch::Approx(p_eq.p_vi).epsilon(1e-6));
}

TEST_CASE("free relaxation matches the exponential") {
    auto n = demo_neuron();
    single_stim none;
    auto tr = ref_run(n, none, 50.0, 1.0, 1.0, n.resting_E_L + 10.0);
    for (std::size_t k = 0; k < tr.V.size(); ++k) {
        double t = static_cast<double>(k + 1);
        double expect = n.resting_E_L + 10.0 * std::exp(-t / 10.0);
        CHECK(std::abs(tr.V[k] - expect) < 1e-9);
    }
    // at one time constant the excursion is 10/e
    CHECK(tr.V[9] - n.resting_E_L == Catch::Approx(10.0 / std::exp(1.0)).epsilon(1e-12));
}

TEST_CASE("steady state under constant bias") {
    auto n = demo_neuron();
    single_stim stim;
    stim.bias_nA = 0.4;  // R*I = 8 mV, subthreshold
    auto tr = ref_run(n, stim, 300.0, 1.0);  // 30 time constants
    double SS = n.resting_E_L + n.resistance_R * stim.bias_nA;
    CHECK(std::abs(tr.V.back() - SS) < 1e-9);
    CHECK(tr.spike_t.empty());
}

TEST_CASE("ISI matches the closed form under tonic drive") {
    auto n = demo_neuron();
    single_stim stim;
    stim.bias_nA = 1.5;  // SS = -40 mV, above threshold
    const double h = 0.01;
    auto tr = ref_run(n, stim, 400.0, h, 1.0);
    REQUIRE(tr.spike_t.size() >= 3);
    double SS = n.resting_E_L + n.resistance_R * stim.bias_nA;
    double isi_exact = 10.0 * std::log((SS - n.reset_V_r) / (SS - n.threshold_Theta));
    for (std::size_t k = 1; k < tr.spike_t.size(); ++k)
        CHECK(std::abs((tr.spike_t[k] - tr.spike_t[k - 1]) - isi_exact) <= h + 1e-12);
}

TEST_CASE("trace invariant under internal step refinement") {
    auto n = demo_neuron();
    single_stim stim;
    stim.bias_nA = 0.3;
    // events at arbitrary (non-grid) times; injection is at the physical
    // timestamp, so refining h must not move them
    for (double t : {17.3, 42.0, 99.55, 200.125, 333.7}) stim.events.emplace_back(t, 0.8);
    auto coarse = ref_run(n, stim, 400.0, 1.0, 1.0);
    auto fine = ref_run(n, stim, 400.0, 0.01, 1.0);
    REQUIRE(coarse.V.size() == fine.V.size());
    for (std::size_t k = 0; k < coarse.V.size(); ++k) {
        CHECK(std::abs(coarse.V[k] - fine.V[k]) < 1e-9);
        CHECK(std::abs(coarse.I_syn[k] - fine.I_syn[k]) < 1e-9);
    }
}

TEST_CASE("response is linear in the input") {
    auto n = demo_neuron();
    single_stim one, two;
    one.events.emplace_back(50.5, 1.0);
    two.events.emplace_back(50.5, 2.0);
    auto a = ref_run(n, one, 200.0, 1.0);
    auto b = ref_run(n, two, 200.0, 1.0);
    for (std::size_t k = 0; k < a.V.size(); ++k) {
        double da = a.V[k] - n.resting_E_L;
        double db = b.V[k] - n.resting_E_L;
        CHECK(std::abs(db - 2.0 * da) < 1e-9);
    }
}

TEST_CASE("reset contract") {
    auto n = demo_neuron();
    single_stim stim;
    stim.bias_nA = 1.5;
    auto tr = ref_run(n, stim, 100.0, 1.0);
    REQUIRE_FALSE(tr.spike_t.empty());
    // the sample recorded at a spike time is the post-reset value
    auto idx = static_cast<std::size_t>(std::llround(tr.spike_t[0])) - 1;
    CHECK(tr.V[idx] < n.threshold_Theta);
    CHECK(tr.V[idx] >= n.reset_V_r - 1e-12);
}

TEST_CASE("run argument validation") {
    auto n = demo_neuron();
    single_stim none;
    CHECK_THROWS_AS(ref_run(n, none, 0.0, 1.0), config_error);
    CHECK_THROWS_AS(ref_run(n, none, 10.0, 0.3, 1.0), config_error);  // 0.3 does not divide 1.0
}
