#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lifmap/params.hpp"
#include "lifmap/rng.hpp"

using namespace lifmap;

namespace {
neuron_params demo_neuron() {
    neuron_params n;
    n.capacitance_C = 0.2;    // nF
    n.resistance_R = 100.0;   // MOhm -> tau_v = 20 ms
    n.resting_E_L = -70.0;
    n.reset_V_r = -75.0;
    n.threshold_Theta = -50.0;
    n.syn_tau_u = 12.0;
    return n;
}
}  // namespace

TEST_CASE("forward transform basics") {
    // 0.05 mV above reset at 1e-4 mV/level is exactly 500 levels
    CHECK(forward_transform(-74.95, -75.0, 1e-4) == Catch::Approx(500.0).epsilon(1e-12));
    CHECK(forward_transform(-75.0, -75.0, 1e-4) == 0.0);
    CHECK_THROWS_AS(forward_transform(0.0, 0.0, 0.0), config_error);
}

TEST_CASE("roundtrip identity") {
    rng r(2024);
    for (int i = 0; i < 100000; ++i) {
        double V = r.uniform(-120.0, 40.0);
        double V_r = r.uniform(-80.0, -60.0);
        double V_s = std::pow(10.0, r.uniform(-5.0, -3.0));
        double back = inverse_transform(forward_transform(V, V_r, V_s), V_r, V_s);
        CHECK(std::abs(back - V) <= 1e-12 * std::max(1.0, std::abs(V)));
        double lvl = r.uniform(-1e6, 1e6);
        double back_lvl = forward_transform(inverse_transform(lvl, V_r, V_s), V_r, V_s);
        CHECK(std::abs(back_lvl - lvl) <= 1e-9 * std::max(1.0, std::abs(lvl)));
    }
}

TEST_CASE("transform order and scale laws") {
    rng r(7);
    for (int i = 0; i < 1000; ++i) {
        double a = r.uniform(-100.0, 0.0);
        double b = a + r.uniform(1e-6, 10.0);
        CHECK(forward_transform(a, -75.0, 1e-4) < forward_transform(b, -75.0, 1e-4));
        // halving V_s doubles the level count
        CHECK(forward_transform(a, -75.0, 5e-5) ==
              Catch::Approx(2.0 * forward_transform(a, -75.0, 1e-4)).margin(1e-6));
    }
}

TEST_CASE("decay quantization rounds half to even") {
    CHECK(quantize_decay(409.6) == 410);
    CHECK(quantize_decay(409.4) == 409);
    CHECK(quantize_decay(2048.5) == 2048);  // ties to even
    CHECK(quantize_decay(2049.5) == 2050);
    CHECK(quantize_decay(0.0) == 0);
    CHECK(quantize_decay(4096.0) == 4096);
    CHECK_THROWS_AS(quantize_decay(-0.5), mapping_error);
    CHECK_THROWS_AS(quantize_decay(4096.5), mapping_error);
}

TEST_CASE("derived parameters") {
    auto n = demo_neuron();
    mapping_config cfg{1.0, 1e-4};
    auto p = derive_loihi_params(n, cfg, 0.05);

    // tau_v = 20 -> raw mantissa 204.8 -> 205
    CHECK(p.decay_v == 205);
    CHECK(p.decay_u == quantize_decay(4096.0 / 12.0));
    // theta must equal the forward transform of Theta bit for bit
    CHECK(p.threshold_theta == forward_transform(n.threshold_Theta, n.reset_V_r, cfg.V_s));
    // bias carries resting offset plus R*I, integrated over dt, in levels
    double expect_b = cfg.dt * ((n.resting_E_L - n.reset_V_r) / 20.0 + 100.0 * 0.05 / 20.0) / cfg.V_s;
    CHECK(p.bias_b == Catch::Approx(expect_b).epsilon(1e-12));
    CHECK(p.weight_scale == Catch::Approx(cfg.dt / (n.capacitance_C * cfg.V_s)).epsilon(1e-12));
}

TEST_CASE("decay mantissa monotone in dt") {
    auto n = demo_neuron();
    auto d = [&](double dt) { return derive_loihi_params(n, {dt, 1e-4}).decay_v; };
    CHECK(d(0.1) < d(1.0));
    CHECK(d(1.0) < d(10.0));
}

TEST_CASE("mapping rejects unrepresentable step sizes") {
    auto n = demo_neuron();  // tau_v = 20, tau_u = 12
    CHECK_THROWS_AS(derive_loihi_params(n, {25.0, 1e-4}), mapping_error);
    CHECK_THROWS_AS(derive_loihi_params(n, {15.0, 1e-4}), mapping_error);  // > tau_u
    CHECK_THROWS_WITH(derive_loihi_params(n, {25.0, 1e-4}),
                      Catch::Matchers::ContainsSubstring("decay-out-of-range"));
    // dt == tau_u is the full-decay boundary and stays legal
    n.syn_tau_u = 20.0;
    CHECK_NOTHROW(derive_loihi_params(n, {20.0, 1e-4}));
}

TEST_CASE("parameter validation") {
    auto n = demo_neuron();
    n.capacitance_C = 0.0;
    CHECK_THROWS_AS(n.validate(), config_error);
    n = demo_neuron();
    n.threshold_Theta = n.reset_V_r;
    CHECK_THROWS_AS(n.validate(), config_error);
    CHECK_THROWS_AS((mapping_config{0.0, 1e-4}).validate(), config_error);
    CHECK_THROWS_AS((mapping_config{1.0, 0.0}).validate(), config_error);
}
