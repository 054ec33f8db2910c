#include <catch2/catch_amalgamated.hpp>

#include <cstring>

#include "fluor/config.hpp"
#include "fluor/series_io.hpp"

using namespace fluor;
using Catch::Approx;

TEST_CASE("config files parse with comments and whitespace") {
    const std::string text =
        "# spectrum of the strongly noisy atom\n"
        "mode = analytic-spectrum\n"
        "Gamma=6\n"
        "gamma = 0.05   # natural linewidth\n"
        "delta=0\n"
        "\n"
        "format=json\n";
    RunConfig cfg = parse_config_text(text);
    finalize_config(cfg);
    CHECK(cfg.mode == "analytic-spectrum");
    CHECK(cfg.params.noise == 6.0);
    CHECK(cfg.params.gamma == 0.05);
    CHECK(cfg.format == "json");
}

TEST_CASE("unknown keys and malformed lines are hard errors") {
    CHECK_THROWS_AS(parse_config_text("mode=phase\nbogus_key=1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("mode phase\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("Gamma=abc\n"), ConfigError);
}

TEST_CASE("flag-style overrides win over file values") {
    RunConfig cfg = parse_config_text("mode=analytic-spectrum\nGamma=6\n");
    apply_key_value(cfg, "Gamma", "0.2");  // the CLI layer routes flags here
    finalize_config(cfg);
    CHECK(cfg.params.noise == 0.2);
}

TEST_CASE("time-step cap is enforced at config level") {
    RunConfig cfg;
    cfg.mode = "mc-spectrum";
    cfg.params = {1.0, 0.0, 0.05, 6.0};
    cfg.sim.dt = 0.5;
    cfg.sim.t_max = 10.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.sim.allow_large_dt = true;
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("valid mode examples") {
    {
        RunConfig cfg;
        cfg.mode = "analytic-spectrum";
        cfg.params = {1.0, 0.0, 0.05, 6.0};
        finalize_config(cfg);
        CHECK(cfg.params.gamma_prime() > cfg.params.rabi);  // dip regime
    }
    {
        RunConfig cfg = parse_config_text(
            "mode=phase\nGamma=5\ngamma=0.05\ntmax=2000\ninitial=excited\n");
        finalize_config(cfg);
        CHECK(cfg.sim.t_max == 2000.0);
        CHECK(cfg.initial == "excited");
    }
    {
        RunConfig cfg;
        cfg.mode = "reproduce";
        CHECK_THROWS_AS(cfg.validate(), ConfigError);  // figure required
        cfg.figure = "fig3";
        cfg.params = {1.0, 0.0, 0.05, 6.0};
        CHECK_NOTHROW(finalize_config(cfg));
    }
}

TEST_CASE("config echo round-trips losslessly") {
    RunConfig cfg;
    cfg.mode = "mc-spectrum";
    cfg.params = {1.0, 0.17, 0.05, 2.625};
    cfg.sim.dt = 1.25e-3;
    cfg.sim.t_max = 37.5;
    cfg.sim.n_traj = 12345;
    cfg.sim.seed = 918273645;
    cfg.sim.record_stride = 7;
    cfg.stride_explicit = true;
    cfg.omega_min = -11.0;
    cfg.omega_max = 11.0;
    cfg.omega_points = 257;
    cfg.out = "dataset.csv";
    cfg.format = "csv";
    cfg.workers = 3;
    cfg.normalize = true;
    cfg.initial = "dressed2";
    cfg.evolver = "master-ode";
    finalize_config(cfg);

    const RunConfig back = parse_config_text(echo_config(cfg));
    CHECK(back.mode == cfg.mode);
    CHECK(back.params.noise == cfg.params.noise);
    CHECK(back.params.gamma == cfg.params.gamma);
    CHECK(back.params.detuning == cfg.params.detuning);
    CHECK(back.sim.dt == cfg.sim.dt);
    CHECK(back.sim.t_max == cfg.sim.t_max);
    CHECK(back.sim.n_traj == cfg.sim.n_traj);
    CHECK(back.sim.seed == cfg.sim.seed);
    CHECK(back.sim.record_stride == cfg.sim.record_stride);
    CHECK(back.omega_min == cfg.omega_min);
    CHECK(back.omega_max == cfg.omega_max);
    CHECK(back.omega_points == cfg.omega_points);
    CHECK(back.out == cfg.out);
    CHECK(back.format == cfg.format);
    CHECK(back.workers == cfg.workers);
    CHECK(back.normalize == cfg.normalize);
    CHECK(back.initial == cfg.initial);
    CHECK(back.evolver == cfg.evolver);
}

TEST_CASE("raw-unit entry is normalized by the rabi frequency") {
    RunConfig cfg = parse_config_text(
        "mode=analytic-spectrum\nunit_rabi=2e6\nGamma=1.2e7\ngamma=1e5\ndelta=6e6\n");
    finalize_config(cfg);
    CHECK(cfg.params.rabi == 1.0);
    CHECK(cfg.params.noise == Approx(6.0));
    CHECK(cfg.params.gamma == Approx(0.05));
    CHECK(cfg.params.detuning == Approx(3.0));
}

TEST_CASE("spectrum csv carries metadata and survives a round trip") {
    SpectrumSeries s;
    s.method = "analytic";
    s.params = {1.0, 0.0, 0.05, 6.0};
    s.omega = {-1.0, 0.0, 1.0 / 3.0};
    s.s = {0.123456789012345678, 0.02, 1e-17};
    const std::string csv = spectrum_to_csv(s, "mode=analytic-spectrum\nGamma=6\n");
    CHECK(csv.find("# method=analytic") == 0);
    CHECK(csv.find("# params: omega=1, delta=0, gamma=0.05") != std::string::npos);
    CHECK(csv.find("# config: mode=analytic-spectrum") != std::string::npos);
    CHECK(csv.find("omega,S\n") != std::string::npos);

    const SpectrumSeries back = spectrum_from_csv(csv);
    REQUIRE(back.omega.size() == s.omega.size());
    for (size_t i = 0; i < s.omega.size(); ++i) {
        REQUIRE(back.omega[i] == s.omega[i]);  // 17 digits reproduce the double
        REQUIRE(back.s[i] == s.s[i]);
    }
    CHECK(back.params.noise == 6.0);
    CHECK(back.method == "analytic");
}

TEST_CASE("spectrum json round-trips bit exactly") {
    SpectrumSeries s;
    s.method = "mc-reconstruct";
    s.params = {1.0, 3.0, 0.05, 0.2};
    s.warning = "short run";
    for (int i = 0; i < 64; ++i) {
        s.omega.push_back(-4.0 + i * 0.125);
        s.s.push_back(std::sin(i * 0.7) * 1e-3 + 1e-18 * i);
    }
    const std::string text = spectrum_to_json(s, "mode=mc-spectrum\n").dump();
    const SpectrumSeries back = spectrum_from_json(json::parse(text));
    REQUIRE(back.omega.size() == s.omega.size());
    for (size_t i = 0; i < s.omega.size(); ++i) {
        REQUIRE(std::memcmp(&back.omega[i], &s.omega[i], sizeof(double)) == 0);
        REQUIRE(std::memcmp(&back.s[i], &s.s[i], sizeof(double)) == 0);
    }
    CHECK(back.warning == s.warning);
    CHECK(back.method == s.method);
}

TEST_CASE("correlation csv layout") {
    CorrelationSeries a, b;
    for (int k = 0; k < 4; ++k) {
        a.lag.push_back(k * 0.5);
        a.c.push_back(1.0 / (1 + k));
        b.lag.push_back(k * 0.5);
        b.c.push_back(k == 0 ? 1.0 : 0.0);
    }
    const std::string csv = correlations_to_csv(a, b, {1.0, 0.0, 0.05, 5.0});
    CHECK(csv.find("tau,C_cos,C_sin\n") != std::string::npos);
    CHECK(csv.find("# params:") != std::string::npos);
}

TEST_CASE("initial state selection") {
    RunConfig cfg;
    cfg.mode = "phase";
    cfg.params = {1.0, 0.0, 0.05, 5.0};
    cfg.initial = "dressed1";
    finalize_config(cfg);
    const PureState s = cfg.initial_state();
    CHECK(std::abs(s.amp1) == Approx(1.0));
    cfg.initial = "nonsense";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
