// Command-line front end: run one of the pipeline modes, write datasets plus
// a provenance sidecar, exit 0/2/3/4 for ok / config / numeric / io.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fluor/bloch.hpp"
#include "fluor/config.hpp"
#include "fluor/phase.hpp"
#include "fluor/reconstruct.hpp"
#include "fluor/series_io.hpp"
#include "fluor/version.hpp"

namespace fs = std::filesystem;
using namespace fluor;

namespace {

struct OutputTracker {
    std::vector<std::string> written;

    void write(const std::string& path, const std::string& content) {
        const std::string tmp = path + ".tmp";
        write_text_file(tmp, content);
        fs::rename(tmp, path);
        written.push_back(path);
    }
    void cleanup() {
        for (const auto& p : written) std::remove(p.c_str());
        written.clear();
    }
};

std::string out_with_suffix(const RunConfig& cfg, const std::string& stem_suffix) {
    std::string base = cfg.out;
    const std::string ext = cfg.format == "json" ? ".json" : ".csv";
    if (base.empty()) base = cfg.mode + ext;
    if (!stem_suffix.empty()) {
        fs::path p(base);
        const std::string e = p.has_extension() ? p.extension().string() : ext;
        p.replace_extension();
        base = p.string() + stem_suffix + e;
    }
    return base;
}

void write_spectrum(OutputTracker& t, const RunConfig& cfg, const SpectrumSeries& s, const std::string& path) {
    const std::string echo = echo_config(cfg);
    if (cfg.format == "json")
        t.write(path, spectrum_to_json(s, echo).dump(2) + "\n");
    else
        t.write(path, spectrum_to_csv(s, echo));
    if (!s.warning.empty()) std::cerr << "warning: " << s.warning << "\n";
}

void write_provenance(OutputTracker& t, const RunConfig& cfg, double wall_s, const std::string& path) {
    json j;
    j["version"] = kVersion;
    j["config"] = echo_config(cfg);
    j["seed"] = cfg.sim.seed;
    j["wall_time_s"] = wall_s;
    j["outputs"] = t.written;
    write_text_file(path, j.dump(2) + "\n");
}

// Record stride for MC spectrum runs: keep omega_max * dtau ~ 0.1 so the
// trapezoid sum is far below the Monte Carlo error floor.
uint64_t mc_record_stride(double dt, const OmegaGrid& grid) {
    const double wmax = std::max(std::abs(grid.min), std::abs(grid.max));
    if (wmax <= 0.0) return 1;
    return std::max<uint64_t>(1, static_cast<uint64_t>(0.1 / (wmax * dt)));
}

SpectrumSeries run_mc_spectrum(const RunConfig& cfg) {
    SimConfig sim = cfg.sim;
    if (sim.t_max <= 0.0) sim.t_max = default_truncation_time(cfg.params);
    EvolveOptions eopt;
    eopt.workers = cfg.workers;
    if (cfg.evolver == "master-ode") {
        eopt.evolver = Evolver::master_ode;
        if (!cfg.stride_explicit) sim.record_stride = 1;
    } else {
        eopt.evolver = Evolver::mc_ensemble;
        if (sim.dt <= 0.0) sim.dt = sim.resolved_dt(cfg.params);
        if (!cfg.stride_explicit) sim.record_stride = mc_record_stride(sim.dt, cfg.grid());
    }
    SpectrumOptions sopt;
    sopt.normalize = cfg.normalize;
    sopt.workers = cfg.workers;
    return reconstruct_spectrum(cfg.params, sim, cfg.grid(), eopt, sopt);
}

void run_phase_outputs(OutputTracker& tracker, const RunConfig& cfg, const AtomParams& p, SimConfig sim,
                       const std::string& path_corr, const std::string& path_summary,
                       const std::string& dump_path) {
    if (sim.t_max <= 0.0) sim.t_max = 2000.0;
    if (sim.dt <= 0.0) sim.dt = sim.resolved_dt(p);
    if (!cfg.stride_explicit)
        sim.record_stride = std::max<uint64_t>(1, static_cast<uint64_t>(0.05 / sim.dt));
    const TrajectoryRecord rec = run_trajectory(cfg.initial_state(), p, sim, 0);
    const PhaseSeries ps = phase_difference(rec);
    const double dts = ps.times.size() > 1 ? ps.times[1] - ps.times[0] : sim.dt;
    const double max_lag = cfg.max_lag > 0.0 ? cfg.max_lag : sim.t_max / 20.0;

    const CorrelationSeries ccos = correlation(ps.cos_dphi, ps.mask, dts, max_lag);
    const CorrelationSeries csin = correlation(ps.sin_dphi, ps.mask, dts, max_lag);
    tracker.write(path_corr, correlations_to_csv(ccos, csin, p, echo_config(cfg)));

    json summary;
    summary["params"] = params_to_json(p);
    summary["drift_rate"] = phase_drift_rate(ps);
    summary["n_masked"] = ps.n_masked;
    summary["config"] = echo_config(cfg);
    auto put_fwhm = [&](const char* key, const CorrelationSeries& c) {
        try {
            summary[key] = fwhm(c).width;
        } catch (const std::exception& e) {
            summary[key] = nullptr;
            summary[std::string(key) + "_warning"] = e.what();
        }
    };
    put_fwhm("fwhm_cos", ccos);
    put_fwhm("fwhm_sin", csin);
    const auto hist = phase_histogram(ps);
    const auto angle_modes = top_two_modes(hist);
    summary["angle_modes"] = {angle_modes.first, angle_modes.second};
    try {
        const auto lock = locking_modes(ps);
        summary["locking_modes"] = {lock.first, lock.second};
    } catch (const std::exception&) {
        summary["locking_modes"] = nullptr;
    }
    tracker.write(path_summary, summary.dump(2) + "\n");

    if (!dump_path.empty()) tracker.write(dump_path, trajectory_to_csv(rec, echo_config(cfg)));
}

void run_reproduce(OutputTracker& tracker, const RunConfig& cfg) {
    const std::string dir = cfg.out.empty() ? (cfg.figure + "_out") : cfg.out;
    fs::create_directories(dir);
    const double ga = 0.05;
    auto spectra_bundle = [&](const std::string& stem, double Ga, double De) {
        RunConfig c = cfg;
        c.params = {1.0, De, ga, Ga};
        c.format = "csv";
        const OmegaGrid grid = c.grid();
        SpectrumSeries ana = spectrum_analytic(c.params, grid, c.normalize);
        write_spectrum(tracker, c, ana, dir + "/" + stem + "_analytic.csv");
        c.evolver = "mc-ensemble";
        SpectrumSeries mc = run_mc_spectrum(c);
        write_spectrum(tracker, c, mc, dir + "/" + stem + "_mc.csv");
    };
    auto phase_bundle = [&](const std::string& stem, double Ga) {
        RunConfig c = cfg;
        c.params = {1.0, 0.0, ga, Ga};
        run_phase_outputs(tracker, c, c.params, c.sim, dir + "/" + stem + "_correlations.csv",
                          dir + "/" + stem + "_summary.json", dir + "/" + stem + "_trajectory.csv");
    };

    if (cfg.figure == "fig2") {
        spectra_bundle("fig2", 0.2, 0.0);
    } else if (cfg.figure == "fig3") {
        spectra_bundle("fig3_twopeak", 1.1, 0.0);
        spectra_bundle("fig3_dip", 6.0, 0.0);
    } else if (cfg.figure == "fig4") {
        std::ostringstream os;
        os << "# dip width |s-| vs noise magnitude, gamma=" << format_double(ga) << "\n";
        os << "Gamma,s_minus_abs\n";
        for (double Ga = 1.2; Ga <= 200.0 * 1.0001; Ga *= 1.12) {
            const AtomParams p{1.0, 0.0, ga, Ga};
            if (p.gamma_prime() <= 1.0) continue;
            os << format_double(Ga) << "," << format_double(std::abs(decompose(p).s_minus)) << "\n";
        }
        tracker.write(dir + "/fig4_dipwidth.csv", os.str());
    } else if (cfg.figure == "fig5") {
        spectra_bundle("fig5", 0.2, 3.0);
    } else if (cfg.figure == "fig6") {
        spectra_bundle("fig6", 3.0, 3.0);
    } else if (cfg.figure == "fig7") {
        phase_bundle("fig7a", 0.2);
        phase_bundle("fig7b", 1.1);
        phase_bundle("fig7c", 5.0);
    } else if (cfg.figure == "fig8" || cfg.figure == "fig9") {
        for (double Ga : {0.2, 1.1, 5.0}) {
            std::ostringstream stem;
            stem << cfg.figure << "_Gamma" << Ga;
            phase_bundle(stem.str(), Ga);
        }
        if (cfg.figure == "fig9") {
            std::ostringstream os;
            os << "Gamma,inv_s_minus,fwhm_cos\n";
            for (double Ga : {2.0, 3.0, 5.0, 8.0}) {
                RunConfig c = cfg;
                c.params = {1.0, 0.0, ga, Ga};
                SimConfig sim = c.sim;
                if (sim.t_max <= 0.0) sim.t_max = 2000.0;
                if (sim.dt <= 0.0) sim.dt = sim.resolved_dt(c.params);
                sim.record_stride = std::max<uint64_t>(1, static_cast<uint64_t>(0.05 / sim.dt));
                const TrajectoryRecord rec = run_trajectory(c.initial_state(), c.params, sim, 0);
                const PhaseSeries ps = phase_difference(rec);
                const double dts = ps.times[1] - ps.times[0];
                const CorrelationSeries cc = correlation(ps.cos_dphi, ps.mask, dts, sim.t_max / 20.0);
                os << format_double(Ga) << "," << format_double(1.0 / std::abs(decompose(c.params).s_minus))
                   << "," << format_double(fwhm(cc).width) << "\n";
            }
            tracker.write(dir + "/fig9_fwhm_vs_dipwidth.csv", os.str());
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Resonance fluorescence of a driven two-level atom under dephasing noise"};
    app.set_version_flag("--version", kVersion);

    std::string config_path;
    std::optional<std::string> mode, out, format, initial, evolver, figure;
    std::optional<double> Gamma, gamma, delta, dt, tmax, omega_min, omega_max, unit_rabi, max_lag;
    std::optional<uint64_t> ntraj, seed, record_stride;
    std::optional<int> omega_points, workers;
    bool normalize = false, allow_large_dt = false;
    std::string dump_trajectory;

    app.add_option("--config", config_path, "key=value config file; flags override");
    app.add_option("--mode", mode, "mc-spectrum | analytic-spectrum | oracle-spectrum | phase | reproduce");
    app.add_option("--Gamma", Gamma, "noise magnitude (units of the Rabi frequency)");
    app.add_option("--gamma", gamma, "natural linewidth");
    app.add_option("--delta", delta, "laser detuning");
    app.add_option("--unit-rabi", unit_rabi, "Rabi frequency of the raw inputs; rates are divided by it");
    app.add_option("--dt", dt, "time step (0 = auto)");
    app.add_option("--tmax", tmax, "simulated time (0 = auto)");
    app.add_option("--ntraj", ntraj, "trajectories per ensemble");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--record-stride", record_stride, "steps between recorded samples (0 = auto)");
    app.add_option("--omega-min", omega_min, "spectrum grid minimum");
    app.add_option("--omega-max", omega_max, "spectrum grid maximum");
    app.add_option("--omega-points", omega_points, "spectrum grid points");
    app.add_option("--evolver", evolver, "mc-ensemble | master-ode (reconstruction engine)");
    app.add_option("--out", out, "output path (or directory for reproduce)");
    app.add_option("--format", format, "csv | json");
    app.add_option("--workers", workers, "worker threads (0 = auto / FLUOR_WORKERS)");
    app.add_flag("--normalize", normalize, "normalize spectra to unit peak");
    app.add_flag("--allow-large-dt", allow_large_dt, "lift the dt * max-rate cap");
    app.add_option("--initial", initial, "excited | ground | dressed1 | dressed2");
    app.add_option("--figure", figure, "fig2..fig9 (reproduce mode)");
    app.add_option("--max-lag", max_lag, "phase mode: maximum correlation lag");
    app.add_option("--dump-trajectory", dump_trajectory, "phase mode: also write the trajectory record");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    OutputTracker tracker;
    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = parse_config_file(config_path, cfg);
        auto set = [&](auto& opt, auto member) { if (opt) member(*opt); };
        set(mode, [&](auto v) { cfg.mode = v; });
        set(Gamma, [&](auto v) { cfg.params.noise = v; });
        set(gamma, [&](auto v) { cfg.params.gamma = v; });
        set(delta, [&](auto v) { cfg.params.detuning = v; });
        set(unit_rabi, [&](auto v) { cfg.unit_rabi = v; });
        set(dt, [&](auto v) { cfg.sim.dt = v; });
        set(tmax, [&](auto v) { cfg.sim.t_max = v; });
        set(ntraj, [&](auto v) { cfg.sim.n_traj = v; });
        set(seed, [&](auto v) { cfg.sim.seed = v; });
        set(record_stride, [&](auto v) {
            cfg.sim.record_stride = std::max<uint64_t>(1, v);
            cfg.stride_explicit = true;
        });
        set(omega_min, [&](auto v) { cfg.omega_min = v; });
        set(omega_max, [&](auto v) { cfg.omega_max = v; });
        set(omega_points, [&](auto v) { cfg.omega_points = v; });
        set(out, [&](auto v) { cfg.out = v; });
        set(format, [&](auto v) { cfg.format = v; });
        set(workers, [&](auto v) { cfg.workers = v; });
        if (normalize) cfg.normalize = true;
        if (allow_large_dt) cfg.sim.allow_large_dt = true;
        set(initial, [&](auto v) { cfg.initial = v; });
        set(evolver, [&](auto v) { cfg.evolver = v; });
        set(figure, [&](auto v) { cfg.figure = v; });
        set(max_lag, [&](auto v) { cfg.max_lag = v; });
        finalize_config(cfg);

        const auto t0 = std::chrono::steady_clock::now();
        std::string sidecar;

        if (cfg.mode == "analytic-spectrum") {
            const SpectrumSeries s = spectrum_analytic(cfg.params, cfg.grid(), cfg.normalize);
            const std::string path = out_with_suffix(cfg, "");
            write_spectrum(tracker, cfg, s, path);
            sidecar = path + ".provenance.json";
        } else if (cfg.mode == "oracle-spectrum") {
            OracleOptions o;
            o.normalize = cfg.normalize;
            if (cfg.sim.t_max > 0.0) o.t_max = cfg.sim.t_max;
            if (cfg.sim.dt > 0.0) o.dt = cfg.sim.dt;
            const SpectrumSeries s = regression_ode_oracle(cfg.params, cfg.grid(), o);
            const std::string path = out_with_suffix(cfg, "");
            write_spectrum(tracker, cfg, s, path);
            sidecar = path + ".provenance.json";
        } else if (cfg.mode == "mc-spectrum") {
            const SpectrumSeries s = run_mc_spectrum(cfg);
            const std::string path = out_with_suffix(cfg, "");
            write_spectrum(tracker, cfg, s, path);
            sidecar = path + ".provenance.json";
        } else if (cfg.mode == "phase") {
            const std::string base = cfg.out.empty() ? "phase" : cfg.out;
            run_phase_outputs(tracker, cfg, cfg.params, cfg.sim, base + "_correlations.csv",
                              base + "_summary.json", dump_trajectory);
            sidecar = base + ".provenance.json";
        } else if (cfg.mode == "reproduce") {
            run_reproduce(tracker, cfg);
            sidecar = (cfg.out.empty() ? (cfg.figure + "_out") : cfg.out) + "/provenance.json";
        }

        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_provenance(tracker, cfg, wall, sidecar);
        return 0;
    } catch (const ConfigError& e) {
        tracker.cleanup();
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        tracker.cleanup();
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        tracker.cleanup();
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        tracker.cleanup();
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    }
}
