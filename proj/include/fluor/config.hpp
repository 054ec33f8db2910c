#pragma once

#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "fluor/atom.hpp"
#include "fluor/errors.hpp"
#include "fluor/series_io.hpp"
#include "fluor/trajectory.hpp"

// Run configuration. Flat key=value text files with `#` comments; CLI flags
// override file values; unknown keys are hard errors. The fully resolved
// config echoes into every output header, and parse(echo(config)) == config.
// All rates are in units of the Rabi frequency; `unit_rabi` rescales raw
// angular-frequency input at load.

namespace fluor {

struct RunConfig {
    std::string mode;  // mc-spectrum | analytic-spectrum | oracle-spectrum | phase | reproduce
    AtomParams params;
    SimConfig sim;
    double unit_rabi = 1.0;
    double omega_min = 0.0, omega_max = 0.0;  // both 0: default grid
    int omega_points = 801;
    std::string out;
    std::string format = "csv";    // csv | json
    int workers = 0;               // 0: auto (FLUOR_WORKERS or hardware)
    bool normalize = false;
    std::string initial = "excited";  // excited | ground | dressed1 | dressed2
    std::string evolver = "mc-ensemble";  // mc-ensemble | master-ode
    std::string figure;            // fig2..fig9 for reproduce mode
    double max_lag = 0.0;          // phase mode; 0: auto
    bool stride_explicit = false;  // record_stride was set by file/flag

    OmegaGrid grid() const {
        if (omega_min == 0.0 && omega_max == 0.0) {
            OmegaGrid g = default_omega_grid(params);
            g.points = omega_points;
            return g;
        }
        return {omega_min, omega_max, omega_points};
    }

    PureState initial_state() const {
        if (initial == "excited") return state_excited(params);
        if (initial == "ground") return state_ground(params);
        if (initial == "dressed1") return state_dressed1();
        if (initial == "dressed2") return state_dressed2();
        throw ConfigError("unknown initial state: " + initial);
    }

    void validate() const {
        static const std::set<std::string> modes = {"mc-spectrum", "analytic-spectrum", "oracle-spectrum",
                                                    "phase", "reproduce"};
        if (!modes.count(mode)) throw ConfigError("missing or unknown mode: '" + mode + "'");
        try {
            params.validate();
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
        if (mode == "mc-spectrum" || mode == "phase" || mode == "reproduce") {
            try {
                SimConfig s = sim;
                if (s.t_max <= 0.0) s.t_max = 1.0;  // t_max defaults are resolved per mode later
                s.validate(params);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        }
        if (omega_points < 2) throw ConfigError("omega_points must be >= 2");
        if (omega_max < omega_min) throw ConfigError("omega_max must be >= omega_min");
        if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
        if (evolver != "mc-ensemble" && evolver != "master-ode")
            throw ConfigError("evolver must be mc-ensemble or master-ode");
        static const std::set<std::string> inits = {"excited", "ground", "dressed1", "dressed2"};
        if (!inits.count(initial)) throw ConfigError("unknown initial state: " + initial);
        if (mode == "reproduce") {
            static const std::set<std::string> figs = {"fig2", "fig3", "fig4", "fig5",
                                                       "fig6", "fig7", "fig8", "fig9"};
            if (!figs.count(figure)) throw ConfigError("reproduce mode needs figure=fig2..fig9, got '" + figure + "'");
        }
        if (workers < 0) throw ConfigError("workers must be >= 0");
    }
};

namespace detail {

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("bad boolean for " + key + ": " + v);
}

inline double parse_double(const std::string& v, const std::string& key) {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0') throw ConfigError("bad number for " + key + ": " + v);
    return d;
}

}  // namespace detail

// Apply one key=value pair. Shared between file parsing and flag handling so
// the two can never drift apart.
inline void apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    using detail::parse_bool;
    using detail::parse_double;
    if (key == "mode") cfg.mode = value;
    else if (key == "Gamma") cfg.params.noise = parse_double(value, key);
    else if (key == "gamma") cfg.params.gamma = parse_double(value, key);
    else if (key == "delta") cfg.params.detuning = parse_double(value, key);
    else if (key == "unit_rabi") cfg.unit_rabi = parse_double(value, key);
    else if (key == "dt") cfg.sim.dt = parse_double(value, key);
    else if (key == "tmax") cfg.sim.t_max = parse_double(value, key);
    else if (key == "ntraj") cfg.sim.n_traj = static_cast<uint64_t>(parse_double(value, key));
    else if (key == "seed") cfg.sim.seed = static_cast<uint64_t>(std::strtoull(value.c_str(), nullptr, 10));
    else if (key == "record_stride") {
        cfg.sim.record_stride = static_cast<uint64_t>(parse_double(value, key));
        cfg.stride_explicit = true;
    }
    else if (key == "allow_large_dt") cfg.sim.allow_large_dt = parse_bool(value, key);
    else if (key == "omega_min") cfg.omega_min = parse_double(value, key);
    else if (key == "omega_max") cfg.omega_max = parse_double(value, key);
    else if (key == "omega_points") cfg.omega_points = static_cast<int>(parse_double(value, key));
    else if (key == "out") cfg.out = value;
    else if (key == "format") cfg.format = value;
    else if (key == "workers") cfg.workers = static_cast<int>(parse_double(value, key));
    else if (key == "normalize") cfg.normalize = parse_bool(value, key);
    else if (key == "initial") cfg.initial = value;
    else if (key == "evolver") cfg.evolver = value;
    else if (key == "figure") cfg.figure = value;
    else if (key == "max_lag") cfg.max_lag = parse_double(value, key);
    else throw ConfigError("unknown config key: " + key);
}

inline RunConfig parse_config_text(const std::string& text, RunConfig base = {}) {
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        // trim
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
        auto trim = [](std::string s) {
            const auto b2 = s.find_first_not_of(" \t");
            if (b2 == std::string::npos) return std::string{};
            const auto e2 = s.find_last_not_of(" \t");
            return s.substr(b2, e2 - b2 + 1);
        };
        apply_key_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

inline RunConfig parse_config_file(const std::string& path, RunConfig base = {}) {
    return parse_config_text(read_text_file(path), base);
}

// Convert raw-unit input to Rabi units and validate.
inline void finalize_config(RunConfig& cfg) {
    if (cfg.unit_rabi != 1.0) {
        if (!(cfg.unit_rabi > 0.0)) throw ConfigError("unit_rabi must be > 0");
        cfg.params.noise /= cfg.unit_rabi;
        cfg.params.gamma /= cfg.unit_rabi;
        cfg.params.detuning /= cfg.unit_rabi;
        if (cfg.sim.dt > 0.0) cfg.sim.dt *= cfg.unit_rabi;
        if (cfg.sim.t_max > 0.0) cfg.sim.t_max *= cfg.unit_rabi;
        if (cfg.omega_min != 0.0) cfg.omega_min /= cfg.unit_rabi;
        if (cfg.omega_max != 0.0) cfg.omega_max /= cfg.unit_rabi;
        cfg.unit_rabi = 1.0;
    }
    cfg.params.rabi = 1.0;
    cfg.validate();
}

// Lossless key=value echo of a resolved config.
inline std::string echo_config(const RunConfig& cfg) {
    std::ostringstream os;
    os << "mode=" << cfg.mode << "\n";
    os << "Gamma=" << format_double(cfg.params.noise) << "\n";
    os << "gamma=" << format_double(cfg.params.gamma) << "\n";
    os << "delta=" << format_double(cfg.params.detuning) << "\n";
    os << "dt=" << format_double(cfg.sim.dt) << "\n";
    os << "tmax=" << format_double(cfg.sim.t_max) << "\n";
    os << "ntraj=" << cfg.sim.n_traj << "\n";
    os << "seed=" << cfg.sim.seed << "\n";
    if (cfg.stride_explicit) os << "record_stride=" << cfg.sim.record_stride << "\n";
    os << "allow_large_dt=" << (cfg.sim.allow_large_dt ? 1 : 0) << "\n";
    os << "omega_min=" << format_double(cfg.omega_min) << "\n";
    os << "omega_max=" << format_double(cfg.omega_max) << "\n";
    os << "omega_points=" << cfg.omega_points << "\n";
    if (!cfg.out.empty()) os << "out=" << cfg.out << "\n";
    os << "format=" << cfg.format << "\n";
    os << "workers=" << cfg.workers << "\n";
    os << "normalize=" << (cfg.normalize ? 1 : 0) << "\n";
    os << "initial=" << cfg.initial << "\n";
    os << "evolver=" << cfg.evolver << "\n";
    if (!cfg.figure.empty()) os << "figure=" << cfg.figure << "\n";
    if (cfg.max_lag != 0.0) os << "max_lag=" << format_double(cfg.max_lag) << "\n";
    return os.str();
}

}  // namespace fluor
