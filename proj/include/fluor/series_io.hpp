#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fluor/errors.hpp"
#include "fluor/phase.hpp"
#include "fluor/spectrum_series.hpp"
#include "fluor/trajectory.hpp"

// Dataset serialization. CSV carries `# key=value` header lines followed by
// the column rows; the JSON mirror holds the same fields and must round-trip
// doubles bit-exactly (nlohmann emits shortest-round-trip literals). CSV
// numbers are printed with 17 significant digits so a re-read recovers the
// identical double.

namespace fluor {

using json = nlohmann::json;

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline json params_to_json(const AtomParams& p) {
    return json{{"omega", p.rabi}, {"delta", p.detuning}, {"gamma", p.gamma}, {"Gamma", p.noise}};
}

inline AtomParams params_from_json(const json& j) {
    AtomParams p;
    p.rabi = j.at("omega").get<double>();
    p.detuning = j.at("delta").get<double>();
    p.gamma = j.at("gamma").get<double>();
    p.noise = j.at("Gamma").get<double>();
    return p;
}

inline std::string spectrum_params_header(const AtomParams& p) {
    return "# params: omega=" + format_double(p.rabi) + ", delta=" + format_double(p.detuning) +
           ", gamma=" + format_double(p.gamma) + ", Gamma=" + format_double(p.noise);
}

inline std::string spectrum_to_csv(const SpectrumSeries& s, const std::string& config_echo = "") {
    std::ostringstream os;
    os << "# method=" << s.method << "\n";
    os << spectrum_params_header(s.params) << "\n";
    if (s.normalized) os << "# normalized=1\n";
    if (!s.warning.empty()) os << "# warning: " << s.warning << "\n";
    for (const auto& line : {config_echo}) {
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string row;
        while (std::getline(is, row)) os << "# config: " << row << "\n";
    }
    os << "omega,S\n";
    for (size_t i = 0; i < s.omega.size(); ++i)
        os << format_double(s.omega[i]) << "," << format_double(s.s[i]) << "\n";
    return os.str();
}

inline json spectrum_to_json(const SpectrumSeries& s, const std::string& config_echo = "") {
    json j;
    j["method"] = s.method;
    j["params"] = params_to_json(s.params);
    j["normalized"] = s.normalized;
    if (!s.warning.empty()) j["warning"] = s.warning;
    if (!config_echo.empty()) j["config"] = config_echo;
    j["omega"] = s.omega;
    j["S"] = s.s;
    return j;
}

inline SpectrumSeries spectrum_from_json(const json& j) {
    SpectrumSeries s;
    s.method = j.at("method").get<std::string>();
    s.params = params_from_json(j.at("params"));
    s.normalized = j.value("normalized", false);
    s.warning = j.value("warning", std::string{});
    s.omega = j.at("omega").get<std::vector<double>>();
    s.s = j.at("S").get<std::vector<double>>();
    return s;
}

inline SpectrumSeries spectrum_from_csv(const std::string& text) {
    SpectrumSeries s;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind("# method=", 0) == 0) {
            s.method = line.substr(9);
        } else if (line.rfind("# params:", 0) == 0) {
            std::string rest = line.substr(9);
            auto grab = [&](const std::string& key) {
                const auto pos = rest.find(key + "=");
                if (pos == std::string::npos) throw IoError("spectrum_from_csv: missing " + key);
                return std::strtod(rest.c_str() + pos + key.size() + 1, nullptr);
            };
            s.params.rabi = grab("omega");
            s.params.detuning = grab("delta");
            s.params.gamma = grab("gamma");
            s.params.noise = grab("Gamma");
        } else if (line.rfind("# normalized=1", 0) == 0) {
            s.normalized = true;
        } else if (!line.empty() && line[0] != '#' && line != "omega,S") {
            const auto comma = line.find(',');
            if (comma == std::string::npos) throw IoError("spectrum_from_csv: bad row: " + line);
            s.omega.push_back(std::strtod(line.substr(0, comma).c_str(), nullptr));
            s.s.push_back(std::strtod(line.substr(comma + 1).c_str(), nullptr));
        }
    }
    return s;
}

// Correlation-series output: `tau,C_cos,C_sin` rows.
inline std::string correlations_to_csv(const CorrelationSeries& ccos, const CorrelationSeries& csin,
                                       const AtomParams& p, const std::string& config_echo = "") {
    if (ccos.lag.size() != csin.lag.size()) throw IoError("correlations_to_csv: lag grids differ");
    std::ostringstream os;
    os << spectrum_params_header(p) << "\n";
    if (!config_echo.empty()) {
        std::istringstream is(config_echo);
        std::string row;
        while (std::getline(is, row)) os << "# config: " << row << "\n";
    }
    os << "tau,C_cos,C_sin\n";
    for (size_t i = 0; i < ccos.lag.size(); ++i)
        os << format_double(ccos.lag[i]) << "," << format_double(ccos.c[i]) << ","
           << format_double(csin.c[i]) << "\n";
    return os.str();
}

// Trajectory dump: rows (t, Re a1, Im a1, Re a2, Im a2, jump_flag) where the
// flag marks a jump inside the preceding record interval (0 none, 1 emission,
// 2 noise, 3 both).
inline std::string trajectory_to_csv(const TrajectoryRecord& rec, const std::string& config_echo = "") {
    std::ostringstream os;
    os << spectrum_params_header(rec.params) << "\n";
    os << "# dt=" << format_double(rec.dt) << ", seed=" << rec.seed << ", traj=" << rec.traj_index << "\n";
    if (!config_echo.empty()) {
        std::istringstream is(config_echo);
        std::string row;
        while (std::getline(is, row)) os << "# config: " << row << "\n";
    }
    os << "t,re_a1,im_a1,re_a2,im_a2,jump_flag\n";
    size_t j = 0;
    for (size_t i = 0; i < rec.times.size(); ++i) {
        int flag = 0;
        while (j < rec.jumps.size() && rec.jumps[j].time <= rec.times[i] + 1e-12) {
            flag |= rec.jumps[j].channel == JumpChannel::emission ? 1 : 2;
            ++j;
        }
        const auto& s = rec.states[i];
        os << format_double(rec.times[i]) << "," << format_double(s.amp1.real()) << ","
           << format_double(s.amp1.imag()) << "," << format_double(s.amp2.real()) << ","
           << format_double(s.amp2.imag()) << "," << flag << "\n";
    }
    return os.str();
}

inline TrajectoryRecord trajectory_from_csv(const std::string& text) {
    TrajectoryRecord rec;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind("# params:", 0) == 0) {
            std::string rest = line.substr(9);
            auto grab = [&](const std::string& key) {
                const auto pos = rest.find(key + "=");
                if (pos == std::string::npos) throw IoError("trajectory_from_csv: missing " + key);
                return std::strtod(rest.c_str() + pos + key.size() + 1, nullptr);
            };
            rec.params.rabi = grab("omega");
            rec.params.detuning = grab("delta");
            rec.params.gamma = grab("gamma");
            rec.params.noise = grab("Gamma");
        } else if (line.rfind("# dt=", 0) == 0) {
            rec.dt = std::strtod(line.c_str() + 5, nullptr);
        } else if (!line.empty() && line[0] != '#' && line[0] != 't') {
            double v[5];
            int flag = 0;
            const char* c = line.c_str();
            char* end = nullptr;
            for (int k = 0; k < 5; ++k) {
                v[k] = std::strtod(c, &end);
                if (end == c) throw IoError("trajectory_from_csv: bad row: " + line);
                c = *end == ',' ? end + 1 : end;
            }
            flag = std::atoi(c);
            rec.times.push_back(v[0]);
            rec.states.push_back({{v[1], v[2]}, {v[3], v[4]}});
            if (flag & 1) rec.jumps.push_back({v[0], JumpChannel::emission});
            if (flag & 2) rec.jumps.push_back({v[0], JumpChannel::noise});
        }
    }
    return rec;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << content;
    if (!f.good()) throw IoError("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace fluor
