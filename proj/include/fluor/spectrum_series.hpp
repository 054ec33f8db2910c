#pragma once

#include <string>
#include <vector>

#include "fluor/atom.hpp"

namespace fluor {

struct OmegaGrid {
    double min = 0.0, max = 0.0;
    int points = 0;

    double at(int i) const {
        if (points <= 1) return min;
        return min + (max - min) * static_cast<double>(i) / (points - 1);
    }
    std::vector<double> values() const {
        std::vector<double> v(points);
        for (int i = 0; i < points; ++i) v[i] = at(i);
        return v;
    }
};

// 801 points spanning +-4 Omega max(1, Gamma/Omega): wide enough for both the
// Mollow and the noise-broadened regimes.
inline OmegaGrid default_omega_grid(const AtomParams& p) {
    const double w = 4.0 * p.rabi * std::max(1.0, p.noise / p.rabi);
    return {-w, w, 801};
}

// (omega, S) samples plus enough metadata to reproduce the run.
struct SpectrumSeries {
    std::vector<double> omega;
    std::vector<double> s;
    std::string method;        // mc-reconstruct | ode-reconstruct | analytic | ode-oracle | mc-restart
    AtomParams params;
    bool normalized = false;
    std::string warning;       // non-empty if e.g. the truncation time was short

    double peak() const {
        double m = 0.0;
        for (double v : s) m = std::max(m, v);
        return m;
    }
    void normalize_peak() {
        const double m = peak();
        if (m > 0.0) {
            for (double& v : s) v /= m;
            normalized = true;
        }
    }
};

}  // namespace fluor
