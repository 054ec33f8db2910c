#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fluor/errors.hpp"
#include "fluor/trajectory.hpp"

// Dressed-state phase statistics from single trajectories. The phase
// difference Delta-phi = arg(a2) - arg(a1) is undefined where either
// amplitude vanishes; such samples are masked and pairs touching them are
// dropped from the correlation sums. Correlations are always taken of
// cos/sin of the phase, never of the raw circular variable.

namespace fluor {

struct PhaseSeries {
    std::vector<double> times;
    std::vector<double> dphi;      // wrapped to (-pi, pi]
    std::vector<double> cos_dphi;
    std::vector<double> sin_dphi;
    std::vector<uint8_t> mask;     // 1 = defined
    size_t n_masked = 0;
};

inline double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * M_PI);  // (-pi, pi]
    if (a <= -M_PI) a += 2.0 * M_PI;
    return a;
}

inline PhaseSeries phase_difference(const TrajectoryRecord& rec, double amp_floor = 1e-6) {
    const size_t n = rec.states.size();
    PhaseSeries out;
    out.times = rec.times;
    out.dphi.resize(n);
    out.cos_dphi.resize(n);
    out.sin_dphi.resize(n);
    out.mask.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const auto& s = rec.states[i];
        if (std::abs(s.amp1) < amp_floor || std::abs(s.amp2) < amp_floor) {
            out.mask[i] = 0;
            out.dphi[i] = out.cos_dphi[i] = out.sin_dphi[i] = 0.0;
            ++out.n_masked;
            continue;
        }
        out.mask[i] = 1;
        // arg(a2) - arg(a1) without the pi-wrap hazards of subtracting args
        const cplx ratio = s.amp2 * std::conj(s.amp1);
        const double d = std::arg(ratio);
        out.dphi[i] = wrap_angle(d);
        const double m = std::abs(ratio);
        out.cos_dphi[i] = ratio.real() / m;
        out.sin_dphi[i] = ratio.imag() / m;
    }
    if (out.n_masked * 2 > n) throw NumericError("phase_difference: more than half the samples are undefined");
    return out;
}

struct CorrelationSeries {
    std::vector<double> lag;
    std::vector<double> c;
    double norm_const = 0.0;  // the value C(0) was divided by
    double dt = 0.0;
};

// Autocorrelation of x(t) about its window mean, normalized so C(0) = 1.
// Masked samples are excluded pairwise and each lag is normalized by its
// realized pair count.
inline CorrelationSeries correlation(const std::vector<double>& x, const std::vector<uint8_t>& mask,
                                     double dt, double max_lag) {
    const size_t n = x.size();
    const size_t n_lag = static_cast<size_t>(max_lag / dt);
    if (n_lag + 1 > n || n < 10 * n_lag)
        throw std::invalid_argument("correlation: need at least 10 x max_lag samples");

    double mean = 0.0;
    size_t n_def = 0;
    for (size_t i = 0; i < n; ++i)
        if (mask.empty() || mask[i]) {
            mean += x[i];
            ++n_def;
        }
    if (n_def == 0) throw NumericError("correlation: all samples masked");
    mean /= static_cast<double>(n_def);

    CorrelationSeries out;
    out.dt = dt;
    out.lag.resize(n_lag + 1);
    out.c.resize(n_lag + 1);
    std::vector<double> xc(n);
    for (size_t i = 0; i < n; ++i) xc[i] = (mask.empty() || mask[i]) ? x[i] - mean : 0.0;

    double c0 = 0.0;
    for (size_t k = 0; k <= n_lag; ++k) {
        double s = 0.0;
        size_t pairs = 0;
        if (mask.empty()) {
            for (size_t i = 0; i + k < n; ++i) s += xc[i] * xc[i + k];
            pairs = n - k;
        } else {
            for (size_t i = 0; i + k < n; ++i) {
                if (!mask[i] || !mask[i + k]) continue;
                s += xc[i] * xc[i + k];
                ++pairs;
            }
        }
        if (pairs == 0) {
            out.lag[k] = k * dt;
            out.c[k] = 0.0;
            continue;
        }
        const double v = s / static_cast<double>(pairs);
        if (k == 0) {
            if (v <= 0.0) throw NumericError("correlation: zero variance, correlation undefined");
            c0 = v;
        }
        out.lag[k] = k * dt;
        out.c[k] = v / c0;
    }
    out.norm_const = c0;
    return out;
}

struct FwhmResult {
    double width = 0.0;
    size_t bracket_lo = 0, bracket_hi = 0;  // samples bracketing the half crossing
};

// Lag at which C first crosses 1/2, linearly interpolated. For the
// one-sided correlations computed here this is the half-width measure used
// throughout (exponential exp(-tau/w) gives w ln 2, Lorentzian gives w).
inline FwhmResult fwhm(const CorrelationSeries& corr) {
    if (corr.c.empty() || std::abs(corr.c[0] - 1.0) > 1e-9)
        throw std::invalid_argument("fwhm: series must be normalized with C(0) = 1");
    for (size_t k = 1; k < corr.c.size(); ++k) {
        if (corr.c[k] <= 0.5) {
            const double c_lo = corr.c[k - 1], c_hi = corr.c[k];
            const double f = (c_lo - 0.5) / (c_lo - c_hi);
            return {corr.lag[k - 1] + f * (corr.lag[k] - corr.lag[k - 1]), k - 1, k};
        }
    }
    throw NumericError("fwhm: no half crossing within max_lag; increase max_lag");
}

struct Histogram {
    std::vector<double> centers;
    std::vector<double> density;
    size_t n_samples = 0;
};

// Histogram of wrapped phases over (-pi, pi].
inline Histogram phase_histogram(const PhaseSeries& ps, size_t n_bins = 64) {
    Histogram h;
    h.centers.resize(n_bins);
    h.density.assign(n_bins, 0.0);
    const double width = 2.0 * M_PI / n_bins;
    for (size_t b = 0; b < n_bins; ++b) h.centers[b] = -M_PI + (b + 0.5) * width;
    for (size_t i = 0; i < ps.dphi.size(); ++i) {
        if (!ps.mask[i]) continue;
        int b = static_cast<int>((ps.dphi[i] + M_PI) / width);
        b = std::min<int>(static_cast<int>(n_bins) - 1, std::max(0, b));
        h.density[b] += 1.0;
        ++h.n_samples;
    }
    if (h.n_samples > 0)
        for (auto& d : h.density) d /= (h.n_samples * width);
    return h;
}

// Phase-locking modes. The raw angle density is unimodal (emission jumps
// reset the state onto the non-decaying superposition and the no-jump drift
// biases the same way), so locking is read off the occupation of
// cos(dphi): the phase turns around near dphi = 0 and pi, piling density
// onto cos = +-1. Returns the angles of the top two occupation modes.
inline std::pair<double, double> locking_modes(const PhaseSeries& ps, size_t n_bins = 32) {
    std::vector<double> h(n_bins, 0.0);
    size_t n = 0;
    for (size_t i = 0; i < ps.cos_dphi.size(); ++i) {
        if (!ps.mask[i]) continue;
        int b = static_cast<int>((ps.cos_dphi[i] + 1.0) * 0.5 * n_bins);
        b = std::min<int>(static_cast<int>(n_bins) - 1, std::max(0, b));
        h[b] += 1.0;
        ++n;
    }
    if (n == 0) throw NumericError("locking_modes: all samples masked");
    auto u_of = [&](size_t b) { return -1.0 + (b + 0.5) * 2.0 / n_bins; };
    size_t i1 = 0;
    for (size_t b = 1; b < n_bins; ++b)
        if (h[b] > h[i1]) i1 = b;
    size_t i2 = n_bins + 1;
    double best = -1.0;
    for (size_t b = 0; b < n_bins; ++b) {
        if (std::abs(u_of(b) - u_of(i1)) < 0.5) continue;
        if (h[b] > best) {
            best = h[b];
            i2 = b;
        }
    }
    if (i2 > n_bins) i2 = i1;
    return {std::acos(u_of(i1)), std::acos(u_of(i2))};
}

// Top-two circular modes of a histogram (greedy, with an exclusion window).
inline std::pair<double, double> top_two_modes(const Histogram& h, double exclusion = 1.0) {
    const size_t n = h.centers.size();
    size_t i1 = 0;
    for (size_t i = 1; i < n; ++i)
        if (h.density[i] > h.density[i1]) i1 = i;
    double best = -1.0;
    size_t i2 = 0;
    for (size_t i = 0; i < n; ++i) {
        double d = std::abs(wrap_angle(h.centers[i] - h.centers[i1]));
        if (d < exclusion) continue;
        if (h.density[i] > best) {
            best = h.density[i];
            i2 = i;
        }
    }
    return {h.centers[i1], h.centers[i2]};
}

// Mean drift rate of the unwrapped phase (least squares on increments).
inline double phase_drift_rate(const PhaseSeries& ps) {
    double acc = 0.0;
    size_t n = 0;
    for (size_t i = 1; i < ps.dphi.size(); ++i) {
        if (!ps.mask[i] || !ps.mask[i - 1]) continue;
        acc += wrap_angle(ps.dphi[i] - ps.dphi[i - 1]);
        ++n;
    }
    const double dt = ps.times.size() > 1 ? ps.times[1] - ps.times[0] : 1.0;
    return n > 0 ? acc / (n * dt) : 0.0;
}

struct LinFit {
    double slope = 0.0, intercept = 0.0, r_squared = 0.0;
};

inline LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = std::min(x.size(), y.size());
    if (n < 2) throw std::invalid_argument("linear_fit: need two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += x[i]; sy += y[i];
        sxx += x[i] * x[i]; sxy += x[i] * y[i]; syy += y[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    LinFit f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_res = 0.0, ss_tot = 0.0;
    const double ym = sy / n;
    for (size_t i = 0; i < n; ++i) {
        const double fit = f.slope * x[i] + f.intercept;
        ss_res += (y[i] - fit) * (y[i] - fit);
        ss_tot += (y[i] - ym) * (y[i] - ym);
    }
    f.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

}  // namespace fluor
