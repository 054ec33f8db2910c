#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fluor/atom.hpp"

// Shared test utilities: random states/matrices and a Kolmogorov-Smirnov
// check against the exponential distribution.

namespace testutil {

inline fluor::PureState random_pure_state(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    fluor::PureState s{{n(rng), n(rng)}, {n(rng), n(rng)}};
    return s.normalized();
}

inline fluor::Mat2 random_density(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    fluor::Mat2 a{{n(rng), n(rng)}, {n(rng), n(rng)}, {n(rng), n(rng)}, {n(rng), n(rng)}};
    fluor::Mat2 rho = a * a.adjoint();
    return (1.0 / rho.trace().real()) * rho;
}

inline fluor::Mat2 random_hermitian(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    fluor::Mat2 a{{n(rng), n(rng)}, {n(rng), n(rng)}, {n(rng), n(rng)}, {n(rng), n(rng)}};
    return 0.5 * (a + a.adjoint());
}

// One-sample KS statistic against Exponential(rate).
inline double ks_exponential(std::vector<double> samples, double rate) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
        const double f = 1.0 - std::exp(-rate * samples[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

// Critical value at significance alpha (asymptotic, Stephens' correction).
inline double ks_critical(double alpha, size_t n) {
    const double c = alpha <= 0.01 ? 1.628 : (alpha <= 0.05 ? 1.358 : 1.224);
    const double sn = std::sqrt(static_cast<double>(n));
    return c / (sn + 0.12 + 0.11 / sn);
}

// Indices of strict local maxima of a sampled curve.
inline std::vector<size_t> local_maxima(const std::vector<double>& y) {
    std::vector<size_t> out;
    for (size_t i = 1; i + 1 < y.size(); ++i)
        if (y[i] > y[i - 1] && y[i] > y[i + 1]) out.push_back(i);
    return out;
}

inline std::vector<size_t> local_minima(const std::vector<double>& y) {
    std::vector<size_t> out;
    for (size_t i = 1; i + 1 < y.size(); ++i)
        if (y[i] < y[i - 1] && y[i] < y[i + 1]) out.push_back(i);
    return out;
}

}  // namespace testutil
