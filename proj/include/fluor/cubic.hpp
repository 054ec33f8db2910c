#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace fluor {

// Roots of z^3 + a z^2 + b z + c with real coefficients. One root is always
// real; the other two are real or a conjugate pair. Trigonometric form for
// three real roots, Cardano otherwise.
inline std::array<std::complex<double>, 3> solve_cubic(double a, double b, double c) {
    using C = std::complex<double>;
    const double p = b - a * a / 3.0;
    const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    const double shift = -a / 3.0;
    const double disc = q * q / 4.0 + p * p * p / 27.0;

    std::array<C, 3> z;
    if (disc > 0.0) {
        const double s = std::sqrt(disc);
        const double u = std::cbrt(-q / 2.0 + s);
        const double v = std::cbrt(-q / 2.0 - s);
        const double re = -(u + v) / 2.0 + shift;
        const double im = std::sqrt(3.0) / 2.0 * (u - v);
        z = {C(u + v + shift, 0.0), C(re, im), C(re, -im)};
    } else if (p == 0.0 && q == 0.0) {
        z = {C(shift, 0.0), C(shift, 0.0), C(shift, 0.0)};
    } else {
        const double m = 2.0 * std::sqrt(-p / 3.0);
        double arg = 3.0 * q / (p * m);
        arg = std::min(1.0, std::max(-1.0, arg));
        const double phi = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k)
            z[k] = C(m * std::cos(phi - 2.0 * M_PI * k / 3.0) + shift, 0.0);
    }
    return z;
}

}  // namespace fluor
