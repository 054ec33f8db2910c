#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace fluor {

using cplx = std::complex<double>;

// 2x2 complex matrix, row-major: [ e00 e01 ; e10 e11 ]. Plain value type,
// no basis bookkeeping; the tagged wrapper lives in atom.hpp.
struct Mat2 {
    cplx e00{}, e01{}, e10{}, e11{};

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static Mat2 zero() { return {}; }

    Mat2 operator+(const Mat2& o) const { return {e00 + o.e00, e01 + o.e01, e10 + o.e10, e11 + o.e11}; }
    Mat2 operator-(const Mat2& o) const { return {e00 - o.e00, e01 - o.e01, e10 - o.e10, e11 - o.e11}; }
    Mat2 operator*(const Mat2& o) const {
        return {e00 * o.e00 + e01 * o.e10, e00 * o.e01 + e01 * o.e11,
                e10 * o.e00 + e11 * o.e10, e10 * o.e01 + e11 * o.e11};
    }
    Mat2& operator+=(const Mat2& o) { e00 += o.e00; e01 += o.e01; e10 += o.e10; e11 += o.e11; return *this; }
    Mat2& operator-=(const Mat2& o) { e00 -= o.e00; e01 -= o.e01; e10 -= o.e10; e11 -= o.e11; return *this; }

    friend Mat2 operator*(cplx s, const Mat2& m) { return {s * m.e00, s * m.e01, s * m.e10, s * m.e11}; }
    friend Mat2 operator*(double s, const Mat2& m) { return {s * m.e00, s * m.e01, s * m.e10, s * m.e11}; }
    friend Mat2 operator*(const Mat2& m, cplx s) { return s * m; }

    Mat2 adjoint() const { return {std::conj(e00), std::conj(e10), std::conj(e01), std::conj(e11)}; }
    cplx trace() const { return e00 + e11; }
    cplx det() const { return e00 * e11 - e01 * e10; }

    double max_abs() const {
        return std::max(std::max(std::abs(e00), std::abs(e01)), std::max(std::abs(e10), std::abs(e11)));
    }

    bool is_hermitian(double tol = 1e-12) const {
        return std::abs(e00 - std::conj(e00)) <= 2 * tol && std::abs(e11 - std::conj(e11)) <= 2 * tol &&
               std::abs(e01 - std::conj(e10)) <= tol;
    }

    // Eigenvalues of a Hermitian matrix, ascending.
    std::array<double, 2> hermitian_eigenvalues() const {
        const double a = e00.real(), d = e11.real();
        const double h = 0.5 * (a + d);
        const double r = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(e01));
        return {h - r, h + r};
    }
};

inline cplx trace_product(const Mat2& a, const Mat2& b) {
    // tr(a b) without forming the product
    return a.e00 * b.e00 + a.e01 * b.e10 + a.e10 * b.e01 + a.e11 * b.e11;
}

inline Mat2 commutator(const Mat2& a, const Mat2& b) { return a * b - b * a; }

// Complex 2-vector (state amplitudes).
struct Vec2 {
    cplx v0{}, v1{};

    double norm_sq() const { return std::norm(v0) + std::norm(v1); }
    double norm() const { return std::sqrt(norm_sq()); }

    Vec2 operator+(const Vec2& o) const { return {v0 + o.v0, v1 + o.v1}; }
    Vec2 operator-(const Vec2& o) const { return {v0 - o.v0, v1 - o.v1}; }
    friend Vec2 operator*(cplx s, const Vec2& x) { return {s * x.v0, s * x.v1}; }
};

inline Vec2 apply(const Mat2& m, const Vec2& x) {
    return {m.e00 * x.v0 + m.e01 * x.v1, m.e10 * x.v0 + m.e11 * x.v1};
}

// <x| m |x>
inline cplx expectation(const Mat2& m, const Vec2& x) {
    return std::conj(x.v0) * (m.e00 * x.v0 + m.e01 * x.v1) + std::conj(x.v1) * (m.e10 * x.v0 + m.e11 * x.v1);
}

// |x><x|
inline Mat2 outer(const Vec2& x) {
    return {x.v0 * std::conj(x.v0), x.v0 * std::conj(x.v1), x.v1 * std::conj(x.v0), x.v1 * std::conj(x.v1)};
}

}  // namespace fluor
