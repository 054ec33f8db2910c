#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "fluor/mat2.hpp"

// Physical model of a coherently driven two-level atom whose transition
// frequency is shaken by Gaussian white noise. hbar = 1 and all rates are
// measured in units of the Rabi frequency, so `rabi` is 1.0 by convention
// (raw-unit input is rescaled at config load).
//
// Bare basis ordering is (|e>, |g>); dressed ordering is (|1>, |2>) with
//   |1> = cos(theta)|g> + sin(theta)|e>,  |2> = -sin(theta)|g> + cos(theta)|e>,
//   theta = -atan2(rabi, detuning)/2,
// which picks theta -> -pi/4 as detuning -> 0+ and theta -> 0 for large
// positive detuning.

namespace fluor {

enum class Basis { bare, dressed };

inline const char* basis_name(Basis b) { return b == Basis::bare ? "bare" : "dressed"; }

struct AtomParams {
    double rabi = 1.0;    // Omega; the frequency unit
    double detuning = 0.0;  // Delta = omega_a - omega_L
    double gamma = 0.0;   // natural linewidth
    double noise = 0.0;   // Gamma, white-noise magnitude

    void validate() const {
        if (!(rabi > 0.0)) throw std::invalid_argument("AtomParams: rabi must be > 0");
        if (!(gamma >= 0.0)) throw std::invalid_argument("AtomParams: gamma must be >= 0");
        if (!(noise >= 0.0)) throw std::invalid_argument("AtomParams: noise must be >= 0");
        if (!std::isfinite(detuning)) throw std::invalid_argument("AtomParams: detuning must be finite");
    }

    // Gamma' = Gamma - gamma/4
    double gamma_prime() const { return noise - 0.25 * gamma; }
    // Gamma'' = Gamma' + gamma
    double gamma_dprime() const { return gamma_prime() + gamma; }
    // alpha^2 = gamma^2 + 4 Gamma gamma + Omega^2
    double alpha_sq() const { return gamma * gamma + 4.0 * noise * gamma + rabi * rabi; }
    // dressed splitting sqrt(Omega^2 + Delta^2)
    double splitting() const { return std::hypot(rabi, detuning); }
    // fastest rate in the problem; used for time-step caps
    double max_rate() const {
        return std::max({rabi, noise, gamma, std::abs(detuning), splitting()});
    }
};

// 2x2 operator tagged with the basis its matrix elements refer to. Mixing
// bases in a binary operation is an error, not a convention.
struct Operator2 {
    Mat2 m;
    Basis basis = Basis::bare;

    Operator2() = default;
    Operator2(const Mat2& mm, Basis b) : m(mm), basis(b) {}

    static void require_same(const Operator2& a, const Operator2& b) {
        if (a.basis != b.basis)
            throw std::invalid_argument(std::string("Operator2: basis mismatch (") + basis_name(a.basis) +
                                        " vs " + basis_name(b.basis) + ")");
    }

    Operator2 operator+(const Operator2& o) const { require_same(*this, o); return {m + o.m, basis}; }
    Operator2 operator-(const Operator2& o) const { require_same(*this, o); return {m - o.m, basis}; }
    Operator2 operator*(const Operator2& o) const { require_same(*this, o); return {m * o.m, basis}; }
    friend Operator2 operator*(cplx s, const Operator2& o) { return {s * o.m, o.basis}; }

    Operator2 adjoint() const { return {m.adjoint(), basis}; }
    cplx trace() const { return m.trace(); }
    bool is_hermitian(double tol = 1e-12) const { return m.is_hermitian(tol); }
};

inline cplx trace_product(const Operator2& a, const Operator2& b) {
    Operator2::require_same(a, b);
    return trace_product(a.m, b.m);
}

// Density matrix: Hermitian, unit-trace (after normalize), tagged basis.
struct DensityMatrix {
    Mat2 m;
    Basis basis = Basis::bare;

    DensityMatrix() = default;
    DensityMatrix(const Mat2& mm, Basis b) : m(mm), basis(b) {}

    double trace_real() const { return m.trace().real(); }

    void validate(double herm_tol = 1e-12, double eig_tol = 1e-10) const {
        if (!m.is_hermitian(herm_tol)) throw std::invalid_argument("DensityMatrix: not Hermitian");
        auto ev = m.hermitian_eigenvalues();
        if (ev[0] < -eig_tol) throw std::invalid_argument("DensityMatrix: negative eigenvalue");
    }

    DensityMatrix normalized() const {
        const double t = trace_real();
        if (std::abs(t) < 1e-300) throw std::invalid_argument("DensityMatrix: zero trace");
        return {(1.0 / t) * m, basis};
    }
};

// Pure state in the dressed basis: amplitudes on |1>, |2>.
struct PureState {
    cplx amp1{}, amp2{};

    double norm_sq() const { return std::norm(amp1) + std::norm(amp2); }
    double norm() const { return std::sqrt(norm_sq()); }

    PureState normalized() const {
        const double n = norm();
        if (n < 1e-15) throw std::runtime_error("PureState: norm underflow");
        return {amp1 / n, amp2 / n};
    }

    Vec2 vec() const { return {amp1, amp2}; }
    DensityMatrix density() const { return {outer(vec()), Basis::dressed}; }
};

// Bare-basis spin operators, (e,g) ordering.
inline Operator2 spin_z_bare() { return {{0.5, 0.0, 0.0, -0.5}, Basis::bare}; }
inline Operator2 spin_plus_bare() { return {{0.0, 1.0, 0.0, 0.0}, Basis::bare}; }
inline Operator2 spin_minus_bare() { return {{0.0, 0.0, 1.0, 0.0}, Basis::bare}; }

struct DressedTransform {
    double theta = 0.0;
    // u maps bare coordinates to dressed ones: rows are <1|, <2| in (e,g)
    // coordinates. Real orthogonal here, still applied as a general unitary.
    Mat2 u;

    Mat2 to_dressed(const Mat2& bare) const { return u * bare * u.adjoint(); }
    Mat2 to_bare(const Mat2& dressed) const { return u.adjoint() * dressed * u; }
};

// Mixing-angle construction of the dressed basis. atan2 keeps the branch
// continuous in the detuning with theta(0) = -pi/4.
inline DressedTransform dressed_basis(const AtomParams& p) {
    p.validate();
    const double theta = -0.5 * std::atan2(p.rabi, p.detuning);
    const double c = std::cos(theta), s = std::sin(theta);
    // <1| = s <e| + c <g|,  <2| = c <e| - s <g|
    return {theta, Mat2{s, c, c, -s}};
}

inline Operator2 to_dressed(const Operator2& op, const AtomParams& p) {
    if (op.basis == Basis::dressed) return op;
    return {dressed_basis(p).to_dressed(op.m), Basis::dressed};
}

inline Operator2 to_bare(const Operator2& op, const AtomParams& p) {
    if (op.basis == Basis::bare) return op;
    return {dressed_basis(p).to_bare(op.m), Basis::bare};
}

// Mean atomic Hamiltonian, diagonal in the dressed basis: diag(E1, E2) with
// E_{1,2} = -/+ splitting/2.
inline Operator2 mean_hamiltonian(const AtomParams& p) {
    p.validate();
    const double half = 0.5 * p.splitting();
    return {{-half, 0.0, 0.0, half}, Basis::dressed};
}

struct JumpOperators {
    Operator2 emission;  // sqrt(gamma) S^-
    Operator2 noise;     // 2 sqrt(Gamma) S^z
};

// Dressed-basis jump operators. At zero detuning the noise operator swaps
// the dressed states (up to a global sign), with <C2^dag C2> = Gamma for
// every state since (2 S^z)^2 = 1.
inline JumpOperators jump_operators(const AtomParams& p) {
    p.validate();
    const auto tr = dressed_basis(p);
    Mat2 sm = tr.to_dressed(spin_minus_bare().m);
    Mat2 sz = tr.to_dressed(spin_z_bare().m);
    return {Operator2{std::sqrt(p.gamma) * sm, Basis::dressed},
            Operator2{2.0 * std::sqrt(p.noise) * sz, Basis::dressed}};
}

// Excited-state projector S^+ S^- in the dressed basis.
inline Operator2 excited_projector_dressed(const AtomParams& p) {
    const auto tr = dressed_basis(p);
    Mat2 pe = tr.to_dressed(Mat2{1.0, 0.0, 0.0, 0.0});
    return {pe, Basis::dressed};
}

// Non-Hermitian drift for the no-jump evolution:
//   H_eff = <H_AL> - (i/2)(gamma S^+S^- + Gamma I).
// The constant -(i/2) Gamma piece is kept so no-jump survival matches the
// two-channel jump probabilities exactly.
inline Operator2 effective_hamiltonian(const AtomParams& p) {
    Mat2 h = mean_hamiltonian(p).m;
    Mat2 pe = excited_projector_dressed(p).m;
    const cplx mihalf(0.0, -0.5);
    Mat2 drift = mihalf * (p.gamma * pe + p.noise * Mat2::identity());
    return {h + drift, Basis::dressed};
}

// S^+ expressed in the dressed basis (the reconstruction target).
inline Operator2 spin_plus_dressed(const AtomParams& p) { return to_dressed(spin_plus_bare(), p); }
inline Operator2 spin_minus_dressed(const AtomParams& p) { return to_dressed(spin_minus_bare(), p); }
inline Operator2 spin_z_dressed(const AtomParams& p) { return to_dressed(spin_z_bare(), p); }

// Initial-state helpers (dressed amplitudes).
inline PureState state_dressed1() { return {1.0, 0.0}; }
inline PureState state_dressed2() { return {0.0, 1.0}; }
inline PureState state_excited(const AtomParams& p) {
    const auto tr = dressed_basis(p);
    // bare |e> = (1, 0)
    return PureState{tr.u.e00, tr.u.e10}.normalized();
}
inline PureState state_ground(const AtomParams& p) {
    const auto tr = dressed_basis(p);
    return PureState{tr.u.e01, tr.u.e11}.normalized();
}

}  // namespace fluor
