#pragma once

#include <array>
#include <complex>
#include <stdexcept>
#include <string>

#include "fluor/atom.hpp"
#include "fluor/cubic.hpp"
#include "fluor/errors.hpp"
#include "fluor/spectrum_series.hpp"

// Closed-form fluorescence spectrum of the noisy driven two-level atom.
//
// The incoherent part of the first-order correlation,
//   G(tau) = <S+(t+tau) S-(t)>_ss - <S+>_ss <S->_ss,
// follows from the regression theorem applied to the Bloch system
//   d/dt (Sz, S+, S-) = M (Sz, S+, S-) + (-gamma/2, 0, 0),
// and its one-sided transform Gamma1(omega) = int_0^inf e^{-i omega tau} G
// is a rational function N(omega)/D(omega) obtained here by Cramer's rule:
//
//   a  = i w + gamma
//   d- = i w + i Delta + 2 Gamma + gamma/2
//   D  = a ((i w + 2 Gamma + gamma/2)^2 + Delta^2) + Omega^2 (i w + 2 Gamma + gamma/2)
//   N  = -i Omega d- u1 + (a d- + Omega^2/2) u2 + (Omega^2/2) u3
//
// with u = (regression initial values minus their tau->inf limits)
//   u1 = -(1/2 + <Sz>) <S->,  u2 = 1/2 + <Sz> - <S+><S->,  u3 = -<S->^2,
// all steady-state averages. S(omega) = Re Gamma1(omega); omega is the
// detuning of the emitted light from the drive.
//
// D's roots reproduce the three-pole structure: at Delta = 0,
//   s_pm = i Gamma'' +- i sqrt(Gamma'^2 - Omega^2),  s_0 = i (2 Gamma + gamma/2),
// splitting the spectrum into three Lorentzians (Mollow triplet for
// Gamma' < Omega, central dip for Gamma' > Omega).

namespace fluor {

// Steady-state Bloch averages (fixed point of the linear system).
struct BlochSteady {
    double sz;
    cplx sp;  // <S+>; <S-> is its conjugate
};

inline BlochSteady bloch_steady(const AtomParams& p) {
    const double Om = p.rabi, De = p.detuning, ga = p.gamma, Ga = p.noise;
    const double w2 = 2.0 * Ga + 0.5 * ga;
    const double dk = ga * (w2 * w2 + De * De) + Om * Om * w2;
    if (dk <= 0.0)
        throw NumericError("bloch_steady: no unique steady state without damping (gamma = noise = 0)");
    const double sz = -0.5 * ga * (w2 * w2 + De * De) / dk;
    // from  0 = -i Omega <Sz> + (i Delta - 2 Gamma - gamma/2) <S+>
    const cplx sp = cplx(0.0, Om) * sz * cplx(-w2, -De) / (w2 * w2 + De * De);
    return {sz, sp};
}

struct CorrelationValue {
    cplx value;
    bool near_pole = false;  // evaluated off-grid by 1e-9 because |D| ~ 0
};

namespace detail {

inline cplx correlation_numden(const AtomParams& p, double w, cplx& den) {
    const double Om = p.rabi, De = p.detuning, ga = p.gamma, Ga = p.noise;
    const cplx iw(0.0, w);
    const cplx a = iw + ga;
    const cplx dmid = iw + cplx(2.0 * Ga + 0.5 * ga, 0.0);
    const cplx dm = iw + cplx(0.0, De) + 2.0 * Ga + 0.5 * ga;
    den = a * (dmid * dmid + De * De) + Om * Om * dmid;

    const BlochSteady ss = bloch_steady(p);
    const cplx sm = std::conj(ss.sp);
    const cplx rho_ee = 0.5 + ss.sz;
    const cplx u1 = -rho_ee * sm;
    const cplx u2 = rho_ee - ss.sp * sm;
    const cplx u3 = -sm * sm;
    return -cplx(0.0, Om) * dm * u1 + (a * dm + 0.5 * Om * Om) * u2 + 0.5 * Om * Om * u3;
}

}  // namespace detail

// Gamma1(omega) for arbitrary detuning.
inline CorrelationValue correlation_general(const AtomParams& p, double w) {
    p.validate();
    cplx den;
    cplx num = detail::correlation_numden(p, w, den);
    if (std::abs(den) < 1e-12) {
        cplx d2;
        const cplx n2 = detail::correlation_numden(p, w + 1e-9, d2);
        return {n2 / d2, true};
    }
    return {num / den, false};
}

// Resonant special case (Delta = 0): same function with the coefficients
// spelled out in the rate combinations Gamma'' and beta^2 = alpha^2 + Omega^2.
inline CorrelationValue correlation_resonant(const AtomParams& p, double w) {
    p.validate();
    if (p.detuning != 0.0) throw std::invalid_argument("correlation_resonant: detuning must be 0");
    const double Om = p.rabi, ga = p.gamma, Ga = p.noise;
    const double gpp = p.gamma_dprime();
    const double beta2 = p.alpha_sq() + Om * Om;
    const double om2 = Om * Om;

    const double n2 = -2.0 * om2 * (2.0 * Ga * ga + om2) / (beta2 * beta2);
    const double n1 = om2 * (8.0 * Ga * Ga * ga + 4.0 * Ga * om2 + 6.0 * Ga * ga * ga + 4.0 * om2 * ga) /
                      (beta2 * beta2);
    const double n0 = om2 *
                      (8.0 * Ga * Ga * ga * ga + 8.0 * Ga * om2 * ga + 2.0 * Ga * ga * ga * ga + om2 * om2 +
                       2.0 * om2 * ga * ga) /
                      (beta2 * beta2);
    const cplx num = cplx(n2 * w * w + n0, n1 * w);
    const cplx iw(0.0, w);
    const cplx den = -0.5 * (iw + 2.0 * Ga + 0.5 * ga) *
                     (2.0 * w * w - cplx(0.0, 4.0 * gpp) * w - beta2);
    if (std::abs(den) < 1e-12) return correlation_general(p, w + 1e-9);
    return {num / den, false};
}

inline cplx correlation(const AtomParams& p, double w) {
    return p.detuning == 0.0 ? correlation_resonant(p, w).value : correlation_general(p, w).value;
}

// Poles of Gamma1 in omega (any detuning): D is a real cubic in z = i omega,
// roots z_k have Re z_k < 0 and the poles are s_k = -i z_k (upper half plane).
inline std::array<cplx, 3> correlation_poles(const AtomParams& p) {
    const double Om = p.rabi, De = p.detuning, ga = p.gamma, Ga = p.noise;
    const double b = 2.0 * Ga + 0.5 * ga;
    const double c2 = 2.0 * b + ga;
    const double c1 = b * b + De * De + 2.0 * b * ga + Om * Om;
    const double c0 = ga * (b * b + De * De) + Om * Om * b;
    const auto z = solve_cubic(c2, c1, c0);
    return {cplx(0.0, -1.0) * z[0], cplx(0.0, -1.0) * z[1], cplx(0.0, -1.0) * z[2]};
}

// Slowest decay rate of the correlation function, min_k Im s_k.
inline double slowest_rate(const AtomParams& p) {
    const auto s = correlation_poles(p);
    double r = s[0].imag();
    for (const auto& v : s) r = std::min(r, v.imag());
    return r;
}

enum class SpectrumRegime { triplet, dip, degenerate };

inline const char* regime_name(SpectrumRegime r) {
    switch (r) {
        case SpectrumRegime::triplet: return "triplet";
        case SpectrumRegime::dip: return "dip";
        default: return "degenerate";
    }
}

// Three-Lorentzian decomposition at zero detuning:
//   Gamma1(w) = A+/(w - s+) + A-/(w - s-) + A0/(w - s0).
// Residues are evaluated exactly as N(s_k)/D'(s_k); in the dip regime all
// poles are purely imaginary and A+ s+ > 0, A0 s0 > 0, A- s- < 0.
struct LorentzianDecomposition {
    cplx s_plus, s_minus, s_zero;
    cplx a_plus, a_minus, a_zero;
    SpectrumRegime regime;
};

inline LorentzianDecomposition decompose(const AtomParams& p) {
    p.validate();
    if (p.detuning != 0.0) throw std::invalid_argument("decompose: detuning must be 0");
    const double Om = p.rabi, ga = p.gamma, Ga = p.noise;
    const double gp = p.gamma_prime(), gpp = p.gamma_dprime();
    if (std::abs(gp - Om) < 1e-9)
        return {{}, {}, {}, {}, {}, {}, SpectrumRegime::degenerate};

    const cplx root = std::sqrt(cplx(gp * gp - Om * Om, 0.0));
    const cplx i(0.0, 1.0);
    const cplx sp = i * gpp + i * root;
    const cplx sm = i * gpp - i * root;
    const cplx s0 = i * (2.0 * Ga + 0.5 * ga);

    const double beta2 = p.alpha_sq() + Om * Om;
    const double om2 = Om * Om;
    const double n2 = -2.0 * om2 * (2.0 * Ga * ga + om2) / (beta2 * beta2);
    const double n1 = om2 * (8.0 * Ga * Ga * ga + 4.0 * Ga * om2 + 6.0 * Ga * ga * ga + 4.0 * om2 * ga) /
                      (beta2 * beta2);
    const double n0 = om2 *
                      (8.0 * Ga * Ga * ga * ga + 8.0 * Ga * om2 * ga + 2.0 * Ga * ga * ga * ga + om2 * om2 +
                       2.0 * om2 * ga * ga) /
                      (beta2 * beta2);
    auto num = [&](cplx w) { return n2 * w * w + cplx(0.0, n1) * w + n0; };
    // D = -(1/2)(i w + 2 Gamma + gamma/2)(2 w^2 - 4 i w Gamma'' - beta^2)
    auto dprime = [&](cplx w) {
        const cplx quad = 2.0 * w * w - cplx(0.0, 4.0 * gpp) * w - beta2;
        const cplx lin = i * w + 2.0 * Ga + 0.5 * ga;
        return -0.5 * (i * quad + lin * (4.0 * w - cplx(0.0, 4.0 * gpp)));
    };

    LorentzianDecomposition d;
    d.s_plus = sp;
    d.s_minus = sm;
    d.s_zero = s0;
    d.a_plus = num(sp) / dprime(sp);
    d.a_minus = num(sm) / dprime(sm);
    d.a_zero = num(s0) / dprime(s0);
    d.regime = gp < Om ? SpectrumRegime::triplet : SpectrumRegime::dip;
    return d;
}

// Sum of the three Lorentzian real parts; identical to Re Gamma1 by partial
// fractions, kept as an independent evaluation route for tests. In the dip
// regime this reduces to sum_k A_k s_k / (w^2 + |s_k|^2).
inline double three_lorentzian_eval(const LorentzianDecomposition& d, double w) {
    // Re[A/(w-s)] = (Re A (w - Re s) - Im A Im s) / |w - s|^2
    auto term = [&](cplx A, cplx s) {
        const double dr = w - s.real();
        return (A.real() * dr - A.imag() * s.imag()) / (dr * dr + s.imag() * s.imag());
    };
    return term(d.a_plus, d.s_plus) + term(d.a_minus, d.s_minus) + term(d.a_zero, d.s_zero);
}

// Exact spectrum on a grid.
inline SpectrumSeries spectrum_analytic(const AtomParams& p, const OmegaGrid& grid, bool normalize = false) {
    p.validate();
    SpectrumSeries out;
    out.method = "analytic";
    out.params = p;
    out.omega = grid.values();
    out.s.resize(out.omega.size());
    for (size_t i = 0; i < out.omega.size(); ++i) out.s[i] = correlation(p, out.omega[i]).real();
    if (normalize) out.normalize_peak();
    return out;
}

// Default truncation time for finite-horizon estimates: twelve slow periods.
// At zero detuning with Gamma' > Omega the slow scale is the dip width
// |s-|; in the triplet regime the fallback is 12/gamma; off
// resonance the slowest cubic-pole rate is used.
inline double default_truncation_time(const AtomParams& p) {
    if (p.detuning == 0.0) {
        if (p.gamma_prime() > p.rabi) {
            const auto d = decompose(p);
            const double slow = std::min({std::abs(d.s_minus.imag()), std::abs(d.s_zero.imag()), p.gamma_dprime()});
            return 12.0 / slow;
        }
        if (p.gamma > 0.0) return 12.0 / p.gamma;
    }
    const double r = slowest_rate(p);
    if (r <= 0.0) throw NumericError("default_truncation_time: undamped dynamics, specify t_max explicitly");
    return 12.0 / r;
}

}  // namespace fluor
