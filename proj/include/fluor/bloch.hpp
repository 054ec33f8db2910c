#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "fluor/analytic.hpp"
#include "fluor/atom.hpp"
#include "fluor/spectrum_series.hpp"

// Brute-force spectrum oracle. Integrates the Bloch equations
//   d<Sz>/dt = -gamma <Sz> + (i/2) Omega (<S-> - <S+>) - gamma/2
//   d<S+>/dt = -i Omega <Sz> + ( i Delta - 2 Gamma - gamma/2) <S+>
//   d<S->/dt = +i Omega <Sz> + (-i Delta - 2 Gamma - gamma/2) <S->
// to the steady state with fixed-step RK4, then re-integrates the same
// linear system for the regression vector
//   g(tau) = <(Sz, S+, S-)(t+tau) S-(t)>,   g(0) = (-<S->/2, 1/2 + <Sz>, 0),
// with the affine term scaled by <S->_ss. The spectrum is the numerically
// Fourier-transformed decaying part, Simpson quadrature over [0, T]. No
// closed-form spectral algebra is used anywhere on this path.

namespace fluor {

struct BlochState {
    double sz;
    cplx sp, sm;
};

namespace detail {

struct BlochVec {
    cplx z, p, m;  // <Sz> carried as complex for the regression reuse
    BlochVec operator+(const BlochVec& o) const { return {z + o.z, p + o.p, m + o.m}; }
    friend BlochVec operator*(double s, const BlochVec& v) { return {s * v.z, s * v.p, s * v.m}; }
};

class BlochSystem {
  public:
    BlochSystem(const AtomParams& p, cplx affine_scale) : om_(p.rabi), affine_(affine_scale * cplx(-0.5 * p.gamma, 0.0)) {
        const double de = p.detuning, ga = p.gamma, Ga = p.noise;
        gz_ = ga;
        cp_ = cplx(-2.0 * Ga - 0.5 * ga, de);
        cm_ = cplx(-2.0 * Ga - 0.5 * ga, -de);
    }

    BlochVec rhs(const BlochVec& v) const {
        return {-gz_ * v.z + cplx(0.0, 0.5 * om_) * (v.m - v.p) + affine_,
                cplx(0.0, -om_) * v.z + cp_ * v.p,
                cplx(0.0, om_) * v.z + cm_ * v.m};
    }

    BlochVec rk4_step(const BlochVec& v, double dt) const {
        const BlochVec k1 = rhs(v);
        const BlochVec k2 = rhs(v + (0.5 * dt) * k1);
        const BlochVec k3 = rhs(v + (0.5 * dt) * k2);
        const BlochVec k4 = rhs(v + dt * k3);
        return v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

  private:
    double om_, gz_;
    cplx cp_, cm_, affine_;
};

}  // namespace detail

// Integrate the Bloch equations from an initial state; returns samples every
// `stride` steps (including t = 0).
inline std::vector<BlochState> bloch_integrate(const AtomParams& p, const BlochState& init, double dt,
                                               size_t n_steps, size_t stride = 1) {
    detail::BlochSystem sys(p, 1.0);
    detail::BlochVec v{init.sz, init.sp, init.sm};
    std::vector<BlochState> out;
    out.reserve(n_steps / stride + 2);
    for (size_t i = 0; i <= n_steps; ++i) {
        if (i % stride == 0) out.push_back({v.z.real(), v.p, v.m});
        if (i < n_steps) v = sys.rk4_step(v, dt);
    }
    return out;
}

// Steady state by integration. Fails with a decay-rate diagnostic when the
// state has not settled within the allotted horizon.
inline BlochState bloch_steady_by_integration(const AtomParams& p, double tol = 1e-13) {
    p.validate();
    const double rate = slowest_rate(p);
    if (rate <= 0.0) throw NumericError("bloch_steady_by_integration: no damping (gamma = noise = 0)");
    const double t_total = 60.0 / rate;
    const double dt = 0.02 / std::max(1.0, p.max_rate());
    detail::BlochSystem sys(p, 1.0);
    detail::BlochVec v{-0.5, 0.0, 0.0};  // ground state
    const size_t n = static_cast<size_t>(t_total / dt) + 1;
    detail::BlochVec prev = v;
    for (size_t i = 0; i < n; ++i) {
        v = sys.rk4_step(v, dt);
        if ((i & 0xFFF) == 0) prev = v;
    }
    const double resid = std::abs(v.z - prev.z) + std::abs(v.p - prev.p);
    if (resid > tol * 1e3 + 1e-11)
        throw NumericError("bloch_steady_by_integration: not converged, slowest rate " + std::to_string(rate) +
                           ", residual " + std::to_string(resid));
    return {v.z.real(), v.p, v.m};
}

struct OracleOptions {
    double dt = 0.0;        // 0: auto 5e-4 / max rate
    double t_max = 0.0;     // 0: auto 18 / slowest rate
    bool normalize = false;
};

// Regression-theorem spectrum on a grid.
inline SpectrumSeries regression_ode_oracle(const AtomParams& p, const OmegaGrid& grid,
                                            const OracleOptions& opt = {}) {
    p.validate();
    const BlochState ss = bloch_steady_by_integration(p);

    const double rate = slowest_rate(p);
    const double dt = opt.dt > 0.0 ? opt.dt : 5e-4 / std::max(1.0, p.max_rate());
    double t_max = opt.t_max > 0.0 ? opt.t_max : 18.0 / rate;
    size_t n_steps = static_cast<size_t>(t_max / dt);
    if (n_steps % 2) ++n_steps;  // Simpson wants an even interval count

    // g' = M g + b <S->_ss ; record the decaying part of the S+ component
    detail::BlochSystem sys(p, ss.sm);
    detail::BlochVec g{-0.5 * ss.sm, 0.5 + ss.sz, 0.0};
    const cplx g_inf_p = ss.sp * ss.sm;
    std::vector<cplx> gt(n_steps + 1);
    for (size_t i = 0; i <= n_steps; ++i) {
        gt[i] = g.p - g_inf_p;
        if (i < n_steps) g = sys.rk4_step(g, dt);
    }

    SpectrumSeries out;
    out.method = "ode-oracle";
    out.params = p;
    out.omega = grid.values();
    out.s.resize(out.omega.size());
    for (size_t k = 0; k < out.omega.size(); ++k) {
        const double w = out.omega[k];
        const cplx rot = std::exp(cplx(0.0, -w * dt));
        cplx phase = 1.0;
        cplx acc = 0.0;
        for (size_t i = 0; i <= n_steps; ++i) {
            const double wgt = (i == 0 || i == n_steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            acc += wgt * phase * gt[i];
            phase *= rot;
            if ((i & 0xFFFF) == 0xFFFF) phase = std::exp(cplx(0.0, -w * dt * (i + 1.0)));
        }
        out.s[k] = (acc * (dt / 3.0)).real();
    }
    if (opt.normalize) out.normalize_peak();
    return out;
}

}  // namespace fluor
