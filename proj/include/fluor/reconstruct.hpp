#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "fluor/analytic.hpp"
#include "fluor/atom.hpp"
#include "fluor/bloch.hpp"
#include "fluor/errors.hpp"
#include "fluor/lindblad.hpp"
#include "fluor/spectrum_series.hpp"
#include "fluor/threads.hpp"
#include "fluor/trajectory.hpp"

// Single-pass spectrum computation. Four density operators spanning the
// operator space are evolved once; the Heisenberg-picture raising operator
// is then reconstructed at every recorded lag from overlaps with the
// initial basis,
//   A'(tau) = sum_{j,k,i} (T^-1)_{jk} tr(R_k(tau) R_i(0)) lambda_i R_j(0),
//   lambda_i = sum_j (T^-1)_{ij} tr(A R_j(0)),     T_ij = tr(R_i(0) R_j(0)),
// and the spectrum follows from one discrete Fourier sum over
//   g(tau) = tr(A'(tau) S^- rho_bar(T)),
// with rho_bar(T) the average of the four evolved operators. No extra
// simulations are restarted per time step; the evolution cost is linear in
// the step count. The restart-based estimator (one auxiliary bundle per
// primary step, cost ~ 1/dt^2) is kept below as a cross-check.

namespace fluor {

// Basis of four pure-state density operators in the dressed basis; spans
// the full operator space with Gram condition number ~ 10.
inline std::array<DensityMatrix, 4> reconstruction_basis() {
    const cplx i(0.0, 1.0);
    return {DensityMatrix{{1.0, 0.0, 0.0, 0.0}, Basis::dressed},
            DensityMatrix{{0.5, 0.5, 0.5, 0.5}, Basis::dressed},
            DensityMatrix{{0.5, -0.5 * i, 0.5 * i, 0.5}, Basis::dressed},
            DensityMatrix{{0.5, -0.5, -0.5, 0.5}, Basis::dressed}};
}

struct GramMatrix {
    std::array<std::array<double, 4>, 4> t{};
    std::array<std::array<double, 4>, 4> tinv{};
    double condition = 0.0;  // 1-norm estimate
};

// T_ij = tr(R_i(0) R_j(0)) and its inverse (Gauss-Jordan, partial pivot).
// A singular or near-singular basis is a configuration error.
inline GramMatrix gram_matrix(const std::array<DensityMatrix, 4>& basis) {
    GramMatrix g;
    for (int i = 0; i < 4; ++i) {
        basis[i].validate(1e-10, 1e-9);
        for (int j = 0; j < 4; ++j) {
            const cplx tij = trace_product(basis[i].m, basis[j].m);
            g.t[i][j] = tij.real();
        }
    }

    double a[4][8];
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 8; ++j) a[i][j] = j < 4 ? g.t[i][j] : (j - 4 == i ? 1.0 : 0.0);
    for (int col = 0; col < 4; ++col) {
        int piv = col;
        for (int r = col + 1; r < 4; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-14) throw ConfigError("gram_matrix: singular basis");
        if (piv != col)
            for (int j = 0; j < 8; ++j) std::swap(a[piv][j], a[col][j]);
        const double inv = 1.0 / a[col][col];
        for (int j = 0; j < 8; ++j) a[col][j] *= inv;
        for (int r = 0; r < 4; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (int j = 0; j < 8; ++j) a[r][j] -= f * a[col][j];
        }
    }
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) g.tinv[i][j] = a[i][j + 4];

    auto one_norm = [](const std::array<std::array<double, 4>, 4>& m) {
        double best = 0.0;
        for (int j = 0; j < 4; ++j) {
            double s = 0.0;
            for (int i = 0; i < 4; ++i) s += std::abs(m[i][j]);
            best = std::max(best, s);
        }
        return best;
    };
    g.condition = one_norm(g.t) * one_norm(g.tinv);
    if (g.condition > 1e8) throw ConfigError("gram_matrix: basis condition number > 1e8");
    return g;
}

enum class Evolver { mc_ensemble, master_ode };

inline const char* evolver_name(Evolver e) { return e == Evolver::mc_ensemble ? "mc-ensemble" : "master-ode"; }

struct BasisEvolution {
    std::vector<double> taus;             // recorded lag grid, tau_0 = 0
    std::array<std::vector<Mat2>, 4> r;   // R_i(tau), dressed basis
    Mat2 steady;                          // rho_bar(T), average of the four R_i(T)
    Mat2 steady_tail;                     // rho_bar time-averaged over the last half
    GramMatrix gram;
    AtomParams params;
    Evolver evolver = Evolver::master_ode;
    uint64_t n_traj = 0;
    uint64_t seed = 0;

    void fill_tail_average() {
        const size_t n = taus.size();
        const size_t from = n / 2;
        Mat2 acc{};
        for (size_t k = from; k < n; ++k)
            acc += 0.25 * (r[0][k] + r[1][k] + r[2][k] + r[3][k]);
        steady_tail = (1.0 / static_cast<double>(n - from)) * acc;
    }
};

struct EvolveOptions {
    Evolver evolver = Evolver::master_ode;
    double ode_dt = 0.0;        // 0: auto 0.002 / max rate
    int workers = 0;
    bool validate_steady = false;  // gate rho_bar(T) against the Bloch fixed point
};

// rho_bar(T) must sit on the Bloch fixed point (independently integrated)
// before it can stand in for the stationary state in a spectrum run.
inline void validate_steady_state(const Mat2& steady, const AtomParams& p, double tol = 1e-3) {
    const BlochState ss = bloch_steady_by_integration(p);
    const auto tr = dressed_basis(p);
    const Mat2 sz_d = tr.to_dressed(spin_z_bare().m);
    const Mat2 sp_d = tr.to_dressed(spin_plus_bare().m);
    const double dz = std::abs(trace_product(sz_d, steady).real() - ss.sz);
    const double dp = std::abs(trace_product(sp_d, steady) - ss.sp);
    if (dz > tol || dp > tol)
        throw NumericError("basis evolution did not reach the Bloch fixed point (" + std::to_string(dz) +
                           ", " + std::to_string(dp) + "); increase t_max");
}

// Evolve the four basis operators under the master equation, by direct RK4
// integration or by trajectory ensembles.
inline BasisEvolution evolve_basis(const AtomParams& p, const SimConfig& cfg, const EvolveOptions& opt = {}) {
    p.validate();
    BasisEvolution out;
    out.params = p;
    out.evolver = opt.evolver;
    out.seed = cfg.seed;
    const auto basis = reconstruction_basis();
    out.gram = gram_matrix(basis);

    const double t_max = cfg.t_max > 0.0 ? cfg.t_max : default_truncation_time(p);

    if (opt.evolver == Evolver::master_ode) {
        const double dt = opt.ode_dt > 0.0 ? opt.ode_dt : 0.002 / std::max(1.0, p.max_rate());
        const size_t n_steps = static_cast<size_t>(t_max / dt + 0.5);
        const size_t stride = std::max<uint64_t>(1, cfg.record_stride);
        LindbladContext ctx(p);
        for (int i = 0; i < 4; ++i) out.r[i] = lindblad_evolve(ctx, basis[i].m, dt, n_steps, stride);
        const size_t n_samples = out.r[0].size();
        out.taus.resize(n_samples);
        for (size_t k = 0; k < n_samples; ++k) out.taus[k] = static_cast<double>(k) * stride * dt;
        out.n_traj = 0;

        out.steady = 0.25 * (out.r[0].back() + out.r[1].back() + out.r[2].back() + out.r[3].back());
        // deterministic evolution: the endpoint is the best steady-state
        // estimate (the tail window would re-admit residual-decay bias)
        out.steady_tail = out.steady;
        if (opt.validate_steady) validate_steady_state(out.steady, p);
    } else {
        // All four ensembles run on the same random streams (trajectory t of
        // ensemble i sees the draws of trajectory t of ensemble j). Since the
        // noise-jump probability is state independent, paired trajectories
        // follow nearly identical jump sequences, and the sampling error
        // largely cancels out of the signed basis combinations assembled by
        // the reconstruction. Each ensemble stays individually unbiased.
        SimConfig c = cfg;
        c.t_max = t_max;
        for (int i = 0; i < 4; ++i) {
            const EnsembleAverage avg = run_ensemble(basis[i], p, c, opt.workers);
            const size_t n = avg.times.size();
            out.r[i].resize(n);
            for (size_t k = 0; k < n; ++k) out.r[i][k] = avg.rho_at(k).m;
            if (i == 0) out.taus = avg.times;
            out.n_traj = avg.n_traj;
        }
        out.steady = 0.25 * (out.r[0].back() + out.r[1].back() + out.r[2].back() + out.r[3].back());
        out.fill_tail_average();
    }
    return out;
}

struct ReconstructedOperator {
    std::vector<double> taus;
    std::vector<Mat2> op;  // A'(tau), dressed basis
};

// Expansion coefficients lambda_i of a target operator over the basis.
inline std::array<cplx, 4> expansion_coefficients(const GramMatrix& g,
                                                  const std::array<DensityMatrix, 4>& basis,
                                                  const Operator2& target) {
    if (target.basis != Basis::dressed)
        throw std::invalid_argument("expansion_coefficients: target must be in the dressed basis");
    std::array<cplx, 4> raw{}, lam{};
    for (int j = 0; j < 4; ++j) raw[j] = trace_product(target.m, basis[j].m);
    for (int i = 0; i < 4; ++i) {
        cplx s = 0.0;
        for (int j = 0; j < 4; ++j) s += g.tinv[i][j] * raw[j];
        lam[i] = s;
    }
    return lam;
}

// Heisenberg-picture reconstruction of `target` on the recorded grid.
inline ReconstructedOperator reconstruct_heisenberg(const BasisEvolution& evo,
                                                    const Operator2& target) {
    const auto basis = reconstruction_basis();
    const auto lam = expansion_coefficients(evo.gram, basis, target);
    const size_t n = evo.taus.size();
    for (int i = 1; i < 4; ++i)
        if (evo.r[i].size() != n) throw NumericError("reconstruct_heisenberg: basis grids differ");

    ReconstructedOperator out;
    out.taus = evo.taus;
    out.op.resize(n);
    for (size_t t = 0; t < n; ++t) {
        // q_k = sum_i tr(R_k(tau) R_i(0)) lambda_i = tr(R_k(tau) A)
        std::array<cplx, 4> q{};
        for (int k = 0; k < 4; ++k) {
            cplx s = 0.0;
            for (int i = 0; i < 4; ++i) s += trace_product(evo.r[k][t], basis[i].m) * lam[i];
            q[k] = s;
        }
        Mat2 a{};
        for (int j = 0; j < 4; ++j) {
            cplx cj = 0.0;
            for (int k = 0; k < 4; ++k) cj += evo.gram.tinv[j][k] * q[k];
            a += cj * basis[j].m;
        }
        out.op[t] = a;
    }
    return out;
}

// Defining property of the reconstruction, tr(A rho(tau)) = tr(A'(tau) rho(0))
// for the basis initial states; returns the worst deviation over a grid
// subsample. Useful as a cheap self-test of an evolution run.
inline double reconstruction_defect(const BasisEvolution& evo, const ReconstructedOperator& rec,
                                    const Operator2& target, size_t max_checks = 512) {
    const auto basis = reconstruction_basis();
    const size_t n = evo.taus.size();
    const size_t stride = std::max<size_t>(1, n / max_checks);
    double worst = 0.0;
    for (size_t t = 0; t < n; t += stride)
        for (int i = 0; i < 4; ++i) {
            const cplx lhs = trace_product(target.m, evo.r[i][t]);
            const cplx rhs = trace_product(rec.op[t], basis[i].m);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    return worst;
}

struct SpectrumOptions {
    double window_rate = 0.0;  // optional exponential window exp(-rate tau); off by default
    bool normalize = false;
    int workers = 0;
};

// Discrete Fourier sum of g(tau) = tr(A'(tau) S^- rho_bar) over the recorded
// grid (trapezoid weights). The tau -> infinity limit tr(S+ rho) tr(S- rho_bar)
// is subtracted first: it is the coherent component, which contributes
// nothing to the real part away from omega = 0 but would otherwise leave an
// O(1/omega) truncation artifact in the finite-horizon sum. The S+ factor of
// the constant uses the tail-averaged state (when supplied) while the S-
// factor keeps the same rho_bar(T) as the integrand, so the sampling error of
// rho_bar(T) cancels out of the subtraction instead of integrating coherently
// over the whole horizon.
inline SpectrumSeries spectrum(const ReconstructedOperator& rec, const Mat2& steady, const AtomParams& p,
                               const OmegaGrid& grid, const SpectrumOptions& opt = {},
                               const Mat2* steady_tail = nullptr) {
    const size_t n = rec.taus.size();
    if (n < 2) throw NumericError("spectrum: need at least two recorded samples");
    const double dtau = rec.taus[1] - rec.taus[0];
    const auto tr = dressed_basis(p);
    const Mat2 sm_d = tr.to_dressed(spin_minus_bare().m);
    const Mat2 sp_d = sm_d.adjoint();
    const Mat2 b = sm_d * steady;

    const Mat2& tail = steady_tail ? *steady_tail : steady;
    const cplx g_inf = trace_product(sp_d, tail) * trace_product(sm_d, steady);
    std::vector<cplx> g(n);
    for (size_t t = 0; t < n; ++t) {
        g[t] = trace_product(rec.op[t], b) - g_inf;
        if (opt.window_rate > 0.0) g[t] *= std::exp(-opt.window_rate * rec.taus[t]);
    }

    SpectrumSeries out;
    out.params = p;
    out.omega = grid.values();
    out.s.resize(out.omega.size());
    const double t_total = rec.taus.back();
    if (slowest_rate(p) * t_total < 10.0)
        out.warning = "truncation time T = " + std::to_string(t_total) +
                      " is short: slowest decay rate x T < 10";

    const auto plan = ChunkPlan::make(out.omega.size(), 32);
    parallel_chunks(plan, opt.workers, [&](size_t, size_t lo, size_t hi) {
        for (size_t k = lo; k < hi; ++k) {
            const double w = out.omega[k];
            const cplx rot = std::exp(cplx(0.0, -w * dtau));
            cplx phase = 1.0, acc = 0.0;
            for (size_t t = 0; t < n; ++t) {
                const double wgt = (t == 0 || t + 1 == n) ? 0.5 : 1.0;
                acc += wgt * phase * g[t];
                phase *= rot;
                if ((t & 0xFFFF) == 0xFFFF) phase = std::exp(cplx(0.0, -w * dtau * (t + 1.0)));
            }
            out.s[k] = (acc * dtau).real();
        }
    });
    if (opt.normalize) out.normalize_peak();
    return out;
}

// Whole pipeline: evolve the basis, reconstruct S+, assemble the spectrum.
// The deterministic evolver gates rho_bar(T) against the Bloch fixed point;
// the sampled one cannot (Monte Carlo scatter would dominate the residual).
inline SpectrumSeries reconstruct_spectrum(const AtomParams& p, const SimConfig& cfg, const OmegaGrid& grid,
                                           const EvolveOptions& evolve_opt = {},
                                           const SpectrumOptions& spec_opt = {}) {
    EvolveOptions eo = evolve_opt;
    if (eo.evolver == Evolver::master_ode) eo.validate_steady = true;
    const BasisEvolution evo = evolve_basis(p, cfg, eo);
    const ReconstructedOperator rec = reconstruct_heisenberg(evo, spin_plus_dressed(p));
    SpectrumOptions so = spec_opt;
    so.workers = spec_opt.workers ? spec_opt.workers : evolve_opt.workers;
    SpectrumSeries out = spectrum(rec, evo.steady, p, grid, so, &evo.steady_tail);
    out.method = evo.evolver == Evolver::mc_ensemble ? "mc-reconstruct" : "ode-reconstruct";
    return out;
}

// ---------------------------------------------------------------------------
// Restart-based cross-check (the classic two-time estimator): after a burn-in
// the trajectory spawns, at every primary step, four auxiliary trajectories
// encoding S^- |psi><psi| as a signed mixture of pure states,
//   phi = S^- psi,  a+- = phi +- psi,  b+- = phi +- i psi,
//   S^-|psi><psi| = ( |a+><a+| - |a-><a-| )/4 + i ( |b+><b+| - |b-><b-| )/4,
// and accumulates <S+>(tau) along each. Cost scales as 1/dt^2, which is the
// point of comparison with the single-pass method above.

struct RestartOptions {
    double t_equilibrate = 0.0;  // 0: auto 8 / slowest rate
    double t_sample = 2.0;       // window over which restarts are spawned
    double tau_max = 0.0;        // 0: auto = default truncation time
    uint64_t tau_stride = 1;     // aux recording stride (coarse grid)
    bool normalize = false;
};

inline SpectrumSeries restart_spectrum(const AtomParams& p, const SimConfig& cfg, const RestartOptions& ropt,
                                       const OmegaGrid& grid, int workers = 0) {
    p.validate();
    const double dt = cfg.resolved_dt(p);
    const double slow = slowest_rate(p);
    const double t_eq = ropt.t_equilibrate > 0.0 ? ropt.t_equilibrate : 8.0 / slow;
    const double tau_max = ropt.tau_max > 0.0 ? ropt.tau_max : default_truncation_time(p);
    {
        SimConfig probe = cfg;  // the time horizon lives in the restart options
        probe.t_max = t_eq + ropt.t_sample + tau_max;
        probe.validate(p);
    }
    const uint64_t n_eq = static_cast<uint64_t>(t_eq / dt + 0.5);
    const uint64_t n_win = static_cast<uint64_t>(ropt.t_sample / dt + 0.5);
    const uint64_t n_tau = static_cast<uint64_t>(tau_max / dt + 0.5);
    const size_t n_rec = static_cast<size_t>(n_tau / ropt.tau_stride) + 1;
    const StepContext ctx(p, dt);
    const auto trd = dressed_basis(p);
    const Mat2 sm_d = trd.to_dressed(spin_minus_bare().m);
    const Mat2 sp_d = sm_d.adjoint();
    const PureState init = state_excited(p);

    const auto plan = ChunkPlan::make(cfg.n_traj);
    std::vector<std::vector<cplx>> partial_g(plan.n_chunks);
    std::vector<cplx> partial_sp(plan.n_chunks, 0.0);
    std::vector<uint64_t> partial_n(plan.n_chunks, 0);

    parallel_chunks(plan, workers, [&](size_t chunk, size_t lo, size_t hi) {
        std::vector<cplx> gacc(n_rec, 0.0);
        cplx sp_acc = 0.0;
        uint64_t n_restarts = 0;
        for (size_t tj = lo; tj < hi; ++tj) {
            Vec2 psi = init.vec();
            const Philox4x32 rng(cfg.seed, tj);
            for (uint64_t i = 0; i < n_eq; ++i) {
                const auto u = rng.uniforms(i);
                step_inplace(psi, ctx, u[0], u[1]);
            }
            for (uint64_t r = 0; r < n_win; ++r) {
                // spawn the auxiliary bundle at this primary step
                const Vec2 phi = apply(sm_d, psi);
                const Vec2 states[4] = {{phi.v0 + psi.v0, phi.v1 + psi.v1},
                                        {phi.v0 - psi.v0, phi.v1 - psi.v1},
                                        {phi.v0 + cplx(0.0, 1.0) * psi.v0, phi.v1 + cplx(0.0, 1.0) * psi.v1},
                                        {phi.v0 - cplx(0.0, 1.0) * psi.v0, phi.v1 - cplx(0.0, 1.0) * psi.v1}};
                const cplx wgt[4] = {0.25, -0.25, cplx(0.0, 0.25), cplx(0.0, -0.25)};
                for (int a = 0; a < 4; ++a) {
                    const double w2 = states[a].norm_sq();
                    if (w2 < 1e-28) continue;
                    Vec2 x{states[a].v0 / std::sqrt(w2), states[a].v1 / std::sqrt(w2)};
                    const Philox4x32 aux_rng(cfg.seed, restart_stream(tj, r, static_cast<uint64_t>(a)));
                    size_t rec_i = 0;
                    for (uint64_t s = 0; s <= n_tau; ++s) {
                        if (s % ropt.tau_stride == 0) {
                            gacc[rec_i] += wgt[a] * w2 * expectation(sp_d, x);
                            ++rec_i;
                        }
                        if (s == n_tau) break;
                        const auto u = aux_rng.uniforms(s);
                        step_inplace(x, ctx, u[0], u[1]);
                    }
                }
                sp_acc += expectation(sp_d, psi);
                ++n_restarts;
                const auto u = rng.uniforms(n_eq + r);
                step_inplace(psi, ctx, u[0], u[1]);
            }
        }
        partial_g[chunk] = std::move(gacc);
        partial_sp[chunk] = sp_acc;
        partial_n[chunk] = n_restarts;
    });

    std::vector<cplx> g(n_rec, 0.0);
    cplx sp_mean = 0.0;
    uint64_t n_total = 0;
    for (size_t c = 0; c < plan.n_chunks; ++c) {
        if (partial_g[c].empty()) continue;
        for (size_t k = 0; k < n_rec; ++k) g[k] += partial_g[c][k];
        sp_mean += partial_sp[c];
        n_total += partial_n[c];
    }
    if (n_total == 0) throw NumericError("restart_spectrum: no restarts executed");
    for (auto& v : g) v /= static_cast<double>(n_total);
    sp_mean /= static_cast<double>(n_total);
    const cplx g_inf = sp_mean * std::conj(sp_mean);
    for (auto& v : g) v -= g_inf;

    SpectrumSeries out;
    out.method = "mc-restart";
    out.params = p;
    out.omega = grid.values();
    out.s.resize(out.omega.size());
    const double dtau = dt * static_cast<double>(ropt.tau_stride);
    for (size_t k = 0; k < out.omega.size(); ++k) {
        const double w = out.omega[k];
        const cplx rot = std::exp(cplx(0.0, -w * dtau));
        cplx phase = 1.0, acc = 0.0;
        for (size_t t = 0; t < n_rec; ++t) {
            const double wgt = (t == 0 || t + 1 == n_rec) ? 0.5 : 1.0;
            acc += wgt * phase * g[t];
            phase *= rot;
        }
        out.s[k] = (acc * dtau).real();
    }
    if (ropt.normalize) out.normalize_peak();
    return out;
}

}  // namespace fluor
