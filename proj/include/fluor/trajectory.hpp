#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluor/atom.hpp"
#include "fluor/errors.hpp"
#include "fluor/rng.hpp"
#include "fluor/threads.hpp"

// Monte Carlo wavefunction engine. A trajectory evolves in the dressed basis
// under the non-Hermitian drift, interrupted by spontaneous-emission and
// noise jumps. Per step, with two uniform draws (the second is consumed even
// when unused so the draw count per step is fixed):
//   dp_em    = gamma <S+S-> dt,   dp_noise = Gamma dt   (exactly state-free)
//   u1 <  dp_em             -> apply sqrt(gamma) S^-, renormalize
//   u1 < dp_em + dp_noise   -> apply 2 sqrt(Gamma) S^z, renormalize
//   otherwise               -> second-order no-jump propagator
//                              (1 - i H_eff dt - (H_eff dt)^2/2), renormalize.

namespace fluor {

enum class JumpChannel : uint8_t { emission = 1, noise = 2 };

struct SimConfig {
    double dt = 0.0;          // 0: auto 0.01 / max rate
    double t_max = 0.0;
    uint64_t n_traj = 50000;
    uint64_t seed = 1;
    uint64_t record_stride = 1;
    bool allow_large_dt = false;  // lifts the dt cap below

    double resolved_dt(const AtomParams& p) const {
        return dt > 0.0 ? dt : 0.01 / std::max(1.0, p.max_rate());
    }

    void validate(const AtomParams& p) const {
        const double d = resolved_dt(p);
        if (!(d > 0.0)) throw std::invalid_argument("SimConfig: dt must be > 0");
        if (!(t_max >= d)) throw std::invalid_argument("SimConfig: t_max must be >= dt");
        if (n_traj < 1) throw std::invalid_argument("SimConfig: n_traj must be >= 1");
        if (record_stride < 1) throw std::invalid_argument("SimConfig: record_stride must be >= 1");
        if (!allow_large_dt && d * p.max_rate() > 0.05 + 1e-12)
            throw std::invalid_argument("SimConfig: dt * max rate = " + std::to_string(d * p.max_rate()) +
                                        " exceeds the 0.05 cap (pass allow_large_dt to override)");
    }

    uint64_t n_steps(const AtomParams& p) const {
        const double d = resolved_dt(p);
        return static_cast<uint64_t>(t_max / d + 0.5);
    }
};

struct TrajectoryError : std::runtime_error {
    uint64_t traj_index;
    uint64_t step;
    TrajectoryError(uint64_t traj, uint64_t st, const std::string& what)
        : std::runtime_error("trajectory " + std::to_string(traj) + " step " + std::to_string(st) + ": " + what),
          traj_index(traj), step(st) {}
};

// Everything the inner loop needs, precomputed once per (params, dt).
struct StepContext {
    Mat2 propagator;   // second-order expansion of exp(-i H_eff dt)
    Mat2 c_emission;   // sqrt(gamma) S^- (dressed)
    Mat2 c_noise;      // 2 sqrt(Gamma) S^z (dressed)
    Mat2 excited;      // S^+ S^- (dressed)
    double gamma_dt;
    double p_noise;    // Gamma dt, state independent
    double dt;

    StepContext(const AtomParams& p, double step_dt) : dt(step_dt) {
        const Mat2 heff = effective_hamiltonian(p).m;
        const cplx mi(0.0, -1.0);
        const Mat2 hdt = mi * (step_dt * heff);
        propagator = Mat2::identity() + hdt + 0.5 * (hdt * hdt);
        const auto jumps = jump_operators(p);
        c_emission = jumps.emission.m;
        c_noise = jumps.noise.m;
        excited = excited_projector_dressed(p).m;
        gamma_dt = p.gamma * step_dt;
        p_noise = p.noise * step_dt;
    }
};

// One step; u1 selects the channel by cumulative probability, u2 is reserved.
inline std::optional<JumpChannel> step_inplace(Vec2& psi, const StepContext& ctx, double u1, double /*u2*/) {
    const double pe = expectation(ctx.excited, psi).real();
    const double p_em = ctx.gamma_dt * pe;
    std::optional<JumpChannel> jumped;
    if (u1 < p_em) {
        psi = apply(ctx.c_emission, psi);
        jumped = JumpChannel::emission;
    } else if (u1 < p_em + ctx.p_noise) {
        psi = apply(ctx.c_noise, psi);
        jumped = JumpChannel::noise;
    } else {
        psi = apply(ctx.propagator, psi);
    }
    const double n2 = psi.norm_sq();
    if (n2 < 1e-30) throw std::runtime_error("state norm underflow");
    const double inv = 1.0 / std::sqrt(n2);
    psi.v0 *= inv;
    psi.v1 *= inv;
    return jumped;
}

// Single-step convenience form on a PureState.
inline std::pair<PureState, std::optional<JumpChannel>> step(const PureState& state, const AtomParams& p,
                                                             double dt, double u1, double u2) {
    StepContext ctx(p, dt);
    Vec2 psi = state.vec();
    auto j = step_inplace(psi, ctx, u1, u2);
    return {PureState{psi.v0, psi.v1}, j};
}

// First-order jump probabilities for a state (diagnostic / tests).
inline std::pair<double, double> jump_probabilities(const PureState& state, const AtomParams& p, double dt) {
    StepContext ctx(p, dt);
    return {ctx.gamma_dt * expectation(ctx.excited, state.vec()).real(), ctx.p_noise};
}

struct JumpEvent {
    double time;
    JumpChannel channel;
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<PureState> states;
    std::vector<JumpEvent> jumps;
    AtomParams params;
    double dt = 0.0;
    uint64_t seed = 0, traj_index = 0;
};

// Deterministic function of (seed, traj_index): the random stream is
// counter-based, so records are identical under any execution schedule.
inline TrajectoryRecord run_trajectory(const PureState& initial, const AtomParams& p, const SimConfig& cfg,
                                       uint64_t traj_index) {
    p.validate();
    cfg.validate(p);
    const double dt = cfg.resolved_dt(p);
    const uint64_t n_steps = cfg.n_steps(p);
    const StepContext ctx(p, dt);
    const Philox4x32 rng(cfg.seed, traj_index);

    TrajectoryRecord rec;
    rec.params = p;
    rec.dt = dt;
    rec.seed = cfg.seed;
    rec.traj_index = traj_index;
    rec.times.reserve(n_steps / cfg.record_stride + 2);
    rec.states.reserve(n_steps / cfg.record_stride + 2);

    Vec2 psi = initial.normalized().vec();
    for (uint64_t i = 0; i <= n_steps; ++i) {
        if (i % cfg.record_stride == 0) {
            rec.times.push_back(i * dt);
            rec.states.push_back({psi.v0, psi.v1});
        }
        if (i == n_steps) break;
        const auto u = rng.uniforms(i);
        std::optional<JumpChannel> j;
        try {
            j = step_inplace(psi, ctx, u[0], u[1]);
        } catch (const std::runtime_error& e) {
            throw TrajectoryError(traj_index, i, e.what());
        }
        if (j) rec.jumps.push_back({(i + 1) * dt, *j});
    }
    return rec;
}

// Per-sample ensemble moments in the dressed basis. rho is recoverable from
// (z, q) with unit trace: rho11 = (1+z)/2, rho22 = (1-z)/2, rho12 = q.
struct EnsembleAverage {
    std::vector<double> times;
    std::vector<double> z_mean;      // <rho11 - rho22>
    std::vector<cplx> q_mean;        // <rho12> = <a1 conj(a2)>
    std::vector<double> z_err;       // standard errors (between-trajectory)
    std::vector<double> q_re_err, q_im_err;
    uint64_t n_traj = 0;
    uint64_t n_aborted = 0;

    DensityMatrix rho_at(size_t i) const {
        return {{cplx(0.5 * (1.0 + z_mean[i])), q_mean[i], std::conj(q_mean[i]), cplx(0.5 * (1.0 - z_mean[i]))},
                Basis::dressed};
    }
};

namespace detail {

struct MomentAccum {
    std::vector<double> z, z2, qr, qr2, qi, qi2;
    uint64_t count = 0, aborted = 0;

    explicit MomentAccum(size_t n)
        : z(n, 0.0), z2(n, 0.0), qr(n, 0.0), qr2(n, 0.0), qi(n, 0.0), qi2(n, 0.0) {}

    void merge(const MomentAccum& o) {
        for (size_t i = 0; i < z.size(); ++i) {
            z[i] += o.z[i]; z2[i] += o.z2[i];
            qr[i] += o.qr[i]; qr2[i] += o.qr2[i];
            qi[i] += o.qi[i]; qi2[i] += o.qi2[i];
        }
        count += o.count;
        aborted += o.aborted;
    }
};

}  // namespace detail

namespace detail {

// eigenvector of a Hermitian Mat2 for eigenvalue lam
inline Vec2 hermitian_eigvec(const Mat2& m, double lam) {
    const cplx a = m.e00 - lam, b = m.e01, c = m.e10, d = m.e11 - lam;
    Vec2 v;
    if (std::abs(a) + std::abs(b) >= std::abs(c) + std::abs(d)) v = {-b, a};
    else v = {-d, c};
    const double n = v.norm();
    if (n < 1e-300) return {1.0, 0.0};
    return {v.v0 / n, v.v1 / n};
}

}  // namespace detail

// Dominant eigenstate of a density matrix (the state itself when pure).
inline PureState dominant_eigenstate(const DensityMatrix& rho) {
    const auto ev = rho.m.hermitian_eigenvalues();
    const Vec2 v = detail::hermitian_eigvec(rho.m, ev[1]);
    return {v.v0, v.v1};
}

// Sample an initial pure state for trajectory `traj` from a density matrix:
// eigendecompose and pick an eigenstate with eigenvalue probability.
inline PureState sample_initial(const DensityMatrix& rho, uint64_t seed, uint64_t traj) {
    if (rho.basis != Basis::dressed) throw std::invalid_argument("sample_initial: expected dressed basis");
    const Mat2& m = rho.m;
    const auto ev = m.hermitian_eigenvalues();
    if (ev[1] - ev[0] < 1e-14) {
        // maximally mixed: pick |1> or |2>
        const double u = Philox4x32(seed, traj).uniform(Philox4x32::kInitStep);
        return u < 0.5 ? state_dressed1() : state_dressed2();
    }
    const double p_hi = std::min(1.0, std::max(0.0, ev[1] / (ev[0] + ev[1])));
    const double u = Philox4x32(seed, traj).uniform(Philox4x32::kInitStep);
    const Vec2 v = detail::hermitian_eigvec(m, u < p_hi ? ev[1] : ev[0]);
    return {v.v0, v.v1};
}

// Ensemble of trajectories from a fixed pure state or a sampled mixed state.
// The reduction is chunked deterministically (see threads.hpp), so results
// are bitwise identical for any worker count. Fails if more than 0.1% of
// trajectories abort.
inline EnsembleAverage run_ensemble(const DensityMatrix& initial, const AtomParams& p, const SimConfig& cfg,
                                    int workers = 0) {
    p.validate();
    cfg.validate(p);
    if (initial.basis != Basis::dressed)
        throw std::invalid_argument("run_ensemble: initial state must be given in the dressed basis");
    initial.normalized().validate(1e-9, 1e-9);
    const double dt = cfg.resolved_dt(p);
    const uint64_t n_steps = cfg.n_steps(p);
    const size_t n_samples = static_cast<size_t>(n_steps / cfg.record_stride) + 1;
    const StepContext ctx(p, dt);

    const Mat2 rho0 = initial.normalized().m;
    const bool pure = rho0.hermitian_eigenvalues()[0] < 1e-13;
    const PureState fixed_init = pure ? dominant_eigenstate({rho0, Basis::dressed}) : PureState{};

    const auto plan = ChunkPlan::make(cfg.n_traj);
    std::vector<detail::MomentAccum> partial(plan.n_chunks, detail::MomentAccum(n_samples));

    parallel_chunks(plan, workers, [&](size_t chunk, size_t lo, size_t hi) {
        detail::MomentAccum acc(n_samples);
        std::vector<double> zt(n_samples);
        std::vector<cplx> qt(n_samples);
        for (size_t t = lo; t < hi; ++t) {
            const PureState init = pure ? fixed_init : sample_initial({rho0, Basis::dressed}, cfg.seed, t);
            Vec2 psi = init.vec();
            const Philox4x32 rng(cfg.seed, t);
            bool ok = true;
            size_t samp = 0;
            for (uint64_t i = 0; i <= n_steps; ++i) {
                if (i % cfg.record_stride == 0) {
                    zt[samp] = std::norm(psi.v0) - std::norm(psi.v1);
                    qt[samp] = psi.v0 * std::conj(psi.v1);
                    ++samp;
                }
                if (i == n_steps) break;
                const auto u = rng.uniforms(i);
                try {
                    step_inplace(psi, ctx, u[0], u[1]);
                } catch (const std::runtime_error&) {
                    ok = false;
                    break;
                }
            }
            if (!ok) {
                ++acc.aborted;
                continue;
            }
            ++acc.count;
            for (size_t s = 0; s < n_samples; ++s) {
                acc.z[s] += zt[s];
                acc.z2[s] += zt[s] * zt[s];
                acc.qr[s] += qt[s].real();
                acc.qr2[s] += qt[s].real() * qt[s].real();
                acc.qi[s] += qt[s].imag();
                acc.qi2[s] += qt[s].imag() * qt[s].imag();
            }
        }
        partial[chunk] = std::move(acc);
    });

    detail::MomentAccum total(n_samples);
    for (const auto& a : partial) total.merge(a);

    if (total.aborted * 1000 > cfg.n_traj)
        throw NumericError("run_ensemble: " + std::to_string(total.aborted) + " of " +
                           std::to_string(cfg.n_traj) + " trajectories aborted (> 0.1%)");
    const double n = static_cast<double>(total.count);

    EnsembleAverage out;
    out.n_traj = total.count;
    out.n_aborted = total.aborted;
    out.times.resize(n_samples);
    out.z_mean.resize(n_samples);
    out.q_mean.resize(n_samples);
    out.z_err.resize(n_samples);
    out.q_re_err.resize(n_samples);
    out.q_im_err.resize(n_samples);
    for (size_t s = 0; s < n_samples; ++s) {
        out.times[s] = static_cast<double>(s) * cfg.record_stride * dt;
        const double zm = total.z[s] / n, qr = total.qr[s] / n, qi = total.qi[s] / n;
        out.z_mean[s] = zm;
        out.q_mean[s] = {qr, qi};
        auto serr = [&](double sum2, double mean) {
            const double var = std::max(0.0, sum2 / n - mean * mean);
            return n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
        };
        out.z_err[s] = serr(total.z2[s], zm);
        out.q_re_err[s] = serr(total.qr2[s], qr);
        out.q_im_err[s] = serr(total.qi2[s], qi);
    }
    return out;
}

inline EnsembleAverage run_ensemble(const PureState& initial, const AtomParams& p, const SimConfig& cfg,
                                    int workers = 0) {
    return run_ensemble(initial.normalized().density(), p, cfg, workers);
}

}  // namespace fluor
