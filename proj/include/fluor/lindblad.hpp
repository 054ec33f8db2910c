#pragma once

#include <cmath>
#include <vector>

#include "fluor/atom.hpp"

// Master-equation evolution in the dressed basis:
//   drho/dt = -i[<H>, rho] + gamma D[S-] rho + 4 Gamma D[Sz] rho,
// with D[C] rho = C rho C^dag - (C^dag C rho + rho C^dag C)/2. Since
// (2 Sz)^2 = 1 the noise dissipator simplifies to 4 Gamma Sz rho Sz - Gamma rho.

namespace fluor {

class LindbladContext {
  public:
    explicit LindbladContext(const AtomParams& p) : params_(p) {
        const auto tr = dressed_basis(p);
        h_ = mean_hamiltonian(p).m;
        sm_ = tr.to_dressed(spin_minus_bare().m);
        sp_ = sm_.adjoint();
        sz_ = tr.to_dressed(spin_z_bare().m);
        pe_ = sp_ * sm_;
    }

    const AtomParams& params() const { return params_; }
    const Mat2& s_minus() const { return sm_; }
    const Mat2& s_plus() const { return sp_; }
    const Mat2& s_z() const { return sz_; }

    Mat2 rhs(const Mat2& rho) const {
        const double ga = params_.gamma, Ga = params_.noise;
        Mat2 out = cplx(0.0, -1.0) * (h_ * rho - rho * h_);
        out += ga * (sm_ * rho * sp_) - (0.5 * ga) * (pe_ * rho + rho * pe_);
        out += (4.0 * Ga) * (sz_ * rho * sz_) - Ga * rho;
        return out;
    }

    Mat2 rk4_step(const Mat2& rho, double dt) const {
        const Mat2 k1 = rhs(rho);
        const Mat2 k2 = rhs(rho + (0.5 * dt) * k1);
        const Mat2 k3 = rhs(rho + (0.5 * dt) * k2);
        const Mat2 k4 = rhs(rho + dt * k3);
        return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

  private:
    AtomParams params_;
    Mat2 h_, sm_, sp_, sz_, pe_;
};

// Evolve a dressed-basis density matrix, sampling every `stride` steps
// (t = 0 included).
inline std::vector<Mat2> lindblad_evolve(const LindbladContext& ctx, const Mat2& rho0, double dt,
                                         size_t n_steps, size_t stride = 1) {
    std::vector<Mat2> out;
    out.reserve(n_steps / stride + 2);
    Mat2 rho = rho0;
    for (size_t i = 0; i <= n_steps; ++i) {
        if (i % stride == 0) out.push_back(rho);
        if (i < n_steps) rho = ctx.rk4_step(rho, dt);
    }
    return out;
}

// Scalar form of the same equation in the population difference
// rho_z = rho_11 - rho_22 and the coherence q = <2|rho|1>:
//   drho_z/dt = -(2 Gamma' W^2 + gamma) rho_z + 2 Gamma' D W (q + q*) + gamma D r^-1 ...
// with W = Omega/sqrt(Omega^2+Delta^2) etc. Kept as an independently coded
// route for cross-checking ensemble averages against direct integration.
struct DressedScalarState {
    double rho_z;
    cplx q;  // <2|rho|1>
};

class DressedScalarSystem {
  public:
    explicit DressedScalarSystem(const AtomParams& p) {
        const double r2 = p.rabi * p.rabi + p.detuning * p.detuning;
        const double r = std::sqrt(r2);
        const double gp = p.gamma_prime();
        w2_ = p.rabi * p.rabi / r2;
        dw_ = p.detuning * p.rabi / r2;
        cz_ = -(2.0 * gp * w2_ + p.gamma);
        czq_ = 2.0 * gp * dw_;
        bz_ = p.gamma * p.detuning / r;
        cqz_ = gp * dw_;
        bq_ = 0.5 * p.gamma * p.rabi / r;
        cq_ = -(2.0 * gp * p.detuning * p.detuning / r2 + p.gamma) - cplx(0.0, r);
        cqq_ = -gp * w2_;
    }

    DressedScalarState rhs(const DressedScalarState& s) const {
        const cplx qc = std::conj(s.q);
        return {cz_ * s.rho_z + czq_ * (s.q + qc).real() + bz_,
                cqz_ * s.rho_z + bq_ + cq_ * s.q + cqq_ * (s.q - qc)};
    }

    DressedScalarState rk4_step(const DressedScalarState& s, double dt) const {
        auto add = [](const DressedScalarState& a, double f, const DressedScalarState& b) {
            return DressedScalarState{a.rho_z + f * b.rho_z, a.q + f * b.q};
        };
        const auto k1 = rhs(s);
        const auto k2 = rhs(add(s, 0.5 * dt, k1));
        const auto k3 = rhs(add(s, 0.5 * dt, k2));
        const auto k4 = rhs(add(s, dt, k3));
        DressedScalarState out = s;
        out = add(out, dt / 6.0, k1);
        out = add(out, dt / 3.0, k2);
        out = add(out, dt / 3.0, k3);
        out = add(out, dt / 6.0, k4);
        return out;
    }

  private:
    double w2_, dw_, cz_, czq_, bz_, cqz_;
    cplx bq_, cq_;
    double cqq_;
};

inline DressedScalarState scalar_state_of(const Mat2& rho_dressed) {
    return {(rho_dressed.e00 - rho_dressed.e11).real(), rho_dressed.e10};
}

}  // namespace fluor
