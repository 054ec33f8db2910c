#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fluor/lindblad.hpp"
#include "fluor/series_io.hpp"
#include "fluor/trajectory.hpp"
#include "helpers.hpp"

using namespace fluor;
using Catch::Approx;

TEST_CASE("step jump probabilities") {
    const AtomParams p{1.0, 0.0, 0.05, 0.0};
    const double dt = 1e-3;
    const auto [p_em, p_noise] = jump_probabilities(state_excited(p), p, dt);
    CHECK(p_em == Approx(p.gamma * dt).epsilon(1e-12));  // <S+S-> = 1 on |e>
    CHECK(p_noise == 0.0);

    const AtomParams pn{1.0, 0.7, 0.05, 6.0};
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto s = testutil::random_pure_state(rng);
        CHECK(jump_probabilities(s, pn, dt).second == Approx(pn.noise * dt).epsilon(1e-12));
    }
}

TEST_CASE("step channel selection by cumulative probability") {
    const AtomParams p{1.0, 0.0, 0.05, 6.0};
    const double dt = 1e-3;
    const PureState s = state_excited(p);
    const auto [p_em, p_noise] = jump_probabilities(s, p, dt);

    auto [s1, j1] = step(s, p, dt, 0.5 * p_em, 0.0);
    REQUIRE(j1.has_value());
    CHECK(*j1 == JumpChannel::emission);

    auto [s2, j2] = step(s, p, dt, p_em + 0.5 * p_noise, 0.0);
    REQUIRE(j2.has_value());
    CHECK(*j2 == JumpChannel::noise);

    auto [s3, j3] = step(s, p, dt, p_em + p_noise + 1e-6, 0.0);
    CHECK(!j3.has_value());
    CHECK(s3.norm() == Approx(1.0).margin(1e-12));
}

TEST_CASE("noise jump sends dressed state 1 to dressed state 2") {
    const AtomParams p{1.0, 0.0, 0.05, 6.0};
    const double dt = 1e-3;
    const auto [p_em, p_noise] = jump_probabilities(state_dressed1(), p, dt);
    auto [out, j] = step(state_dressed1(), p, dt, p_em + 0.5 * p_noise, 0.0);
    REQUIRE(j.has_value());
    REQUIRE(*j == JumpChannel::noise);
    CHECK(std::abs(out.amp2) == Approx(1.0).margin(1e-12));
    CHECK(std::abs(out.amp1) < 1e-12);
}

TEST_CASE("emission jump on a nearly dark state underflows with a diagnostic") {
    const AtomParams p{1.0, 0.0, 0.05, 0.0};
    // ~ |g> with a 1e-16 excited admixture: the emission jump drains the norm
    const auto tr = dressed_basis(p);
    const Vec2 bare{1e-16, 1.0};
    const Vec2 d = apply(tr.u, bare);
    PureState s{d.v0, d.v1};
    s = s.normalized();
    CHECK_THROWS_AS(step(s, p, 1e-3, 0.0, 0.0), std::runtime_error);
}

TEST_CASE("undamped trajectory precesses at the rabi frequency") {
    const AtomParams p{1.0, 0.0, 0.0, 0.0};
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.t_max = 10.0;
    cfg.n_traj = 1;
    const TrajectoryRecord rec = run_trajectory(state_excited(p), p, cfg, 0);
    CHECK(rec.jumps.empty());
    const Mat2 sz = spin_z_dressed(p).m;
    for (size_t i = 0; i < rec.times.size(); i += 100) {
        const double expect = 0.5 * std::cos(rec.times[i]);
        CHECK(expectation(sz, rec.states[i].vec()).real() == Approx(expect).margin(1e-3));
    }
    for (const auto& s : rec.states) REQUIRE(s.norm() == Approx(1.0).margin(1e-10));
}

TEST_CASE("trajectories are bit-reproducible") {
    const AtomParams p{1.0, 0.5, 0.05, 2.0};
    SimConfig cfg;
    cfg.t_max = 20.0;
    cfg.n_traj = 1;
    cfg.seed = 99;
    const TrajectoryRecord a = run_trajectory(state_excited(p), p, cfg, 17);
    const TrajectoryRecord b = run_trajectory(state_excited(p), p, cfg, 17);
    REQUIRE(a.states.size() == b.states.size());
    for (size_t i = 0; i < a.states.size(); ++i) {
        REQUIRE(a.states[i].amp1 == b.states[i].amp1);
        REQUIRE(a.states[i].amp2 == b.states[i].amp2);
    }
    REQUIRE(a.jumps.size() == b.jumps.size());
}

TEST_CASE("noise jump counts are poissonian with rate Gamma") {
    const AtomParams p{1.0, 0.0, 0.0, 6.0};
    SimConfig cfg;
    cfg.t_max = 100.0;
    cfg.seed = 4;
    uint64_t total = 0;
    const int n_traj = 10;
    for (int t = 0; t < n_traj; ++t) {
        const TrajectoryRecord rec = run_trajectory(state_excited(p), p, cfg, t);
        for (const auto& j : rec.jumps)
            if (j.channel == JumpChannel::noise) ++total;
    }
    const double expected = p.noise * cfg.t_max * n_traj;  // 6000
    CHECK(std::abs(static_cast<double>(total) - expected) < 4.0 * std::sqrt(expected));
}

TEST_CASE("noise inter-arrival times look exponential") {
    const AtomParams p{1.0, 0.0, 0.05, 1.0};
    SimConfig cfg;
    cfg.dt = 0.002;
    cfg.t_max = 200.0;
    cfg.seed = 12;
    cfg.record_stride = 1000;
    std::vector<double> gaps;
    for (int t = 0; t < 12; ++t) {
        const TrajectoryRecord rec = run_trajectory(state_excited(p), p, cfg, t);
        double prev = -1.0;
        for (const auto& j : rec.jumps) {
            if (j.channel != JumpChannel::noise) continue;
            if (prev >= 0.0) gaps.push_back(j.time - prev);
            prev = j.time;
        }
    }
    REQUIRE(gaps.size() > 2000);
    const double d = testutil::ks_exponential(gaps, p.noise);
    CHECK(d < testutil::ks_critical(0.01, gaps.size()));
}

TEST_CASE("scalar master equation matches the lindblad superoperator") {
    std::mt19937_64 rng(23);
    for (auto [Ga, De] : {std::pair{6.0, 0.0}, {0.2, 3.0}, {3.0, 3.0}, {1.1, -0.8}}) {
        const AtomParams p{1.0, De, 0.05, Ga};
        const LindbladContext ctx(p);
        const DressedScalarSystem scal(p);
        for (int i = 0; i < 30; ++i) {
            const Mat2 rho = testutil::random_density(rng);
            const Mat2 drho = ctx.rhs(rho);
            const auto ds = scal.rhs(scalar_state_of(rho));
            REQUIRE((drho.e00 - drho.e11).real() == Approx(ds.rho_z).margin(1e-12));
            REQUIRE(std::abs(drho.e10 - ds.q) < 1e-12);
        }
    }
}

TEST_CASE("ensemble average solves the master equation") {
    const AtomParams p{1.0, 0.0, 0.05, 0.2};
    SimConfig cfg;
    cfg.t_max = 10.0;
    cfg.n_traj = 2000;
    cfg.seed = 21;
    cfg.record_stride = 50;
    const EnsembleAverage avg = run_ensemble(state_excited(p), p, cfg);
    CHECK(avg.n_aborted == 0);

    // reference: scalar master equation from the same initial state
    const DressedScalarSystem sys(p);
    DressedScalarState ref = scalar_state_of(state_excited(p).density().m);
    const double dt = 1e-3;
    size_t k = 0;
    for (size_t i = 0; i < avg.times.size(); ++i) {
        while (k * dt < avg.times[i] - 0.5 * dt) {
            ref = sys.rk4_step(ref, dt);
            ++k;
        }
        // the scalar system evolves the <2|rho|1> coherence; the ensemble
        // records <1|rho|2>, its conjugate
        const cplx ref_q = std::conj(ref.q);
        REQUIRE(std::abs(avg.z_mean[i] - ref.rho_z) < std::max(4.0 * avg.z_err[i], 1e-3));
        REQUIRE(std::abs(avg.q_mean[i].real() - ref_q.real()) < std::max(4.0 * avg.q_re_err[i], 1e-3));
        REQUIRE(std::abs(avg.q_mean[i].imag() - ref_q.imag()) < std::max(4.0 * avg.q_im_err[i], 1e-3));
    }

    // unit trace by construction, density validates
    for (size_t i = 0; i < avg.times.size(); i += 8) {
        const DensityMatrix rho = avg.rho_at(i);
        CHECK(rho.trace_real() == Approx(1.0).margin(1e-12));
        CHECK_NOTHROW(rho.validate(1e-10, 0.05));
    }
}

TEST_CASE("detuned ensemble average solves the coupled master equation") {
    // off resonance the population difference and coherence equations couple
    const AtomParams p{1.0, 3.0, 0.05, 3.0};
    SimConfig cfg;
    cfg.t_max = 4.0;
    cfg.n_traj = 3000;
    cfg.seed = 13;
    cfg.dt = 0.005 / p.max_rate();
    cfg.record_stride = 40;
    const EnsembleAverage avg = run_ensemble(state_excited(p), p, cfg);

    const DressedScalarSystem sys(p);
    DressedScalarState ref = scalar_state_of(state_excited(p).density().m);
    const double dt_ref = cfg.dt / 2.0;
    size_t done = 0;
    for (size_t i = 1; i < avg.times.size(); ++i) {
        const size_t target = static_cast<size_t>(avg.times[i] / dt_ref + 0.5);
        while (done < target) {
            ref = sys.rk4_step(ref, dt_ref);
            ++done;
        }
        const cplx ref_q = std::conj(ref.q);
        REQUIRE(std::abs(avg.z_mean[i] - ref.rho_z) < std::max(4.0 * avg.z_err[i], 1e-3));
        REQUIRE(std::abs(avg.q_mean[i].real() - ref_q.real()) < std::max(4.0 * avg.q_re_err[i], 1e-3));
        REQUIRE(std::abs(avg.q_mean[i].imag() - ref_q.imag()) < std::max(4.0 * avg.q_im_err[i], 1e-3));
    }
}

TEST_CASE("strong noise equalizes the dressed populations") {
    const AtomParams p{1.0, 0.0, 0.05, 6.0};
    SimConfig cfg;
    cfg.t_max = 6.0;
    cfg.n_traj = 4000;
    cfg.seed = 31;
    cfg.record_stride = 200;
    const EnsembleAverage avg = run_ensemble(state_excited(p), p, cfg);
    const size_t last = avg.times.size() - 1;
    CHECK(std::abs(avg.z_mean[last]) < 4.0 * avg.z_err[last] + 1e-3);
}

TEST_CASE("ensemble at t=0 reproduces the initial density matrix") {
    const AtomParams p{1.0, 0.0, 0.05, 1.0};
    SimConfig cfg;
    cfg.t_max = 0.1;
    cfg.n_traj = 500;
    cfg.seed = 8;
    SECTION("pure initial state is exact") {
        const PureState init{{0.6, 0.0}, {0.0, 0.8}};
        const EnsembleAverage avg = run_ensemble(init, p, cfg);
        const Mat2 expect = outer(init.vec());
        CHECK((avg.rho_at(0).m - expect).max_abs() < 1e-12);
    }
    SECTION("mixed initial state within sampling error") {
        const DensityMatrix mixed{{0.5, 0.0, 0.0, 0.5}, Basis::dressed};
        const EnsembleAverage avg = run_ensemble(mixed, p, cfg);
        CHECK(std::abs(avg.z_mean[0]) < 4.0 / std::sqrt(static_cast<double>(cfg.n_traj)));
        CHECK(std::abs(avg.q_mean[0]) < 1e-12);  // eigenstates carry no coherence
    }
}

TEST_CASE("ensemble reduction is identical for any worker count") {
    const AtomParams p{1.0, 0.0, 0.05, 1.1};
    SimConfig cfg;
    cfg.t_max = 5.0;
    cfg.n_traj = 600;
    cfg.seed = 77;
    cfg.record_stride = 20;
    const EnsembleAverage a = run_ensemble(state_excited(p), p, cfg, 1);
    const EnsembleAverage b = run_ensemble(state_excited(p), p, cfg, 3);
    const EnsembleAverage c = run_ensemble(state_excited(p), p, cfg, 7);
    for (size_t i = 0; i < a.times.size(); ++i) {
        REQUIRE(a.z_mean[i] == b.z_mean[i]);
        REQUIRE(a.q_mean[i] == b.q_mean[i]);
        REQUIRE(a.z_mean[i] == c.z_mean[i]);
        REQUIRE(a.q_mean[i] == c.q_mean[i]);
    }
}

TEST_CASE("simulation config is validated") {
    const AtomParams p{1.0, 0.0, 0.05, 6.0};
    SimConfig cfg;
    cfg.dt = 0.5;
    cfg.t_max = 10.0;
    CHECK_THROWS_AS(cfg.validate(p), std::invalid_argument);  // dt cap
    cfg.allow_large_dt = true;
    CHECK_NOTHROW(cfg.validate(p));
    cfg.allow_large_dt = false;
    cfg.dt = 1e-3;
    cfg.n_traj = 0;
    CHECK_THROWS_AS(cfg.validate(p), std::invalid_argument);
    cfg.n_traj = 1;
    cfg.t_max = 1e-9;
    CHECK_THROWS_AS(cfg.validate(p), std::invalid_argument);
}

TEST_CASE("trajectory dump round-trips through csv") {
    const AtomParams p{1.0, 0.0, 0.05, 2.0};
    SimConfig cfg;
    cfg.t_max = 5.0;
    cfg.seed = 14;
    cfg.record_stride = 10;
    const TrajectoryRecord rec = run_trajectory(state_excited(p), p, cfg, 3);
    const std::string csv = trajectory_to_csv(rec);
    const TrajectoryRecord back = trajectory_from_csv(csv);
    REQUIRE(back.states.size() == rec.states.size());
    for (size_t i = 0; i < rec.states.size(); ++i) {
        REQUIRE(back.states[i].amp1 == rec.states[i].amp1);
        REQUIRE(back.states[i].amp2 == rec.states[i].amp2);
    }
    CHECK(back.params.noise == rec.params.noise);
    CHECK(!back.jumps.empty());
}
