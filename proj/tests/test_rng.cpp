#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "fluor/rng.hpp"

using namespace fluor;

TEST_CASE("counter rng is deterministic and stream separated") {
    const Philox4x32 a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    CHECK(a.block(0) == b.block(0));
    CHECK(a.block(123456789) == b.block(123456789));
    CHECK(a.block(0) != c.block(0));
    CHECK(a.block(0) != d.block(0));
    CHECK(a.block(0) != a.block(1));
}

TEST_CASE("uniforms are in [0,1) with sane moments") {
    const Philox4x32 rng(1234, 0);
    double sum = 0.0, sum2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const auto u = rng.uniforms(static_cast<uint64_t>(i));
        for (double v : u) {
            REQUIRE(v >= 0.0);
            REQUIRE(v < 1.0);
            sum += v;
            sum2 += v * v;
        }
    }
    const double mean = sum / (2.0 * n);
    const double var = sum2 / (2.0 * n) - mean * mean;
    CHECK(mean == Catch::Approx(0.5).margin(0.002));
    CHECK(var == Catch::Approx(1.0 / 12.0).margin(0.002));
}

TEST_CASE("no short-range serial correlation") {
    const Philox4x32 rng(99, 3);
    double c01 = 0.0;
    const int n = 100000;
    double prev = rng.uniforms(0)[0];
    for (int i = 1; i < n; ++i) {
        const double cur = rng.uniforms(static_cast<uint64_t>(i))[0];
        c01 += (prev - 0.5) * (cur - 0.5);
        prev = cur;
    }
    CHECK(std::abs(c01 / n) < 4.0 / std::sqrt(static_cast<double>(n)) / 12.0);
}

TEST_CASE("restart streams do not collide with main streams") {
    std::set<uint64_t> seen;
    for (uint64_t traj = 0; traj < 100; ++traj) seen.insert(traj);
    for (uint64_t traj = 0; traj < 10; ++traj)
        for (uint64_t r = 0; r < 10; ++r)
            for (uint64_t aux = 0; aux < 4; ++aux) {
                const uint64_t s = restart_stream(traj, r, aux);
                CHECK(seen.insert(s).second);
            }
}
