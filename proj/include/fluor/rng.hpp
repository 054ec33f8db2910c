#pragma once

#include <array>
#include <cstdint>

// Counter-based random numbers (Philox 4x32-10). Each (seed, stream, step)
// triple maps to an independent block of four 32-bit words, so trajectories
// can run on any number of workers in any order and still draw identical
// numbers. Streams are structured, not hashed:
//   main trajectory i        -> stream = i
//   restart auxiliaries      -> stream = RESTART_BIT | traj<<24 | restart<<4 | aux
//   initial-state sampling   -> main stream, step = INIT_STEP

namespace fluor {

class Philox4x32 {
  public:
    using Block = std::array<uint32_t, 4>;

    Philox4x32(uint64_t seed, uint64_t stream) : key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
                                                 stream_(stream) {}

    Block block(uint64_t step) const {
        uint32_t c0 = static_cast<uint32_t>(step);
        uint32_t c1 = static_cast<uint32_t>(step >> 32);
        uint32_t c2 = static_cast<uint32_t>(stream_);
        uint32_t c3 = static_cast<uint32_t>(stream_ >> 32);
        uint32_t k0 = key_[0], k1 = key_[1];
        for (int round = 0; round < 10; ++round) {
            const uint64_t p0 = static_cast<uint64_t>(kMul0) * c0;
            const uint64_t p1 = static_cast<uint64_t>(kMul1) * c2;
            const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
            const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
            const uint32_t n0 = hi1 ^ c1 ^ k0;
            const uint32_t n1 = lo1;
            const uint32_t n2 = hi0 ^ c3 ^ k1;
            const uint32_t n3 = lo0;
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += kWeyl0; k1 += kWeyl1;
        }
        return {c0, c1, c2, c3};
    }

    // Two uniforms in [0, 1) from one block; exactly the per-step budget.
    std::array<double, 2> uniforms(uint64_t step) const {
        const Block b = block(step);
        const uint64_t x = (static_cast<uint64_t>(b[0]) << 32) | b[1];
        const uint64_t y = (static_cast<uint64_t>(b[2]) << 32) | b[3];
        return {static_cast<double>(x >> 11) * 0x1.0p-53, static_cast<double>(y >> 11) * 0x1.0p-53};
    }

    double uniform(uint64_t step, int which = 0) const { return uniforms(step)[which & 1]; }

    static constexpr uint64_t kRestartBit = 1ull << 63;
    static constexpr uint64_t kInitStep = ~0ull;  // far away from step indices

  private:
    static constexpr uint32_t kMul0 = 0xD2511F53u;
    static constexpr uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr uint32_t kWeyl1 = 0xBB67AE85u;

    std::array<uint32_t, 2> key_;
    uint64_t stream_;
};

inline uint64_t restart_stream(uint64_t traj, uint64_t restart_index, uint64_t aux) {
    return Philox4x32::kRestartBit | (traj << 24) | ((restart_index & 0xFFFFFu) << 4) | (aux & 0xFu);
}

}  // namespace fluor
