#pragma once

#include <cstdint>

namespace tgs {

// PCG32 (O'Neill). Used for every stochastic decision in the pipeline so that
// runs are reproducible bit-for-bit from a single seed, independent of the
// platform's <random> distributions.
class Pcg32 {
public:
    explicit Pcg32(uint64_t seed = 0x853c49e6748fea9bULL, uint64_t stream = 1) {
        state_ = 0;
        inc_ = (stream << 1u) | 1u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    uint32_t next_u32() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    // Uniform double in [0, 1) with 32 bits of entropy.
    double uniform() { return next_u32() * 0x1p-32; }

    double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Raw state accessors for checkpointing.
    uint64_t state() const { return state_; }
    uint64_t inc() const { return inc_; }
    static Pcg32 from_raw(uint64_t state, uint64_t inc) {
        Pcg32 r;
        r.state_ = state;
        r.inc_ = inc;
        return r;
    }

private:
    uint64_t state_;
    uint64_t inc_;
};

} // namespace tgs
