#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace videdit {

/// Counter-based deterministic random generator (Philox 4x32, 10 rounds).
///
/// A generator is identified by (seed, stream). Streams with distinct indices
/// produce non-overlapping sequences, so parallel workers can each own a
/// stream derived from the same master seed. Draw order is part of the
/// contract: uniforms consume one 32-bit word, normals consume two.
///
/// Floating-point draws are computed in double precision and rely on the
/// platform's IEEE-754 double `log`/`cos`; on mainstream toolchains this
/// yields identical streams for identical seeds.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0);

    /// Next raw 32-bit word of the Philox stream.
    std::uint32_t next_u32();
    std::uint64_t next_u64();

    /// Uniform double in [0, 1), 53-bit resolution (consumes two words).
    double uniform();
    /// Uniform float in [0, 1), 24-bit resolution (consumes one word).
    float uniform_float();
    /// Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi);

    /// Standard normal via Box-Muller (cosine branch) on double uniforms.
    double normal();
    float normal_float() { return static_cast<float>(normal()); }

    void fill_normal(std::vector<float>& out);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    /// Stable 64-bit stream index for a named purpose (FNV-1a of the label).
    static std::uint64_t stream_of(const char* label);

private:
    std::array<std::uint32_t, 4> block();
    void refill();

    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t counter_ = 0;               // low 64 bits of the 128-bit counter
    std::array<std::uint32_t, 4> buffer_{};
    int buffer_pos_ = 4;                      // 4 == empty
};

}  // namespace videdit
