#include "videdit/rng.hpp"

#include <cmath>

namespace videdit {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

std::array<std::uint32_t, 4> SeededRng::block() {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(counter_),
        static_cast<std::uint32_t>(counter_ >> 32),
        static_cast<std::uint32_t>(stream_),
        static_cast<std::uint32_t>(stream_ >> 32),
    };
    std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(seed_),
        static_cast<std::uint32_t>(seed_ >> 32),
    };
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        philox_round(ctr, key);
    }
    ++counter_;
    return ctr;
}

void SeededRng::refill() {
    buffer_ = block();
    buffer_pos_ = 0;
}

std::uint32_t SeededRng::next_u32() {
    if (buffer_pos_ >= 4) refill();
    return buffer_[buffer_pos_++];
}

std::uint64_t SeededRng::next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
}

double SeededRng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

float SeededRng::uniform_float() {
    return static_cast<float>(next_u32() >> 8) * 0x1.0p-24f;
}

int SeededRng::uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
}

double SeededRng::normal() {
    // u1 in (0, 1] so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

void SeededRng::fill_normal(std::vector<float>& out) {
    for (float& x : out) x = normal_float();
}

std::uint64_t SeededRng::stream_of(const char* label) {
    std::uint64_t h = 1469598103934665603ull;
    for (const char* p = label; *p; ++p) {
        h ^= static_cast<unsigned char>(*p);
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace videdit
