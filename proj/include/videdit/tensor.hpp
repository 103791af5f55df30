#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "videdit/rng.hpp"

namespace videdit {

/// 5D video tensor (batch, channels, frames, height, width).
/// Contiguous row-major float32; the canonical value type of the engine,
/// holding both raw videos and diffusion latents.
struct VideoLatent {
    int b = 0, c = 0, f = 0, h = 0, w = 0;
    std::vector<float> data;

    VideoLatent() = default;
    VideoLatent(int b_, int c_, int f_, int h_, int w_);

    static VideoLatent zeros(int b, int c, int f, int h, int w) { return {b, c, f, h, w}; }
    static VideoLatent full(int b, int c, int f, int h, int w, float value);
    static VideoLatent random_normal(int b, int c, int f, int h, int w, SeededRng& rng);

    std::size_t size() const { return data.size(); }

    std::size_t index(int bi, int ci, int fi, int hi, int wi) const {
        return (((static_cast<std::size_t>(bi) * c + ci) * f + fi) * h + hi) * w + wi;
    }
    float& at(int bi, int ci, int fi, int hi, int wi) { return data[index(bi, ci, fi, hi, wi)]; }
    float at(int bi, int ci, int fi, int hi, int wi) const { return data[index(bi, ci, fi, hi, wi)]; }

    bool same_shape(const VideoLatent& o) const {
        return b == o.b && c == o.c && f == o.f && h == o.h && w == o.w;
    }
    bool all_finite() const;
    std::string shape_str() const;
};

/// 4D view (items = b*f, channels, height, width) used to run per-frame
/// layers on a video tensor. Realized as a stride-aware copy.
struct FrameBatch {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> data;

    FrameBatch() = default;
    FrameBatch(int n_, int c_, int h_, int w_);

    std::size_t index(int ni, int ci, int hi, int wi) const {
        return ((static_cast<std::size_t>(ni) * c + ci) * h + hi) * w + wi;
    }
    float& at(int ni, int ci, int hi, int wi) { return data[index(ni, ci, hi, wi)]; }
    float at(int ni, int ci, int hi, int wi) const { return data[index(ni, ci, hi, wi)]; }
};

/// 3D view (items = b*h*w, frames, channels): one token sequence per spatial
/// location, consumed by temporal attention.
struct TokenSeq {
    int n = 0, f = 0, c = 0;
    std::vector<float> data;

    TokenSeq() = default;
    TokenSeq(int n_, int f_, int c_);

    std::size_t index(int ni, int fi, int ci) const {
        return (static_cast<std::size_t>(ni) * f + fi) * c + ci;
    }
    float& at(int ni, int fi, int ci) { return data[index(ni, fi, ci)]; }
    float at(int ni, int fi, int ci) const { return data[index(ni, fi, ci)]; }
};

/// (b,c,f,h,w) -> (b*f, c, h, w); element (bi,ci,fi,hi,wi) lands at
/// (bi*f + fi, ci, hi, wi). Exact inverse of inverse_spatial.
FrameBatch reshape_spatial(const VideoLatent& v);
VideoLatent inverse_spatial(const FrameBatch& fb, int b, int f);

/// (b,c,f,h,w) -> (b*h*w, f, c); each spatial location becomes a sequence of
/// f tokens of width c. Exact inverse of inverse_temporal.
TokenSeq reshape_temporal(const VideoLatent& v);
VideoLatent inverse_temporal(const TokenSeq& ts, int b, int h, int w);

/// Channel concatenation [z ; cond]. Both tensors must agree on (b, f, h, w).
/// A null conditioning video is conventionally passed as an all-zero tensor.
VideoLatent concat_condition(const VideoLatent& z, const VideoLatent& cond);

/// Frame-axis concatenation [a ; b]; shapes must agree on (b, c, h, w).
VideoLatent concat_frames(const VideoLatent& a, const VideoLatent& b);

/// Copy of frames [f0, f0+count) of v.
VideoLatent slice_frames(const VideoLatent& v, int f0, int count);

/// Throws std::invalid_argument if shapes differ.
void check_same_shape(const VideoLatent& a, const VideoLatent& b, const char* what);

}  // namespace videdit
