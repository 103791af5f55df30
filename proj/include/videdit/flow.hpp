#pragma once

#include <functional>
#include <vector>

#include "videdit/tensor.hpp"

namespace videdit {

/// Single image (channels, height, width), row-major float32.
struct Image {
    int c = 0, h = 0, w = 0;
    std::vector<float> data;

    Image() = default;
    Image(int c_, int h_, int w_)
        : c(c_), h(h_), w(w_), data(static_cast<std::size_t>(c_) * h_ * w_, 0.0f) {}

    std::size_t index(int ci, int y, int x) const {
        return (static_cast<std::size_t>(ci) * h + y) * w + x;
    }
    float& at(int ci, int y, int x) { return data[index(ci, y, x)]; }
    float at(int ci, int y, int x) const { return data[index(ci, y, x)]; }
};

/// Per-pixel displacement field (h, w, 2), components (dx, dy) in pixels,
/// backward-mapping convention: sampling the target at x + flow(x)
/// reconstructs the source.
struct FlowField {
    int h = 0, w = 0;
    std::vector<float> data;  // (y*w + x)*2 + {0: dx, 1: dy}

    FlowField() = default;
    FlowField(int h_, int w_) : h(h_), w(w_), data(static_cast<std::size_t>(h_) * w_ * 2, 0.0f) {}

    float& dx(int y, int x) { return data[(static_cast<std::size_t>(y) * w + x) * 2]; }
    float& dy(int y, int x) { return data[(static_cast<std::size_t>(y) * w + x) * 2 + 1]; }
    float dx(int y, int x) const { return data[(static_cast<std::size_t>(y) * w + x) * 2]; }
    float dy(int y, int x) const { return data[(static_cast<std::size_t>(y) * w + x) * 2 + 1]; }
};

/// Extract frame fi of batch item bi as an Image / single-frame video.
Image frame_image(const VideoLatent& v, int bi, int fi);
VideoLatent image_to_video(const Image& img);

Image to_gray(const Image& img);

struct FlowParams {
    int block = 8;    // matching block size
    int radius = 4;   // integer search radius per pyramid level
    int levels = 3;   // coarse-to-fine pyramid depth
};

/// Coarse-to-fine block matching: grayscale pyramids, per-block integer SAD
/// search within `radius` at each level, flow upsampled and refined on the
/// way down. Finds the flow such that sampling `b` at x + flow reconstructs
/// `a`. Throws if the frames are smaller than the block size.
FlowField estimate_flow(const Image& a, const Image& b, const FlowParams& params = {});

/// Backward bilinear warp: out(x) = src(x + flow(x)), out-of-bounds samples
/// clamp to the border.
Image warp(const Image& src, const FlowField& flow);

/// True where all four bilinear corners of x + flow(x) are in bounds; the
/// motion-aware MSE only scores these pixels.
std::vector<bool> warp_validity(const FlowField& flow);

/// Motion-aware MSE between two boundary frames of a [0,1]-range video,
/// reported in percent: estimate flow from frame_a to frame_b, warp frame_b
/// back onto frame_a, mean squared error over valid pixels x 100.
double mamse(const VideoLatent& video, int frame_a, int frame_b, const FlowParams& params = {});

using ImageEmbedder = std::function<std::vector<float>(const Image&)>;

/// Mean cosine similarity of consecutive-frame embeddings (batch item 0).
double frame_consistency(const VideoLatent& video, const ImageEmbedder& embedder);

/// Bilinear image / per-frame video resize.
Image resize_image(const Image& img, int out_h, int out_w);
VideoLatent resize_video(const VideoLatent& v, int out_h, int out_w);

double cosine(const std::vector<float>& a, const std::vector<float>& b);

}  // namespace videdit
