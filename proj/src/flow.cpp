#include "videdit/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace videdit {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

float sample_clamped(const Image& img, int ci, int y, int x) {
    return img.at(ci, clampi(y, 0, img.h - 1), clampi(x, 0, img.w - 1));
}

// 2x2 mean downsample (odd tails fold into the last cell).
Image downsample2(const Image& img) {
    const int oh = (img.h + 1) / 2;
    const int ow = (img.w + 1) / 2;
    Image out(img.c, oh, ow);
    for (int ci = 0; ci < img.c; ++ci) {
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                double acc = 0.0;
                int cnt = 0;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const int yy = 2 * y + dy;
                        const int xx = 2 * x + dx;
                        if (yy < img.h && xx < img.w) {
                            acc += img.at(ci, yy, xx);
                            ++cnt;
                        }
                    }
                }
                out.at(ci, y, x) = static_cast<float>(acc / cnt);
            }
        }
    }
    return out;
}

// SAD of block (y0,x0,bs) in `a` against the same block displaced by (dx,dy)
// in `b`, border-clamped.
double block_sad(const Image& a, const Image& b, int y0, int x0, int bs, int dy, int dx) {
    double acc = 0.0;
    for (int y = y0; y < y0 + bs; ++y) {
        for (int x = x0; x < x0 + bs; ++x) {
            if (y >= a.h || x >= a.w) continue;
            acc += std::abs(static_cast<double>(a.at(0, y, x)) - sample_clamped(b, 0, y + dy, x + dx));
        }
    }
    return acc;
}

// One block-matching refinement pass at a single pyramid level; `prior` holds
// the upsampled coarser flow (may be empty for the top level).
FlowField match_level(const Image& a, const Image& b, const FlowField* prior, int block,
                      int radius) {
    FlowField flow(a.h, a.w);
    for (int y0 = 0; y0 < a.h; y0 += block) {
        for (int x0 = 0; x0 < a.w; x0 += block) {
            int base_dx = 0, base_dy = 0;
            if (prior != nullptr) {
                const int cy = std::min(y0 + block / 2, a.h - 1);
                const int cx = std::min(x0 + block / 2, a.w - 1);
                base_dx = static_cast<int>(std::lround(prior->dx(cy, cx)));
                base_dy = static_cast<int>(std::lround(prior->dy(cy, cx)));
            }
            double best = 1e300;
            int best_dx = base_dx, best_dy = base_dy;
            for (int dy = -radius; dy <= radius; ++dy) {
                for (int dx = -radius; dx <= radius; ++dx) {
                    const double sad = block_sad(a, b, y0, x0, block, base_dy + dy, base_dx + dx);
                    // strict < keeps the smallest displacement on ties because
                    // the scan is ordered; bias the zero offset first
                    if (sad < best) {
                        best = sad;
                        best_dx = base_dx + dx;
                        best_dy = base_dy + dy;
                    }
                }
            }
            for (int y = y0; y < std::min(y0 + block, a.h); ++y) {
                for (int x = x0; x < std::min(x0 + block, a.w); ++x) {
                    flow.dx(y, x) = static_cast<float>(best_dx);
                    flow.dy(y, x) = static_cast<float>(best_dy);
                }
            }
        }
    }
    return flow;
}

FlowField upsample_flow(const FlowField& f, int out_h, int out_w) {
    FlowField out(out_h, out_w);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const int sy = clampi(y / 2, 0, f.h - 1);
            const int sx = clampi(x / 2, 0, f.w - 1);
            out.dx(y, x) = f.dx(sy, sx) * 2.0f;
            out.dy(y, x) = f.dy(sy, sx) * 2.0f;
        }
    }
    return out;
}

}  // namespace

Image frame_image(const VideoLatent& v, int bi, int fi) {
    Image img(v.c, v.h, v.w);
    for (int ci = 0; ci < v.c; ++ci) {
        for (int y = 0; y < v.h; ++y) {
            for (int x = 0; x < v.w; ++x) img.at(ci, y, x) = v.at(bi, ci, fi, y, x);
        }
    }
    return img;
}

VideoLatent image_to_video(const Image& img) {
    VideoLatent v(1, img.c, 1, img.h, img.w);
    for (int ci = 0; ci < img.c; ++ci) {
        for (int y = 0; y < img.h; ++y) {
            for (int x = 0; x < img.w; ++x) v.at(0, ci, 0, y, x) = img.at(ci, y, x);
        }
    }
    return v;
}

Image to_gray(const Image& img) {
    Image out(1, img.h, img.w);
    const double inv = 1.0 / img.c;
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x) {
            double acc = 0.0;
            for (int ci = 0; ci < img.c; ++ci) acc += img.at(ci, y, x);
            out.at(0, y, x) = static_cast<float>(acc * inv);
        }
    }
    return out;
}

FlowField estimate_flow(const Image& a, const Image& b, const FlowParams& params) {
    if (a.h != b.h || a.w != b.w || a.c != b.c) {
        throw std::invalid_argument("estimate_flow: frame shapes differ");
    }
    if (a.h < params.block || a.w < params.block) {
        throw std::invalid_argument("estimate_flow: frames smaller than the matching block");
    }

    std::vector<Image> pyr_a{to_gray(a)};
    std::vector<Image> pyr_b{to_gray(b)};
    for (int l = 1; l < params.levels; ++l) {
        const Image& prev = pyr_a.back();
        if (prev.h / 2 < params.block || prev.w / 2 < params.block) break;
        pyr_a.push_back(downsample2(pyr_a.back()));
        pyr_b.push_back(downsample2(pyr_b.back()));
    }

    FlowField flow;
    for (int l = static_cast<int>(pyr_a.size()) - 1; l >= 0; --l) {
        const FlowField* prior = nullptr;
        FlowField upsampled;
        if (l < static_cast<int>(pyr_a.size()) - 1) {
            upsampled = upsample_flow(flow, pyr_a[l].h, pyr_a[l].w);
            prior = &upsampled;
        }
        flow = match_level(pyr_a[l], pyr_b[l], prior, params.block, params.radius);
    }
    return flow;
}

Image warp(const Image& src, const FlowField& flow) {
    if (src.h != flow.h || src.w != flow.w) {
        throw std::invalid_argument("warp: flow shape mismatch");
    }
    Image out(src.c, src.h, src.w);
    for (int y = 0; y < src.h; ++y) {
        for (int x = 0; x < src.w; ++x) {
            const float sx = static_cast<float>(x) + flow.dx(y, x);
            const float sy = static_cast<float>(y) + flow.dy(y, x);
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const float fx = sx - static_cast<float>(x0);
            const float fy = sy - static_cast<float>(y0);
            for (int ci = 0; ci < src.c; ++ci) {
                const float v00 = sample_clamped(src, ci, y0, x0);
                const float v01 = sample_clamped(src, ci, y0, x0 + 1);
                const float v10 = sample_clamped(src, ci, y0 + 1, x0);
                const float v11 = sample_clamped(src, ci, y0 + 1, x0 + 1);
                out.at(ci, y, x) = (1.0f - fy) * ((1.0f - fx) * v00 + fx * v01) +
                                   fy * ((1.0f - fx) * v10 + fx * v11);
            }
        }
    }
    return out;
}

std::vector<bool> warp_validity(const FlowField& flow) {
    std::vector<bool> valid(static_cast<std::size_t>(flow.h) * flow.w, false);
    for (int y = 0; y < flow.h; ++y) {
        for (int x = 0; x < flow.w; ++x) {
            const float sx = static_cast<float>(x) + flow.dx(y, x);
            const float sy = static_cast<float>(y) + flow.dy(y, x);
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const bool in = x0 >= 0 && y0 >= 0 && x0 + 1 <= flow.w - 1 && y0 + 1 <= flow.h - 1;
            // integer hits on the far border are still exact samples
            const bool exact_edge = (sx == static_cast<float>(flow.w - 1) && sy >= 0 &&
                                     sy <= static_cast<float>(flow.h - 1)) ||
                                    (sy == static_cast<float>(flow.h - 1) && sx >= 0 &&
                                     sx <= static_cast<float>(flow.w - 1));
            valid[static_cast<std::size_t>(y) * flow.w + x] = in || exact_edge;
        }
    }
    return valid;
}

double mamse(const VideoLatent& video, int frame_a, int frame_b, const FlowParams& params) {
    if (frame_a < 0 || frame_b < 0 || frame_a >= video.f || frame_b >= video.f) {
        throw std::invalid_argument("mamse: boundary frame out of range");
    }
    const Image a = frame_image(video, 0, frame_a);
    const Image b = frame_image(video, 0, frame_b);
    const FlowField flow = estimate_flow(a, b, params);
    const Image warped = warp(b, flow);
    const std::vector<bool> valid = warp_validity(flow);

    double acc = 0.0;
    long count = 0;
    for (int y = 0; y < a.h; ++y) {
        for (int x = 0; x < a.w; ++x) {
            if (!valid[static_cast<std::size_t>(y) * a.w + x]) continue;
            for (int ci = 0; ci < a.c; ++ci) {
                const double d = static_cast<double>(a.at(ci, y, x)) - warped.at(ci, y, x);
                acc += d * d;
                ++count;
            }
        }
    }
    if (count == 0) throw std::runtime_error("mamse: no valid pixels after warping");
    return 100.0 * acc / static_cast<double>(count);
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

double frame_consistency(const VideoLatent& video, const ImageEmbedder& embedder) {
    if (video.f < 2) throw std::invalid_argument("frame_consistency: need at least 2 frames");
    double acc = 0.0;
    std::vector<float> prev = embedder(frame_image(video, 0, 0));
    for (int fi = 1; fi < video.f; ++fi) {
        std::vector<float> cur = embedder(frame_image(video, 0, fi));
        acc += cosine(prev, cur);
        prev = std::move(cur);
    }
    return acc / (video.f - 1);
}

Image resize_image(const Image& img, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("resize: bad output size");
    Image out(img.c, out_h, out_w);
    const double sy = static_cast<double>(img.h) / out_h;
    const double sx = static_cast<double>(img.w) / out_w;
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const double cy = (y + 0.5) * sy - 0.5;
            const double cx = (x + 0.5) * sx - 0.5;
            const int y0 = static_cast<int>(std::floor(cy));
            const int x0 = static_cast<int>(std::floor(cx));
            const float fy = static_cast<float>(cy - y0);
            const float fx = static_cast<float>(cx - x0);
            for (int ci = 0; ci < img.c; ++ci) {
                const float v00 = sample_clamped(img, ci, y0, x0);
                const float v01 = sample_clamped(img, ci, y0, x0 + 1);
                const float v10 = sample_clamped(img, ci, y0 + 1, x0);
                const float v11 = sample_clamped(img, ci, y0 + 1, x0 + 1);
                out.at(ci, y, x) = (1.0f - fy) * ((1.0f - fx) * v00 + fx * v01) +
                                   fy * ((1.0f - fx) * v10 + fx * v11);
            }
        }
    }
    return out;
}

VideoLatent resize_video(const VideoLatent& v, int out_h, int out_w) {
    VideoLatent out(v.b, v.c, v.f, out_h, out_w);
    for (int bi = 0; bi < v.b; ++bi) {
        for (int fi = 0; fi < v.f; ++fi) {
            const Image img = resize_image(frame_image(v, bi, fi), out_h, out_w);
            for (int ci = 0; ci < v.c; ++ci) {
                for (int y = 0; y < out_h; ++y) {
                    for (int x = 0; x < out_w; ++x) out.at(bi, ci, fi, y, x) = img.at(ci, y, x);
                }
            }
        }
    }
    return out;
}

}  // namespace videdit
