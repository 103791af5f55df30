#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "videdit/flow.hpp"
#include "videdit/rng.hpp"
#include "videdit/toyworld.hpp"

using namespace videdit;

namespace {

Image noise_image(int c, int h, int w, SeededRng& rng) {
    Image img(c, h, w);
    for (float& x : img.data) x = rng.uniform_float();
    return img;
}

// Integer translation with wraparound: out(y, x) = src(y - dy, x - dx).
Image translate_wrap(const Image& src, int dy, int dx) {
    Image out(src.c, src.h, src.w);
    for (int ci = 0; ci < src.c; ++ci) {
        for (int y = 0; y < src.h; ++y) {
            for (int x = 0; x < src.w; ++x) {
                const int sy = ((y - dy) % src.h + src.h) % src.h;
                const int sx = ((x - dx) % src.w + src.w) % src.w;
                out.at(ci, y, x) = src.at(ci, sy, sx);
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("identical frames give exactly zero flow") {
    SeededRng rng(1);
    const Image a = noise_image(1, 32, 32, rng);
    const FlowField flow = estimate_flow(a, a);
    for (float v : flow.data) REQUIRE(v == 0.0f);
}

TEST_CASE("pure translation is recovered on interior blocks") {
    SeededRng rng(2);
    const Image a = noise_image(1, 48, 48, rng);
    const Image b = translate_wrap(a, -2, 3);  // content of b at x+(3,-2) matches a
    const FlowField flow = estimate_flow(a, b);

    std::vector<float> dxs, dys;
    for (int y = 12; y < 36; ++y) {
        for (int x = 12; x < 36; ++x) {
            dxs.push_back(flow.dx(y, x));
            dys.push_back(flow.dy(y, x));
        }
    }
    std::sort(dxs.begin(), dxs.end());
    std::sort(dys.begin(), dys.end());
    CHECK(std::abs(dxs[dxs.size() / 2] - 3.0f) <= 0.5f);
    CHECK(std::abs(dys[dys.size() / 2] - (-2.0f)) <= 0.5f);
}

TEST_CASE("noise pair stays within the search radius") {
    SeededRng rng(3);
    const Image a = noise_image(1, 32, 32, rng);
    const Image b = noise_image(1, 32, 32, rng);
    FlowParams params;
    const FlowField flow = estimate_flow(a, b, params);
    // coarse-to-fine with 3 levels and radius 4 per level bounds displacements
    const float bound = 4.0f * (1 + 2 + 4);
    for (int y = 0; y < flow.h; ++y) {
        for (int x = 0; x < flow.w; ++x) {
            REQUIRE(std::abs(flow.dx(y, x)) <= bound);
            REQUIRE(std::abs(flow.dy(y, x)) <= bound);
        }
    }
}

TEST_CASE("frames smaller than the block are rejected") {
    Image a(1, 4, 4);
    CHECK_THROWS_AS(estimate_flow(a, a), std::invalid_argument);
}

TEST_CASE("warp with zero flow is the identity") {
    SeededRng rng(4);
    const Image src = noise_image(3, 16, 16, rng);
    const FlowField zero(16, 16);
    const Image out = warp(src, zero);
    REQUIRE(out.data == src.data);
}

TEST_CASE("constants are invariant under any warp") {
    Image src(2, 16, 16);
    std::fill(src.data.begin(), src.data.end(), 0.37f);
    SeededRng rng(5);
    FlowField flow(16, 16);
    for (float& v : flow.data) v = 3.0f * (rng.uniform_float() - 0.5f);
    const Image out = warp(src, flow);
    for (float v : out.data) CHECK(v == doctest::Approx(0.37f).epsilon(1e-6));
}

TEST_CASE("integer-translation flow shifts exactly away from the border") {
    SeededRng rng(6);
    const Image src = noise_image(1, 20, 20, rng);
    FlowField flow(20, 20);
    for (int y = 0; y < 20; ++y) {
        for (int x = 0; x < 20; ++x) {
            flow.dx(y, x) = 4.0f;
            flow.dy(y, x) = -3.0f;
        }
    }
    const Image out = warp(src, flow);
    for (int y = 4; y < 16; ++y) {
        for (int x = 4; x < 15; ++x) {
            REQUIRE(out.at(0, y, x) == src.at(0, y - 3, x + 4));
        }
    }
}

TEST_CASE("mamse of a static video is zero") {
    SceneSpec spec;
    spec.frames = 4;
    const VideoLatent video = render_scene(spec, 32, 32);
    CHECK(mamse(video, 0, 3) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("mamse stays small under in-radius integer translation") {
    SceneSpec spec;
    spec.texture = TextureKind::Checker;
    spec.pan_x = 2.0f;
    spec.frames = 2;
    const VideoLatent video = render_scene(spec, 32, 32);
    CHECK(mamse(video, 0, 1) < 0.1);
}

TEST_CASE("mamse rejects out-of-range boundaries") {
    SceneSpec spec;
    spec.frames = 4;
    const VideoLatent video = render_scene(spec, 32, 32);
    CHECK_THROWS_AS(mamse(video, 0, 9), std::invalid_argument);
}

TEST_CASE("frame consistency of identical frames is 1") {
    SceneSpec spec;
    spec.frames = 5;
    const VideoLatent video = render_scene(spec, 16, 16);
    ToyEmbedder embedder;
    const double fc = frame_consistency(
        video, [&](const Image& img) { return embedder.embed_image(img); });
    CHECK(fc == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("frame consistency of orthogonal embeddings is 0") {
    SceneSpec spec;
    spec.frames = 4;
    const VideoLatent video = render_scene(spec, 16, 16);
    int call = 0;
    const double fc = frame_consistency(video, [&call](const Image&) {
        std::vector<float> e(4, 0.0f);
        e[call++ % 4] = 1.0f;
        return e;
    });
    CHECK(fc == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("frame consistency needs two frames") {
    SceneSpec spec;
    spec.frames = 1;
    const VideoLatent video = render_scene(spec, 16, 16);
    CHECK_THROWS_AS(frame_consistency(video, [](const Image&) { return std::vector<float>{1.0f}; }),
                    std::invalid_argument);
}

TEST_CASE("resize preserves constants and shape") {
    Image src(3, 10, 14);
    std::fill(src.data.begin(), src.data.end(), 0.6f);
    const Image out = resize_image(src, 17, 9);
    CHECK(out.h == 17);
    CHECK(out.w == 9);
    for (float v : out.data) CHECK(v == doctest::Approx(0.6f).epsilon(1e-6));
}
