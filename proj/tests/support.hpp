#pragma once

// Oracle denoisers and corpus builders shared by unit and acceptance tests.

#include <functional>
#include <utility>

#include "videdit/denoiser.hpp"
#include "videdit/schedule.hpp"
#include "videdit/toyworld.hpp"

namespace videdit::testing {

/// Frame-wise oracle: eps[f] = (z[f] - sqrt(ab)*target[f]) / sqrt(1-ab) with
/// target = transform(conditioning video), or zeros when no video condition.
/// Per-frame and exact, so its reference-frame predictions equal the
/// closed-form noise whenever the references decode to the target.
class FrameOracleDenoiser : public Denoiser {
public:
    using Transform = std::function<VideoLatent(const VideoLatent&)>;

    FrameOracleDenoiser(NoiseSchedule s, Transform transform)
        : s_(std::move(s)), transform_(std::move(transform)) {}

    VideoLatent predict(const VideoLatent& z_t, int t, const ConditionPair& cond) const override {
        VideoLatent target = cond.has_video()
                                 ? transform_(*cond.video)
                                 : VideoLatent::zeros(z_t.b, z_t.c, z_t.f, z_t.h, z_t.w);
        check_same_shape(z_t, target, "frame oracle target");
        const float a = static_cast<float>(s_.sqrt_ab(t));
        const float inv = static_cast<float>(1.0 / s_.sqrt_one_minus_ab(t));
        VideoLatent out = z_t;
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            out.data[i] = (z_t.data[i] - a * target.data[i]) * inv;
        }
        return out;
    }

private:
    NoiseSchedule s_;
    Transform transform_;
};

/// Identity edit: the sampler should reproduce the conditioning video.
inline FrameOracleDenoiser::Transform identity_edit() {
    return [](const VideoLatent& v) { return v; };
}

/// Channel-rotation edit (r,g,b) -> (g,b,r): structure- and motion-preserving
/// recolor, the stand-in editing task for long-video tests.
inline FrameOracleDenoiser::Transform recolor_edit() {
    return [](const VideoLatent& v) {
        VideoLatent out = v;
        const std::size_t plane = v.data.size() / v.c;
        for (int ci = 0; ci < v.c; ++ci) {
            const int src = (ci + 1) % v.c;
            std::copy_n(v.data.begin() + src * plane, plane, out.data.begin() + ci * plane);
        }
        return out;
    };
}

/// Panning-shapes corpus entry for long-video evaluation.
inline SceneSpec panning_scene(int index, int frames) {
    SceneSpec spec;
    const auto& colors = color_words();
    const auto& shapes = shape_words();
    const auto& textures = texture_words();
    spec.color = color_of(colors[index % colors.size()]);
    spec.shape = shape_of(shapes[index % shapes.size()]);
    spec.texture = texture_of(textures[index % textures.size()]);
    spec.pan_x = (index % 2 == 0) ? 1.0f : -1.0f;
    spec.pan_y = (index % 3 == 0) ? ((index % 2) != 0 ? 1.0f : -1.0f) : 0.0f;
    spec.frames = frames;
    return spec;
}

}  // namespace videdit::testing
