#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "support.hpp"
#include "videdit/lvsc.hpp"

using namespace videdit;
using videdit::testing::FrameOracleDenoiser;

namespace {

float max_abs_diff(const VideoLatent& a, const VideoLatent& b) {
    REQUIRE(a.same_shape(b));
    float m = 0.0f;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    }
    return m;
}

}  // namespace

TEST_CASE("lvsc correction: zero residual leaves the prediction unchanged") {
    SeededRng rng(1);
    VideoLatent eps_raw = VideoLatent::random_normal(1, 2, 6, 4, 4, rng);
    const VideoLatent eps_ref = slice_frames(eps_raw, 0, 2);  // model matches closed form
    const VideoLatent out = lvsc_correct(eps_raw, eps_ref, 2);
    const VideoLatent expect = slice_frames(eps_raw, 2, 4);
    CHECK(max_abs_diff(out, expect) == 0.0f);
}

TEST_CASE("lvsc correction: N=1 constant residual shifts every frame by it") {
    SeededRng rng(2);
    VideoLatent eps_raw = VideoLatent::random_normal(1, 1, 4, 3, 3, rng);
    VideoLatent closed = slice_frames(eps_raw, 0, 1);
    for (float& x : closed.data) x += 0.75f;
    const VideoLatent out = lvsc_correct(eps_raw, closed, 1);
    for (int fi = 0; fi < 3; ++fi) {
        for (int y = 0; y < 3; ++y) {
            for (int x = 0; x < 3; ++x) {
                CHECK(out.at(0, 0, fi, y, x) ==
                      doctest::Approx(eps_raw.at(0, 0, fi + 1, y, x) + 0.75f).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("lvsc correction: N=2 residuals average elementwise") {
    SeededRng rng(3);
    VideoLatent eps_raw = VideoLatent::random_normal(1, 1, 5, 2, 2, rng);
    VideoLatent closed = slice_frames(eps_raw, 0, 2);
    VideoLatent r1 = VideoLatent::random_normal(1, 1, 1, 2, 2, rng);
    VideoLatent r2 = VideoLatent::random_normal(1, 1, 1, 2, 2, rng);
    for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 2; ++x) {
            closed.at(0, 0, 0, y, x) += r1.at(0, 0, 0, y, x);
            closed.at(0, 0, 1, y, x) += r2.at(0, 0, 0, y, x);
        }
    }
    const VideoLatent out = lvsc_correct(eps_raw, closed, 2);
    for (int fi = 0; fi < 3; ++fi) {
        for (int y = 0; y < 2; ++y) {
            for (int x = 0; x < 2; ++x) {
                const float shift = 0.5f * (r1.at(0, 0, 0, y, x) + r2.at(0, 0, 0, y, x));
                CHECK(out.at(0, 0, fi, y, x) ==
                      doctest::Approx(eps_raw.at(0, 0, fi + 2, y, x) + shift).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("lvsc correction rejects reference-count mismatch") {
    VideoLatent eps_raw = VideoLatent::zeros(1, 1, 4, 2, 2);
    VideoLatent closed = VideoLatent::zeros(1, 1, 3, 2, 2);
    CHECK_THROWS_AS(lvsc_correct(eps_raw, closed, 2), std::invalid_argument);
}

TEST_CASE("motion-compensated correction with zero flow equals plain lvsc exactly") {
    SeededRng rng(4);
    const int n_ref = 2, m_sub = 3;
    VideoLatent eps_raw = VideoLatent::random_normal(1, 2, n_ref + m_sub, 8, 8, rng);
    VideoLatent closed = VideoLatent::random_normal(1, 2, n_ref, 8, 8, rng);
    const std::vector<FlowField> flows(n_ref * m_sub, FlowField(8, 8));

    const VideoLatent plain = lvsc_correct(eps_raw, closed, n_ref);
    const VideoLatent mc = mc_lvsc_correct(slice_frames(eps_raw, n_ref, m_sub), closed,
                                           slice_frames(eps_raw, 0, n_ref), flows, n_ref);
    CHECK(max_abs_diff(plain, mc) < 1e-6f);
}

TEST_CASE("spatially constant corrections are unchanged by any warp") {
    SeededRng rng(5);
    const int n_ref = 2, m_sub = 2;
    VideoLatent eps_raw = VideoLatent::random_normal(1, 1, n_ref + m_sub, 8, 8, rng);
    VideoLatent closed = slice_frames(eps_raw, 0, n_ref);
    for (int i = 0; i < n_ref; ++i) {
        const float kappa = 0.3f + 0.2f * i;
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 8; ++x) closed.at(0, 0, i, y, x) += kappa;
        }
    }
    std::vector<FlowField> flows(n_ref * m_sub, FlowField(8, 8));
    for (FlowField& fl : flows) {
        for (float& v : fl.data) v = 2.5f * (rng.uniform_float() - 0.5f);
    }
    const VideoLatent plain = lvsc_correct(eps_raw, closed, n_ref);
    const VideoLatent mc = mc_lvsc_correct(slice_frames(eps_raw, n_ref, m_sub), closed,
                                           slice_frames(eps_raw, 0, n_ref), flows, n_ref);
    CHECK(max_abs_diff(plain, mc) < 1e-5f);
}

TEST_CASE("translated correction follows a matching translation flow") {
    const int n_ref = 1, size = 16;
    // smooth spatial correction pattern on the reference
    VideoLatent closed = VideoLatent::zeros(1, 1, 1, size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            closed.at(0, 0, 0, y, x) =
                std::sin(0.5f * static_cast<float>(y)) + std::cos(0.4f * static_cast<float>(x));
        }
    }
    VideoLatent eps_raw_refs = VideoLatent::zeros(1, 1, 1, size, size);
    VideoLatent eps_raw_sub = VideoLatent::zeros(1, 1, 1, size, size);

    // content moved by (+2, +1) between reference and subsequent frame, so the
    // backward flow at subsequent pixel p points to p + (-2, -1)
    FlowField flow(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            flow.dx(y, x) = -2.0f;
            flow.dy(y, x) = -1.0f;
        }
    }
    const VideoLatent out = mc_lvsc_correct(eps_raw_sub, closed, eps_raw_refs, {flow}, n_ref);
    float max_err = 0.0f;
    for (int y = 3; y < size - 3; ++y) {
        for (int x = 3; x < size - 3; ++x) {
            max_err = std::max(max_err,
                               std::abs(out.at(0, 0, 0, y, x) - closed.at(0, 0, 0, y - 1, x - 2)));
        }
    }
    CHECK(max_err < 1e-3f);
}

TEST_CASE("literal-replace diagnostic form drops the raw prediction") {
    SeededRng rng(7);
    VideoLatent closed = VideoLatent::random_normal(1, 1, 1, 8, 8, rng);
    VideoLatent eps_refs = VideoLatent::random_normal(1, 1, 1, 8, 8, rng);
    VideoLatent eps_sub = VideoLatent::random_normal(1, 1, 1, 8, 8, rng);
    const std::vector<FlowField> flows(1, FlowField(8, 8));
    const VideoLatent out =
        mc_lvsc_correct(eps_sub, closed, eps_refs, flows, 1, McForm::LiteralReplace);
    CHECK(max_abs_diff(out, closed) < 1e-6f);  // zero flow: exactly the closed-form noise
}

TEST_CASE("long video plan segmentation") {
    LongVideoPlan plan;
    plan.total_frames = 32;
    plan.batch_frames = 16;
    plan.reference_frames = 4;
    const auto segs = plan.segments();
    REQUIRE(segs.size() == 3);
    CHECK(segs[0].start == 0);
    CHECK(segs[0].new_frames == 16);
    CHECK(segs[1].start == 16);
    CHECK(segs[1].new_frames == 12);
    CHECK(segs[2].start == 28);
    CHECK(segs[2].new_frames == 4);

    plan.total_frames = 16;
    CHECK(plan.segments().size() == 1);

    plan.reference_frames = 16;
    CHECK_THROWS_AS(plan.validate(), std::invalid_argument);
}

TEST_CASE("single-batch plan reproduces sample_video bitwise") {
    const NoiseSchedule s = NoiseSchedule::linear(200, 1e-3, 2e-2);
    const TimestepPlan plan = TimestepPlan::uniform(8, 200);
    FrameOracleDenoiser d(s, videdit::testing::recolor_edit());

    const SceneSpec scene = videdit::testing::panning_scene(0, 8);
    ConditionPair cond;
    cond.video = render_scene(scene, 16, 16);
    ToyEmbedder embedder;
    cond.text = embedder.embed_prompt(tokenize("recolor"));

    LongVideoPlan lplan;
    lplan.total_frames = 8;
    lplan.batch_frames = 8;
    lplan.reference_frames = 2;
    const GuidanceConfig g{1.2f, 2.0f};

    const LongVideoResult lv = sample_long_video(d, cond, g, plan, s, lplan, 99, LvscMode::On);
    const VideoLatent direct = sample_video(d, cond, g, plan, s, 99);
    REQUIRE(lv.video.data == direct.data);
    CHECK(lv.boundaries.empty());
}

TEST_CASE("zero-residual oracle: correction changes nothing across batches") {
    const NoiseSchedule s = NoiseSchedule::linear(200, 1e-3, 2e-2);
    const TimestepPlan plan = TimestepPlan::uniform(10, 200);
    FrameOracleDenoiser d(s, videdit::testing::identity_edit());

    SceneSpec scene = videdit::testing::panning_scene(1, 12);
    ConditionPair cond;
    cond.video = render_scene(scene, 16, 16);
    ToyEmbedder embedder;
    cond.text = embedder.embed_prompt(tokenize("keep everything"));

    LongVideoPlan lplan;
    lplan.total_frames = 12;
    lplan.batch_frames = 6;
    lplan.reference_frames = 2;
    const GuidanceConfig g{1.0f, 1.0f};

    const LongVideoResult with_c = sample_long_video(d, cond, g, plan, s, lplan, 5, LvscMode::On);
    const LongVideoResult without = sample_long_video(d, cond, g, plan, s, lplan, 5, LvscMode::Off);
    REQUIRE(with_c.video.f == 12);
    REQUIRE(without.video.f == 12);
    CHECK(max_abs_diff(with_c.video, without.video) < 1e-5f);
    REQUIRE(with_c.boundaries.size() == 2);
    CHECK(with_c.boundaries[0].frame_index == 6);
    CHECK(with_c.boundaries[1].frame_index == 10);
    // and the oracle actually reconstructs the target
    CHECK(max_abs_diff(with_c.video, *cond.video) < 1e-4f);
}

TEST_CASE("correction is applied to the guided prediction before the ddim step") {
    const NoiseSchedule s = NoiseSchedule::linear(100, 1e-3, 3e-2);
    const TimestepPlan plan = TimestepPlan::uniform(3, 100);

    // instrumented denoiser: records every (t, z) it is called with
    struct Call {
        int t;
        VideoLatent z;
    };
    struct RecordingDenoiser : Denoiser {
        mutable std::vector<Call> calls;
        VideoLatent predict(const VideoLatent& z_t, int t,
                            const ConditionPair& cond) const override {
            calls.push_back({t, z_t});
            VideoLatent out = z_t;
            for (std::size_t i = 0; i < out.data.size(); ++i) {
                out.data[i] = 0.25f * z_t.data[i] + (cond.has_text() ? 0.1f : 0.0f);
            }
            return out;
        }
    } d;

    SceneSpec scene;
    scene.frames = 6;
    ConditionPair cond;
    cond.video = render_scene(scene, 8, 8);
    ToyEmbedder embedder;
    cond.text = embedder.embed_prompt(tokenize("shift"));

    LongVideoPlan lplan;
    lplan.total_frames = 6;
    lplan.batch_frames = 4;
    lplan.reference_frames = 2;
    const GuidanceConfig g{1.5f, 2.0f};
    const std::uint64_t seed = 3;

    const LongVideoResult lv = sample_long_video(d, cond, g, plan, s, lplan, seed, LvscMode::On);

    // replay batch 2 from scratch: with 3 guided calls per step and 3 plan
    // steps, batch 2's denoiser calls start at index 9
    REQUIRE(d.calls.size() == 18);
    const VideoLatent z_ref = slice_frames(lv.video, 2, 2);
    SeededRng renoise(seed, 3);  // stream 2*batch+1 with batch=1
    ConditionPair cond_b2;
    cond_b2.video = slice_frames(*cond.video, 2, 4);
    cond_b2.text = cond.text;

    SeededRng init(seed, 2);  // stream 2*batch
    VideoLatent z_sub = VideoLatent::random_normal(1, 3, 2, 8, 8, init);
    for (int k = 0; k < plan.steps(); ++k) {
        const int t = plan.indices[k];
        const int t_prev = k + 1 < plan.steps() ? plan.indices[k + 1] : -1;
        VideoLatent noise(1, 3, 2, 8, 8);
        renoise.fill_normal(noise.data);
        const VideoLatent z_t_ref = forward_diffuse(z_ref, noise, t, s);
        const VideoLatent closed = infer_reference_noise(z_t_ref, z_ref, t, s);
        const VideoLatent combined = concat_frames(z_t_ref, z_sub);

        // the sampler must have called the denoiser with exactly this latent
        const Call& rec = d.calls[9 + 3 * k];
        REQUIRE(rec.t == t);
        REQUIRE(rec.z.data == combined.data);

        const VideoLatent guided = cfg_predict(d, combined, t, cond_b2, g);
        const VideoLatent corrected = lvsc_correct(guided, closed, 2);
        z_sub = ddim_step(z_sub, corrected, t, t_prev, s);
    }
    // replay (correction strictly before the step) reproduces the output
    const VideoLatent emitted_tail = slice_frames(lv.video, 4, 2);
    REQUIRE(z_sub.data == emitted_tail.data);
}
