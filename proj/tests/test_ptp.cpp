#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "videdit/ptp.hpp"

using namespace videdit;

namespace {

double pair_mse(const VideoLatent& a, const VideoLatent& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

struct PtpFixture {
    NoiseSchedule s = NoiseSchedule::linear(100, 1e-3, 2e-2);
    ToyEmbedder embedder;
    std::unique_ptr<OracleNetDenoiser> denoiser =
        make_world_denoiser(s, embedder, 0.2f, 0.3f, 4242);
};

}  // namespace

TEST_CASE("generation draw respects the documented ranges") {
    SeededRng rng(1);
    std::array<int, 8> cfg_counts{};
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const GenerationDraw d = sample_generation_config(rng);
        REQUIRE(d.self_cutoff >= 0.30f);
        REQUIRE(d.self_cutoff <= 0.45f);
        REQUIRE(d.cross_cutoff >= 0.60f);
        REQUIRE(d.cross_cutoff <= 0.85f);
        REQUIRE(d.cfg_scale >= 5);
        REQUIRE(d.cfg_scale <= 12);
        REQUIRE(d.steps == 30);
        ++cfg_counts[d.cfg_scale - 5];
    }
    for (int c : cfg_counts) {
        CHECK(std::abs(c - n / 8) < n * 0.02);
    }
}

TEST_CASE("token alignment: common prefix plus exact matching") {
    const auto src = tokenize("a red square on a plain background");
    const auto dst = tokenize("a blue square on a plain background");
    const auto map = align_tokens(src, dst);
    REQUIRE(map.size() == dst.size());
    CHECK(map[0] == 0);   // "a" prefix
    CHECK(map[1] == -1);  // "blue" has no source token
    CHECK(map[2] == 2);   // "square" matched exactly
    CHECK(map[3] == 3);
    CHECK(map[6] == 6);

    // identical prompts align to the identity
    const auto self_map = align_tokens(src, src);
    for (std::size_t i = 0; i < self_map.size(); ++i) {
        CHECK(self_map[i] == static_cast<int>(i));
    }
}

TEST_CASE("identical prompts and seed give bitwise-identical paired videos") {
    PtpFixture fx;
    PromptTriplet t;
    t.input_prompt = "a red square on a plain background static camera";
    t.edit_prompt = "keep it";
    t.edited_prompt = t.input_prompt;
    PtpOptions opts;
    opts.self_cutoff = 0.4f;
    opts.cross_cutoff = 0.7f;
    opts.cfg_scale = 7.0f;
    const auto [vin, vedit] = ptp_generate_pair(*fx.denoiser, fx.embedder, t, 11, opts, fx.s, 2, 8, 8);
    REQUIRE(vin.data == vedit.data);
}

TEST_CASE("identity also holds under embedding-swap replacement") {
    PtpFixture fx;
    PromptTriplet t;
    t.input_prompt = "a green circle on a checker background static camera";
    t.edit_prompt = "keep it";
    t.edited_prompt = t.input_prompt;
    PtpOptions opts;
    opts.cross_mode = CrossReplaceMode::EmbedSwap;
    const auto [vin, vedit] = ptp_generate_pair(*fx.denoiser, fx.embedder, t, 12, opts, fx.s, 2, 8, 8);
    REQUIRE(vin.data == vedit.data);
}

TEST_CASE("zero cutoffs give two independent same-seed samples") {
    PtpFixture fx;
    PromptTriplet t;
    t.input_prompt = "a red square on a plain background static camera";
    t.edit_prompt = "turn the square blue";
    t.edited_prompt = "a blue square on a plain background static camera";
    PtpOptions opts;
    opts.self_cutoff = 0.0f;
    opts.cross_cutoff = 0.0f;
    const auto [vin, vedit] = ptp_generate_pair(*fx.denoiser, fx.embedder, t, 13, opts, fx.s, 2, 8, 8);
    CHECK(vin.data != vedit.data);
    CHECK(vin.all_finite());
    CHECK(vedit.all_finite());

    // pass 1 does not depend on the cutoffs
    PtpOptions full = opts;
    full.self_cutoff = 1.0f;
    full.cross_cutoff = 1.0f;
    const auto [vin2, vedit2] =
        ptp_generate_pair(*fx.denoiser, fx.embedder, t, 13, full, fx.s, 2, 8, 8);
    REQUIRE(vin2.data == vin.data);
    CHECK(vedit2.data != vedit.data);
}

TEST_CASE("recorded attention matrices are row-stochastic") {
    PtpFixture fx;
    ToyDenoiserConfig cfg;
    cfg.timesteps = 100;
    const ToyDenoiserParams p = ToyDenoiserParams::init(cfg, 5, false);
    SeededRng rng(6);
    VideoLatent z = VideoLatent::random_normal(1, 3, 3, 8, 8, rng);
    ConditionPair cond;
    cond.text = fx.embedder.embed_prompt(tokenize("a red square"));

    StepTrace trace;
    AttentionIO io;
    io.record = &trace;
    toy_denoiser_forward(p, z, 17, cond, &io);
    REQUIRE(trace.records.size() == 6);  // self, cross, temporal per block
    for (const AttnRecord& rec : trace.records) {
        for (int it = 0; it < rec.items; ++it) {
            for (int r = 0; r < rec.rows; ++r) {
                double sum = 0.0;
                for (int c = 0; c < rec.cols; ++c) {
                    const float v =
                        rec.probs[(static_cast<std::size_t>(it) * rec.rows + r) * rec.cols + c];
                    REQUIRE(v >= 0.0f);
                    sum += v;
                }
                REQUIRE(std::abs(sum - 1.0) < 1e-5);
            }
        }
    }
}

TEST_CASE("trace/layer mismatch is detected") {
    PtpFixture fx;
    ToyDenoiserConfig cfg;
    cfg.timesteps = 100;
    const ToyDenoiserParams p = ToyDenoiserParams::init(cfg, 5, false);
    SeededRng rng(7);
    VideoLatent z = VideoLatent::random_normal(1, 3, 3, 8, 8, rng);

    StepTrace trace;
    AttentionIO rec_io;
    rec_io.record = &trace;
    toy_denoiser_forward(p, z, 17, {}, &rec_io);

    // replaying against a different frame count breaks the temporal shape
    VideoLatent z2 = VideoLatent::random_normal(1, 3, 4, 8, 8, rng);
    AttentionIO inj;
    inj.inject = &trace;
    inj.inject_self = true;
    inj.inject_temporal = true;
    CHECK_THROWS_WITH_AS(toy_denoiser_forward(p, z2, 17, {}, &inj),
                         doctest::Contains("trace mismatch"), std::runtime_error);
}

TEST_CASE("score_and_filter reproduces thresholds and the degenerate identical pair") {
    PtpFixture fx;
    const EmbedderContract contract = contract_of(fx.embedder);

    PromptTriplet t;
    t.input_prompt = "a red square on a plain background static camera";
    t.edit_prompt = "turn the square blue";
    t.edited_prompt = "a blue square on a plain background static camera";

    SUBCASE("a faithful color edit is kept") {
        PairedSample sample;
        sample.triplet = t;
        sample.input = render_scene(scene_from_tokens(tokenize(t.input_prompt), 4), 16, 16);
        sample.edited = render_scene(scene_from_tokens(tokenize(t.edited_prompt), 4), 16, 16);
        sample = score_and_filter(std::move(sample), contract);
        CHECK(sample.scores.text_input > 0.2);
        CHECK(sample.scores.text_edited > 0.2);
        CHECK(sample.scores.direction > 0.2);
        CHECK(sample.scores.frame > 0.5);
        CHECK(sample.kept);
    }
    SUBCASE("identical pair is rejected through a zero direction score") {
        PairedSample sample;
        sample.triplet.input_prompt = t.input_prompt;
        sample.triplet.edit_prompt = "keep it";
        sample.triplet.edited_prompt = t.input_prompt;
        sample.input = render_scene(scene_from_tokens(tokenize(t.input_prompt), 4), 16, 16);
        sample.edited = sample.input;
        sample = score_and_filter(std::move(sample), contract);
        CHECK(sample.scores.direction == 0.0);
        CHECK(sample.scores.frame == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(!sample.kept);
    }
    SUBCASE("thresholds of -1 keep everything") {
        PairedSample sample;
        sample.triplet = t;
        sample.input = render_scene(scene_from_tokens(tokenize(t.input_prompt), 4), 16, 16);
        sample.edited = sample.input;
        FilterThresholds lax;
        lax.text = lax.direction = lax.frame = -1.0;
        sample = score_and_filter(std::move(sample), contract, lax);
        CHECK(sample.kept);
    }
}

TEST_CASE("filter is deterministic") {
    PtpFixture fx;
    const EmbedderContract contract = contract_of(fx.embedder);
    PromptTriplet t;
    t.input_prompt = "a red square on a checker background static camera";
    t.edit_prompt = "turn the square green";
    t.edited_prompt = "a green square on a checker background static camera";
    PairedSample sample;
    sample.triplet = t;
    sample.input = render_scene(scene_from_tokens(tokenize(t.input_prompt), 4), 16, 16);
    sample.edited = render_scene(scene_from_tokens(tokenize(t.edited_prompt), 4), 16, 16);
    const PairedSample a = score_and_filter(sample, contract);
    const PairedSample b = score_and_filter(sample, contract);
    CHECK(a.scores.text_input == b.scores.text_input);
    CHECK(a.scores.direction == b.scores.direction);
    CHECK(a.kept == b.kept);
}
