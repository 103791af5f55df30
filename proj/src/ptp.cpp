#include "videdit/ptp.hpp"

#include <cmath>
#include <stdexcept>

namespace videdit {

GenerationDraw sample_generation_config(SeededRng& rng) {
    GenerationDraw d;
    d.self_cutoff = 0.30f + 0.15f * rng.uniform_float();
    d.cross_cutoff = 0.60f + 0.25f * rng.uniform_float();
    d.cfg_scale = rng.uniform_int(5, 12);
    d.steps = 30;
    return d;
}

std::vector<int> align_tokens(const std::vector<std::string>& source,
                              const std::vector<std::string>& target) {
    std::vector<int> map(target.size(), -1);
    std::size_t prefix = 0;
    while (prefix < source.size() && prefix < target.size() && source[prefix] == target[prefix]) {
        map[prefix] = static_cast<int>(prefix);
        ++prefix;
    }
    std::vector<bool> used(source.size(), false);
    for (std::size_t i = 0; i < prefix; ++i) used[i] = true;
    for (std::size_t j = prefix; j < target.size(); ++j) {
        for (std::size_t i = prefix; i < source.size(); ++i) {
            if (!used[i] && source[i] == target[j]) {
                map[j] = static_cast<int>(i);
                used[i] = true;
                break;
            }
        }
    }
    return map;
}

namespace {

// Single-condition (prompt) classifier-free guidance for the generation
// backbone; both calls run through the trace machinery so replacement steers
// the unconditional branch too.
VideoLatent guided_predict(const TracedDenoiser& d, const VideoLatent& z, int t,
                           const PromptEmbedding& text, float scale, AttentionIO* io_uncond,
                           AttentionIO* io_cond) {
    ConditionPair uncond;
    ConditionPair cond;
    cond.text = text;
    AttentionIO none_a, none_b;
    VideoLatent e_uncond = d.predict_traced(z, t, uncond, io_uncond ? *io_uncond : none_a);
    const VideoLatent e_cond = d.predict_traced(z, t, cond, io_cond ? *io_cond : none_b);
    for (std::size_t i = 0; i < e_uncond.data.size(); ++i) {
        e_uncond.data[i] += scale * (e_cond.data[i] - e_uncond.data[i]);
    }
    return e_uncond;
}

void clamp01(VideoLatent& v) {
    for (float& x : v.data) x = std::min(1.0f, std::max(0.0f, x));
}

struct PassTrace {
    std::vector<StepTrace> uncond, cond;  // one per denoising step
};

}  // namespace

std::pair<VideoLatent, VideoLatent> ptp_generate_pair(
    const TracedDenoiser& d, const ToyEmbedder& embedder, const PromptTriplet& triplet,
    std::uint64_t seed, const PtpOptions& opts, const NoiseSchedule& s, int frames, int height,
    int width) {
    if (opts.self_cutoff < 0.0f || opts.self_cutoff > 1.0f || opts.cross_cutoff < 0.0f ||
        opts.cross_cutoff > 1.0f) {
        throw std::invalid_argument("ptp: cutoffs must be in [0,1]");
    }
    const TimestepPlan plan = TimestepPlan::uniform(30, s.T);
    const int steps = plan.steps();

    const std::vector<std::string> tokens_in = tokenize(triplet.input_prompt);
    const std::vector<std::string> tokens_out = tokenize(triplet.edited_prompt);
    const PromptEmbedding text_in = embedder.embed_prompt(tokens_in);
    const PromptEmbedding text_out = embedder.embed_prompt(tokens_out);
    const std::vector<int> column_map = align_tokens(tokens_in, tokens_out);

    SeededRng init_rng(seed, 0);
    const VideoLatent z_init = VideoLatent::random_normal(1, 3, frames, height, width, init_rng);

    // pass 1: input prompt, record every attention matrix
    PassTrace trace;
    trace.uncond.resize(steps);
    trace.cond.resize(steps);
    VideoLatent video_input;
    {
        VideoLatent z = z_init;
        for (int k = 0; k < steps; ++k) {
            const int t = plan.indices[k];
            const int t_prev = k + 1 < steps ? plan.indices[k + 1] : -1;
            AttentionIO io_u, io_c;
            io_u.record = &trace.uncond[k];
            io_c.record = &trace.cond[k];
            const VideoLatent eps = guided_predict(d, z, t, text_in, opts.cfg_scale, &io_u, &io_c);
            z = ddim_step(z, eps, t, t_prev, s);
        }
        if (opts.clamp_output) clamp01(z);
        video_input = z;
    }

    const int self_until = static_cast<int>(std::lround(opts.self_cutoff * steps));
    const int cross_until = static_cast<int>(std::lround(opts.cross_cutoff * steps));

    // pass 2: edited prompt from the same initial noise, with replacement
    VideoLatent video_edited;
    {
        VideoLatent z = z_init;
        for (int k = 0; k < steps; ++k) {
            const int t = plan.indices[k];
            const int t_prev = k + 1 < steps ? plan.indices[k + 1] : -1;
            const bool replace_self = k < self_until;
            const bool replace_cross = k < cross_until &&
                                       opts.cross_mode == CrossReplaceMode::ProbColumns;
            const bool swap_embedding = k < cross_until &&
                                        opts.cross_mode == CrossReplaceMode::EmbedSwap;

            AttentionIO io_u, io_c;
            AttentionIO* pu = nullptr;
            AttentionIO* pc = nullptr;
            if (replace_self || replace_cross) {
                io_u.inject = &trace.uncond[k];
                io_c.inject = &trace.cond[k];
                io_u.inject_self = io_c.inject_self = replace_self;
                io_u.inject_temporal = io_c.inject_temporal = replace_self;
                // the unconditional branch sees the null prompt in both
                // passes, so token-aligned replacement only applies to the
                // conditional branch
                io_c.inject_cross = replace_cross;
                io_c.cross_column_map = &column_map;
                pu = &io_u;
                pc = &io_c;
            }
            const PromptEmbedding& text = swap_embedding ? text_in : text_out;
            const VideoLatent eps = guided_predict(d, z, t, text, opts.cfg_scale, pu, pc);
            z = ddim_step(z, eps, t, t_prev, s);
        }
        if (opts.clamp_output) clamp01(z);
        video_edited = z;
    }

    return {std::move(video_input), std::move(video_edited)};
}

// --------------------------------------------------------------------- filter

EmbedderContract contract_of(const ToyEmbedder& e) {
    EmbedderContract c;
    c.image = [&e](const Image& img) { return e.embed_image(img); };
    c.text = [&e](const std::vector<std::string>& tokens) { return e.embed_text(tokens); };
    return c;
}

namespace {

double renormalized_direction(const std::vector<float>& d_img, const std::vector<float>& d_txt) {
    double n_img = 0.0, n_txt = 0.0;
    for (float x : d_img) n_img += static_cast<double>(x) * x;
    for (float x : d_txt) n_txt += static_cast<double>(x) * x;
    if (n_img < 1e-24 || n_txt < 1e-24) return 0.0;
    double dot = 0.0;
    for (std::size_t i = 0; i < d_img.size(); ++i) {
        dot += static_cast<double>(d_img[i]) * d_txt[i];
    }
    return dot / std::sqrt(n_img * n_txt);
}

}  // namespace

PairedSample score_and_filter(PairedSample sample, const EmbedderContract& embedder,
                              const FilterThresholds& thr) {
    check_same_shape(sample.input, sample.edited, "score_and_filter");
    const std::vector<float> t_in = embedder.text(tokenize(sample.triplet.input_prompt));
    const std::vector<float> t_out = embedder.text(tokenize(sample.triplet.edited_prompt));
    std::vector<float> d_txt(t_in.size());
    for (std::size_t i = 0; i < t_in.size(); ++i) d_txt[i] = t_out[i] - t_in[i];

    SampleScores acc;
    for (int fi = 0; fi < sample.input.f; ++fi) {
        const std::vector<float> e_in = embedder.image(frame_image(sample.input, 0, fi));
        const std::vector<float> e_out = embedder.image(frame_image(sample.edited, 0, fi));
        acc.text_input += cosine(e_in, t_in);
        acc.text_edited += cosine(e_out, t_out);
        acc.frame += cosine(e_in, e_out);
        std::vector<float> d_img(e_in.size());
        for (std::size_t i = 0; i < e_in.size(); ++i) d_img[i] = e_out[i] - e_in[i];
        acc.direction += renormalized_direction(d_img, d_txt);
    }
    const double inv = 1.0 / sample.input.f;
    sample.scores.text_input = acc.text_input * inv;
    sample.scores.text_edited = acc.text_edited * inv;
    sample.scores.direction = acc.direction * inv;
    sample.scores.frame = acc.frame * inv;
    sample.kept = sample.scores.text_input > thr.text && sample.scores.text_edited > thr.text &&
                  sample.scores.direction > thr.direction && sample.scores.frame > thr.frame;
    return sample;
}

// ------------------------------------------------------------ oracle denoiser

VideoLatent OracleNetDenoiser::predict_traced(const VideoLatent& z_t, int t,
                                              const ConditionPair& cond, AttentionIO& io) const {
    VideoLatent net;
    if (mix_ != 0.0f) net = toy_denoiser_forward(net_, z_t, t, cond, &io);
    const VideoLatent target = target_fn_(z_t, t, cond, mix_ != 0.0f ? &net : nullptr);
    check_same_shape(z_t, target, "oracle denoiser target");
    const double ab = schedule_.ab(t);
    const double denom = ab * static_cast<double>(sigma0_) * sigma0_ + 1.0 - ab;
    const float a = static_cast<float>(schedule_.sqrt_ab(t));
    const float scale = static_cast<float>(std::sqrt(1.0 - ab) / denom);
    VideoLatent out = z_t;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = scale * (z_t.data[i] - a * target.data[i]);
    }
    if (mix_ != 0.0f) {
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += mix_ * net.data[i];
    }
    return out;
}

namespace {

// Candidate object centers (fractions of width/height). The attention
// network's response helps select among them, which is what makes replacement
// lock structure between a recorded and a replayed pass.
constexpr std::array<std::pair<float, float>, 4> kAnchors = {
    {{0.32f, 0.32f}, {0.68f, 0.32f}, {0.32f, 0.68f}, {0.68f, 0.68f}}};

// Object-color evidence per anchor. The network response (prompt-sensitive
// and replaceable through the attention hooks) decides the race while the
// latent is still noise; the accumulated denoised estimate takes over and
// locks the choice once the object starts rendering somewhere.
int pick_anchor(const VideoLatent& z_t, double inv_sqrt_ab, const VideoLatent* net_out,
                const std::array<float, 3>& object_color) {
    constexpr double kNetWeight = 3.0;
    const float radius = 0.24f * static_cast<float>(std::min(z_t.h, z_t.w));
    int best = 0;
    double best_score = -1e300;
    for (std::size_t a = 0; a < kAnchors.size(); ++a) {
        const float cx = kAnchors[a].first * z_t.w;
        const float cy = kAnchors[a].second * z_t.h;
        double acc = 0.0;
        long count = 0;
        for (int y = 0; y < z_t.h; ++y) {
            for (int x = 0; x < z_t.w; ++x) {
                const float dx = static_cast<float>(x) - cx;
                const float dy = static_cast<float>(y) - cy;
                if (dx * dx + dy * dy > radius * radius) continue;
                for (int ci = 0; ci < std::min(3, z_t.c); ++ci) {
                    const float toward = object_color[ci] - 0.5f;
                    for (int fi = 0; fi < z_t.f; ++fi) {
                        double v = z_t.at(0, ci, fi, y, x) * inv_sqrt_ab - 0.5;
                        if (net_out != nullptr) v += kNetWeight * net_out->at(0, ci, fi, y, x);
                        acc += v * toward;
                        ++count;
                    }
                }
            }
        }
        const double score = count > 0 ? acc / count : 0.0;
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(a);
        }
    }
    return best;
}

}  // namespace

std::unique_ptr<OracleNetDenoiser> make_world_denoiser(const NoiseSchedule& s,
                                                       const ToyEmbedder& embedder, float mix,
                                                       float sigma0, std::uint64_t net_seed) {
    ToyDenoiserConfig cfg;
    cfg.timesteps = s.T;
    ToyDenoiserParams net = ToyDenoiserParams::init(cfg, net_seed, /*zero_init_temporal=*/false);
    // a strongly text-driven backbone: prompt changes move the prediction at
    // every timestep, so attention replacement has something to lock
    for (int k = 0; k < cfg.blocks; ++k) {
        for (float& w : net.t.get("block" + std::to_string(k) + ".cross.wo").v) w *= 6.0f;
    }
    OracleNetDenoiser::TargetFn target = [&embedder, s](const VideoLatent& z_t, int t,
                                                        const ConditionPair& cond,
                                                        const VideoLatent* net_out) {
        if (!cond.has_text()) {
            return VideoLatent::full(z_t.b, z_t.c, z_t.f, z_t.h, z_t.w, 0.5f);
        }
        SceneSpec spec = embedder.decode_scene(*cond.text, z_t.f);
        spec.radius = 0.18f;
        const int anchor = pick_anchor(z_t, 1.0 / s.sqrt_ab(t), net_out, spec.color);
        spec.cx = kAnchors[anchor].first;
        spec.cy = kAnchors[anchor].second;
        return render_scene(spec, z_t.h, z_t.w);
    };
    return std::make_unique<OracleNetDenoiser>(s, std::move(net), mix, sigma0, std::move(target));
}

}  // namespace videdit
