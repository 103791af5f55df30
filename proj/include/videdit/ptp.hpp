#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "videdit/guidance.hpp"
#include "videdit/toy_denoiser.hpp"
#include "videdit/toyworld.hpp"

namespace videdit {

/// Randomized paired-generation recipe: self/temporal replacement cutoff
/// ~ U[0.30, 0.45], cross replacement cutoff ~ U[0.60, 0.85], guidance scale
/// uniform over the integers 5..12, 30 denoising steps.
struct GenerationDraw {
    float self_cutoff = 0.0f;
    float cross_cutoff = 0.0f;
    int cfg_scale = 5;
    int steps = 30;
};

GenerationDraw sample_generation_config(SeededRng& rng);

/// How cross-attention replacement treats shared tokens: inject the recorded
/// per-token probability columns (default), or swap in the source prompt's
/// embedding wholesale before the cutoff.
enum class CrossReplaceMode { ProbColumns, EmbedSwap };

struct PtpOptions {
    float self_cutoff = 0.4f;   // also gates temporal attention replacement
    float cross_cutoff = 0.7f;
    float cfg_scale = 7.0f;     // prompt guidance (single-condition)
    CrossReplaceMode cross_mode = CrossReplaceMode::ProbColumns;
    bool clamp_output = true;  // clamp the finished videos to [0,1]
};

/// Shared-token alignment between two prompts: common prefix, then exact
/// token matching in order. result[j] = source index or -1.
std::vector<int> align_tokens(const std::vector<std::string>& source,
                              const std::vector<std::string>& target);

/// Paired generation: pass 1 samples the input prompt and records every
/// attention matrix; pass 2 samples the edited prompt from the same initial
/// noise, replacing self- and temporal-attention for the first
/// self_cutoff*steps steps and shared-token cross-attention for the first
/// cross_cutoff*steps steps. Both passes share `seed`.
std::pair<VideoLatent, VideoLatent> ptp_generate_pair(
    const TracedDenoiser& d, const ToyEmbedder& embedder, const PromptTriplet& triplet,
    std::uint64_t seed, const PtpOptions& opts, const NoiseSchedule& s, int frames, int height,
    int width);

// ------------------------------------------------------------------- filter

struct FilterThresholds {
    double text = 0.2;
    double direction = 0.2;
    double frame = 0.5;
};

struct SampleScores {
    double text_input = 0.0;
    double text_edited = 0.0;
    double direction = 0.0;
    double frame = 0.0;
};

struct PairedSample {
    VideoLatent input;
    VideoLatent edited;
    PromptTriplet triplet;
    SampleScores scores;
    bool kept = false;
};

/// Injected joint embedding space for filtering and scoring.
struct EmbedderContract {
    std::function<std::vector<float>(const Image&)> image;
    std::function<std::vector<float>(const std::vector<std::string>&)> text;
};

EmbedderContract contract_of(const ToyEmbedder& e);

/// Per-frame scores averaged over frames:
///   text: cosine(frame, its prompt) for both videos,
///   direction: cosine of re-normalized (edited-input) differences in image
///   and text space (zero difference scores 0),
///   frame: cosine(input frame, edited frame).
/// kept iff text_in > thr.text, text_out > thr.text, direction >
/// thr.direction, frame > thr.frame.
PairedSample score_and_filter(PairedSample sample, const EmbedderContract& embedder,
                              const FilterThresholds& thr = {});

// ----------------------------------------------------------- oracle denoiser

/// Denoiser combining a Gaussian-posterior pull toward a per-call target
/// video with a small attention network:
///   eps = sqrt(1-ab) * (z_t - sqrt(ab)*target) / (ab*sigma0^2 + 1-ab)
///         + mix * net(z_t, t, c).
/// With the target decoded from the prompt it stands in for a pretrained
/// text-to-video backbone. sigma0 > 0 keeps per-step deviations alive all the
/// way to the output, so the attention network (and anything injected into
/// it) genuinely shapes the sample instead of being re-contracted away.
class OracleNetDenoiser : public TracedDenoiser {
public:
    /// Target builder; `net_out` is the attention network's prediction for
    /// this call (null when mix = 0), letting the target's structure depend
    /// on the network state.
    using TargetFn = std::function<VideoLatent(const VideoLatent& z_t, int t,
                                               const ConditionPair& cond,
                                               const VideoLatent* net_out)>;

    OracleNetDenoiser(NoiseSchedule schedule, ToyDenoiserParams net, float mix, float sigma0,
                      TargetFn target_fn)
        : schedule_(std::move(schedule)), net_(std::move(net)), mix_(mix), sigma0_(sigma0),
          target_fn_(std::move(target_fn)) {}

    VideoLatent predict_traced(const VideoLatent& z_t, int t, const ConditionPair& cond,
                               AttentionIO& io) const override;

private:
    NoiseSchedule schedule_;
    ToyDenoiserParams net_;
    float mix_;
    float sigma0_;
    TargetFn target_fn_;
};

/// World-backed text-to-video stand-in: target = rendered scene decoded from
/// the prompt embedding (mid-gray video when the prompt is null).
std::unique_ptr<OracleNetDenoiser> make_world_denoiser(const NoiseSchedule& s,
                                                       const ToyEmbedder& embedder, float mix,
                                                       float sigma0, std::uint64_t net_seed);

}  // namespace videdit
