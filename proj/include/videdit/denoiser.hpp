#pragma once

#include <optional>
#include <vector>

#include "videdit/rng.hpp"
#include "videdit/schedule.hpp"
#include "videdit/tensor.hpp"

namespace videdit {

/// Sequence of per-token embedding vectors (length x width, row-major).
/// Tokens are unit-norm except the empty-prompt encoding, which is a single
/// all-zero token so attention shapes stay valid.
struct PromptEmbedding {
    int length = 0;
    int width = 0;
    std::vector<float> data;

    PromptEmbedding() = default;
    PromptEmbedding(int length_, int width_)
        : length(length_), width(width_),
          data(static_cast<std::size_t>(length_) * width_, 0.0f) {}

    static PromptEmbedding empty_prompt(int width) { return PromptEmbedding(1, width); }

    float& at(int l, int d) { return data[static_cast<std::size_t>(l) * width + d]; }
    float at(int l, int d) const { return data[static_cast<std::size_t>(l) * width + d]; }
};

/// The two conditioning signals: a reference video and a prompt embedding,
/// each independently nullable. Null encodes as an all-zero video / the
/// empty-prompt embedding at the model boundary.
struct ConditionPair {
    std::optional<VideoLatent> video;
    std::optional<PromptEmbedding> text;

    bool has_video() const { return video.has_value(); }
    bool has_text() const { return text.has_value(); }
};

/// Noise-prediction contract: eps = predict(z_t, t, cond), same shape as z_t,
/// all entries finite. Implementations must be pure given their parameters.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual VideoLatent predict(const VideoLatent& z_t, int t, const ConditionPair& cond) const = 0;
};

/// Exact posterior-mean noise predictor for data ~ N(mu, sigma0^2 I):
///   eps(z_t) = sqrt(1-ab_t) * (z_t - sqrt(ab_t)*mu) / (ab_t*sigma0^2 + 1 - ab_t).
/// Ignores conditions; used as a closed-form oracle in sampling tests.
class AnalyticGaussianDenoiser : public Denoiser {
public:
    AnalyticGaussianDenoiser(NoiseSchedule schedule, VideoLatent mu, float sigma0)
        : schedule_(std::move(schedule)), mu_(std::move(mu)), sigma0_(sigma0) {}

    VideoLatent predict(const VideoLatent& z_t, int t, const ConditionPair& cond) const override;

private:
    NoiseSchedule schedule_;
    VideoLatent mu_;
    float sigma0_;
};

/// Independently nullifies the video condition with probability p_v and the
/// text condition with probability p_t (two uniform draws, video first).
ConditionPair condition_dropout(const ConditionPair& cond, SeededRng& rng, float p_v = 0.05f,
                                float p_t = 0.05f);

}  // namespace videdit
