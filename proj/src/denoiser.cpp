#include "videdit/denoiser.hpp"

#include <cmath>
#include <stdexcept>

namespace videdit {

VideoLatent AnalyticGaussianDenoiser::predict(const VideoLatent& z_t, int t,
                                              const ConditionPair& /*cond*/) const {
    check_same_shape(z_t, mu_, "analytic denoiser");
    const double ab = schedule_.ab(t);
    const double s2 = static_cast<double>(sigma0_) * sigma0_;
    const double denom = ab * s2 + 1.0 - ab;
    if (!(denom > 0.0)) throw std::invalid_argument("analytic denoiser: degenerate denominator");
    const float scale = static_cast<float>(std::sqrt(1.0 - ab) / denom);
    const float a = static_cast<float>(schedule_.sqrt_ab(t));
    VideoLatent out = z_t;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = scale * (z_t.data[i] - a * mu_.data[i]);
    }
    return out;
}

ConditionPair condition_dropout(const ConditionPair& cond, SeededRng& rng, float p_v, float p_t) {
    if (p_v < 0.0f || p_v > 1.0f || p_t < 0.0f || p_t > 1.0f) {
        throw std::invalid_argument("condition_dropout: probabilities must be in [0,1]");
    }
    ConditionPair out = cond;
    const double u_v = rng.uniform();
    const double u_t = rng.uniform();
    if (u_v < p_v) out.video.reset();
    if (u_t < p_t) out.text.reset();
    return out;
}

}  // namespace videdit
