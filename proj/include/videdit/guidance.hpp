#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "videdit/denoiser.hpp"
#include "videdit/schedule.hpp"

namespace videdit {

/// Dual classifier-free guidance scales; both must be >= 1.
struct GuidanceConfig {
    float s_video = 1.5f;
    float s_text = 10.0f;

    void validate() const;
};

/// Three-way guided noise prediction:
///   eps(0,0) + s_V * (eps(cV,0) - eps(0,0)) + s_T * (eps(cV,cT) - eps(cV,0)).
/// Both conditions must be present; the partial/unconditional modes are
/// internal (null video -> all-zero tensor, null text -> empty prompt).
VideoLatent cfg_predict(const Denoiser& d, const VideoLatent& z_t, int t,
                        const ConditionPair& cond, const GuidanceConfig& g);

/// Deterministic guided sampling: z ~ N(0,I) seeded, then guided DDIM steps
/// down the plan. Identical (seed, cond, g, plan, params) give bitwise
/// identical output. Noise comes from SeededRng(seed, stream = 2*batch_index)
/// with batch_index 0 here, matching the long-video sampler's first batch.
VideoLatent sample_video(const Denoiser& d, const ConditionPair& cond, const GuidanceConfig& g,
                         const TimestepPlan& plan, const NoiseSchedule& s, std::uint64_t seed);

/// Hyperparameter sweep cells: video guidance scales x output resolutions at
/// a fixed text scale.
struct SweepGrid {
    std::vector<float> s_video;
    std::vector<std::pair<int, int>> resolutions;  // (h, w)
    float s_text = 10.0f;
};

/// Per-frame scorer: frame is a (1,c,1,h,w) tensor, embedding is the prompt
/// vector the frame is scored against.
using FrameScorer = std::function<double(const VideoLatent& frame, const std::vector<float>& embedding)>;

struct SweepCell {
    float s_video = 0.0f;
    int res_h = 0, res_w = 0;
    double score = 0.0;
    VideoLatent video;
};

struct SweepResult {
    std::vector<SweepCell> cells;  // enumeration order: s_video outer, resolution inner
    std::size_t best = 0;          // argmax score, first wins ties
};

/// Samples one video per grid cell (conditioning video resized per cell),
/// scores the mean per-frame scorer value, and picks the argmax. All cells
/// share `seed` so the sweep isolates hyperparameter effects. `workers`
/// bounds the parallel cell evaluations; results are independent of it.
SweepResult sweep_and_pick(const Denoiser& d, const ConditionPair& cond, const SweepGrid& grid,
                           const FrameScorer& scorer, const std::vector<float>& prompt_embedding,
                           const TimestepPlan& plan, const NoiseSchedule& s, std::uint64_t seed,
                           int workers = 1);

/// Index-parallel loop used for sweep cells and dataset work items; results
/// must be written to per-index slots so the outcome is pool-size independent.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

}  // namespace videdit
