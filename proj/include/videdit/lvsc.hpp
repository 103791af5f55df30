#pragma once

#include <vector>

#include "videdit/flow.hpp"
#include "videdit/guidance.hpp"

namespace videdit {

/// The last N decoded frames of the previous batch, used to steer the next
/// batch's denoising.
struct ReferenceWindow {
    VideoLatent frames;  // (1, c, N, h, w)
    int count() const { return frames.f; }
};

/// Segmentation of a long video into denoising batches: the first batch is
/// all new frames; every later batch prepends the previous batch's last N
/// frames as references, so it contributes at most (batch_frames - N) new
/// frames. New frames cover [0, total_frames) exactly once.
struct LongVideoPlan {
    int total_frames = 32;
    int batch_frames = 16;      // frames per denoised batch, references included
    int reference_frames = 4;   // N

    struct Segment {
        int start = 0;       // index of the first new frame
        int new_frames = 0;  // new frames produced by this batch
    };
    std::vector<Segment> segments() const;
    void validate() const;
};

enum class LvscMode { Off, On, OnWithMotionCompensation };

/// How the motion-compensated correction is assembled. CorrectionWarp warps
/// the per-reference residual (closed-form noise minus model prediction)
/// into each subsequent frame before averaging. LiteralReplace instead
/// replaces the prediction with the average warped closed-form noise alone;
/// it is a diagnostic mode, not the default.
enum class McForm { CorrectionWarp, LiteralReplace };

/// Score correction for subsequent frames: with eps_raw covering
/// [references | subsequent] (n_ref leading frames), returns the subsequent
/// part plus the average residual (eps_ref_closed - eps_raw[ref]) broadcast
/// over every subsequent frame.
VideoLatent lvsc_correct(const VideoLatent& eps_raw, const VideoLatent& eps_ref_closed, int n_ref);

/// Motion-compensated variant: output[m] = eps_raw_sub[m] + mean_i
/// warp(eps_ref_closed[i] - eps_raw_on_refs[i], flow i->m). `flows` holds one
/// field per (reference i, subsequent m) pair, row-major i * M + m.
VideoLatent mc_lvsc_correct(const VideoLatent& eps_raw_sub, const VideoLatent& eps_ref_closed,
                            const VideoLatent& eps_raw_on_refs, const std::vector<FlowField>& flows,
                            int n_ref, McForm form = McForm::CorrectionWarp);

struct BoundaryDiagnostic {
    int frame_index = 0;  // first frame of the later batch's new frames
};

struct LongVideoResult {
    VideoLatent video;  // total_frames frames, each emitted by exactly one batch
    std::vector<BoundaryDiagnostic> boundaries;
};

/// Long-video guided sampling. Per later batch and per denoising timestep the
/// reference window is re-noised with fresh seeded noise, its closed-form
/// noise is computed, the guided prediction runs on [references | new], the
/// correction is applied to the guided prediction, and only the new frames
/// take the DDIM step. Noise streams: batch j draws its initial latents from
/// stream 2j and its per-step reference noise from stream 2j+1, so a
/// single-batch plan reproduces sample_video exactly.
///
/// With motion compensation, flows are estimated on the conditioning video
/// between reference-slot frames and each new-frame slot (the edited output
/// inherits the input's motion, and the input is the only full-length video
/// available during sampling).
LongVideoResult sample_long_video(const Denoiser& d, const ConditionPair& cond_full,
                                  const GuidanceConfig& g, const TimestepPlan& plan,
                                  const NoiseSchedule& s, const LongVideoPlan& lplan,
                                  std::uint64_t seed, LvscMode mode,
                                  const FlowParams& flow_params = {});

}  // namespace videdit
