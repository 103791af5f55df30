#include "videdit/lvsc.hpp"

#include <stdexcept>

namespace videdit {

void LongVideoPlan::validate() const {
    if (total_frames < 1 || batch_frames < 1) throw std::invalid_argument("long video plan: bad sizes");
    if (reference_frames < 1 || reference_frames >= batch_frames) {
        throw std::invalid_argument("long video plan: need 1 <= N < batch_frames");
    }
    if (total_frames < batch_frames) {
        throw std::invalid_argument("long video plan: total shorter than one batch");
    }
}

std::vector<LongVideoPlan::Segment> LongVideoPlan::segments() const {
    validate();
    std::vector<Segment> segs;
    segs.push_back({0, batch_frames});
    int produced = batch_frames;
    while (produced < total_frames) {
        const int n = std::min(batch_frames - reference_frames, total_frames - produced);
        segs.push_back({produced, n});
        produced += n;
    }
    return segs;
}

VideoLatent lvsc_correct(const VideoLatent& eps_raw, const VideoLatent& eps_ref_closed, int n_ref) {
    if (n_ref < 1 || n_ref >= eps_raw.f) throw std::invalid_argument("lvsc_correct: bad N");
    if (eps_ref_closed.f != n_ref || eps_ref_closed.b != eps_raw.b ||
        eps_ref_closed.c != eps_raw.c || eps_ref_closed.h != eps_raw.h ||
        eps_ref_closed.w != eps_raw.w) {
        throw std::invalid_argument("lvsc_correct: reference noise shape mismatch");
    }
    const int m_sub = eps_raw.f - n_ref;
    VideoLatent out = slice_frames(eps_raw, n_ref, m_sub);

    // mean over reference frames of (closed-form noise - model prediction)
    VideoLatent corr(eps_raw.b, eps_raw.c, 1, eps_raw.h, eps_raw.w);
    const double inv_n = 1.0 / n_ref;
    for (int bi = 0; bi < eps_raw.b; ++bi) {
        for (int ci = 0; ci < eps_raw.c; ++ci) {
            for (int y = 0; y < eps_raw.h; ++y) {
                for (int x = 0; x < eps_raw.w; ++x) {
                    double acc = 0.0;
                    for (int i = 0; i < n_ref; ++i) {
                        acc += static_cast<double>(eps_ref_closed.at(bi, ci, i, y, x)) -
                               eps_raw.at(bi, ci, i, y, x);
                    }
                    corr.at(bi, ci, 0, y, x) = static_cast<float>(acc * inv_n);
                }
            }
        }
    }
    for (int bi = 0; bi < out.b; ++bi) {
        for (int ci = 0; ci < out.c; ++ci) {
            for (int fi = 0; fi < m_sub; ++fi) {
                for (int y = 0; y < out.h; ++y) {
                    for (int x = 0; x < out.w; ++x) {
                        out.at(bi, ci, fi, y, x) += corr.at(bi, ci, 0, y, x);
                    }
                }
            }
        }
    }
    return out;
}

VideoLatent mc_lvsc_correct(const VideoLatent& eps_raw_sub, const VideoLatent& eps_ref_closed,
                            const VideoLatent& eps_raw_on_refs, const std::vector<FlowField>& flows,
                            int n_ref, McForm form) {
    check_same_shape(eps_ref_closed, eps_raw_on_refs, "mc_lvsc_correct: reference tensors");
    if (eps_ref_closed.f != n_ref) throw std::invalid_argument("mc_lvsc_correct: N mismatch");
    const int m_sub = eps_raw_sub.f;
    if (flows.size() != static_cast<std::size_t>(n_ref) * m_sub) {
        throw std::invalid_argument("mc_lvsc_correct: need one flow per (reference, frame) pair");
    }
    for (const FlowField& fl : flows) {
        if (fl.h != eps_raw_sub.h || fl.w != eps_raw_sub.w) {
            throw std::invalid_argument("mc_lvsc_correct: flow grid shape mismatch");
        }
    }
    if (eps_raw_sub.b != 1) throw std::invalid_argument("mc_lvsc_correct: batch size must be 1");

    VideoLatent out = eps_raw_sub;
    const float inv_n = 1.0f / static_cast<float>(n_ref);
    for (int m = 0; m < m_sub; ++m) {
        VideoLatent acc(1, eps_raw_sub.c, 1, eps_raw_sub.h, eps_raw_sub.w);
        for (int i = 0; i < n_ref; ++i) {
            // residual (or, in the literal diagnostic form, the closed-form
            // noise itself) in reference-frame coordinates
            Image term(eps_raw_sub.c, eps_raw_sub.h, eps_raw_sub.w);
            for (int ci = 0; ci < term.c; ++ci) {
                for (int y = 0; y < term.h; ++y) {
                    for (int x = 0; x < term.w; ++x) {
                        term.at(ci, y, x) =
                            form == McForm::CorrectionWarp
                                ? eps_ref_closed.at(0, ci, i, y, x) - eps_raw_on_refs.at(0, ci, i, y, x)
                                : eps_ref_closed.at(0, ci, i, y, x);
                    }
                }
            }
            const Image warped = warp(term, flows[static_cast<std::size_t>(i) * m_sub + m]);
            for (int ci = 0; ci < term.c; ++ci) {
                for (int y = 0; y < term.h; ++y) {
                    for (int x = 0; x < term.w; ++x) {
                        acc.at(0, ci, 0, y, x) += warped.at(ci, y, x) * inv_n;
                    }
                }
            }
        }
        for (int ci = 0; ci < out.c; ++ci) {
            for (int y = 0; y < out.h; ++y) {
                for (int x = 0; x < out.w; ++x) {
                    if (form == McForm::CorrectionWarp) {
                        out.at(0, ci, m, y, x) += acc.at(0, ci, 0, y, x);
                    } else {
                        out.at(0, ci, m, y, x) = acc.at(0, ci, 0, y, x);
                    }
                }
            }
        }
    }
    return out;
}

LongVideoResult sample_long_video(const Denoiser& d, const ConditionPair& cond_full,
                                  const GuidanceConfig& g, const TimestepPlan& plan,
                                  const NoiseSchedule& s, const LongVideoPlan& lplan,
                                  std::uint64_t seed, LvscMode mode,
                                  const FlowParams& flow_params) {
    plan.validate(s.T);
    lplan.validate();
    if (!cond_full.has_video() || !cond_full.has_text()) {
        throw std::invalid_argument("sample_long_video: both conditions required");
    }
    const VideoLatent& cv_full = *cond_full.video;
    if (cv_full.f != lplan.total_frames) {
        throw std::invalid_argument("sample_long_video: conditioning video frame count != plan total");
    }
    if (cv_full.b != 1) throw std::invalid_argument("sample_long_video: batch size must be 1");

    const std::vector<LongVideoPlan::Segment> segs = lplan.segments();
    const int n_ref = lplan.reference_frames;

    LongVideoResult result;
    VideoLatent emitted;  // grows batch by batch

    for (std::size_t j = 0; j < segs.size(); ++j) {
        const LongVideoPlan::Segment& seg = segs[j];
        const bool first = j == 0;
        SeededRng init_rng(seed, 2 * static_cast<std::uint64_t>(j));
        SeededRng renoise_rng(seed, 2 * static_cast<std::uint64_t>(j) + 1);

        // conditioning slice covers [references | new frames]
        const int cond_start = first ? seg.start : seg.start - n_ref;
        const int cond_count = first ? seg.new_frames : n_ref + seg.new_frames;
        ConditionPair cond_batch = cond_full;
        cond_batch.video = slice_frames(cv_full, cond_start, cond_count);

        VideoLatent z_sub = VideoLatent::random_normal(1, cv_full.c, seg.new_frames, cv_full.h,
                                                       cv_full.w, init_rng);

        if (first) {
            for (int k = 0; k < plan.steps(); ++k) {
                const int t = plan.indices[k];
                const int t_prev = k + 1 < plan.steps() ? plan.indices[k + 1] : -1;
                const VideoLatent eps = cfg_predict(d, z_sub, t, cond_batch, g);
                z_sub = ddim_step(z_sub, eps, t, t_prev, s);
            }
            emitted = z_sub;
            continue;
        }

        result.boundaries.push_back({seg.start});
        const VideoLatent z_ref = slice_frames(emitted, emitted.f - n_ref, n_ref);

        // motion-compensation flows from the conditioning video: reference
        // slot i onto new-frame slot m
        std::vector<FlowField> flows;
        if (mode == LvscMode::OnWithMotionCompensation) {
            flows.reserve(static_cast<std::size_t>(n_ref) * seg.new_frames);
            for (int i = 0; i < n_ref; ++i) {
                const Image ref_img = frame_image(*cond_batch.video, 0, i);
                for (int m = 0; m < seg.new_frames; ++m) {
                    const Image sub_img = frame_image(*cond_batch.video, 0, n_ref + m);
                    flows.push_back(estimate_flow(ref_img, sub_img, flow_params));
                }
            }
        }

        for (int k = 0; k < plan.steps(); ++k) {
            const int t = plan.indices[k];
            const int t_prev = k + 1 < plan.steps() ? plan.indices[k + 1] : -1;

            // fresh per-timestep renoising keeps the references on the true
            // marginal; the closed-form noise then equals the injected noise
            VideoLatent ref_noise(1, z_ref.c, n_ref, z_ref.h, z_ref.w);
            renoise_rng.fill_normal(ref_noise.data);
            const VideoLatent z_t_ref = forward_diffuse(z_ref, ref_noise, t, s);
            const VideoLatent eps_ref_closed = infer_reference_noise(z_t_ref, z_ref, t, s);

            const VideoLatent z_combined = concat_frames(z_t_ref, z_sub);
            const VideoLatent eps_guided = cfg_predict(d, z_combined, t, cond_batch, g);

            VideoLatent eps_sub;
            switch (mode) {
                case LvscMode::Off:
                    eps_sub = slice_frames(eps_guided, n_ref, seg.new_frames);
                    break;
                case LvscMode::On:
                    eps_sub = lvsc_correct(eps_guided, eps_ref_closed, n_ref);
                    break;
                case LvscMode::OnWithMotionCompensation:
                    eps_sub = mc_lvsc_correct(slice_frames(eps_guided, n_ref, seg.new_frames),
                                              eps_ref_closed, slice_frames(eps_guided, 0, n_ref),
                                              flows, n_ref);
                    break;
            }
            z_sub = ddim_step(z_sub, eps_sub, t, t_prev, s);
        }
        emitted = concat_frames(emitted, z_sub);
    }

    if (emitted.f != lplan.total_frames) {
        throw std::runtime_error("sample_long_video: frame accounting error");
    }
    result.video = std::move(emitted);
    return result;
}

}  // namespace videdit
