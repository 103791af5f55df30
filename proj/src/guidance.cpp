#include "videdit/guidance.hpp"

#include <atomic>
#include <stdexcept>
#include <thread>

#include "videdit/flow.hpp"

namespace videdit {

void GuidanceConfig::validate() const {
    if (s_video < 1.0f || s_text < 1.0f) {
        throw std::invalid_argument("guidance: scales must be >= 1");
    }
}

VideoLatent cfg_predict(const Denoiser& d, const VideoLatent& z_t, int t,
                        const ConditionPair& cond, const GuidanceConfig& g) {
    g.validate();
    if (!cond.has_video() || !cond.has_text()) {
        throw std::invalid_argument("cfg_predict: both conditions must be present");
    }
    ConditionPair none;  // all-null: zero video + empty prompt at the model boundary
    ConditionPair video_only;
    video_only.video = cond.video;

    const VideoLatent e_uncond = d.predict(z_t, t, none);
    const VideoLatent e_video = d.predict(z_t, t, video_only);
    const VideoLatent e_full = d.predict(z_t, t, cond);
    check_same_shape(e_uncond, z_t, "cfg_predict: denoiser output");
    check_same_shape(e_video, z_t, "cfg_predict: denoiser output");
    check_same_shape(e_full, z_t, "cfg_predict: denoiser output");

    // combined in double so unit scales telescope to the full prediction exactly
    VideoLatent out = e_uncond;
    const double sv = g.s_video, st = g.s_text;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double u = e_uncond.data[i], v = e_video.data[i], f = e_full.data[i];
        out.data[i] = static_cast<float>(u + sv * (v - u) + st * (f - v));
    }
    return out;
}

VideoLatent sample_video(const Denoiser& d, const ConditionPair& cond, const GuidanceConfig& g,
                         const TimestepPlan& plan, const NoiseSchedule& s, std::uint64_t seed) {
    plan.validate(s.T);
    if (!cond.has_video()) throw std::invalid_argument("sample_video: video condition required");
    const VideoLatent& cv = *cond.video;

    SeededRng rng(seed, 0);
    VideoLatent z = VideoLatent::random_normal(cv.b, cv.c, cv.f, cv.h, cv.w, rng);
    for (int k = 0; k < plan.steps(); ++k) {
        const int t = plan.indices[k];
        const int t_prev = k + 1 < plan.steps() ? plan.indices[k + 1] : -1;
        const VideoLatent eps = cfg_predict(d, z, t, cond, g);
        z = ddim_step(z, eps, t, t_prev, s);
    }
    return z;
}

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
    if (count <= 0) return;
    workers = std::max(1, std::min(workers, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int wkr = 0; wkr < workers; ++wkr) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

SweepResult sweep_and_pick(const Denoiser& d, const ConditionPair& cond, const SweepGrid& grid,
                           const FrameScorer& scorer, const std::vector<float>& prompt_embedding,
                           const TimestepPlan& plan, const NoiseSchedule& s, std::uint64_t seed,
                           int workers) {
    if (grid.s_video.empty() || grid.resolutions.empty()) {
        throw std::invalid_argument("sweep: grid must be non-empty");
    }
    if (!cond.has_video() || !cond.has_text()) {
        throw std::invalid_argument("sweep: both conditions required");
    }

    SweepResult result;
    result.cells.resize(grid.s_video.size() * grid.resolutions.size());
    const int count = static_cast<int>(result.cells.size());

    parallel_for(count, workers, [&](int i) {
        const std::size_t si = static_cast<std::size_t>(i) / grid.resolutions.size();
        const std::size_t ri = static_cast<std::size_t>(i) % grid.resolutions.size();
        SweepCell& cell = result.cells[i];
        cell.s_video = grid.s_video[si];
        cell.res_h = grid.resolutions[ri].first;
        cell.res_w = grid.resolutions[ri].second;

        ConditionPair cell_cond = cond;
        cell_cond.video = resize_video(*cond.video, cell.res_h, cell.res_w);
        GuidanceConfig g;
        g.s_video = cell.s_video;
        g.s_text = grid.s_text;
        cell.video = sample_video(d, cell_cond, g, plan, s, seed);

        double acc = 0.0;
        for (int fi = 0; fi < cell.video.f; ++fi) {
            acc += scorer(slice_frames(cell.video, fi, 1), prompt_embedding);
        }
        cell.score = acc / cell.video.f;
    });

    result.best = 0;
    for (std::size_t i = 1; i < result.cells.size(); ++i) {
        if (result.cells[i].score > result.cells[result.best].score) result.best = i;
    }
    return result;
}

}  // namespace videdit
