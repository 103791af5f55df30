#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace videdit {

/// Full run configuration; a run is a pure function of (RunConfig, inputs).
/// Loaded from JSON with a strict schema: unknown keys are errors.
struct RunConfig {
    std::uint64_t master_seed = 1234;
    int workers = 2;

    struct Schedule {
        int timesteps = 1000;
        double beta_min = 1e-4;
        double beta_max = 2e-2;
    } schedule;

    struct Plan {
        int ddim_steps = 30;
    } plan;

    struct Guidance {
        std::vector<float> s_video_grid = {1.2f, 1.5f, 1.8f};
        float s_text = 10.0f;
    } guidance;

    struct LongVideo {
        int batch_frames = 16;
        int reference_frames = 4;
        bool motion_compensation = false;
    } long_video;

    struct Datagen {
        std::string catalog = "builtin";
        int seeds_per_triplet = 2;
        int frames = 16;
        int resolution = 16;
        double threshold_text = 0.2;
        double threshold_direction = 0.2;
        double threshold_frame = 0.5;
        float oracle_mix = 0.2f;
        float oracle_sigma0 = 0.3f;
    } datagen;

    struct Train {
        int steps = 200;
        float lr = 2e-3f;
        int batch_size = 2;
        int width = 16;
        int blocks = 2;
        int attn_grid = 8;
        float dropout_video = 0.05f;
        float dropout_text = 0.05f;
    } train;

    struct Edit {
        std::vector<int> resolutions = {32, 48};
    } edit;

    static RunConfig defaults() { return {}; }
    /// Parse + validate; throws std::runtime_error naming any unknown key.
    static RunConfig load(const std::string& path);
    static RunConfig from_json_text(const std::string& text);

    std::string to_json_text() const;
    void validate() const;
};

}  // namespace videdit
