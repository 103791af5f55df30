#include "videdit/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace videdit {

namespace {

using json = nlohmann::ordered_json;

void check_keys(const json& j, const std::string& where, const std::set<std::string>& known) {
    if (!j.is_object()) throw std::runtime_error("config: " + where + " must be an object");
    for (const auto& item : j.items()) {
        if (known.find(item.key()) == known.end()) {
            throw std::runtime_error("config: unknown key '" + where + item.key() + "'");
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j = json::parse(text);
    check_keys(j, "", {"master_seed", "workers", "schedule", "plan", "guidance", "long_video",
                       "datagen", "train", "edit"});
    RunConfig c;
    read(j, "master_seed", c.master_seed);
    read(j, "workers", c.workers);
    if (j.contains("schedule")) {
        const json& s = j.at("schedule");
        check_keys(s, "schedule.", {"timesteps", "beta_min", "beta_max"});
        read(s, "timesteps", c.schedule.timesteps);
        read(s, "beta_min", c.schedule.beta_min);
        read(s, "beta_max", c.schedule.beta_max);
    }
    if (j.contains("plan")) {
        const json& s = j.at("plan");
        check_keys(s, "plan.", {"ddim_steps"});
        read(s, "ddim_steps", c.plan.ddim_steps);
    }
    if (j.contains("guidance")) {
        const json& s = j.at("guidance");
        check_keys(s, "guidance.", {"s_video_grid", "s_text"});
        read(s, "s_video_grid", c.guidance.s_video_grid);
        read(s, "s_text", c.guidance.s_text);
    }
    if (j.contains("long_video")) {
        const json& s = j.at("long_video");
        check_keys(s, "long_video.", {"batch_frames", "reference_frames", "motion_compensation"});
        read(s, "batch_frames", c.long_video.batch_frames);
        read(s, "reference_frames", c.long_video.reference_frames);
        read(s, "motion_compensation", c.long_video.motion_compensation);
    }
    if (j.contains("datagen")) {
        const json& s = j.at("datagen");
        check_keys(s, "datagen.", {"catalog", "seeds_per_triplet", "frames", "resolution",
                                    "thresholds", "oracle_mix", "oracle_sigma0"});
        read(s, "catalog", c.datagen.catalog);
        read(s, "seeds_per_triplet", c.datagen.seeds_per_triplet);
        read(s, "frames", c.datagen.frames);
        read(s, "resolution", c.datagen.resolution);
        read(s, "oracle_mix", c.datagen.oracle_mix);
        read(s, "oracle_sigma0", c.datagen.oracle_sigma0);
        if (s.contains("thresholds")) {
            const json& t = s.at("thresholds");
            check_keys(t, "datagen.thresholds.", {"text", "direction", "frame"});
            read(t, "text", c.datagen.threshold_text);
            read(t, "direction", c.datagen.threshold_direction);
            read(t, "frame", c.datagen.threshold_frame);
        }
    }
    if (j.contains("train")) {
        const json& s = j.at("train");
        check_keys(s, "train.", {"steps", "lr", "batch_size", "width", "blocks", "attn_grid",
                                  "dropout_video", "dropout_text"});
        read(s, "steps", c.train.steps);
        read(s, "lr", c.train.lr);
        read(s, "batch_size", c.train.batch_size);
        read(s, "width", c.train.width);
        read(s, "blocks", c.train.blocks);
        read(s, "attn_grid", c.train.attn_grid);
        read(s, "dropout_video", c.train.dropout_video);
        read(s, "dropout_text", c.train.dropout_text);
    }
    if (j.contains("edit")) {
        const json& s = j.at("edit");
        check_keys(s, "edit.", {"resolutions"});
        read(s, "resolutions", c.edit.resolutions);
    }
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

void RunConfig::validate() const {
    if (workers < 1) throw std::runtime_error("config: workers must be >= 1");
    if (schedule.timesteps < 2) throw std::runtime_error("config: schedule.timesteps must be >= 2");
    if (!(schedule.beta_min > 0.0) || !(schedule.beta_min <= schedule.beta_max) ||
        !(schedule.beta_max < 1.0)) {
        throw std::runtime_error("config: schedule betas must satisfy 0 < min <= max < 1");
    }
    if (plan.ddim_steps < 1 || plan.ddim_steps > schedule.timesteps) {
        throw std::runtime_error("config: plan.ddim_steps out of range");
    }
    if (guidance.s_video_grid.empty()) throw std::runtime_error("config: empty s_video_grid");
    for (float s : guidance.s_video_grid) {
        if (s < 1.0f) throw std::runtime_error("config: guidance scales must be >= 1");
    }
    if (guidance.s_text < 1.0f) throw std::runtime_error("config: guidance scales must be >= 1");
    if (long_video.reference_frames < 1 ||
        long_video.reference_frames >= long_video.batch_frames) {
        throw std::runtime_error("config: need 1 <= reference_frames < batch_frames");
    }
    if (datagen.seeds_per_triplet < 1) throw std::runtime_error("config: seeds_per_triplet >= 1");
    if (datagen.frames < 1 || datagen.resolution < 8) {
        throw std::runtime_error("config: datagen frames/resolution too small");
    }
    if (train.steps < 0 || train.batch_size < 1) throw std::runtime_error("config: bad train section");
    if (edit.resolutions.empty()) throw std::runtime_error("config: empty edit.resolutions");
}

std::string RunConfig::to_json_text() const {
    json j;
    j["master_seed"] = master_seed;
    j["workers"] = workers;
    j["schedule"] = {{"timesteps", schedule.timesteps},
                     {"beta_min", schedule.beta_min},
                     {"beta_max", schedule.beta_max}};
    j["plan"] = {{"ddim_steps", plan.ddim_steps}};
    j["guidance"] = {{"s_video_grid", guidance.s_video_grid}, {"s_text", guidance.s_text}};
    j["long_video"] = {{"batch_frames", long_video.batch_frames},
                       {"reference_frames", long_video.reference_frames},
                       {"motion_compensation", long_video.motion_compensation}};
    j["datagen"] = {{"catalog", datagen.catalog},
                    {"seeds_per_triplet", datagen.seeds_per_triplet},
                    {"frames", datagen.frames},
                    {"resolution", datagen.resolution},
                    {"thresholds",
                     {{"text", datagen.threshold_text},
                      {"direction", datagen.threshold_direction},
                      {"frame", datagen.threshold_frame}}},
                    {"oracle_mix", datagen.oracle_mix},
                    {"oracle_sigma0", datagen.oracle_sigma0}};
    j["train"] = {{"steps", train.steps},
                  {"lr", train.lr},
                  {"batch_size", train.batch_size},
                  {"width", train.width},
                  {"blocks", train.blocks},
                  {"attn_grid", train.attn_grid},
                  {"dropout_video", train.dropout_video},
                  {"dropout_text", train.dropout_text}};
    j["edit"] = {{"resolutions", edit.resolutions}};
    return j.dump(2) + "\n";
}

}  // namespace videdit
