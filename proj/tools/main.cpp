// Command-line front end: synthetic paired-data generation, denoiser
// training, guided video editing (single batch and long video), and metric
// evaluation. Every command is a pure function of (config, inputs): repeated
// runs produce bitwise-identical artifacts.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "videdit/config.hpp"
#include "videdit/guidance.hpp"
#include "videdit/lvsc.hpp"
#include "videdit/ptp.hpp"
#include "videdit/toy_denoiser.hpp"
#include "videdit/toyworld.hpp"
#include "videdit/vten_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace videdit;

namespace {

// Named internal invariant; failure exits nonzero citing the check.
struct CheckError : std::runtime_error {
    explicit CheckError(const std::string& name)
        : std::runtime_error("invariant check failed: " + name) {}
};

void check(bool ok, const std::string& name) {
    if (!ok) throw CheckError(name);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string format_scale(float v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", static_cast<double>(v));
    return buf;
}

VideoLatent clamped01(const VideoLatent& v) {
    VideoLatent out = v;
    for (float& x : out.data) x = std::min(1.0f, std::max(0.0f, x));
    return out;
}

void dump_frames_ppm(const VideoLatent& video, const std::string& dir) {
    fs::create_directories(dir);
    check(video.c >= 1, "frame-dump-channels");
    for (int fi = 0; fi < video.f; ++fi) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%03d.ppm", fi);
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        out << "P6\n" << video.w << " " << video.h << "\n255\n";
        for (int y = 0; y < video.h; ++y) {
            for (int x = 0; x < video.w; ++x) {
                for (int pc = 0; pc < 3; ++pc) {
                    const int ci = std::min(pc, video.c - 1);
                    float v = video.at(0, ci, fi, y, x);
                    v = std::min(1.0f, std::max(0.0f, v));
                    out.put(static_cast<char>(std::lround(v * 255.0f)));
                }
            }
        }
    }
}

std::vector<PromptTriplet> load_catalog(const std::string& spec) {
    if (spec == "builtin") return builtin_catalog();
    std::ifstream in(spec);
    if (!in) throw std::runtime_error("cannot open catalog: " + spec);
    json j = json::parse(in);
    std::vector<PromptTriplet> catalog;
    for (const json& item : j) {
        PromptTriplet t;
        t.input_prompt = item.at("input").get<std::string>();
        t.edit_prompt = item.at("edit").get<std::string>();
        t.edited_prompt = item.at("edited").get<std::string>();
        catalog.push_back(std::move(t));
    }
    return catalog;
}

NoiseSchedule schedule_of(const RunConfig& cfg) {
    return NoiseSchedule::linear(cfg.schedule.timesteps, cfg.schedule.beta_min,
                                 cfg.schedule.beta_max);
}

ToyDenoiserConfig arch_of(const RunConfig& cfg) {
    ToyDenoiserConfig arch;
    arch.width = cfg.train.width;
    arch.blocks = cfg.train.blocks;
    arch.attn_grid = cfg.train.attn_grid;
    arch.text_width = ToyEmbedder::kWidth;
    arch.timesteps = cfg.schedule.timesteps;
    return arch;
}

// ----------------------------------------------------------------- gen-data

int cmd_gen_data(const RunConfig& cfg, const std::string& out_dir) {
    const std::vector<PromptTriplet> catalog = load_catalog(cfg.datagen.catalog);
    if (catalog.empty()) throw std::runtime_error("empty catalog");

    const NoiseSchedule s = schedule_of(cfg);
    ToyEmbedder embedder;
    const auto world = make_world_denoiser(s, embedder, cfg.datagen.oracle_mix,
                                           cfg.datagen.oracle_sigma0,
                                           SeededRng::stream_of("world-net") ^ cfg.master_seed);
    const EmbedderContract contract = contract_of(embedder);
    FilterThresholds thresholds;
    thresholds.text = cfg.datagen.threshold_text;
    thresholds.direction = cfg.datagen.threshold_direction;
    thresholds.frame = cfg.datagen.threshold_frame;

    fs::create_directories(out_dir);
    const int seeds = cfg.datagen.seeds_per_triplet;
    const int total = static_cast<int>(catalog.size()) * seeds;
    std::vector<PairedSample> samples(total);
    std::vector<GenerationDraw> draws(total);
    std::vector<std::uint64_t> sample_seeds(total);

    parallel_for(total, cfg.workers, [&](int idx) {
        const int ti = idx / seeds;
        SeededRng draw_rng(cfg.master_seed, SeededRng::stream_of("datagen-draw") + idx);
        const GenerationDraw draw = sample_generation_config(draw_rng);
        const std::uint64_t seed =
            SeededRng(cfg.master_seed, SeededRng::stream_of("datagen-seed") + idx).next_u64();

        PtpOptions opts;
        opts.self_cutoff = draw.self_cutoff;
        opts.cross_cutoff = draw.cross_cutoff;
        opts.cfg_scale = static_cast<float>(draw.cfg_scale);
        auto [vin, vedit] =
            ptp_generate_pair(*world, embedder, catalog[ti], seed, opts, s, cfg.datagen.frames,
                              cfg.datagen.resolution, cfg.datagen.resolution);

        PairedSample sample;
        sample.triplet = catalog[ti];
        sample.input = std::move(vin);
        sample.edited = std::move(vedit);
        samples[idx] = score_and_filter(std::move(sample), contract, thresholds);
        draws[idx] = draw;
        sample_seeds[idx] = seed;
    });

    json manifest;
    manifest["format"] = "videdit-dataset-v1";
    json list = json::array();
    json kept_list = json::array();
    int kept = 0;
    for (int idx = 0; idx < total; ++idx) {
        const PairedSample& ps = samples[idx];
        char name[32];
        std::snprintf(name, sizeof(name), "sample_%04d", idx);
        const fs::path dir = fs::path(out_dir) / name;
        fs::create_directories(dir);
        check(ps.input.all_finite() && ps.edited.all_finite(), "finite-sample");
        write_video_vten((dir / "input.vten").string(), ps.input);
        write_video_vten((dir / "edited.vten").string(), ps.edited);

        json meta;
        meta["triplet"] = {{"input", ps.triplet.input_prompt},
                           {"edit", ps.triplet.edit_prompt},
                           {"edited", ps.triplet.edited_prompt}};
        meta["seed"] = sample_seeds[idx];
        meta["draw"] = {{"self_cutoff", draws[idx].self_cutoff},
                        {"cross_cutoff", draws[idx].cross_cutoff},
                        {"cfg_scale", draws[idx].cfg_scale},
                        {"steps", draws[idx].steps}};
        meta["scores"] = {{"text_input", ps.scores.text_input},
                          {"text_edited", ps.scores.text_edited},
                          {"direction", ps.scores.direction},
                          {"frame", ps.scores.frame}};
        meta["kept"] = ps.kept;
        std::ofstream mo(dir / "meta.json");
        mo << meta.dump(2) << "\n";

        list.push_back({{"name", name}, {"kept", ps.kept}});
        if (ps.kept) {
            kept_list.push_back(name);
            ++kept;
        }
    }
    manifest["samples"] = list;
    manifest["kept"] = kept_list;
    const double rate = total > 0 ? static_cast<double>(kept) / total : 0.0;
    manifest["acceptance_rate"] = rate;
    std::ofstream mo(fs::path(out_dir) / "manifest.json");
    mo << manifest.dump(2) << "\n";
    check(static_cast<bool>(mo), "manifest-written");

    std::printf("dataset dir=%s candidates=%d kept=%d acceptance-rate=%s\n", out_dir.c_str(),
                total, kept, format_double(rate).c_str());
    return 0;
}

// -------------------------------------------------------------------- train

int cmd_train(const RunConfig& cfg, const std::string& dataset, const std::string& out_dir,
              const std::string& loss_log) {
    std::ifstream mi(fs::path(dataset) / "manifest.json");
    if (!mi) throw std::runtime_error("missing dataset manifest in " + dataset);
    json manifest = json::parse(mi);
    const auto kept = manifest.at("kept");
    if (kept.empty()) throw std::runtime_error("dataset has no kept samples");

    ToyEmbedder embedder;
    std::vector<TrainSample> pool;
    for (const json& name : kept) {
        const fs::path dir = fs::path(dataset) / name.get<std::string>();
        std::ifstream meta_in(dir / "meta.json");
        json meta = json::parse(meta_in);
        TrainSample sample;
        sample.input = read_video_vten((dir / "input.vten").string());
        sample.edited = read_video_vten((dir / "edited.vten").string());
        sample.text = embedder.embed_prompt(
            tokenize(meta.at("triplet").at("edit").get<std::string>()));
        pool.push_back(std::move(sample));
    }

    const NoiseSchedule s = schedule_of(cfg);
    TrainState state = TrainState::init(arch_of(cfg), cfg.master_seed ^
                                                          SeededRng::stream_of("train-init"));
    SeededRng rng(cfg.master_seed, SeededRng::stream_of("train"));
    AdamConfig opt;
    opt.lr = cfg.train.lr;
    opt.dropout_video = cfg.train.dropout_video;
    opt.dropout_text = cfg.train.dropout_text;

    std::ostringstream log;
    for (int step = 0; step < cfg.train.steps; ++step) {
        std::vector<TrainSample> batch;
        for (int bi = 0; bi < cfg.train.batch_size; ++bi) {
            batch.push_back(pool[(static_cast<std::size_t>(step) * cfg.train.batch_size + bi) %
                                 pool.size()]);
        }
        const double loss = train_step(state, batch, rng, s, opt);
        check(std::isfinite(loss), "finite-loss");
        log << "step=" << step << " loss=" << format_double(loss) << "\n";
    }

    save_params_bundle(out_dir, state.params);
    if (!loss_log.empty()) {
        std::ofstream lo(loss_log);
        lo << log.str();
        check(static_cast<bool>(lo), "loss-log-written");
    } else {
        std::fputs(log.str().c_str(), stdout);
    }
    std::printf("params dir=%s steps=%d samples=%zu\n", out_dir.c_str(), cfg.train.steps,
                pool.size());
    return 0;
}

// --------------------------------------------------------------------- edit

int cmd_edit(const RunConfig& cfg, const std::string& params_dir, const std::string& input_path,
             const std::string& prompt, const std::string& out_path, const std::string& report,
             bool no_sweep, float svid, const std::string& dump_dir) {
    const ToyDenoiserParams params = load_params_bundle(params_dir);
    const VideoLatent input = read_video_vten(input_path);
    if (input.f > cfg.long_video.batch_frames) {
        throw std::runtime_error("input has " + std::to_string(input.f) +
                                 " frames, more than one batch; use edit-long");
    }
    const NoiseSchedule s = schedule_of(cfg);
    const TimestepPlan plan = TimestepPlan::uniform(cfg.plan.ddim_steps, s.T);
    ToyEmbedder embedder;
    ToyDenoiser denoiser(params);

    ConditionPair cond;
    cond.video = input;
    cond.text = embedder.embed_prompt(tokenize(prompt));
    const std::vector<float> prompt_embedding = embedder.embed_text(tokenize(prompt));

    SweepGrid grid;
    grid.s_video = no_sweep ? std::vector<float>{svid} : cfg.guidance.s_video_grid;
    if (no_sweep) {
        grid.resolutions = {{input.h, input.w}};
    } else {
        for (int r : cfg.edit.resolutions) grid.resolutions.push_back({r, r});
    }
    grid.s_text = cfg.guidance.s_text;

    const FrameScorer scorer = [&embedder](const VideoLatent& frame,
                                           const std::vector<float>& embedding) {
        return cosine(embedder.embed_image(frame_image(frame, 0, 0)), embedding);
    };
    const std::uint64_t seed =
        SeededRng(cfg.master_seed, SeededRng::stream_of("edit")).next_u64();
    const SweepResult result = sweep_and_pick(denoiser, cond, grid, scorer, prompt_embedding,
                                              plan, s, seed, cfg.workers);

    std::ostringstream rep;
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        const SweepCell& cell = result.cells[i];
        rep << "sweep-cell index=" << i << " s_video=" << format_scale(cell.s_video)
            << " resolution=" << cell.res_h << "x" << cell.res_w
            << " score=" << format_double(cell.score)
            << (i == result.best ? " chosen=1" : " chosen=0") << "\n";
    }
    const SweepCell& best = result.cells[result.best];
    rep << "chosen s_video=" << format_scale(best.s_video) << " resolution=" << best.res_h << "x"
        << best.res_w << " score=" << format_double(best.score) << "\n";

    check(best.video.all_finite(), "finite-output");
    write_video_vten(out_path, best.video);
    if (!dump_dir.empty()) dump_frames_ppm(clamped01(best.video), dump_dir);
    if (!report.empty()) {
        std::ofstream ro(report);
        ro << rep.str();
        check(static_cast<bool>(ro), "report-written");
    }
    std::fputs(rep.str().c_str(), stdout);
    return 0;
}

// ---------------------------------------------------------------- edit-long

int cmd_edit_long(const RunConfig& cfg, const std::string& params_dir,
                  const std::string& input_path, const std::string& prompt,
                  const std::string& out_path, bool lvsc_on, bool mc_on, float svid,
                  const std::string& report, const std::string& dump_dir,
                  const std::string& flow_cache) {
    const ToyDenoiserParams params = load_params_bundle(params_dir);
    const VideoLatent input = read_video_vten(input_path);
    if (input.f <= cfg.long_video.batch_frames) {
        throw std::runtime_error("input fits one batch; use edit");
    }
    const NoiseSchedule s = schedule_of(cfg);
    const TimestepPlan plan = TimestepPlan::uniform(cfg.plan.ddim_steps, s.T);
    ToyEmbedder embedder;
    ToyDenoiser denoiser(params);

    ConditionPair cond;
    cond.video = input;
    cond.text = embedder.embed_prompt(tokenize(prompt));

    LongVideoPlan lplan;
    lplan.total_frames = input.f;
    lplan.batch_frames = cfg.long_video.batch_frames;
    lplan.reference_frames = cfg.long_video.reference_frames;
    const LvscMode mode = !lvsc_on ? LvscMode::Off
                          : (mc_on ? LvscMode::OnWithMotionCompensation : LvscMode::On);
    GuidanceConfig g{svid, cfg.guidance.s_text};

    const std::uint64_t seed =
        SeededRng(cfg.master_seed, SeededRng::stream_of("edit-long")).next_u64();
    const LongVideoResult result = sample_long_video(denoiser, cond, g, plan, s, lplan, seed, mode);
    check(result.video.all_finite(), "finite-output");
    check(result.video.f == input.f, "frame-count");

    std::ostringstream rep;
    const VideoLatent clamped = clamped01(result.video);
    for (const BoundaryDiagnostic& b : result.boundaries) {
        const double m = mamse(clamped, b.frame_index - 1, b.frame_index);
        rep << "boundary index=" << b.frame_index << " mamse=" << format_double(m)
            << " lvsc=" << (lvsc_on ? "on" : "off") << " mc=" << (mc_on ? "on" : "off") << "\n";
    }

    if (mc_on && !flow_cache.empty()) {
        fs::create_directories(flow_cache);
        const auto segs = lplan.segments();
        for (std::size_t j = 1; j < segs.size(); ++j) {
            const int cond_start = segs[j].start - lplan.reference_frames;
            for (int i = 0; i < lplan.reference_frames; ++i) {
                const Image ref_img = frame_image(input, 0, cond_start + i);
                for (int m = 0; m < segs[j].new_frames; ++m) {
                    const Image sub_img = frame_image(input, 0, segs[j].start + m);
                    const FlowField flow = estimate_flow(ref_img, sub_img);
                    NTensor t;
                    t.dims = {static_cast<std::uint32_t>(flow.h),
                              static_cast<std::uint32_t>(flow.w), 2};
                    t.v = flow.data;
                    char name[64];
                    std::snprintf(name, sizeof(name), "flow_b%02zu_r%02d_m%02d.vten", j, i, m);
                    write_vten((fs::path(flow_cache) / name).string(), t);
                }
            }
        }
        rep << "flow-cache dir=" << flow_cache << "\n";
    }

    write_video_vten(out_path, result.video);
    if (!dump_dir.empty()) dump_frames_ppm(clamped, dump_dir);
    if (!report.empty()) {
        std::ofstream ro(report);
        ro << rep.str();
        check(static_cast<bool>(ro), "report-written");
    }
    std::fputs(rep.str().c_str(), stdout);
    return 0;
}

// --------------------------------------------------------------------- eval

int cmd_eval(const std::string& metrics_arg, const std::vector<int>& boundaries,
             const std::vector<std::string>& videos) {
    std::vector<std::string> metrics;
    std::stringstream ss(metrics_arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) metrics.push_back(item);
    }
    for (const std::string& m : metrics) {
        if (m != "mamse" && m != "frame-consistency") {
            std::fprintf(stderr, "unknown metric: %s\n", m.c_str());
            return 2;
        }
    }
    ToyEmbedder embedder;
    for (const std::string& path : videos) {
        const VideoLatent video = clamped01(read_video_vten(path));
        for (const std::string& m : metrics) {
            if (m == "mamse") {
                if (boundaries.empty()) {
                    throw std::runtime_error("mamse needs --boundary (first frame of the later batch)");
                }
                for (int b : boundaries) {
                    const double v = mamse(video, b - 1, b);
                    std::printf("metric video=%s name=mamse boundary=%d value=%s\n", path.c_str(),
                                b, format_double(v).c_str());
                }
            } else {
                const double v = frame_consistency(
                    video, [&](const Image& img) { return embedder.embed_image(img); });
                std::printf("metric video=%s name=frame-consistency value=%s\n", path.c_str(),
                            format_double(v).c_str());
            }
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"denoiser-agnostic video diffusion sampling engine"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "run configuration JSON (defaults when omitted)");

    std::string out_dir, dataset, params_dir, input_path, prompt, out_path;
    std::string report, dump_dir, flow_cache, loss_log, metrics;
    std::vector<std::string> videos;
    std::vector<int> boundaries;
    bool no_sweep = false;
    float svid = 1.5f;
    std::string lvsc_flag = "on", mc_flag = "off";
    std::uint64_t seed_override = 0;
    bool have_seed = false;
    int steps_override = -1;

    CLI::App* gen = app.add_subcommand("gen-data", "generate the synthetic paired dataset");
    gen->add_option("--out", out_dir, "dataset output directory")->required();

    CLI::App* train = app.add_subcommand("train", "train the toy video denoiser");
    train->add_option("--dataset", dataset, "dataset directory from gen-data")->required();
    train->add_option("--out", params_dir, "parameter bundle output directory")->required();
    train->add_option("--loss-log", loss_log, "write per-step loss records here");
    train->add_option("--steps", steps_override, "override train.steps");

    CLI::App* edit = app.add_subcommand("edit", "edit a video that fits one batch");
    edit->add_option("--params", params_dir, "parameter bundle directory")->required();
    edit->add_option("--input", input_path, "input video (.vten)")->required();
    edit->add_option("--prompt", prompt, "edit instruction")->required();
    edit->add_option("--out", out_path, "output video (.vten)")->required();
    edit->add_option("--report", report, "write the sweep report here");
    edit->add_flag("--no-sweep", no_sweep, "single run at --svid and the input resolution");
    edit->add_option("--svid", svid, "video guidance scale for --no-sweep");
    edit->add_option("--dump-frames", dump_dir, "write frames as .ppm into this directory");

    CLI::App* elong = app.add_subcommand("edit-long", "edit a video spanning several batches");
    elong->add_option("--params", params_dir, "parameter bundle directory")->required();
    elong->add_option("--input", input_path, "input video (.vten)")->required();
    elong->add_option("--prompt", prompt, "edit instruction")->required();
    elong->add_option("--out", out_path, "output video (.vten)")->required();
    elong->add_option("--lvsc", lvsc_flag, "on|off: cross-batch score correction");
    elong->add_option("--mc", mc_flag, "on|off: motion-compensated correction");
    elong->add_option("--svid", svid, "video guidance scale");
    elong->add_option("--report", report, "write boundary diagnostics here");
    elong->add_option("--dump-frames", dump_dir, "write frames as .ppm into this directory");
    elong->add_option("--flow-cache", flow_cache, "write motion-compensation flow fields here");

    CLI::App* eval = app.add_subcommand("eval", "compute metrics over videos");
    eval->add_option("--metrics", metrics, "comma list: mamse,frame-consistency")->required();
    eval->add_option("--boundary", boundaries, "batch boundary frame indices (for mamse)");
    eval->add_option("videos", videos, "input videos (.vten)")->required();

    for (CLI::App* sub : {gen, train, edit, elong}) {
        sub->add_option("--seed", seed_override, "override master_seed")->each([&](const std::string&) {
            have_seed = true;
        });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = config_path.empty() ? RunConfig::defaults() : RunConfig::load(config_path);
        if (have_seed) cfg.master_seed = seed_override;
        if (steps_override >= 0) cfg.train.steps = steps_override;

        if (gen->parsed()) return cmd_gen_data(cfg, out_dir);
        if (train->parsed()) return cmd_train(cfg, dataset, params_dir, loss_log);
        if (edit->parsed()) {
            return cmd_edit(cfg, params_dir, input_path, prompt, out_path, report, no_sweep, svid,
                            dump_dir);
        }
        if (elong->parsed()) {
            if (lvsc_flag != "on" && lvsc_flag != "off") throw std::runtime_error("--lvsc: on|off");
            if (mc_flag != "on" && mc_flag != "off") throw std::runtime_error("--mc: on|off");
            return cmd_edit_long(cfg, params_dir, input_path, prompt, out_path, lvsc_flag == "on",
                                 mc_flag == "on", svid, report, dump_dir, flow_cache);
        }
        if (eval->parsed()) return cmd_eval(metrics, boundaries, videos);
    } catch (const CheckError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
