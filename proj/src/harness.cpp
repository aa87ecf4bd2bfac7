#include "hdrseq/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <stdexcept>

#include "hdrseq/image_io.hpp"
#include "hdrseq/losses.hpp"

namespace hdrseq {

namespace fs = std::filesystem;

namespace {

std::vector<Tensor> to_tensors(const std::vector<Frame>& frames) {
    std::vector<Tensor> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(Tensor::from_grid(f));
    return out;
}

std::string indexed(const std::string& stem, std::size_t i, const std::string& ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%03zu", i);
    return stem + "_" + buf + ext;
}

CaptureSchedule schedule_for_length(const RunConfig& config, int frames) {
    ScheduleConfig sc = config.schedule;
    if (frames != sc.frames) {
        sc.frames = frames;
        sc.anchor_timestamp = 0;
        sc.anchor_b_timestamp = 1;
        sc.anchors_per_window = std::min(sc.anchors_per_window, frames);
    }
    return build_capture_schedule(sc);
}

Frame crop_to_multiple(const Frame& f, int m) {
    const int h = f.height / m * m;
    const int w = f.width / m * m;
    if (h == 0 || w == 0) throw ShapeError("frame too small for the network");
    return (h == f.height && w == f.width) ? f : crop(f, 0, 0, h, w);
}

}  // namespace

StepLosses sample_losses(const Model& model, const TrainingSample& sample, const CaptureSchedule& schedule,
                         const RunConfig& config) {
    Sequence za = run_stage1(model, sample.backbone, sample.anchors_a, schedule);
    Sequence zb = run_stage1(model, sample.backbone, sample.anchors_b, schedule);
    Sequence x = stage2_forward(za, model.stage2).x;
    // Radiance is non-negative; the tone curve is evaluated on the clamped prediction.
    for (auto& f : x) f = ops::clamp_min_zero(f);
    const auto gt = to_tensors(sample.ground_truth);
    StepLosses l;
    l.spatial = loss_spatial(x, gt, config.tone);
    l.temporal = x.size() >= 2 ? loss_temporal(x, gt, config.tone) : Tensor::scalar(0.0);
    l.anchor = loss_anchor(za, zb);
    l.total = loss_total(l.spatial, l.temporal, l.anchor, config.weights);
    return l;
}

TrainResult train(const RunConfig& config, const std::vector<std::vector<Frame>>& windows, const TrainOptions& options) {
    if (!config.train.seed) throw ConfigError("train.seed is required");
    if (windows.empty()) throw std::invalid_argument("train: no training windows");
    const CaptureSchedule schedule = build_capture_schedule(config.schedule);
    for (const auto& w : windows) {
        if (static_cast<int>(w.size()) < schedule.frames) throw std::invalid_argument("train: window shorter than schedule.t");
        if (w[0].height < config.train.patch || w[0].width < config.train.patch) {
            throw std::invalid_argument("train: window smaller than train.patch");
        }
    }
    const std::uint64_t seed = *config.train.seed;
    TrainResult r;
    r.model = Model(config.stage1, config.stage2, seed);
    const ParamSet params = r.model.parameters();
    r.optimizer = Adam(params);

    SampleConfig sc;
    sc.patch_height = sc.patch_width = config.train.patch;
    sc.rotate = config.train.rotate;
    sc.render = {config.response, config.noise};

    std::ofstream log_file;
    if (options.write_files) {
        fs::create_directories(config.paths.checkpoint_dir);
        log_file.open(config.paths.checkpoint_dir / "train_log.tsv");
        log_file << "step\tlr\ttotal\tspatial\ttemporal\tanchor\n";
    }
    std::mt19937_64 pick(derive_seed(seed, 0x7e57));
    const int batch = config.train.batch_size;
    for (int step = 0; step < config.train.max_steps; ++step) {
        const double lr = cosine_learning_rate(step, config.train.max_steps, config.train.lr_initial, config.train.lr_final);
        ParamSet ps = params;
        ps.zero_grad();
        TrainLogEntry e{step + 1, lr, 0, 0, 0, 0};
        for (int b = 0; b < batch; ++b) {
            const auto& window = windows[pick() % windows.size()];
            const auto sample_seed = derive_seed(seed, static_cast<std::uint64_t>(step) * batch + b + 1);
            const TrainingSample sample = make_training_sample(window, schedule, sc, sample_seed);
            StepLosses l = sample_losses(r.model, sample, schedule, config);
            ops::scale(l.total, 1.0 / batch).backward();
            e.total += l.total.item() / batch;
            e.spatial += l.spatial.item() / batch;
            e.temporal += l.temporal.item() / batch;
            e.anchor += l.anchor.item() / batch;
        }
        r.optimizer.step(params, lr);
        r.log.push_back(e);
        if (log_file) {
            char buf[256];
            std::snprintf(buf, sizeof buf, "%d\t%.9g\t%.17g\t%.17g\t%.17g\t%.17g\n", e.step, e.lr, e.total, e.spatial,
                          e.temporal, e.anchor);
            log_file << buf;
        }
        if (options.log && config.train.log_every > 0 && (e.step % config.train.log_every == 0 || e.step == 1)) {
            char buf[200];
            std::snprintf(buf, sizeof buf, "step %5d  lr %.3e  total %.5f  spatial %.5f  temporal %.5f  anchor %.5f\n",
                          e.step, e.lr, e.total, e.spatial, e.temporal, e.anchor);
            *options.log << buf << std::flush;
        }
        if (options.write_files && config.train.checkpoint_every > 0 && e.step % config.train.checkpoint_every == 0 &&
            e.step != config.train.max_steps) {
            save_checkpoint(config.paths.checkpoint_dir / indexed("ckpt", e.step, ".bin"), config, r.model,
                            r.optimizer, e.step);
        }
    }
    if (options.write_files) {
        r.final_checkpoint = config.paths.checkpoint_dir / "ckpt_final.bin";
        save_checkpoint(r.final_checkpoint, config, r.model, r.optimizer, config.train.max_steps);
    }
    return r;
}

TrainResult train_from_manifest(const RunConfig& config, const TrainOptions& options) {
    if (config.paths.data_manifest.empty()) throw ConfigError("paths.data_manifest is required for training");
    if (!fs::exists(config.paths.data_manifest)) {
        throw ConfigError("data manifest does not exist: " + config.paths.data_manifest.string());
    }
    std::vector<std::vector<Frame>> windows;
    for (const auto& dir : read_manifest(config.paths.data_manifest)) {
        windows.push_back(load_video_frames(dir, 0, -1, config.response));
    }
    return train(config, windows, options);
}

PredictionSource parse_prediction_source(const std::string& s) {
    if (s == "full") return PredictionSource::full;
    if (s == "stage1") return PredictionSource::stage1;
    if (s == "gt") return PredictionSource::ground_truth;
    throw std::invalid_argument("unknown prediction source '" + s + "' (full, stage1, gt)");
}

std::vector<Frame> reconstruct(const Model& model, const CaptureSchedule& schedule, const std::vector<LdrInput>& backbone,
                               const std::vector<AnchorPair>& anchors, bool stage1_only) {
    Sequence out = stage1_only ? run_stage1(model, backbone, anchors, schedule)
                               : run_window(model, backbone, anchors, schedule).x;
    std::vector<Frame> frames;
    for (const auto& t : out) {
        Frame f = t.to_grid_as<float>();
        for (auto& v : f.data) v = std::max(v, 0.0f);
        frames.push_back(std::move(f));
    }
    return frames;
}

SequenceReport evaluate_frames(const Model& model, const RunConfig& config, const std::string& name,
                               const std::vector<Frame>& gt_in, const EvalOptions& options) {
    if (gt_in.empty()) throw std::invalid_argument("evaluate_frames: empty sequence");
    std::vector<Frame> gt;
    for (const auto& f : gt_in) gt.push_back(crop_to_multiple(f, 4));
    const RenderConfig render{config.response, config.noise};
    std::vector<Frame> pred;
    double runtime_ms = 0.0;
    const int t_len = config.schedule.frames;
    for (std::size_t begin = 0, w = 0; begin < gt.size(); begin += t_len, ++w) {
        const std::size_t end = std::min(gt.size(), begin + t_len);
        std::vector<Frame> window(gt.begin() + begin, gt.begin() + end);
        if (options.source == PredictionSource::ground_truth) {
            pred.insert(pred.end(), window.begin(), window.end());
            continue;
        }
        const CaptureSchedule sched = schedule_for_length(config, static_cast<int>(window.size()));
        const TrainingSample s = render_ldr_sequence(window, sched, render, derive_seed(options.seed, w));
        const auto t0 = std::chrono::steady_clock::now();
        auto out = reconstruct(model, sched, s.backbone, s.anchors_a, options.source == PredictionSource::stage1);
        runtime_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        pred.insert(pred.end(), out.begin(), out.end());
    }
    ImageSequence a, b;
    for (const auto& f : pred) a.push_back(f.cast<double>());
    for (const auto& f : gt) b.push_back(f.cast<double>());
    SequenceReport r = evaluate_sequence(name, a, b, config.tone);
    r.runtime_ms = runtime_ms;
    return r;
}

EvalResult evaluate_manifest(const Model& model, const RunConfig& config, const fs::path& manifest,
                             const EvalOptions& options) {
    EvalResult r;
    for (const auto& dir : read_manifest(manifest)) {
        const std::string name = dir.filename().string();
        try {
            const auto frames = load_video_frames(dir, 0, -1, config.response);
            if (frames.empty()) throw std::invalid_argument("no frames");
            r.reports.push_back(evaluate_frames(model, config, name, frames, options));
            if (!r.reports.back().note.empty()) r.errors.push_back(name + ": " + r.reports.back().note);
        } catch (const std::exception& e) {
            r.errors.push_back(name + ": " + e.what());
        }
    }
    r.aggregate = aggregate_reports(r.reports);
    return r;
}

void write_eval_outputs(const EvalResult& result, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream table(out_dir / "report.tsv");
    if (!table) throw IoError("cannot write " + (out_dir / "report.tsv").string());
    table << SequenceReport::table_header() << '\n';
    for (const auto& r : result.reports) table << r.to_table_row() << '\n';
    table << result.aggregate.to_table_row() << '\n';
    for (const auto& r : result.reports) {
        std::ofstream kv(out_dir / (r.name + ".kv"));
        kv << r.to_key_value();
    }
}

std::vector<fs::path> infer_directory(const Model& model, const RunConfig& config, const fs::path& frames_dir,
                                      const fs::path& out_dir, const std::string& format) {
    if (format != "hdr" && format != "lcat") throw std::invalid_argument("output format must be hdr or lcat");
    if (!fs::is_directory(frames_dir)) throw IoError("frames directory not found: " + frames_dir.string());
    std::vector<fs::path> mid, low, high;
    for (const auto& e : fs::directory_iterator(frames_dir)) {
        const std::string n = e.path().filename().string();
        if (e.path().extension() != ".png") continue;
        if (n.rfind("mid_", 0) == 0) mid.push_back(e.path());
        if (n.rfind("low_", 0) == 0) low.push_back(e.path());
        if (n.rfind("high_", 0) == 0) high.push_back(e.path());
    }
    for (auto* v : {&mid, &low, &high}) std::sort(v->begin(), v->end());
    if (mid.empty()) throw IoError("no backbone frames (mid_*.png) in " + frames_dir.string());
    const int t_len = config.schedule.frames;
    const std::size_t windows = (mid.size() + t_len - 1) / t_len;
    const auto base = build_capture_schedule(config.schedule);
    if (low.size() < windows * base.anchors_per_window || high.size() < windows * base.anchors_per_window) {
        throw IoError("missing anchor frames: need " + std::to_string(windows * base.anchors_per_window) +
                      " low_*.png and high_*.png");
    }
    fs::create_directories(out_dir);
    std::vector<fs::path> written;
    std::size_t anchor_index = 0;
    for (std::size_t w = 0; w < windows; ++w) {
        const std::size_t begin = w * t_len;
        const std::size_t end = std::min(mid.size(), begin + t_len);
        const CaptureSchedule sched = schedule_for_length(config, static_cast<int>(end - begin));
        std::vector<LdrInput> backbone;
        for (std::size_t i = begin; i < end; ++i) backbone.push_back({crop_to_multiple(read_png(mid[i]), 4), sched.exposures.mid});
        std::vector<AnchorPair> anchors;
        for (const auto& seg : sched.segments()) {
            AnchorPair p{{crop_to_multiple(read_png(low[anchor_index]), 4), sched.exposures.low},
                         {crop_to_multiple(read_png(high[anchor_index]), 4), sched.exposures.high},
                         seg.anchor};
            ++anchor_index;
            anchors.push_back(std::move(p));
        }
        const auto frames = reconstruct(model, sched, backbone, anchors);
        for (std::size_t i = 0; i < frames.size(); ++i) {
            const std::size_t idx = begin + i;
            const fs::path hdr = out_dir / indexed("frame", idx, "." + format);
            write_hdr_frame(hdr, frames[i]);
            write_png(out_dir / indexed("frame", idx, ".png"), tone_map(frames[i], config.tone));
            written.push_back(hdr);
        }
    }
    return written;
}

fs::path generate_dataset(const RunConfig& config, const fs::path& out_dir) {
    const auto& g = config.gen;
    if (g.windows < 1 || g.frames < 1 || g.height < 4 || g.width < 4) throw ConfigError("invalid gen.* settings");
    fs::create_directories(out_dir / "windows");
    std::ofstream manifest(out_dir / "manifest.txt");
    manifest << "# synthetic HDR windows, " << g.frames << " frames of " << g.height << "x" << g.width << "\n";
    std::vector<Frame> first;
    for (int w = 0; w < g.windows; ++w) {
        SceneConfig sc{g.height, g.width, g.frames, g.motion, g.peak, derive_seed(g.seed, w)};
        auto frames = synthesize_scene(sc);
        const std::string name = indexed("w", w, "");
        fs::create_directories(out_dir / "windows" / name);
        for (std::size_t t = 0; t < frames.size(); ++t) {
            write_raw(out_dir / "windows" / name / indexed("frame", t, ".lcat"), frames[t]);
        }
        manifest << "windows/" << name << "\n";
        if (w == 0) first = std::move(frames);
    }

    // LDR capture of the first window in the layout `infer` expects.
    const int t_len = std::min<int>(config.schedule.frames, static_cast<int>(first.size()));
    const CaptureSchedule sched = schedule_for_length(config, t_len);
    first.resize(t_len);
    const TrainingSample s = render_ldr_sequence(first, sched, {config.response, config.noise}, g.seed);
    const fs::path ex = out_dir / "infer_example";
    fs::create_directories(ex);
    for (std::size_t t = 0; t < s.backbone.size(); ++t) write_png(ex / indexed("mid", t, ".png"), s.backbone[t].pixels);
    for (std::size_t a = 0; a < s.anchors_a.size(); ++a) {
        write_png(ex / indexed("low", a, ".png"), s.anchors_a[a].low.pixels);
        write_png(ex / indexed("high", a, ".png"), s.anchors_a[a].high.pixels);
    }
    return out_dir / "manifest.txt";
}

}  // namespace hdrseq
