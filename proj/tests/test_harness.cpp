#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hdrseq/checkpoint.hpp"
#include "hdrseq/harness.hpp"
#include "hdrseq/image_io.hpp"
#include "hdrseq/plot.hpp"

using namespace hdrseq;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    auto d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

RunConfig tiny_config(const fs::path& dir) {
    auto c = parse_config(
        "model.c = 4\nmodel.c2 = 4\nmodel.k = 1\ntrain.patch = 16\ntrain.batch_size = 1\ntrain.max_steps = 3\n"
        "train.seed = 5\ntrain.lr_initial = 1e-3\ntrain.lr_final = 1e-4\ngen.windows = 2\ngen.frames = 6\n"
        "gen.height = 20\ngen.width = 20\npaths.checkpoint_dir = ckpt\n",
        dir);
    return c;
}

std::vector<std::vector<Frame>> tiny_windows(int n = 2) {
    std::vector<std::vector<Frame>> out;
    for (int i = 0; i < n; ++i) out.push_back(synthesize_scene(SceneConfig{20, 20, 6, 1.0, 4.0, 100u + i}));
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string without_runtime(std::string row) { return row.substr(0, row.rfind('\t')); }

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + HDRSEQ_CLI + "\" " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

}  // namespace

TEST_CASE("cosine schedule endpoints") {
    CHECK(cosine_learning_rate(0, 100, 1e-4, 1e-6) == doctest::Approx(1e-4));
    CHECK(cosine_learning_rate(100, 100, 1e-4, 1e-6) == doctest::Approx(1e-6));
    CHECK(cosine_learning_rate(50, 100, 1e-4, 1e-6) == doctest::Approx(0.5 * (1e-4 + 1e-6)));
    double prev = 1.0;
    for (int s = 0; s <= 100; ++s) {
        const double lr = cosine_learning_rate(s, 100, 1e-4, 1e-6);
        CHECK(lr <= prev);
        prev = lr;
    }
}

TEST_CASE("Adam update matches the textbook formula on one scalar") {
    ParamSet ps;
    auto w = Tensor::from({1, 1, 1}, {1.0}, true);
    ps.add("w", w);
    Adam opt(ps);
    double m = 0, v = 0, x = 1.0;
    for (int t = 1; t <= 3; ++t) {
        ps.zero_grad();
        ops::mul(w, w).backward();  // grad 2w
        const double g = 2 * x;
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        x -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
        opt.step(ps, 0.01);
        CHECK(w.values()[0] == doctest::Approx(x).epsilon(1e-14));
    }
}

TEST_CASE("training requires a seed") {
    auto dir = fresh_dir("hdrseq_seedless");
    auto c = tiny_config(dir);
    c.train.seed.reset();
    CHECK_THROWS_AS(train(c, tiny_windows(), {false, nullptr}), ConfigError);
}

TEST_CASE("zero-step training writes a checkpoint whose refinement is the identity") {
    auto dir = fresh_dir("hdrseq_zero_steps");
    auto c = tiny_config(dir);
    c.train.max_steps = 0;
    auto r = train(c, tiny_windows(), {true, nullptr});
    REQUIRE(fs::exists(r.final_checkpoint));
    auto ck = load_checkpoint(r.final_checkpoint);
    CHECK(ck.step == 0);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 2);
    Sequence z;
    for (int t = 0; t < 3; ++t) {
        std::vector<double> v(3 * 8 * 8);
        for (auto& x : v) x = u(rng);
        z.push_back(Tensor::from({3, 8, 8}, v));
    }
    auto x = stage2_forward(z, ck.model.stage2).x;
    for (std::size_t t = 0; t < z.size(); ++t) {
        for (std::size_t i = 0; i < z[t].numel(); ++i) CHECK(x[t].values()[i] == z[t].values()[i]);
    }
}

TEST_CASE("training is deterministic and checkpoints round-trip bit-exactly") {
    auto dir = fresh_dir("hdrseq_determinism");
    auto c = tiny_config(dir);
    c.train.checkpoint_every = 2;
    auto a = train(c, tiny_windows(), {true, nullptr});
    auto b = train(c, tiny_windows(), {false, nullptr});
    REQUIRE(a.log.size() == 3);
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        CHECK(a.log[i].total == b.log[i].total);
        CHECK(a.log[i].anchor == b.log[i].anchor);
    }
    CHECK(a.log[0].lr == doctest::Approx(1e-3));
    CHECK(fs::exists(c.paths.checkpoint_dir / "ckpt_002.bin"));
    CHECK(fs::exists(c.paths.checkpoint_dir / "train_log.tsv"));

    const auto bytes = serialize_checkpoint(c, a.model, a.optimizer, 3);
    const auto loaded = deserialize_checkpoint(bytes);
    CHECK(serialize_checkpoint(loaded.config, loaded.model, loaded.optimizer, loaded.step) == bytes);
    CHECK(loaded.model_hash == c.model_hash());
    const std::string file = slurp(a.final_checkpoint);
    CHECK(std::vector<char>(file.begin(), file.end()) == bytes);

    auto s = make_training_sample(tiny_windows(1)[0], build_capture_schedule(c.schedule),
                                  SampleConfig{16, 16, false, {c.response, c.noise}}, 3);
    auto sched = build_capture_schedule(c.schedule);
    auto x1 = run_window(a.model, s.backbone, s.anchors_a, sched).x;
    auto x2 = run_window(loaded.model, s.backbone, s.anchors_a, sched).x;
    for (std::size_t t = 0; t < x1.size(); ++t) {
        for (std::size_t i = 0; i < x1[t].numel(); ++i) CHECK(x1[t].values()[i] == x2[t].values()[i]);
    }
    auto corrupt = bytes;
    corrupt[0] = 'X';
    CHECK_THROWS(deserialize_checkpoint(corrupt));
    corrupt = bytes;
    corrupt.resize(corrupt.size() / 2);
    CHECK_THROWS(deserialize_checkpoint(corrupt));
}

TEST_CASE("evaluation conventions") {
    auto dir = fresh_dir("hdrseq_eval");
    auto c = tiny_config(dir);
    Model m(c.stage1, c.stage2, 1);
    auto gt = synthesize_scene(SceneConfig{18, 22, 7, 1.0, 4.0, 3});

    auto self = evaluate_frames(m, c, "gt", gt, {PredictionSource::ground_truth, 0});
    CHECK(self.psnr_t == kPsnrCap);
    CHECK(self.ssim_t == doctest::Approx(1.0));
    CHECK(self.std == 0.0);
    CHECK(self.ab == 0.0);

    auto full = evaluate_frames(m, c, "s", gt, {PredictionSource::full, 4});
    auto z = evaluate_frames(m, c, "s", gt, {PredictionSource::stage1, 4});
    CHECK(full.frames == 7);
    CHECK(without_runtime(full.to_table_row()) == without_runtime(z.to_table_row()));

    auto one = evaluate_frames(m, c, "short", {gt[0]}, {PredictionSource::full, 4});
    CHECK(std::isnan(one.t_psnr));
    CHECK_FALSE(one.note.empty());
}

TEST_CASE("eval outputs: golden header, one row per sequence plus the mean") {
    auto dir = fresh_dir("hdrseq_eval_out");
    auto c = tiny_config(dir);
    c.gen.windows = 2;
    const auto manifest = generate_dataset(c, dir / "data");
    {
        std::ofstream(manifest, std::ios::app) << "windows/missing\n";
    }
    Model m(c.stage1, c.stage2, 1);
    auto r = evaluate_manifest(m, c, manifest, {});
    CHECK(r.reports.size() == 2);
    CHECK(r.errors.size() == 1);
    write_eval_outputs(r, dir / "reports");
    std::ifstream table(dir / "reports" / "report.tsv");
    std::string header;
    std::getline(table, header);
    std::string golden = slurp(fs::path(HDRSEQ_SOURCE_DIR) / "tests" / "golden" / "report_header.tsv");
    CHECK(header + "\n" == golden);
    int rows = 0;
    std::string line, last;
    while (std::getline(table, line)) {
        ++rows;
        last = line;
    }
    CHECK(rows == 3);
    CHECK(last.rfind("mean\t", 0) == 0);
    CHECK(fs::exists(dir / "reports" / "w_000.kv"));
}

TEST_CASE("inference writes index-matched frames and faithful previews") {
    auto dir = fresh_dir("hdrseq_infer");
    auto c = tiny_config(dir);
    generate_dataset(c, dir / "data");
    Model m(c.stage1, c.stage2, 2);
    auto out = infer_directory(m, c, dir / "data" / "infer_example", dir / "out", "lcat");
    REQUIRE(out.size() == 5);
    for (std::size_t i = 0; i < out.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%03zu", i);
        CHECK(out[i].filename() == fs::path(std::string(name) + ".lcat"));
        auto hdr = read_raw(out[i]);
        auto preview = read_png(dir / "out" / (std::string(name) + ".png"));
        auto expected = tone_map(hdr, c.tone);
        for (std::size_t k = 0; k < hdr.size(); ++k) CHECK(std::fabs(preview.data[k] - std::min(expected.data[k], 1.0f)) <= 1.0f / 255.0f);
    }
    auto again = infer_directory(m, c, dir / "data" / "infer_example", dir / "out2", "lcat");
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(slurp(out[i]) == slurp(again[i]));
    auto hdr_out = infer_directory(m, c, dir / "data" / "infer_example", dir / "out3", "hdr");
    CHECK(hdr_out[0].extension() == ".hdr");
    fs::remove(dir / "data" / "infer_example" / "low_000.png");
    CHECK_THROWS_AS(infer_directory(m, c, dir / "data" / "infer_example", dir / "out4"), IoError);
}

TEST_CASE("plots: files exist, trace has T points, flat trace is one row") {
    auto dir = fresh_dir("hdrseq_plot");
    SequenceReport r;
    r.name = "flat";
    r.frames = 6;
    r.psnr_t = 30.0;
    r.runtime_ms = 12.0;
    r.psnr_trace.assign(6, 30.0);
    auto files = plot_reports({r}, dir);
    REQUIRE(files.size() == 2);
    for (const auto& f : files) CHECK(fs::file_size(f) > 0);
    auto img = read_png(dir / "trace_flat.png");
    int first_row = -1, rows_with_red = 0;
    for (int y = 0; y < img.height; ++y) {
        bool red = false;
        for (int x = 0; x < img.width; ++x) {
            red = red || (img.at(0, y, x) == 1.0f && img.at(1, y, x) == 0.0f && img.at(2, y, x) == 0.0f);
        }
        if (red) {
            ++rows_with_red;
            if (first_row < 0) first_row = y;
        }
    }
    CHECK(rows_with_red == 1);
    CHECK_THROWS(plot_reports({}, dir));
}

TEST_CASE("command-line round trip") {
    auto dir = fresh_dir("hdrseq_cli");
    std::ofstream(dir / "run.conf") << "model.c = 4\nmodel.c2 = 4\nmodel.k = 1\ntrain.patch = 16\n"
                                       "train.batch_size = 1\ntrain.max_steps = 2\ntrain.seed = 1\n"
                                       "gen.windows = 2\ngen.frames = 5\ngen.height = 20\ngen.width = 20\n"
                                       "paths.data_manifest = data/manifest.txt\npaths.checkpoint_dir = ckpt\n";
    const std::string d = "\"" + dir.string() + "\"";
    CHECK(run_cli("gen-data --config " + d + "/run.conf --out " + d + "/data") == 0);
    CHECK(fs::exists(dir / "data" / "manifest.txt"));
    CHECK(run_cli("train --config " + d + "/run.conf") == 0);
    CHECK(fs::exists(dir / "ckpt" / "ckpt_final.bin"));
    CHECK(run_cli("eval --ckpt " + d + "/ckpt/ckpt_final.bin --data " + d + "/data/manifest.txt --out " + d +
                  "/reports") == 0);
    CHECK(fs::exists(dir / "reports" / "report.tsv"));
    CHECK(run_cli("infer --ckpt " + d + "/ckpt/ckpt_final.bin --frames " + d + "/data/infer_example --out " + d +
                  "/infer") == 0);
    CHECK(fs::exists(dir / "infer" / "frame_004.hdr"));
    CHECK(run_cli("plot --reports '" + dir.string() + "/reports/*.kv' --out " + d + "/plots") == 0);
    CHECK(fs::exists(dir / "plots" / "scatter.png"));
    CHECK(run_cli("train --config " + d + "/missing.conf") != 0);
    CHECK(run_cli("plot --reports '" + dir.string() + "/nothing/*.kv' --out " + d + "/plots") != 0);
}
