#include <doctest.h>

#include <filesystem>

#include "hdrseq/config.hpp"

using namespace hdrseq;
namespace fs = std::filesystem;

namespace {
const fs::path kConfigs = fs::path(HDRSEQ_SOURCE_DIR) / "configs";
}

TEST_CASE("defaults when the text is empty") {
    auto c = parse_config("");
    CHECK(c.stage1.width == 32);
    CHECK(c.stage2.width == 48);
    CHECK(c.stage2.blocks == 2);
    CHECK(c.schedule.frames == 5);
    CHECK(c.tone.kappa == 5000.0);
    CHECK(c.weights.lambda_t == 0.5);
    CHECK(c.weights.lambda_z == 0.1);
    CHECK_FALSE(c.train.seed.has_value());
}

TEST_CASE("keys, comments and whitespace") {
    auto c = parse_config("# comment\n  model.c = 16   \n\nschedule.mode = alternating # trailing\ntrain.seed = 42\n"
                          "train.rotate = false\npaths.checkpoint_dir = ckpt\npaths.report_dir = /abs/reports\n",
                          "/tmp/base");
    CHECK(c.stage1.width == 16);
    CHECK(c.schedule.mode == CaptureMode::alternating);
    CHECK(c.train.seed == 42u);
    CHECK_FALSE(c.train.rotate);
    CHECK(c.paths.checkpoint_dir == fs::path("/tmp/base/ckpt"));
    CHECK(c.paths.report_dir == fs::path("/abs/reports"));
}

TEST_CASE("malformed input is rejected") {
    CHECK_THROWS_AS(parse_config("model.colour = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("model.c 32\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("model.c = many\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("model.c = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("train.lr_final = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("schedule.anchor_timestamp = 9\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("train.patch = 30\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/file.conf"), ConfigError);
}

TEST_CASE("canonical text round-trips") {
    auto c = parse_config("model.c = 12\nloss.lambda_z = 0.25\ntrain.seed = 9\ntrain.lr_initial = 3e-4\n");
    auto again = parse_config(c.to_text());
    CHECK(again.to_text() == c.to_text());
    CHECK(again.model_hash() == c.model_hash());
    CHECK(again.train.lr_initial == 3e-4);
}

TEST_CASE("model hash tracks architecture keys only") {
    auto a = parse_config("model.c = 12\n");
    auto b = parse_config("model.c = 12\ntrain.max_steps = 5\nloss.kappa = 100\n");
    auto c = parse_config("model.c = 13\n");
    CHECK(a.model_hash() == b.model_hash());
    CHECK(a.model_hash() != c.model_hash());
    CHECK(hash_hex(a.model_hash()).size() == 16);
}

TEST_CASE("shipped configs parse") {
    for (const char* name : {"desk.conf", "full_scale.conf", "smoke.conf"}) {
        CAPTURE(name);
        auto c = load_config(kConfigs / name);
        CHECK(c.train.seed.has_value());
    }
    auto desk = load_config(kConfigs / "desk.conf");
    CHECK(desk.stage1.width == 32);
    CHECK(desk.stage2.width == 48);
    CHECK(desk.stage2.blocks == 2);
    CHECK(desk.train.patch == 64);
    CHECK(desk.train.batch_size == 2);
}

TEST_CASE("full-scale config carries the published training settings") {
    auto c = load_config(kConfigs / "full_scale.conf");
    auto s = build_capture_schedule(c.schedule);
    CHECK(s.frames == 5);
    CHECK(s.anchors_per_window == 1);
    CHECK(s.anchor_timestamp == 3);
    CHECK(c.train.patch == 256);
    CHECK(c.train.batch_size == 4);
    CHECK(c.train.lr_initial == 1e-4);
    CHECK(c.train.lr_final == 1e-6);
}
