#pragma once

// Run configuration, read from line-oriented `key = value` files with dotted
// keys. Blank lines and '#' comments are ignored. Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "hdrseq/datagen.hpp"
#include "hdrseq/losses.hpp"
#include "hdrseq/stage1.hpp"
#include "hdrseq/stage2.hpp"

namespace hdrseq {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    double lr_initial = 1e-4;
    double lr_final = 1e-6;
    int batch_size = 2;
    int max_steps = 1000;
    std::optional<std::uint64_t> seed;
    int patch = 64;
    bool rotate = true;
    int checkpoint_every = 0;  // 0: final checkpoint only
    int log_every = 10;
};

struct GenConfig {
    int windows = 8;
    int frames = 7;
    int height = 96;
    int width = 96;
    double motion = 1.5;
    double peak = 6.0;
    std::uint64_t seed = 7;
};

struct PathConfig {
    std::filesystem::path data_manifest;
    std::filesystem::path checkpoint_dir = "checkpoints";
    std::filesystem::path report_dir = "reports";
};

struct RunConfig {
    Stage1Config stage1;
    Stage2Config stage2;
    ScheduleConfig schedule;
    NoiseConfig noise;
    CameraResponse response;
    ToneMapParams tone;
    LossWeights weights;
    TrainConfig train;
    GenConfig gen;
    PathConfig paths;

    // Canonical `key = value` text covering every key.
    std::string to_text() const;
    // FNV-1a over the canonical model.* lines.
    std::uint64_t model_hash() const;
};

// Applies `key = value` lines on top of defaults. Relative paths resolve against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& file);

std::string hash_hex(std::uint64_t h);

}  // namespace hdrseq
