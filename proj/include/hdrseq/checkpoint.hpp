#pragma once

// Binary checkpoint layout (little-endian):
//   "HSCK" u32 version
//   u64 model hash, u64 step, u64 optimizer step count
//   u32 length + bytes: canonical config text
//   u32 parameter count, then per parameter:
//     u32 length + bytes: name
//     i32 c, h, w
//     f64[n] values, f64[n] first moment, f64[n] second moment

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hdrseq/config.hpp"
#include "hdrseq/model.hpp"

namespace hdrseq {

struct Checkpoint {
    RunConfig config;
    Model model;
    Adam optimizer;
    std::uint64_t step = 0;
    std::uint64_t model_hash = 0;
};

std::vector<char> serialize_checkpoint(const RunConfig& config, const Model& model, const Adam& optimizer,
                                       std::uint64_t step);
Checkpoint deserialize_checkpoint(const std::vector<char>& bytes);

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, const Model& model,
                     const Adam& optimizer, std::uint64_t step);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hdrseq
