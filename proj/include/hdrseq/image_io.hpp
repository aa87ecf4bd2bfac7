#pragma once

// Frame files: PNG (8/16-bit, LDR values in [0,1]), Radiance RGBE (.hdr), and
// a raw float format (.lcat):
//   bytes 0..3   magic "LCAT"
//   bytes 4..15  u32 height, u32 width, u32 channels (little-endian)
//   then height*width*channels little-endian f32, row-major, channels interleaved.

#include <filesystem>
#include <stdexcept>

#include "hdrseq/grid.hpp"

namespace hdrseq {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Frame read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Frame& ldr, int bits = 8);

Frame read_rgbe(const std::filesystem::path& path);
void write_rgbe(const std::filesystem::path& path, const Frame& hdr);

Frame read_raw(const std::filesystem::path& path);
void write_raw(const std::filesystem::path& path, const Frame& frame);

// Writes .hdr or .lcat according to the extension.
void write_hdr_frame(const std::filesystem::path& path, const Frame& hdr);

bool is_frame_file(const std::filesystem::path& path);

}  // namespace hdrseq
