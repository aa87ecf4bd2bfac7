#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hdrseq/metrics.hpp"

namespace hdrseq {

struct PlotStyle {
    int width = 640;
    int height = 400;
    int margin = 50;
};

// Runtime (ms) against PSNR_T, one point per report.
std::filesystem::path plot_speed_quality(const std::vector<SequenceReport>& reports,
                                         const std::filesystem::path& out_file, const PlotStyle& style = {});
// Per-frame PSNR trace of one report, drawn as a polyline in pure red.
std::filesystem::path plot_frame_trace(const SequenceReport& report, const std::filesystem::path& out_file,
                                       const PlotStyle& style = {});

// Reads every .kv report matching the glob pattern, sorted by path.
std::vector<SequenceReport> load_reports(const std::string& pattern);

// scatter.png plus trace_<name>.png per report.
std::vector<std::filesystem::path> plot_reports(const std::vector<SequenceReport>& reports,
                                                const std::filesystem::path& out_dir);

}  // namespace hdrseq
