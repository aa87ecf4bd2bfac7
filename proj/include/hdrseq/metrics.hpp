#pragma once

// Evaluation metrics computed in the tone-mapped domain.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hdrseq/grid.hpp"
#include "hdrseq/imaging.hpp"

namespace hdrseq {

using Image = Grid<double>;
using ImageSequence = std::vector<Image>;

inline constexpr double kPsnrCap = 99.0;

// PSNR for a given peak-to-peak data range, capped at kPsnrCap.
double psnr(const Image& a, const Image& b, double data_range);
// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5) at valid positions,
// c1 = (0.01 L)^2, c2 = (0.03 L)^2, averaged over channels.
double ssim(const Image& a, const Image& b, double data_range = 1.0);

double psnr_mu(const Image& xhat, const Image& x, const ToneMapParams& p);
double ssim_mu(const Image& xhat, const Image& x, const ToneMapParams& p);

struct TemporalScores {
    double t_psnr = 0.0;
    double t_ssim = 0.0;
};
// Compares consecutive-frame differences of the tone-mapped sequences.
TemporalScores temporal_metrics(const ImageSequence& xhat, const ImageSequence& x, const ToneMapParams& p);

struct BrightnessStats {
    std::optional<double> ab;  // needs a reference sequence
    double madb = 0.0;
    double lsd = 0.0;
    std::vector<double> trace;  // per-frame mean brightness of the prediction, 8-bit units
};
// Frame brightness is the mean of 255 * BT.601 luma of the tone-mapped frame.
double frame_brightness(const Image& frame, const ToneMapParams& p);
BrightnessStats brightness_stats(const ImageSequence& xhat, const ImageSequence* x, const ToneMapParams& p);

// Population standard deviation of the per-frame psnr_mu values.
double per_frame_std(const ImageSequence& xhat, const ImageSequence& x, const ToneMapParams& p);

struct SequenceReport {
    std::string name;
    int frames = 0;
    double psnr_t = 0.0;
    double ssim_t = 0.0;
    double t_psnr = 0.0;
    double t_ssim = 0.0;
    double std = 0.0;
    double ab = 0.0;
    double madb = 0.0;
    double lsd = 0.0;
    double runtime_ms = 0.0;
    std::vector<double> psnr_trace;
    std::vector<double> ssim_trace;
    std::vector<double> brightness_trace;
    std::string note;

    // Flat `key = value` lines; traces are comma-separated.
    std::string to_key_value() const;
    static SequenceReport from_key_value(const std::string& text);
    // Tab-separated, columns in table_columns() order.
    std::string to_table_row() const;
    static const std::vector<std::string>& table_columns();
    static std::string table_header();
};

// Fills every metric; temporal ones are NaN with a note when T < 2.
SequenceReport evaluate_sequence(const std::string& name, const ImageSequence& xhat, const ImageSequence& x,
                                 const ToneMapParams& p);
// Column-wise mean over reports (NaN entries skipped), named "mean".
SequenceReport aggregate_reports(const std::vector<SequenceReport>& reports);

}  // namespace hdrseq
