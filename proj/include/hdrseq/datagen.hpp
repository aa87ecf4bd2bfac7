#pragma once

// Synthetic capture: renders the mid-exposure backbone and the low/high anchor
// pair(s) from ground-truth linear frames, plus cropping/rotation augmentation.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hdrseq/imaging.hpp"
#include "hdrseq/stage1.hpp"

namespace hdrseq {

enum class CaptureMode { fixed_reference, alternating };

std::string to_string(CaptureMode m);
CaptureMode parse_capture_mode(const std::string& s);

struct ExposureTriple {
    double low = 0.25;
    double mid = 1.0;
    double high = 4.0;
};

struct NoiseConfig {
    double low = 0.03;
    double mid = 0.01;
    double high = 0.005;
};

struct ScheduleConfig {
    CaptureMode mode = CaptureMode::fixed_reference;
    int frames = 5;
    int anchors_per_window = 1;
    // 1-based frame index of anchor pair (a); 0 selects the window centre.
    int anchor_timestamp = 0;
    // 1-based frame index of anchor pair (b).
    int anchor_b_timestamp = 1;
    double stops = 2.0;
    double mid_exposure = 1.0;
};

struct Segment {
    int begin = 0;   // 0-based first frame
    int length = 0;
    int anchor = 0;  // 0-based frame the anchor pair (a) is rendered from
    int anchor_b = 0;
};

struct CaptureSchedule {
    CaptureMode mode = CaptureMode::fixed_reference;
    int frames = 5;
    int anchors_per_window = 1;
    int anchor_timestamp = 3;  // 1-based
    int anchor_b_timestamp = 1;
    ExposureTriple exposures;

    // Contiguous backbone segments, one per anchor pair.
    std::vector<Segment> segments() const;
    // Per-frame exposure for alternating capture: low, mid, high, low, ...
    std::vector<double> alternating_exposures() const;
};

CaptureSchedule build_capture_schedule(const ScheduleConfig& config);

struct AnchorPair {
    LdrInput low;
    LdrInput high;
    int timestamp = 0;  // 0-based frame index within the window
};

struct Augmentation {
    int start = 0;  // first window frame used
    int crop_y = 0;
    int crop_x = 0;
    int rotation = 0;  // quarter turns, counter-clockwise
};

struct TrainingSample {
    std::vector<LdrInput> backbone;
    std::vector<AnchorPair> anchors_a;  // one per segment
    std::vector<AnchorPair> anchors_b;
    std::vector<Frame> ground_truth;
    Augmentation augmentation;
};

struct RenderConfig {
    CameraResponse response;
    NoiseConfig noise;
};

// Renders the backbone and anchor pairs (a); anchors_b is left empty.
TrainingSample render_ldr_sequence(const std::vector<Frame>& gt, const CaptureSchedule& schedule,
                                   const RenderConfig& render, std::uint64_t seed);

// Alternating-exposure rendering of the same frames.
std::vector<LdrInput> render_alternating(const std::vector<Frame>& gt, const CaptureSchedule& schedule,
                                         const RenderConfig& render, std::uint64_t seed);

struct SampleConfig {
    int patch_height = 64;
    int patch_width = 64;
    bool rotate = true;
    RenderConfig render;
};

TrainingSample make_training_sample(const std::vector<Frame>& window, const CaptureSchedule& schedule,
                                    const SampleConfig& config, std::uint64_t seed);

Frame crop(const Frame& f, int y, int x, int height, int width);
// Counter-clockwise rotation by quarter turns.
Frame rotate90(const Frame& f, int quarter_turns);

// Frames sorted by file name. PNG is linearised with the response (exposure 1);
// .hdr and .lcat are taken as linear. `count` < 0 reads to the end.
std::vector<Frame> load_video_frames(const std::filesystem::path& dir, int first = 0, int count = -1,
                                     const CameraResponse& response = {});

// Window directories listed one per line, relative to the manifest; '#' starts a comment.
std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& manifest);

struct SceneConfig {
    int height = 64;
    int width = 64;
    int frames = 5;
    double motion = 1.0;  // pixels per frame of the moving highlight
    double peak = 6.0;    // radiance of the highlight
    std::uint64_t seed = 1;
};

// Procedural HDR scene: textured background, dark shadow band and a moving highlight.
std::vector<Frame> synthesize_scene(const SceneConfig& config);

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

}  // namespace hdrseq
