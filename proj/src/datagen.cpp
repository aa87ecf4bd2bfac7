#include "hdrseq/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "hdrseq/image_io.hpp"

namespace hdrseq {

std::string to_string(CaptureMode m) { return m == CaptureMode::alternating ? "alternating" : "fixed_reference"; }

CaptureMode parse_capture_mode(const std::string& s) {
    if (s == "fixed_reference") return CaptureMode::fixed_reference;
    if (s == "alternating") return CaptureMode::alternating;
    throw std::invalid_argument("unknown capture mode '" + s + "'");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    // splitmix64 finaliser over the combined value
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

CaptureSchedule build_capture_schedule(const ScheduleConfig& c) {
    if (c.frames < 1) throw std::invalid_argument("schedule: window length must be >= 1");
    if (c.anchors_per_window < 1 || c.anchors_per_window > c.frames) {
        throw std::invalid_argument("schedule: anchors_per_window must be in [1, frames]");
    }
    if (!(c.stops > 0.0) || !(c.mid_exposure > 0.0)) {
        throw std::invalid_argument("schedule: stops and mid exposure must be positive");
    }
    CaptureSchedule s;
    s.mode = c.mode;
    s.frames = c.frames;
    s.anchors_per_window = c.anchors_per_window;
    s.anchor_timestamp = c.anchor_timestamp == 0 ? (c.frames + 1) / 2 : c.anchor_timestamp;
    s.anchor_b_timestamp = c.anchor_b_timestamp;
    if (s.anchor_timestamp < 1 || s.anchor_timestamp > c.frames || s.anchor_b_timestamp < 1 ||
        s.anchor_b_timestamp > c.frames) {
        throw std::invalid_argument("schedule: anchor timestamps must lie in [1, frames]");
    }
    const double f = std::exp2(c.stops);
    s.exposures = {c.mid_exposure / f, c.mid_exposure, c.mid_exposure * f};
    return s;
}

std::vector<Segment> CaptureSchedule::segments() const {
    if (anchors_per_window == 1) {
        return {Segment{0, frames, anchor_timestamp - 1, anchor_b_timestamp - 1}};
    }
    std::vector<Segment> out;
    const int base = frames / anchors_per_window;
    const int extra = frames % anchors_per_window;
    int begin = 0;
    for (int i = 0; i < anchors_per_window; ++i) {
        const int len = base + (i < extra ? 1 : 0);
        out.push_back(Segment{begin, len, begin + (len - 1) / 2, begin});
        begin += len;
    }
    return out;
}

std::vector<double> CaptureSchedule::alternating_exposures() const {
    const double cycle[3] = {exposures.low, exposures.mid, exposures.high};
    std::vector<double> e(frames);
    for (int t = 0; t < frames; ++t) e[t] = cycle[t % 3];
    return e;
}

namespace {

LdrInput render(const Frame& gt, double exposure, double sigma, const RenderConfig& r, std::uint64_t seed) {
    return {simulate_exposure(gt, exposure, r.response, sigma, seed), exposure};
}

AnchorPair render_pair(const Frame& gt, int timestamp, const CaptureSchedule& s, const RenderConfig& r,
                       std::uint64_t seed, std::uint64_t tag) {
    return {render(gt, s.exposures.low, r.noise.low, r, derive_seed(seed, tag)),
            render(gt, s.exposures.high, r.noise.high, r, derive_seed(seed, tag + 1)), timestamp};
}

constexpr std::uint64_t kBackboneTag = 0;
constexpr std::uint64_t kAnchorATag = 1u << 20;
constexpr std::uint64_t kAnchorBTag = 2u << 20;

}  // namespace

TrainingSample render_ldr_sequence(const std::vector<Frame>& gt, const CaptureSchedule& schedule,
                                   const RenderConfig& r, std::uint64_t seed) {
    if (static_cast<int>(gt.size()) != schedule.frames) {
        throw std::invalid_argument("render_ldr_sequence: expected " + std::to_string(schedule.frames) +
                                    " ground-truth frames, got " + std::to_string(gt.size()));
    }
    TrainingSample s;
    s.ground_truth = gt;
    for (std::size_t t = 0; t < gt.size(); ++t) {
        s.backbone.push_back(render(gt[t], schedule.exposures.mid, r.noise.mid, r, derive_seed(seed, kBackboneTag + t)));
    }
    for (const auto& seg : schedule.segments()) {
        s.anchors_a.push_back(render_pair(gt[seg.anchor], seg.anchor, schedule, r, seed, kAnchorATag + 2 * seg.anchor));
    }
    return s;
}

std::vector<LdrInput> render_alternating(const std::vector<Frame>& gt, const CaptureSchedule& schedule,
                                         const RenderConfig& r, std::uint64_t seed) {
    const auto exposures = schedule.alternating_exposures();
    if (gt.size() != exposures.size()) throw std::invalid_argument("render_alternating: length mismatch");
    std::vector<LdrInput> out;
    for (std::size_t t = 0; t < gt.size(); ++t) {
        const double e = exposures[t];
        const double sigma = t % 3 == 0 ? r.noise.low : (t % 3 == 1 ? r.noise.mid : r.noise.high);
        out.push_back(render(gt[t], e, sigma, r, derive_seed(seed, t)));
    }
    return out;
}

Frame crop(const Frame& f, int y, int x, int height, int width) {
    if (y < 0 || x < 0 || y + height > f.height || x + width > f.width) throw ShapeError("crop: window out of bounds");
    Frame out(f.channels, height, width);
    for (int c = 0; c < f.channels; ++c) {
        for (int r = 0; r < height; ++r) {
            for (int q = 0; q < width; ++q) out.at(c, r, q) = f.at(c, y + r, x + q);
        }
    }
    return out;
}

Frame rotate90(const Frame& f, int quarter_turns) {
    const int k = ((quarter_turns % 4) + 4) % 4;
    if (k == 0) return f;
    const bool swap = k % 2 == 1;
    Frame out(f.channels, swap ? f.width : f.height, swap ? f.height : f.width);
    for (int c = 0; c < f.channels; ++c) {
        for (int y = 0; y < f.height; ++y) {
            for (int x = 0; x < f.width; ++x) {
                int ny = 0;
                int nx = 0;
                switch (k) {
                    case 1:  // (y, x) -> (W-1-x, y)
                        ny = f.width - 1 - x;
                        nx = y;
                        break;
                    case 2:
                        ny = f.height - 1 - y;
                        nx = f.width - 1 - x;
                        break;
                    default:  // (y, x) -> (x, H-1-y)
                        ny = x;
                        nx = f.height - 1 - y;
                        break;
                }
                out.at(c, ny, nx) = f.at(c, y, x);
            }
        }
    }
    return out;
}

TrainingSample make_training_sample(const std::vector<Frame>& window, const CaptureSchedule& schedule,
                                    const SampleConfig& config, std::uint64_t seed) {
    const int t_len = schedule.frames;
    if (static_cast<int>(window.size()) < t_len) {
        throw std::invalid_argument("make_training_sample: window shorter than the schedule");
    }
    const int h = window[0].height;
    const int w = window[0].width;
    for (const auto& f : window) {
        if (f.height != h || f.width != w) throw ShapeError("make_training_sample: frames differ in size");
    }
    if (config.patch_height > h || config.patch_width > w) {
        throw ShapeError("make_training_sample: source frames smaller than the crop");
    }
    std::mt19937_64 rng(derive_seed(seed, 0xa5a5));
    Augmentation aug;
    aug.start = std::uniform_int_distribution<int>(0, static_cast<int>(window.size()) - t_len)(rng);
    aug.crop_y = std::uniform_int_distribution<int>(0, h - config.patch_height)(rng);
    aug.crop_x = std::uniform_int_distribution<int>(0, w - config.patch_width)(rng);
    aug.rotation = config.rotate ? std::uniform_int_distribution<int>(0, 3)(rng) : 0;

    std::vector<Frame> gt;
    for (int t = 0; t < t_len; ++t) {
        const Frame& src = window[aug.start + t];
        gt.push_back(rotate90(crop(src, aug.crop_y, aug.crop_x, config.patch_height, config.patch_width), aug.rotation));
    }
    TrainingSample s = render_ldr_sequence(gt, schedule, config.render, seed);
    for (const auto& seg : schedule.segments()) {
        s.anchors_b.push_back(render_pair(gt[seg.anchor_b], seg.anchor_b, schedule, config.render, seed,
                                          kAnchorBTag + 2 * seg.anchor_b));
    }
    s.augmentation = aug;
    return s;
}

std::vector<Frame> load_video_frames(const std::filesystem::path& dir, int first, int count,
                                     const CameraResponse& response) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && is_frame_file(e.path())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
        return a.filename().string() < b.filename().string();
    });
    if (first < 0) throw std::invalid_argument("load_video_frames: negative start index");
    const std::size_t begin = std::min<std::size_t>(first, files.size());
    const std::size_t end = count < 0 ? files.size() : std::min<std::size_t>(files.size(), begin + count);
    std::vector<Frame> out;
    for (std::size_t i = begin; i < end; ++i) {
        std::string ext = files[i].extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        Frame f;
        if (ext == ".png") {
            f = linearize_ldr(read_png(files[i]), 1.0, response);
        } else if (ext == ".hdr") {
            f = read_rgbe(files[i]);
        } else {
            f = read_raw(files[i]);
        }
        if (!out.empty() && !f.same_shape(out.front())) {
            throw IoError("mixed frame resolutions in " + dir.string() + " at " + files[i].filename().string());
        }
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw IoError("cannot open manifest " + manifest.string());
    std::vector<std::filesystem::path> out;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        std::filesystem::path p = line.substr(b, e - b + 1);
        out.push_back(p.is_absolute() ? p : manifest.parent_path() / p);
    }
    return out;
}

std::vector<Frame> synthesize_scene(const SceneConfig& c) {
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // Low-frequency texture from a few random sinusoids per channel.
    struct Wave {
        double fy, fx, phase, amp;
    };
    std::vector<Wave> waves[3];
    for (auto& ws : waves) {
        for (int i = 0; i < 4; ++i) ws.push_back({u(rng) * 0.3, u(rng) * 0.3, u(rng) * 6.283, 0.05 + 0.1 * u(rng)});
    }
    const double tint[3] = {0.8 + 0.4 * u(rng), 0.8 + 0.4 * u(rng), 0.8 + 0.4 * u(rng)};
    const double cy0 = c.height * (0.3 + 0.4 * u(rng));
    const double cx0 = c.width * (0.2 + 0.3 * u(rng));
    const double angle = u(rng) * 6.283;
    const double radius = std::max(2.0, std::min(c.height, c.width) / 8.0);

    std::vector<Frame> frames;
    for (int t = 0; t < c.frames; ++t) {
        Frame f(3, c.height, c.width);
        const double cy = cy0 + c.motion * t * std::sin(angle);
        const double cx = cx0 + c.motion * t * std::cos(angle);
        for (int ch = 0; ch < 3; ++ch) {
            for (int y = 0; y < c.height; ++y) {
                for (int x = 0; x < c.width; ++x) {
                    double v = 0.35 * tint[ch] * (0.5 + 0.5 * static_cast<double>(x) / c.width);
                    for (const auto& w : waves[ch]) v += w.amp * std::sin(w.fy * y + w.fx * x + w.phase);
                    // Shadow band in the lower quarter.
                    if (y > 3 * c.height / 4) v *= 0.08;
                    const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                    v += c.peak * std::exp(-d2 / (2.0 * radius * radius));
                    f.at(ch, y, x) = static_cast<float>(std::max(0.0, v));
                }
            }
        }
        frames.push_back(std::move(f));
    }
    return frames;
}

}  // namespace hdrseq
