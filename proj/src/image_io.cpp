#include "hdrseq/image_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace hdrseq {

namespace {

static_assert(std::endian::native == std::endian::little, "raw frame I/O assumes a little-endian host");

std::string lower_ext(const std::filesystem::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return e;
}

// OpenCV BGR(A)/gray interleaved -> planar RGB float, scaled by `scale`.
Frame from_mat(const cv::Mat& m, double scale) {
    cv::Mat bgr;
    if (m.channels() == 1) {
        cv::cvtColor(m, bgr, cv::COLOR_GRAY2BGR);
    } else if (m.channels() == 4) {
        cv::cvtColor(m, bgr, cv::COLOR_BGRA2BGR);
    } else {
        bgr = m;
    }
    cv::Mat f;
    bgr.convertTo(f, CV_32FC3, scale);
    Frame out(3, f.rows, f.cols);
    for (int y = 0; y < f.rows; ++y) {
        const auto* row = f.ptr<cv::Vec3f>(y);
        for (int x = 0; x < f.cols; ++x) {
            out.at(0, y, x) = row[x][2];
            out.at(1, y, x) = row[x][1];
            out.at(2, y, x) = row[x][0];
        }
    }
    return out;
}

cv::Mat to_mat(const Frame& f) {
    if (f.channels != 3) throw ShapeError("expected a 3-channel frame");
    cv::Mat m(f.height, f.width, CV_32FC3);
    for (int y = 0; y < f.height; ++y) {
        auto* row = m.ptr<cv::Vec3f>(y);
        for (int x = 0; x < f.width; ++x) row[x] = cv::Vec3f(f.at(2, y, x), f.at(1, y, x), f.at(0, y, x));
    }
    return m;
}

}  // namespace

Frame read_png(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty()) throw IoError("cannot read image " + path.string());
    const double scale = m.depth() == CV_16U ? 1.0 / 65535.0 : 1.0 / 255.0;
    if (m.depth() != CV_8U && m.depth() != CV_16U) throw IoError("unsupported PNG bit depth in " + path.string());
    return from_mat(m, scale);
}

void write_png(const std::filesystem::path& path, const Frame& ldr, int bits) {
    if (bits != 8 && bits != 16) throw std::invalid_argument("write_png: bits must be 8 or 16");
    const double peak = bits == 8 ? 255.0 : 65535.0;
    cv::Mat f = to_mat(ldr);
    cv::Mat q(f.rows, f.cols, bits == 8 ? CV_8UC3 : CV_16UC3);
    for (int y = 0; y < f.rows; ++y) {
        for (int x = 0; x < f.cols; ++x) {
            const auto v = f.at<cv::Vec3f>(y, x);
            for (int c = 0; c < 3; ++c) {
                const double s = std::round(std::clamp(static_cast<double>(v[c]), 0.0, 1.0) * peak);
                if (bits == 8) {
                    q.at<cv::Vec3b>(y, x)[c] = static_cast<std::uint8_t>(s);
                } else {
                    q.at<cv::Vec3w>(y, x)[c] = static_cast<std::uint16_t>(s);
                }
            }
        }
    }
    if (!cv::imwrite(path.string(), q)) throw IoError("cannot write " + path.string());
}

Frame read_rgbe(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_ANYDEPTH | cv::IMREAD_COLOR);
    if (m.empty()) throw IoError("cannot read HDR image " + path.string());
    return from_mat(m, 1.0);
}

void write_rgbe(const std::filesystem::path& path, const Frame& hdr) {
    if (!cv::imwrite(path.string(), to_mat(hdr))) throw IoError("cannot write " + path.string());
}

Frame read_raw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::array<char, 4> magic{};
    std::array<std::uint32_t, 3> dims{};
    in.read(magic.data(), 4);
    in.read(reinterpret_cast<char*>(dims.data()), sizeof dims);
    if (!in || std::memcmp(magic.data(), "LCAT", 4) != 0) throw IoError("not a raw frame file: " + path.string());
    const auto [h, w, c] = dims;
    if (h == 0 || w == 0 || c == 0 || h > 1u << 16 || w > 1u << 16 || c > 64) {
        throw IoError("implausible raw frame dimensions in " + path.string());
    }
    std::vector<float> buf(static_cast<std::size_t>(h) * w * c);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw IoError("truncated raw frame " + path.string());
    Frame f(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w));
    for (std::uint32_t y = 0; y < h; ++y) {
        for (std::uint32_t x = 0; x < w; ++x) {
            for (std::uint32_t ch = 0; ch < c; ++ch) f.at(ch, y, x) = buf[(static_cast<std::size_t>(y) * w + x) * c + ch];
        }
    }
    return f;
}

void write_raw(const std::filesystem::path& path, const Frame& frame) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    const std::array<std::uint32_t, 3> dims{static_cast<std::uint32_t>(frame.height),
                                            static_cast<std::uint32_t>(frame.width),
                                            static_cast<std::uint32_t>(frame.channels)};
    out.write("LCAT", 4);
    out.write(reinterpret_cast<const char*>(dims.data()), sizeof dims);
    std::vector<float> buf(frame.size());
    for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < frame.width; ++x) {
            for (int c = 0; c < frame.channels; ++c) {
                buf[(static_cast<std::size_t>(y) * frame.width + x) * frame.channels + c] = frame.at(c, y, x);
            }
        }
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw IoError("failed writing " + path.string());
}

void write_hdr_frame(const std::filesystem::path& path, const Frame& hdr) {
    const auto ext = lower_ext(path);
    if (ext == ".hdr") {
        write_rgbe(path, hdr);
    } else if (ext == ".lcat") {
        write_raw(path, hdr);
    } else {
        throw IoError("unknown HDR extension for " + path.string());
    }
}

bool is_frame_file(const std::filesystem::path& path) {
    const auto ext = lower_ext(path);
    return ext == ".png" || ext == ".hdr" || ext == ".lcat";
}

}  // namespace hdrseq
