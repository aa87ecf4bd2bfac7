#include "hdrseq/plot.hpp"

#include <glob.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <sstream>
#include <stdexcept>

#include "hdrseq/image_io.hpp"

namespace hdrseq {

namespace fs = std::filesystem;

namespace {

const cv::Scalar kBlack(0, 0, 0);
const cv::Scalar kGrey(200, 200, 200);
const cv::Scalar kRed(0, 0, 255);  // BGR
const cv::Scalar kBlue(255, 0, 0);

struct Axis {
    double lo, hi;
    double map(double v, int a, int b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

Axis padded_range(const std::vector<double>& v, double pad_if_flat) {
    double lo = *std::min_element(v.begin(), v.end());
    double hi = *std::max_element(v.begin(), v.end());
    if (hi - lo < 1e-12) {
        lo -= pad_if_flat;
        hi += pad_if_flat;
    } else {
        const double m = 0.1 * (hi - lo);
        lo -= m;
        hi += m;
    }
    return {lo, hi};
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

cv::Mat canvas(const PlotStyle& s, const std::string& title, const std::string& xlabel, const std::string& ylabel,
               const Axis& x, const Axis& y) {
    cv::Mat img(s.height, s.width, CV_8UC3, cv::Scalar(255, 255, 255));
    const int left = s.margin;
    const int right = s.width - s.margin / 2;
    const int top = s.margin / 2;
    const int bottom = s.height - s.margin;
    cv::line(img, {left, bottom}, {right, bottom}, kBlack, 1, cv::LINE_8);
    cv::line(img, {left, top}, {left, bottom}, kBlack, 1, cv::LINE_8);
    const auto font = cv::FONT_HERSHEY_SIMPLEX;
    cv::putText(img, title, {left, top - 6 > 10 ? top - 6 : 12}, font, 0.45, kBlack, 1, cv::LINE_8);
    cv::putText(img, xlabel, {(left + right) / 2 - 40, s.height - 10}, font, 0.4, kBlack, 1, cv::LINE_8);
    cv::putText(img, ylabel, {4, top + 12}, font, 0.4, kBlack, 1, cv::LINE_8);
    cv::putText(img, label(x.lo), {left, bottom + 16}, font, 0.35, kBlack, 1, cv::LINE_8);
    cv::putText(img, label(x.hi), {right - 40, bottom + 16}, font, 0.35, kBlack, 1, cv::LINE_8);
    cv::putText(img, label(y.lo), {2, bottom}, font, 0.35, kBlack, 1, cv::LINE_8);
    cv::putText(img, label(y.hi), {2, top + 28}, font, 0.35, kBlack, 1, cv::LINE_8);
    return img;
}

void save(const cv::Mat& img, const fs::path& out) {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    if (!cv::imwrite(out.string(), img)) throw IoError("cannot write plot " + out.string());
}

}  // namespace

fs::path plot_speed_quality(const std::vector<SequenceReport>& reports, const fs::path& out_file,
                            const PlotStyle& style) {
    if (reports.empty()) throw std::invalid_argument("plot_speed_quality: no reports");
    std::vector<double> xs, ys;
    for (const auto& r : reports) {
        xs.push_back(r.runtime_ms);
        ys.push_back(r.psnr_t);
    }
    const Axis ax = padded_range(xs, 1.0);
    const Axis ay = padded_range(ys, 1.0);
    cv::Mat img = canvas(style, "speed vs quality", "runtime (ms)", "PSNR_T (dB)", ax, ay);
    const int left = style.margin;
    const int right = style.width - style.margin / 2;
    const int top = style.margin / 2;
    const int bottom = style.height - style.margin;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const cv::Point p(static_cast<int>(std::lround(ax.map(xs[i], left, right))),
                          static_cast<int>(std::lround(ay.map(ys[i], bottom, top))));
        cv::circle(img, p, 4, kBlue, cv::FILLED, cv::LINE_8);
        cv::putText(img, reports[i].name, p + cv::Point(6, -6), cv::FONT_HERSHEY_SIMPLEX, 0.35, kBlack, 1, cv::LINE_8);
    }
    save(img, out_file);
    return out_file;
}

fs::path plot_frame_trace(const SequenceReport& report, const fs::path& out_file, const PlotStyle& style) {
    if (report.psnr_trace.empty()) throw std::invalid_argument("plot_frame_trace: empty trace");
    const auto& v = report.psnr_trace;
    std::vector<double> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) idx[i] = static_cast<double>(i);
    const Axis ax = v.size() > 1 ? Axis{0.0, static_cast<double>(v.size() - 1)} : Axis{-1.0, 1.0};
    const Axis ay = padded_range(v, 1.0);
    cv::Mat img = canvas(style, "per-frame PSNR: " + report.name, "frame", "PSNR (dB)", ax, ay);
    const int left = style.margin + 4;
    const int right = style.width - style.margin / 2 - 4;
    const int top = style.margin / 2;
    const int bottom = style.height - style.margin - 2;
    std::vector<cv::Point> pts;
    for (std::size_t i = 0; i < v.size(); ++i) {
        pts.emplace_back(static_cast<int>(std::lround(ax.map(idx[i], left, right))),
                         static_cast<int>(std::lround(ay.map(v[i], bottom, top))));
    }
    if (pts.size() == 1) {
        cv::circle(img, pts[0], 2, kRed, cv::FILLED, cv::LINE_8);
    } else {
        cv::polylines(img, pts, false, kRed, 1, cv::LINE_8);
    }
    save(img, out_file);
    return out_file;
}

std::vector<SequenceReport> load_reports(const std::string& pattern) {
    glob_t g{};
    std::vector<SequenceReport> out;
    if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
        std::vector<std::string> paths(g.gl_pathv, g.gl_pathv + g.gl_pathc);
        std::sort(paths.begin(), paths.end());
        for (const auto& p : paths) {
            std::ifstream in(p);
            std::stringstream ss;
            ss << in.rdbuf();
            out.push_back(SequenceReport::from_key_value(ss.str()));
        }
    }
    globfree(&g);
    return out;
}

std::vector<fs::path> plot_reports(const std::vector<SequenceReport>& reports, const fs::path& out_dir) {
    if (reports.empty()) throw std::invalid_argument("plot: no reports to plot");
    std::vector<fs::path> written{plot_speed_quality(reports, out_dir / "scatter.png")};
    for (const auto& r : reports) written.push_back(plot_frame_trace(r, out_dir / ("trace_" + r.name + ".png")));
    return written;
}

}  // namespace hdrseq
