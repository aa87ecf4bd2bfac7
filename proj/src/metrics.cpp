#include "hdrseq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hdrseq {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

std::vector<double> gaussian_taps() {
    std::vector<double> g(kWindow);
    double total = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kWindow / 2;
        g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        total += g[i];
    }
    for (auto& v : g) v /= total;
    return g;
}

// Separable valid-mode filtering of one plane.
std::vector<double> filter_valid(const double* src, int h, int w, const std::vector<double>& taps) {
    const int ho = h - kWindow + 1;
    const int wo = w - kWindow + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * wo);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < wo; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) acc += taps[k] * src[y * w + x + k];
            rows[y * wo + x] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(ho) * wo);
    for (int y = 0; y < ho; ++y) {
        for (int x = 0; x < wo; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) acc += taps[k] * rows[(y + k) * wo + x];
            out[y * wo + x] = acc;
        }
    }
    return out;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

void check_sequences(const ImageSequence& a, const ImageSequence& b, const char* what) {
    if (a.size() != b.size()) throw ShapeError(std::string(what) + ": sequence lengths differ");
    for (std::size_t t = 0; t < a.size(); ++t) require_same_shape(a[t], b[t], what);
}

ImageSequence tone_mapped(const ImageSequence& s, const ToneMapParams& p) {
    ImageSequence out;
    out.reserve(s.size());
    for (const auto& f : s) out.push_back(tone_map(f, p));
    return out;
}

// (b - a + 1) / 2 maps differences in [-1, 1] onto [0, 1].
Image shifted_difference(const Image& a, const Image& b, bool rescale) {
    Image d(a.channels, a.height, a.width);
    for (std::size_t i = 0; i < a.size(); ++i) {
        d.data[i] = b.data[i] - a.data[i];
        if (rescale) d.data[i] = 0.5 * (d.data[i] + 1.0);
    }
    return d;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += format_number(v[i]);
    }
    return s;
}

std::vector<double> split_numbers(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(item));
    }
    return out;
}

}  // namespace

double psnr(const Image& a, const Image& b, double data_range) {
    require_same_shape(a, b, "psnr");
    if (a.size() == 0) throw ShapeError("psnr: empty image");
    double se = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(data_range * data_range / mse));
}

double ssim(const Image& a, const Image& b, double data_range) {
    require_same_shape(a, b, "ssim");
    if (a.height < kWindow || a.width < kWindow) throw ShapeError("ssim: frame smaller than the 11x11 window");
    static const std::vector<double> taps = gaussian_taps();
    const double c1 = (0.01 * data_range) * (0.01 * data_range);
    const double c2 = (0.03 * data_range) * (0.03 * data_range);
    const int h = a.height;
    const int w = a.width;
    const std::size_t np = a.plane();
    double total = 0.0;
    std::vector<double> aa(np), bb(np), ab(np);
    for (int c = 0; c < a.channels; ++c) {
        const double* pa = a.data.data() + c * np;
        const double* pb = b.data.data() + c * np;
        for (std::size_t i = 0; i < np; ++i) {
            aa[i] = pa[i] * pa[i];
            bb[i] = pb[i] * pb[i];
            ab[i] = pa[i] * pb[i];
        }
        auto mu_a = filter_valid(pa, h, w, taps);
        auto mu_b = filter_valid(pb, h, w, taps);
        auto e_aa = filter_valid(aa.data(), h, w, taps);
        auto e_bb = filter_valid(bb.data(), h, w, taps);
        auto e_ab = filter_valid(ab.data(), h, w, taps);
        double acc = 0.0;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double va = e_aa[i] - mu_a[i] * mu_a[i];
            const double vb = e_bb[i] - mu_b[i] * mu_b[i];
            const double cov = e_ab[i] - mu_a[i] * mu_b[i];
            acc += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
                   ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
        }
        total += acc / static_cast<double>(mu_a.size());
    }
    return total / a.channels;
}

double psnr_mu(const Image& xhat, const Image& x, const ToneMapParams& p) {
    return psnr(tone_map(xhat, p), tone_map(x, p), 1.0);
}

double ssim_mu(const Image& xhat, const Image& x, const ToneMapParams& p) {
    return ssim(tone_map(xhat, p), tone_map(x, p), 1.0);
}

TemporalScores temporal_metrics(const ImageSequence& xhat, const ImageSequence& x, const ToneMapParams& p) {
    check_sequences(xhat, x, "temporal_metrics");
    if (xhat.size() < 2) throw std::invalid_argument("temporal_metrics: needs at least two frames");
    const auto a = tone_mapped(xhat, p);
    const auto b = tone_mapped(x, p);
    std::vector<double> ps, ss;
    for (std::size_t t = 0; t + 1 < a.size(); ++t) {
        ps.push_back(psnr(shifted_difference(a[t], a[t + 1], false), shifted_difference(b[t], b[t + 1], false), 2.0));
        ss.push_back(ssim(shifted_difference(a[t], a[t + 1], true), shifted_difference(b[t], b[t + 1], true), 1.0));
    }
    return {mean_of(ps), mean_of(ss)};
}

double frame_brightness(const Image& frame, const ToneMapParams& p) {
    const Image y = luma(tone_map(frame, p));
    double s = 0.0;
    for (double v : y.data) s += 255.0 * v;
    return s / static_cast<double>(y.size());
}

BrightnessStats brightness_stats(const ImageSequence& xhat, const ImageSequence* x, const ToneMapParams& p) {
    if (xhat.empty()) throw std::invalid_argument("brightness_stats: empty sequence");
    if (x) check_sequences(xhat, *x, "brightness_stats");
    BrightnessStats r;
    for (const auto& f : xhat) r.trace.push_back(frame_brightness(f, p));
    if (x) {
        double s = 0.0;
        for (std::size_t t = 0; t < xhat.size(); ++t) s += std::fabs(r.trace[t] - frame_brightness((*x)[t], p));
        r.ab = s / static_cast<double>(xhat.size());
    }
    if (xhat.size() >= 2) {
        double s = 0.0;
        for (std::size_t t = 0; t + 1 < r.trace.size(); ++t) s += std::fabs(r.trace[t + 1] - r.trace[t]);
        r.madb = s / static_cast<double>(r.trace.size() - 1);
        r.lsd = population_std(r.trace);
    } else {
        r.madb = r.lsd = std::numeric_limits<double>::quiet_NaN();
    }
    return r;
}

double per_frame_std(const ImageSequence& xhat, const ImageSequence& x, const ToneMapParams& p) {
    check_sequences(xhat, x, "per_frame_std");
    if (xhat.size() < 2) throw std::invalid_argument("per_frame_std: needs at least two frames");
    std::vector<double> v;
    for (std::size_t t = 0; t < xhat.size(); ++t) v.push_back(psnr_mu(xhat[t], x[t], p));
    return population_std(v);
}

SequenceReport evaluate_sequence(const std::string& name, const ImageSequence& xhat, const ImageSequence& x,
                                 const ToneMapParams& p) {
    check_sequences(xhat, x, "evaluate_sequence");
    if (xhat.empty()) throw std::invalid_argument("evaluate_sequence: empty sequence");
    SequenceReport r;
    r.name = name;
    r.frames = static_cast<int>(xhat.size());
    for (std::size_t t = 0; t < xhat.size(); ++t) {
        r.psnr_trace.push_back(psnr_mu(xhat[t], x[t], p));
        r.ssim_trace.push_back(ssim_mu(xhat[t], x[t], p));
    }
    r.psnr_t = mean_of(r.psnr_trace);
    r.ssim_t = mean_of(r.ssim_trace);
    auto b = brightness_stats(xhat, &x, p);
    r.ab = *b.ab;
    r.madb = b.madb;
    r.lsd = b.lsd;
    r.brightness_trace = b.trace;
    if (xhat.size() >= 2) {
        auto tm = temporal_metrics(xhat, x, p);
        r.t_psnr = tm.t_psnr;
        r.t_ssim = tm.t_ssim;
        r.std = population_std(r.psnr_trace);
    } else {
        r.t_psnr = r.t_ssim = r.std = std::numeric_limits<double>::quiet_NaN();
        r.note = "fewer than two frames: temporal metrics undefined";
    }
    return r;
}

SequenceReport aggregate_reports(const std::vector<SequenceReport>& reports) {
    SequenceReport m;
    m.name = "mean";
    auto avg = [&](auto field) {
        std::vector<double> v;
        for (const auto& r : reports) {
            if (!std::isnan(r.*field)) v.push_back(r.*field);
        }
        return v.empty() ? std::numeric_limits<double>::quiet_NaN() : mean_of(v);
    };
    for (const auto& r : reports) m.frames += r.frames;
    m.psnr_t = avg(&SequenceReport::psnr_t);
    m.ssim_t = avg(&SequenceReport::ssim_t);
    m.t_psnr = avg(&SequenceReport::t_psnr);
    m.t_ssim = avg(&SequenceReport::t_ssim);
    m.std = avg(&SequenceReport::std);
    m.ab = avg(&SequenceReport::ab);
    m.madb = avg(&SequenceReport::madb);
    m.lsd = avg(&SequenceReport::lsd);
    m.runtime_ms = avg(&SequenceReport::runtime_ms);
    return m;
}

const std::vector<std::string>& SequenceReport::table_columns() {
    static const std::vector<std::string> cols{"sequence", "frames", "psnr_t", "ssim_t", "t_psnr", "t_ssim",
                                               "std",      "ab",     "madb",   "lsd",    "runtime_ms"};
    return cols;
}

std::string SequenceReport::table_header() {
    std::string s;
    for (const auto& c : table_columns()) {
        if (!s.empty()) s += '\t';
        s += c;
    }
    return s;
}

std::string SequenceReport::to_table_row() const {
    std::string s = name + '\t' + std::to_string(frames);
    for (double v : {psnr_t, ssim_t, t_psnr, t_ssim, std, ab, madb, lsd, runtime_ms}) s += '\t' + format_number(v);
    return s;
}

std::string SequenceReport::to_key_value() const {
    std::ostringstream os;
    os << "name = " << name << '\n';
    os << "frames = " << frames << '\n';
    os << "psnr_t = " << format_number(psnr_t) << '\n';
    os << "ssim_t = " << format_number(ssim_t) << '\n';
    os << "t_psnr = " << format_number(t_psnr) << '\n';
    os << "t_ssim = " << format_number(t_ssim) << '\n';
    os << "std = " << format_number(std) << '\n';
    os << "ab = " << format_number(ab) << '\n';
    os << "madb = " << format_number(madb) << '\n';
    os << "lsd = " << format_number(lsd) << '\n';
    os << "runtime_ms = " << format_number(runtime_ms) << '\n';
    os << "psnr_trace = " << join(psnr_trace) << '\n';
    os << "ssim_trace = " << join(ssim_trace) << '\n';
    os << "brightness_trace = " << join(brightness_trace) << '\n';
    if (!note.empty()) os << "note = " << note << '\n';
    return os.str();
}

SequenceReport SequenceReport::from_key_value(const std::string& text) {
    SequenceReport r;
    std::istringstream is(text);
    std::string line;
    auto num = [](const std::string& v) {
        return v == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(v);
    };
    while (std::getline(is, line)) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 3);
        if (key == "name") r.name = val;
        else if (key == "frames") r.frames = std::stoi(val);
        else if (key == "psnr_t") r.psnr_t = num(val);
        else if (key == "ssim_t") r.ssim_t = num(val);
        else if (key == "t_psnr") r.t_psnr = num(val);
        else if (key == "t_ssim") r.t_ssim = num(val);
        else if (key == "std") r.std = num(val);
        else if (key == "ab") r.ab = num(val);
        else if (key == "madb") r.madb = num(val);
        else if (key == "lsd") r.lsd = num(val);
        else if (key == "runtime_ms") r.runtime_ms = num(val);
        else if (key == "psnr_trace") r.psnr_trace = split_numbers(val);
        else if (key == "ssim_trace") r.ssim_trace = split_numbers(val);
        else if (key == "brightness_trace") r.brightness_trace = split_numbers(val);
        else if (key == "note") r.note = val;
    }
    return r;
}

}  // namespace hdrseq
