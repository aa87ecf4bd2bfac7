#pragma once

// Radiometric conversions between scene-linear radiance and gamma-encoded,
// clipped LDR observations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <type_traits>

#include "hdrseq/grid.hpp"

namespace hdrseq {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct ToneMapParams {
    double kappa = 5000.0;
};

struct CameraResponse {
    double gamma = 2.2;
};

inline void validate(const ToneMapParams& p) {
    if (!(p.kappa > 0.0) || !std::isfinite(p.kappa)) throw DomainError("tone map kappa must be > 0");
}

inline void validate(const CameraResponse& r) {
    if (!(r.gamma > 0.0) || !std::isfinite(r.gamma)) throw DomainError("camera gamma must be > 0");
}

/// Logarithmic compression log(1 + k x) / log(1 + k). Maps [0,1] onto [0,1]
/// and is strictly increasing on [0, inf).
template <typename T>
T tone_map(T x, const ToneMapParams& p) {
    if (!(x >= T(0))) throw DomainError("tone_map: negative or NaN radiance");
    const T k = static_cast<T>(p.kappa);
    return std::log1p(k * x) / std::log1p(k);
}

template <typename T>
Grid<T> tone_map(const Grid<T>& h, const ToneMapParams& p) {
    validate(p);
    Grid<T> out(h.channels, h.height, h.width);
    for (std::size_t i = 0; i < h.size(); ++i) out.data[i] = tone_map(h.data[i], p);
    return out;
}

/// Renders an LDR observation: clip((h*e + n)^(1/gamma), 0, 1) with n ~ N(0, sigma^2)
/// added in the linear domain. Noise is drawn in raster order from a generator
/// seeded with `seed`, so the result depends only on the arguments.
template <typename T>
Grid<T> simulate_exposure(const Grid<T>& h, double exposure, const CameraResponse& r,
                          double noise_sigma, std::uint64_t seed) {
    validate(r);
    if (!(exposure > 0.0)) throw DomainError("simulate_exposure: exposure must be > 0");
    if (noise_sigma < 0.0) throw DomainError("simulate_exposure: noise sigma must be >= 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const T e = static_cast<T>(exposure);
    const T inv_gamma = static_cast<T>(1.0 / r.gamma);
    Grid<T> out(h.channels, h.height, h.width);
    for (std::size_t i = 0; i < h.size(); ++i) {
        T v = h.data[i] * e;
        if (noise_sigma > 0.0) v += static_cast<T>(noise_sigma * normal(rng));
        if (v <= T(0)) {
            out.data[i] = T(0);
        } else if (v >= T(1)) {
            out.data[i] = T(1);
        } else {
            out.data[i] = std::pow(v, inv_gamma);
        }
    }
    return out;
}

/// Inverts the power-law response: h = y^gamma / e.
template <typename T>
Grid<T> linearize_ldr(const Grid<T>& y, double exposure, const CameraResponse& r) {
    validate(r);
    if (!(exposure > 0.0)) throw DomainError("linearize_ldr: exposure must be > 0");
    const T g = static_cast<T>(r.gamma);
    const T e = static_cast<T>(exposure);
    Grid<T> out(y.channels, y.height, y.width);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const T v = std::clamp(y.data[i], T(0), T(1));
        out.data[i] = std::pow(v, g) / e;
    }
    return out;
}

// BT.601 luma of a 3-channel grid, one plane.
template <typename T>
Grid<T> luma(const Grid<T>& rgb) {
    if (rgb.channels != 3) throw ShapeError("luma: expected 3 channels");
    Grid<T> out(1, rgb.height, rgb.width);
    const std::size_t n = rgb.plane();
    for (std::size_t i = 0; i < n; ++i) {
        out.data[i] = T(0.299) * rgb.data[i] + T(0.587) * rgb.data[n + i] + T(0.114) * rgb.data[2 * n + i];
    }
    return out;
}

}  // namespace hdrseq
